#include "finequest/backend_config.hpp"
#include "finequest/backends.hpp"
#include "finequest/errors.hpp"
#include "finequest/mock_backends.hpp"
#include "finequest/ssgraph.hpp"
#include "finequest/util.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <future>

using namespace finequest;
using namespace finequest::backends;
using namespace finequest::backends::mock;
using nlohmann::json;

namespace {

ClipTensor small_clip(std::uint64_t seed = 0) { return make_synthetic_clip({"noise", 6, 4, 4, 3, 25.0, 20, 10, seed}); }

class BrokenCaptioner final : public Captioner {
  public:
    std::string caption(const ClipTensor &) const override { return ""; }
};

class BadEmbedder final : public Embedder {
  public:
    explicit BadEmbedder(Embedding out) : out_(std::move(out)) {}
    [[nodiscard]] std::size_t dim() const override { return 3; }
    Embedding embed_text(std::string_view) const override { return out_; }
    Embedding embed_clip(const ClipTensor &) const override { return out_; }

  private:
    Embedding out_;
};

Errc code_of(const std::function<void()> &fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return Errc::InvalidArgument;
}

}  // namespace

TEST(Mocks, EmbedderIsDeterministicUnitNorm) {
    MockEmbedder e(8, 3);
    const auto a = e.embed_text("split leap");
    EXPECT_EQ(a, e.embed_text("split leap"));
    EXPECT_NE(a, e.embed_text("wolf jump"));
    EXPECT_NE(a, MockEmbedder(8, 4).embed_text("split leap"));
    double n = 0.0;
    for (double x : a) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
    EXPECT_EQ(a, MockEmbedder::hash_to_unit_vector("split leap", 8, 3));
}

TEST(Mocks, ScriptedEntriesWin) {
    MockEmbedder e(3);
    e.script_text("x", {1, 0, 0});
    EXPECT_EQ(e.embed_text("x"), (Embedding{1, 0, 0}));
    const auto clip = small_clip();
    e.script_clip(clip.content_hash(), {0, 1, 0});
    EXPECT_EQ(e.embed_clip(clip), (Embedding{0, 1, 0}));

    MockCaptioner c;
    c.script(clip.content_hash(), "athlete performs a split leap");
    EXPECT_EQ(caption(c, clip), "athlete performs a split leap");
    EXPECT_EQ(caption(c, small_clip(1)), caption(c, small_clip(1)));
    EXPECT_FALSE(caption(c, small_clip(1)).empty());
}

TEST(Mocks, ScorerUsesDeclaredVocabulary) {
    MockScorer s;
    const auto clip = small_clip();
    const auto l = score_logits(s, clip, "p");
    EXPECT_EQ(l.vocab_id, s.vocabulary().vocab_id);
    EXPECT_EQ(l.values.size(), s.vocabulary().size);
    EXPECT_EQ(l, score_logits(s, clip, "p"));
    s.script(clip.content_hash(), util::sha256_hex("p"), std::vector<double>(8, 0.5));
    EXPECT_EQ(score_logits(s, clip, "p").values, std::vector<double>(8, 0.5));
}

TEST(Mocks, ScorerLengthMismatchIsVocabMismatch) {
    MockScorer s;
    s.set_handler([](const ClipTensor &, const std::string &) { return LogitVector{"mock-yes-no-v1", {1.0}}; });
    EXPECT_EQ(code_of([&] { score_logits(s, small_clip(), "p"); }), Errc::VocabMismatch);
    s.set_handler([](const ClipTensor &, const std::string &) { return LogitVector{"other", std::vector<double>(8)}; });
    EXPECT_EQ(code_of([&] { score_logits(s, small_clip(), "p"); }), Errc::VocabMismatch);
}

TEST(Mocks, FailureInjection) {
    MockReasoner r;
    r.fail_with(Errc::Timeout, "slow");
    EXPECT_EQ(code_of([&] { r.reason({"p", "q", {}}); }), Errc::Timeout);
    r.clear_failure();
    EXPECT_EQ(r.reason({"p", "q", {}}), "A");
    EXPECT_EQ(r.calls(), 2U);
}

TEST(Mocks, ReasonerTables) {
    MockReasoner r;
    r.script_question("q1", "B");
    r.script_prompt(util::sha256_hex("special"), "C");
    r.set_default("D");
    EXPECT_EQ(r.reason({"any", "q1", {}}), "B");
    EXPECT_EQ(r.reason({"special", "other", {}}), "C");
    EXPECT_EQ(r.reason({"any", "other", {}}), "D");
}

TEST(Mocks, AgentTablesAndDefault) {
    MockAgent a;
    a.script("What sport is this?", MockAgent::assessment_json(false, "Gymnastics"));
    EXPECT_NE(a.respond({"v", nullptr, "prompt", "What sport is this?"}).find("Gymnastics"), std::string::npos);
    const auto def = json::parse(a.respond({"v", nullptr, "prompt", "other"}));
    EXPECT_EQ(def.at("decision"), "switch");
}

TEST(Mocks, MaskerAndFlow) {
    const auto clip = small_clip();
    MockMasker m;
    EXPECT_EQ(mask(m, clip), clip);
    MockFlow f;
    EXPECT_EQ(flow_magnitudes(f, clip).size(), 5U);
}

TEST(Mocks, ConcurrentCallsAreSafe) {
    MockBackends mb(8, 1);
    const auto clip = small_clip();
    std::vector<std::future<Embedding>> fs;
    for (int i = 0; i < 16; ++i) fs.push_back(std::async(std::launch::async, [&] { return mb.embedder->embed_clip(clip); }));
    const auto first = mb.embedder->embed_clip(clip);
    for (auto &f : fs) EXPECT_EQ(f.get(), first);
    EXPECT_EQ(mb.embedder->calls(), 17U);
    EXPECT_EQ(mb.deliberative_calls(), 17U);
    mb.reset_calls();
    EXPECT_EQ(mb.deliberative_calls(), 0U);
}

TEST(Mocks, FixtureDocument) {
    MockBackends mb(3);
    mb.load_fixtures(json::parse(util::read_file(fqtest::fixture("mock_fixtures.json"))));
    EXPECT_EQ(mb.reasoner->reason({"p", "How many somersaults?", {}}), "C");
    EXPECT_EQ(mb.embedder->embed_text("pike"), (Embedding{0, 0, 1}));
    EXPECT_EQ(mb.scorer->vocabulary().vocab_id, "fixture-vocab");
    EXPECT_EQ(mb.scorer->vocabulary().size, 2U);
    const auto a = json::parse(mb.agent->respond({"v", nullptr, "p", "What sport is this?"}));
    EXPECT_EQ(a.at("answer"), "A");
    EXPECT_THROW(mb.load_fixtures(json::array()), Error);
    EXPECT_THROW(mb.load_fixtures(json{{"reasoner", {{"by_question", 3}}}}), Error);
}

TEST(Contracts, EmptyCaptionIsBackendError) {
    BrokenCaptioner c;
    EXPECT_EQ(code_of([&] { caption(c, small_clip()); }), Errc::BackendError);
}

TEST(Contracts, EmbeddingChecks) {
    EXPECT_EQ(code_of([] { embed_text(BadEmbedder({1, 0}), "x"); }), Errc::DimensionError);
    EXPECT_EQ(code_of([] { embed_text(BadEmbedder({0, 0, 0}), "x"); }), Errc::BackendError);
    EXPECT_EQ(code_of([] { embed_clip(BadEmbedder({1, NAN, 0}), small_clip()); }), Errc::BackendError);
    EXPECT_EQ(embed_text(BadEmbedder({1, 2, 3}), "x"), (Embedding{1, 2, 3}));
}

TEST(Contracts, MissingRolesNameTheRole) {
    BackendSet set;
    try {
        set.require_reasoner();
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::BackendUnavailable);
        EXPECT_NE(std::string(e.what()).find("reasoner"), std::string::npos);
    }
}

TEST(Contracts, WiringChecksEmbeddingDim) {
    const auto g = ssgraph::load_graph(fqtest::fixture("graph_small.json"));
    EXPECT_NO_THROW(check_wiring(MockBackends(8).set(), g));
    EXPECT_EQ(code_of([&] { check_wiring(MockBackends(16).set(), g); }), Errc::DimensionError);
}

TEST(Roles, NamesRoundTrip) {
    for (Role r : kAllRoles) EXPECT_EQ(parse_role(to_string(r)), r);
    EXPECT_THROW(parse_role("oracle"), Error);
}

TEST(BackendConfig, ParsesRoles) {
    const auto cfg = parse_backend_config(json{
        {"inline_threshold_bytes", 1024},
        {"agent", {{"kind", "http"}, {"endpoint", "http://127.0.0.1:9"}, {"timeout_ms", 500}}},
        {"scorer", {{"kind", "http"}, {"endpoint", "http://h:1"}, {"vocab_id", "v"}, {"vocab_size", 10}, {"affirmative_token_index", 3}}},
        {"embedder", {{"kind", "mock"}, {"embedding_dim", 8}}}});
    EXPECT_EQ(cfg.inline_threshold, 1024U);
    EXPECT_EQ(cfg.roles.size(), 3U);
    EXPECT_EQ(cfg.roles.at(Role::Agent).timeout_ms, 500);
    EXPECT_EQ(cfg.roles.at(Role::Scorer).affirmative_token_index, 3U);
    EXPECT_EQ(cfg.roles.at(Role::Embedder).embedding_dim, 8U);
}

TEST(BackendConfig, RejectsInvalidManifests) {
    auto bad = [](json doc) { return code_of([&] { parse_backend_config(doc); }); };
    EXPECT_EQ(bad(json::array()), Errc::ParseError);
    EXPECT_EQ(bad({{"agent", {{"kind", "grpc"}}}}), Errc::ParseError);
    EXPECT_EQ(bad({{"agent", {{"kind", "http"}}}}), Errc::ParseError);
    EXPECT_EQ(bad({{"scorer", {{"kind", "http"}, {"endpoint", "http://h:1"}}}}), Errc::ParseError);
    EXPECT_EQ(bad({{"scorer", {{"kind", "http"}, {"endpoint", "http://h:1"}, {"vocab_id", "v"}, {"vocab_size", 4}, {"affirmative_token_index", 4}}}}),
              Errc::ParseError);
    EXPECT_EQ(bad({{"embedder", {{"kind", "http"}, {"endpoint", "http://h:1"}}}}), Errc::ParseError);
    EXPECT_EQ(bad({{"agent", {{"timeout_ms", 0}}}}), Errc::ParseError);
}

TEST(BackendConfig, EnvironmentOverride) {
    auto cfg = default_mock_config(8);
    ::setenv("FINEQUEST_CAPTIONER_ENDPOINT", "http://127.0.0.1:5999", 1);
    apply_env_overrides(cfg);
    ::unsetenv("FINEQUEST_CAPTIONER_ENDPOINT");
    EXPECT_EQ(cfg.roles.at(Role::Captioner).kind, "http");
    EXPECT_EQ(cfg.roles.at(Role::Captioner).endpoint, "http://127.0.0.1:5999");
    EXPECT_EQ(cfg.roles.at(Role::Agent).kind, "mock");
}

TEST(BackendConfig, BuildsMocksAndHttpClients) {
    auto cfg = default_mock_config(8);
    auto built = build_backends(cfg, 8, 0);
    ASSERT_TRUE(built.mocks);
    for (Role r : kAllRoles) EXPECT_EQ(cfg.roles.count(r), 1U);
    EXPECT_EQ(built.set.require_embedder().dim(), 8U);

    cfg.roles.at(Role::Reasoner) = {Role::Reasoner, "http", "http://127.0.0.1:9", 100, "", 0, std::nullopt, 0};
    built = build_backends(cfg, 8, 0);
    EXPECT_NE(dynamic_cast<const MockReasoner *>(built.set.reasoner.get()), built.mocks->reasoner.get());

    BackendConfig none;
    built = build_backends(none, 8, 0);
    EXPECT_FALSE(built.mocks);
    EXPECT_EQ(built.set.agent, nullptr);
}

TEST(BackendConfig, FixturesLoadedFromConfigFile) {
    const auto cfg = load_backend_config(fqtest::fixture("backend_config_mock.json"));
    EXPECT_FALSE(cfg.mock_fixtures.empty());
    const auto built = build_backends(cfg, 3, 0);
    ASSERT_TRUE(built.mocks);
    EXPECT_EQ(built.set.require_reasoner().reason({"p", "How many somersaults?", {}}), "C");
}
