#include "finequest/errors.hpp"
#include "finequest/matcher.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace finequest;
using namespace finequest::matcher;

namespace {

const ssgraph::SportsGraph &fixture_graph() {
    static const auto g = ssgraph::load_graph(fqtest::fixture("graph_small.json"));
    return g;
}

Embedding basis(std::size_t i, std::size_t dim = 8) {
    Embedding v(dim, 0.0);
    v[i] = 1.0;
    return v;
}

EmbeddedClip item(Embedding clip, Embedding caption) { return {{0, 10}, std::move(clip), "caption", std::move(caption)}; }

std::vector<std::string> ids(const std::vector<MatchResult> &r) {
    std::vector<std::string> out;
    for (const auto &m : r) out.push_back(m.node_id);
    return out;
}

}  // namespace

TEST(Cosine, KnownValues) {
    const std::vector<double> v{0.3, -2.0, 5.0};
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-15);
    EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    // 32 / sqrt(14 * 77)
    EXPECT_NEAR(cosine(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), 0.974632, 1e-6);
}

TEST(Cosine, Errors) {
    try {
        cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::ZeroVector);
    }
    try {
        cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::LengthMismatch);
    }
}

TEST(InstanceMatch, SelfSimilarElementLeadsTextChannel) {
    const auto r = instance_match(item(basis(5), basis(1)), fixture_graph(), {1, {}, {}});
    bool found = false;
    for (const auto &m : r) {
        if (m.node_id == "bb_wolf_jump") {
            found = true;
            EXPECT_NEAR(m.score_breakdown.t2t, 1.0, 1e-15);
        }
    }
    EXPECT_TRUE(found);
    EXPECT_EQ(r.size(), 2U);
}

TEST(InstanceMatch, LargeKReturnsEveryElement) {
    const auto r = instance_match(item(basis(0), basis(0)), fixture_graph(), {50, {}, {}});
    EXPECT_EQ(ids(r), (std::vector<std::string>{"bb_split_leap", "bb_wolf_jump", "dv_626B"}));
}

TEST(InstanceMatch, HandComputedChannels) {
    // caption = e0, clip = (0.8, 0.6, 0, ...): split leap t2t 1, v2v 1, t2v 0.8, v2t 0.8;
    // wolf jump t2t 0, v2v 0.36, t2v 0, v2t 0.6.
    Embedding clip(8, 0.0);
    clip[0] = 0.8;
    clip[1] = 0.6;
    const auto r = instance_match(item(clip, basis(0)), fixture_graph(), {5, {}, {}});
    ASSERT_EQ(r.size(), 3U);
    EXPECT_NEAR(r[0].score_breakdown.t2t, 1.0, 1e-12);
    EXPECT_NEAR(r[0].score_breakdown.v2v, 1.0, 1e-12);
    EXPECT_NEAR(r[0].score_breakdown.t2v, 0.8, 1e-12);
    EXPECT_NEAR(r[0].score_breakdown.v2t, 0.8, 1e-12);
    EXPECT_NEAR(r[1].score_breakdown.v2v, 0.36, 1e-12);
    EXPECT_NEAR(r[1].score_breakdown.v2t, 0.6, 1e-12);
    EXPECT_NEAR(r[1].score_breakdown.t2t, 0.0, 1e-12);
}

TEST(InstanceMatch, SportFilterAndErrors) {
    MatchOptions opts;
    opts.sport = ssgraph::SportCode::D;
    EXPECT_EQ(ids(instance_match(item(basis(0), basis(0)), fixture_graph(), opts)), (std::vector<std::string>{"dv_626B"}));
    opts.sport = ssgraph::SportCode::V;
    try {
        instance_match(item(basis(0), basis(0)), fixture_graph(), opts);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::EmptyGraph);
    }
    try {
        instance_match(item(basis(0, 7), basis(0, 7)), fixture_graph());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::DimensionError);
    }
}

TEST(Relational, HandComputedTwoSentenceMean) {
    // Sentence 1: cos(c, e2) - cos(c, e3) = 0.6; sentence 2: 1.0 - 0.0. Mean 0.8.
    Embedding clip(8, 0.0);
    clip[2] = 0.6;
    clip[4] = 0.8;
    EXPECT_NEAR(relational_score(item(clip, basis(0)), *fixture_graph().find_element("bb_split_leap")), 0.8, 1e-12);
}

TEST(Relational, EqualFormsCancelAndAlignedPositiveScoresOne) {
    ssgraph::ElementNode node;
    node.node_id = "n";
    node.relation_sentences.push_back({0, "p", "n", basis(3), basis(3)});
    EXPECT_EQ(relational_score(item(basis(1), basis(1)), node), 0.0);
    node.relation_sentences[0].negative_embedding = basis(4);
    EXPECT_NEAR(relational_score(item(basis(3), basis(3)), node), 1.0, 1e-15);
}

TEST(Relational, NoSentencesIsError) {
    try {
        relational_score(item(basis(0), basis(0)), *fixture_graph().find_element("dv_626B"));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::NoRelationSentences);
    }
}

TEST(Relational, AntisymmetryAndBounds) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 100; ++t) {
        ssgraph::ElementNode node;
        node.node_id = "n";
        for (int s = 0; s < 3; ++s) {
            node.relation_sentences.push_back(
                {0, "p", "n", fqtest::random_unit_free_vector(rng, 8), fqtest::random_unit_free_vector(rng, 8)});
        }
        const auto clip = item(fqtest::random_unit_free_vector(rng, 8), fqtest::random_unit_free_vector(rng, 8));
        const double v = relational_score(clip, node);
        for (auto &rs : node.relation_sentences) std::swap(rs.positive_embedding, rs.negative_embedding);
        EXPECT_NEAR(relational_score(clip, node), -v, 1e-12);
        EXPECT_LE(std::abs(v), 2.0);
    }
}

TEST(Match, HandComputedRanking) {
    Embedding clip(8, 0.0);
    clip[0] = 0.8;
    clip[1] = 0.6;
    const auto r = match(item(clip, basis(0)), fixture_graph(), 3);
    ASSERT_EQ(r.size(), 3U);
    EXPECT_EQ(ids(r), (std::vector<std::string>{"bb_split_leap", "bb_wolf_jump", "dv_626B"}));
    EXPECT_NEAR(r[0].combined, 0.9, 1e-12);
    EXPECT_NEAR(r[1].combined, 0.24, 1e-12);
    EXPECT_NEAR(r[2].combined, 0.0, 1e-12);
    EXPECT_EQ(match(item(clip, basis(0)), fixture_graph(), 1).size(), 1U);
}

TEST(Match, SingleElementGraphIgnoresWeights) {
    MatchOptions opts;
    opts.sport = ssgraph::SportCode::D;
    opts.weights = {0.1, 3.0, 0.0, 2.0, 5.0};
    const auto r = match(item(basis(3), basis(2)), fixture_graph(), 4, opts);
    EXPECT_EQ(ids(r), (std::vector<std::string>{"dv_626B"}));
}

TEST(Match, TiesBrokenByNodeId) {
    ssgraph::SportsGraph g;
    g.embedding_dim = 2;
    ssgraph::SetNode set{"s", "s", {}};
    for (const char *id : {"zeta", "alpha", "mid"}) {
        ssgraph::ElementNode e;
        e.node_id = id;
        e.terminology = id;
        e.description_embedding = {1.0, 0.0};
        e.instance_embedding = {0.0, 1.0};
        set.elements.push_back(e);
    }
    g.sports.push_back({ssgraph::SportCode::G, "g", {{"e", "e", {set}}}});
    const auto r = match({{0, 1}, {1.0, 1.0}, "c", {1.0, 0.0}}, g, 3);
    EXPECT_EQ(ids(r), (std::vector<std::string>{"alpha", "mid", "zeta"}));
}

TEST(Match, AgreesWithBruteForce) {
    std::mt19937_64 rng(404);
    for (int t = 0; t < 40; ++t) {
        const auto g = fqtest::random_graph(rng, 20, 8);
        const auto clip = fqtest::random_unit_free_vector(rng, 8);
        const auto cap = fqtest::random_unit_free_vector(rng, 8);
        const auto got = match(item(clip, cap), g, 4);
        const auto want = fqtest::brute_force_match(clip, cap, g, 5, 4);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].node_id, want[i].node_id);
            EXPECT_NEAR(got[i].combined, want[i].combined, 1e-12);
        }
    }
}

TEST(Match, ZeroN2AndBadWeights) {
    EXPECT_THROW(match(item(basis(0), basis(0)), fixture_graph(), 0), Error);
    MatchOptions opts;
    opts.weights = {0, 0, 0, 0, 1};
    EXPECT_THROW(match(item(basis(0), basis(0)), fixture_graph(), 2, opts), Error);
}

TEST(Enrich, DomainKnowledgeBlock) {
    const auto r = match(item(basis(5), basis(6)), fixture_graph(), 1, {5, {}, ssgraph::SportCode::D});
    const auto prompt = enrich_prompt("Which dive is shown?", r);
    EXPECT_EQ(prompt.find("Which dive is shown?"), 0U);
    EXPECT_NE(prompt.find("Domain knowledge:"), std::string::npos);
    EXPECT_NE(prompt.find("626B: Armstand back double somersault in the pike position."), std::string::npos);
    EXPECT_EQ(prompt, enrich_prompt("Which dive is shown?", r));
}

TEST(Enrich, RankOrderAndEmpty) {
    MatchResult a;
    a.terminology = "first";
    a.description_text = "one";
    MatchResult b;
    b.terminology = "second";
    b.description_text = "two";
    const std::vector<MatchResult> both{a, b};
    const auto p = enrich_prompt("base", both);
    EXPECT_LT(p.find("first: one"), p.find("second: two"));
    try {
        enrich_prompt("base", {});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::EmptyMatches);
    }
}

TEST(Match, JsonCarriesBreakdown) {
    const auto r = match(item(basis(0), basis(0)), fixture_graph(), 1);
    const auto j = to_json(r.front());
    for (const char *k : {"t2t", "v2v", "t2v", "v2t", "v2r"}) EXPECT_TRUE(j.at("score_breakdown").contains(k)) << k;
    EXPECT_EQ(j.at("node_id"), r.front().node_id);
}
