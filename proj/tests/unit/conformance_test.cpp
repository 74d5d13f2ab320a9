#include "finequest/conformance.hpp"
#include "finequest/errors.hpp"
#include "finequest/mock_backends.hpp"
#include "finequest/util.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

using namespace finequest;
using namespace finequest::conformance;
using nlohmann::json;

namespace {

json vectors() { return json::parse(util::read_file(FQ_CONFORMANCE_VECTORS)); }

/// Transport that answers from an in-process BackendSet through the real HTTP routes.
class Served {
  public:
    explicit Served(backends::BackendSet set) {
        wire::mount_backend_routes(server_, std::move(set));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Served() {
        server_.stop();
        thread_.join();
    }
    Served(const Served &) = delete;
    Served &operator=(const Served &) = delete;

    [[nodiscard]] Transport transport() const {
        return http_transport({"http://127.0.0.1:" + std::to_string(port_), 5000, wire::kDefaultInlineThreshold});
    }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

class WrongDimEmbedder final : public backends::Embedder {
  public:
    [[nodiscard]] std::size_t dim() const override { return 8; }
    backends::Embedding embed_text(std::string_view) const override { return {1.0, 0.0, 0.0}; }
    backends::Embedding embed_clip(const ClipTensor &) const override { return {1.0, 0.0, 0.0}; }
};

const VectorResult &find(const std::vector<VectorResult> &rs, const std::string &name) {
    for (const auto &r : rs) {
        if (r.name == name) return r;
    }
    throw std::runtime_error("no vector " + name);
}

}  // namespace

TEST(Conformance, MocksPassEveryVector) {
    backends::mock::MockBackends mocks(8);
    Served served(mocks.set());
    const auto results = run(vectors(), served.transport());
    ASSERT_EQ(results.size(), vectors().at("vectors").size());
    for (const auto &r : results) {
        EXPECT_TRUE(r.passed) << r.name << ": " << r.message;
        EXPECT_FALSE(r.skipped) << r.name;
    }
}

TEST(Conformance, AbsentRolesAreSkipped) {
    backends::mock::MockBackends mocks(8);
    auto set = mocks.set();
    set.masker.reset();
    set.flow.reset();
    Served served(set);
    const auto results = run(vectors(), served.transport());
    for (const auto &r : results) {
        if (r.role == "masker" || r.role == "flow") {
            EXPECT_TRUE(r.skipped) << r.name;
        } else {
            EXPECT_TRUE(r.passed) << r.name << ": " << r.message;
        }
    }
}

TEST(Conformance, DimensionDriftIsCaught) {
    backends::mock::MockBackends mocks(8);
    auto set = mocks.set();
    set.embedder = std::make_shared<WrongDimEmbedder>();
    Served served(set);
    const auto results = run(vectors(), served.transport());
    bool saw_failure = false;
    for (const auto &r : results) {
        if (r.role == "embedder" && !r.passed) saw_failure = true;
    }
    EXPECT_TRUE(saw_failure);
}

TEST(Conformance, NondeterministicBackendFails) {
    auto transport = [counter = std::make_shared<int>(0)](const std::string &, const std::string &path, const json &) {
        if (path == "/health") {
            return Reply{200, {{"status", "ok"}, {"manifests", json::array({{{"role", "captioner"}}})}}};
        }
        return Reply{200, {{"caption", "take " + std::to_string((*counter)++)}}};
    };
    const json doc = {{"vectors",
                       {{{"name", "caption"},
                         {"role", "captioner"},
                         {"path", "/caption"},
                         {"body", {{"clip", {{"$clip", "synthetic:noise?frames=3&height=2&width=2"}}}}},
                         {"expect", {{"fields", {{"caption", "nonempty_string"}}}, {"checks", {"deterministic"}}}}}}}};
    const auto results = run(doc, transport);
    ASSERT_EQ(results.size(), 1U);
    EXPECT_FALSE(results[0].passed);
    EXPECT_NE(results[0].message.find("different reply"), std::string::npos);
}

TEST(Conformance, ClipPlaceholdersExpand) {
    const auto body = expand_body({{"clip", {{"$clip", "synthetic:ramp?frames=4&height=2&width=2"}}}, {"prompt", "p"}});
    EXPECT_EQ(body.at("prompt"), "p");
    EXPECT_EQ(body.at("clip").at("encoding"), "inline");
    EXPECT_EQ(wire::clip_from_payload(body.at("clip")).frame_count(), 4U);
}

TEST(Conformance, MalformedDocumentIsParseError) {
    backends::mock::MockBackends mocks(8);
    Served served(mocks.set());
    try {
        run(json{{"tests", json::array()}}, served.transport());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
    }
}

TEST(Conformance, ErrorVectorExpectsRejection) {
    backends::mock::MockBackends mocks(8);
    Served served(mocks.set());
    const auto results = run(vectors(), served.transport());
    const auto &bad = find(results, "malformed caption request is rejected");
    EXPECT_TRUE(bad.passed) << bad.message;
    EXPECT_EQ(bad.status, 400);
}
