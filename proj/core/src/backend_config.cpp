#include "finequest/backend_config.hpp"

#include "finequest/errors.hpp"
#include "finequest/util.hpp"
#include "finequest/wire.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>

namespace finequest::backends {

using nlohmann::json;

namespace {

BackendManifest parse_manifest(Role role, const json &j) {
    if (!j.is_object()) throw Error(Errc::ParseError, "manifest for '" + std::string(to_string(role)) + "' must be an object");
    BackendManifest m;
    m.role = role;
    m.kind = j.value("kind", "mock");
    if (m.kind != "mock" && m.kind != "http") {
        throw Error(Errc::ParseError, std::string(to_string(role)) + ": kind must be 'mock' or 'http'");
    }
    m.endpoint = j.value("endpoint", "");
    m.timeout_ms = j.value("timeout_ms", 30000);
    if (m.timeout_ms <= 0) throw Error(Errc::ParseError, std::string(to_string(role)) + ": timeout_ms must be positive");
    if (m.kind == "http" && m.endpoint.empty()) {
        throw Error(Errc::ParseError, std::string(to_string(role)) + ": http backends need an endpoint");
    }
    if (role == Role::Scorer) {
        m.vocab_id = j.value("vocab_id", "");
        m.vocab_size = j.value("vocab_size", std::size_t{0});
        if (j.contains("affirmative_token_index") && !j.at("affirmative_token_index").is_null()) {
            m.affirmative_token_index = j.at("affirmative_token_index").get<std::size_t>();
        }
        if (m.kind == "http" && (m.vocab_id.empty() || m.vocab_size == 0)) {
            throw Error(Errc::ParseError, "scorer: http scorers must declare vocab_id and vocab_size");
        }
        if (m.affirmative_token_index && m.vocab_size > 0 && *m.affirmative_token_index >= m.vocab_size) {
            throw Error(Errc::ParseError, "scorer: affirmative_token_index must be < vocab_size");
        }
    }
    if (role == Role::Embedder) {
        m.embedding_dim = j.value("embedding_dim", std::size_t{0});
        if (m.kind == "http" && m.embedding_dim == 0) throw Error(Errc::ParseError, "embedder: http embedders must declare embedding_dim");
    }
    return m;
}

std::string env_name(Role role) {
    std::string name = "FINEQUEST_" + std::string(to_string(role)) + "_ENDPOINT";
    std::ranges::transform(name, name.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return name;
}

}  // namespace

BackendConfig parse_backend_config(const json &doc) {
    if (!doc.is_object()) throw Error(Errc::ParseError, "backend config must be a JSON object");
    BackendConfig config;
    try {
        for (const auto &[key, value] : doc.items()) {
            if (key == "inline_threshold_bytes") {
                config.inline_threshold = value.get<std::size_t>();
            } else if (key == "mock_fixtures") {
                config.mock_fixtures = value.get<std::string>();
            } else {
                const Role role = parse_role(key);
                config.roles[role] = parse_manifest(role, value);
            }
        }
    } catch (const json::exception &e) {
        throw Error(Errc::ParseError, std::string("backend config: ") + e.what());
    }
    return config;
}

BackendConfig load_backend_config(const std::string &path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::parse_error &e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    BackendConfig config = parse_backend_config(doc);
    if (!config.mock_fixtures.empty() && std::filesystem::path(config.mock_fixtures).is_relative()) {
        config.mock_fixtures = (std::filesystem::path(path).parent_path() / config.mock_fixtures).string();
    }
    return config;
}

BackendConfig default_mock_config(std::size_t embedding_dim) {
    BackendConfig config;
    for (Role role : kAllRoles) {
        BackendManifest m;
        m.role = role;
        if (role == Role::Embedder) m.embedding_dim = embedding_dim;
        config.roles[role] = m;
    }
    return config;
}

void apply_env_overrides(BackendConfig &config) {
    for (Role role : kAllRoles) {
        const char *value = std::getenv(env_name(role).c_str());
        if (value == nullptr || *value == '\0') continue;
        auto &m = config.roles[role];
        m.role = role;
        m.kind = "http";
        m.endpoint = value;
    }
}

BuiltBackends build_backends(const BackendConfig &config, std::size_t default_dim, std::uint64_t seed) {
    BuiltBackends built;
    const bool any_mock = std::ranges::any_of(config.roles, [](const auto &kv) { return kv.second.kind == "mock"; });
    if (any_mock) {
        std::size_t dim = default_dim;
        if (auto it = config.roles.find(Role::Embedder); it != config.roles.end() && it->second.embedding_dim > 0) {
            dim = it->second.embedding_dim;
        }
        built.mocks = std::make_shared<mock::MockBackends>(dim, seed);
        if (auto it = config.roles.find(Role::Scorer); it != config.roles.end() && it->second.kind == "mock" &&
                                                       !it->second.vocab_id.empty()) {
            built.mocks->scorer = std::make_shared<mock::MockScorer>(
                ScorerVocabulary{it->second.vocab_id, it->second.vocab_size, it->second.affirmative_token_index}, seed);
        }
        if (!config.mock_fixtures.empty()) {
            try {
                built.mocks->load_fixtures(json::parse(util::read_file(config.mock_fixtures)));
            } catch (const json::exception &e) {
                throw Error(Errc::ParseError, config.mock_fixtures + ": " + e.what());
            }
        }
    }

    for (const auto &[role, m] : config.roles) {
        const wire::Endpoint ep{m.endpoint, m.timeout_ms, config.inline_threshold};
        const bool http = m.kind == "http";
        switch (role) {
            case Role::Agent:
                built.set.agent = http ? std::shared_ptr<const Agent>(std::make_shared<wire::HttpAgent>(ep)) : built.mocks->agent;
                break;
            case Role::Captioner:
                built.set.captioner = http ? std::shared_ptr<const Captioner>(std::make_shared<wire::HttpCaptioner>(ep))
                                           : built.mocks->captioner;
                break;
            case Role::Scorer:
                built.set.scorer = http ? std::shared_ptr<const Scorer>(std::make_shared<wire::HttpScorer>(
                                              ep, ScorerVocabulary{m.vocab_id, m.vocab_size, m.affirmative_token_index}))
                                        : built.mocks->scorer;
                break;
            case Role::Embedder:
                built.set.embedder = http ? std::shared_ptr<const Embedder>(std::make_shared<wire::HttpEmbedder>(ep, m.embedding_dim))
                                          : built.mocks->embedder;
                break;
            case Role::Reasoner:
                built.set.reasoner = http ? std::shared_ptr<const Reasoner>(std::make_shared<wire::HttpReasoner>(ep))
                                          : built.mocks->reasoner;
                break;
            case Role::Masker:
                built.set.masker = http ? std::shared_ptr<const Masker>(std::make_shared<wire::HttpMasker>(ep)) : built.mocks->masker;
                break;
            case Role::Flow:
                built.set.flow = http ? std::shared_ptr<const FlowEstimator>(std::make_shared<wire::HttpFlow>(ep)) : built.mocks->flow;
                break;
        }
    }
    return built;
}

}  // namespace finequest::backends
