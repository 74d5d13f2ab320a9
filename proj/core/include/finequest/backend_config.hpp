#pragma once

#include "finequest/backends.hpp"
#include "finequest/mock_backends.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace finequest::backends {

/// Per-role wiring entry of the backend config file.
struct BackendManifest {
    Role role = Role::Agent;
    std::string kind = "mock";  ///< "mock" or "http"
    std::string endpoint;
    int timeout_ms = 30000;
    // scorer only
    std::string vocab_id;
    std::size_t vocab_size = 0;
    std::optional<std::size_t> affirmative_token_index;
    // embedder only
    std::size_t embedding_dim = 0;
};

/// Backend config document:
///
///   {
///     "inline_threshold_bytes": 8388608,      // optional
///     "mock_fixtures": "fixtures.json",        // optional, scripted tables for mock roles,
///                                              // relative to the config file
///     "agent":    {"kind": "http", "endpoint": "http://127.0.0.1:8090", "timeout_ms": 30000},
///     "scorer":   {"kind": "http", "endpoint": "...", "vocab_id": "...", "vocab_size": 32000,
///                  "affirmative_token_index": 3869},
///     "embedder": {"kind": "mock", "embedding_dim": 8},
///     ...
///   }
///
/// Roles omitted from the file are not wired. FINEQUEST_<ROLE>_ENDPOINT environment
/// variables override endpoints (and switch that role to http).
struct BackendConfig {
    std::map<Role, BackendManifest> roles;
    std::size_t inline_threshold = 8U * 1024U * 1024U;
    std::string mock_fixtures;
};

BackendConfig parse_backend_config(const nlohmann::json &doc);
BackendConfig load_backend_config(const std::string &path);

/// Every role wired to a mock; the embedder uses `embedding_dim`.
BackendConfig default_mock_config(std::size_t embedding_dim);

/// Applies FINEQUEST_<ROLE>_ENDPOINT overrides from the process environment.
void apply_env_overrides(BackendConfig &config);

struct BuiltBackends {
    BackendSet set;
    /// Present when at least one role is a mock; exposes scripting and call counts.
    std::shared_ptr<mock::MockBackends> mocks;
};

/// Instantiates clients. `default_dim` is used for mock embedders with no declared dim.
BuiltBackends build_backends(const BackendConfig &config, std::size_t default_dim, std::uint64_t seed);

}  // namespace finequest::backends
