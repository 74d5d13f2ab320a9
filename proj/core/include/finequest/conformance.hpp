#pragma once

#include "finequest/wire.hpp"

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

/// Shared wire-protocol test vectors. The same vector file is run against the in-process
/// mocks and against any external adapter.
///
/// Vector document:
///   {"format_version": "1",
///    "vectors": [{"name": "...", "role": "embedder", "method": "POST", "path": "/embed_text",
///                 "body": {...}, "expect": {"status": 200, "fields": {"embedding": "number_array"},
///                                           "checks": ["embedding_matches_manifest"]}}]}
///
/// Inside "body", an object {"$clip": "<video ref>"} is replaced by the clip payload of
/// that video. Field types: string, nonempty_string, number_array, integer,
/// integer_or_null, boolean, array, object, clip. Checks:
///   manifests_present           /health lists role manifests with their declared fields
///   embedding_matches_manifest  embedding has the embedder's declared dim, finite, non-zero
///   logits_match_manifest       vocab_id / length / affirmative index agree with the scorer manifest
///   clip_shape_preserved        returned clip has the request clip's shape
///   flow_length                 one finite non-negative magnitude per frame pair
///   deterministic               a repeated request yields an identical body
/// Vectors whose role is absent from /health are skipped.
namespace finequest::conformance {

struct Reply {
    int status = 0;
    nlohmann::json body;
};

using Transport = std::function<Reply(const std::string &method, const std::string &path, const nlohmann::json &body)>;

/// Raw HTTP transport; non-2xx replies are returned, not thrown.
Transport http_transport(const wire::Endpoint &endpoint);

struct VectorResult {
    std::string name;
    std::string role;
    std::string path;
    int status = 0;
    bool passed = false;
    bool skipped = false;
    std::string message;
    nlohmann::json request;
    nlohmann::json response;
};

/// Expands {"$clip": ref} placeholders.
nlohmann::json expand_body(const nlohmann::json &body);

std::vector<VectorResult> run(const nlohmann::json &vectors, const Transport &transport);

}  // namespace finequest::conformance
