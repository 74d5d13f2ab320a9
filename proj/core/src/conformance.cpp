#include "finequest/conformance.hpp"

#include "finequest/errors.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>

namespace finequest::conformance {

using nlohmann::json;

namespace {

struct Failure {
    std::string message;
};

void require(bool ok, const std::string &message) {
    if (!ok) throw Failure{message};
}

bool type_matches(const json &v, const std::string &type) {
    if (type == "string") return v.is_string();
    if (type == "nonempty_string") return v.is_string() && !v.get<std::string>().empty();
    if (type == "number_array") {
        if (!v.is_array()) return false;
        for (const auto &x : v) {
            if (!x.is_number()) return false;
        }
        return true;
    }
    if (type == "integer") return v.is_number_integer();
    if (type == "integer_or_null") return v.is_null() || v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "clip") {
        return v.is_object() && v.contains("encoding") && v.contains("format") && (v.contains("data") || v.contains("path"));
    }
    throw Error(Errc::ParseError, "unknown field type '" + type + "' in conformance vector");
}

ClipTensor clip_from_payload_or_fail(const json &payload) {
    try {
        return wire::clip_from_payload(payload);
    } catch (const std::exception &e) {
        throw Failure{std::string("undecodable clip payload: ") + e.what()};
    }
}

const json *manifest_for(const json &health, const std::string &role) {
    if (!health.is_object() || !health.contains("manifests") || !health.at("manifests").is_array()) return nullptr;
    for (const auto &m : health.at("manifests")) {
        if (m.is_object() && m.value("role", "") == role) return &m;
    }
    return nullptr;
}

std::vector<double> finite_numbers(const json &v, const std::string &what) {
    require(v.is_array(), what + " is not an array");
    std::vector<double> out;
    for (const auto &x : v) {
        require(x.is_number(), what + " holds a non-number");
        const double d = x.get<double>();
        require(std::isfinite(d), what + " holds a non-finite value");
        out.push_back(d);
    }
    return out;
}

void check(const std::string &name, const json &request, const Reply &reply, const json &health,
           const Transport &transport, const std::string &method, const std::string &path) {
    const json &body = reply.body;
    if (name == "manifests_present") {
        require(body.contains("manifests") && body.at("manifests").is_array(), "manifests missing");
        for (const auto &m : body.at("manifests")) {
            require(m.is_object() && m.contains("role") && m.at("role").is_string(), "manifest without role");
            const std::string role = m.at("role").get<std::string>();
            if (role == "scorer") {
                require(m.contains("vocab_id") && m.at("vocab_id").is_string(), "scorer manifest lacks vocab_id");
                require(m.contains("vocab_size") && m.at("vocab_size").is_number_integer(), "scorer manifest lacks vocab_size");
                require(m.contains("affirmative_token_index"), "scorer manifest lacks affirmative_token_index");
            }
            if (role == "embedder") {
                require(m.contains("embedding_dim") && m.at("embedding_dim").is_number_integer() &&
                            m.at("embedding_dim").get<long long>() > 0,
                        "embedder manifest lacks a positive embedding_dim");
            }
        }
    } else if (name == "embedding_matches_manifest") {
        const json *m = manifest_for(health, "embedder");
        require(m != nullptr, "no embedder manifest");
        const auto v = finite_numbers(body.at("embedding"), "embedding");
        require(v.size() == m->at("embedding_dim").get<std::size_t>(),
                "embedding length " + std::to_string(v.size()) + " differs from manifest dim");
        bool nonzero = false;
        for (double x : v) nonzero = nonzero || x != 0.0;
        require(nonzero, "embedding is all zero");
    } else if (name == "logits_match_manifest") {
        const json *m = manifest_for(health, "scorer");
        require(m != nullptr, "no scorer manifest");
        require(body.at("vocab_id") == m->at("vocab_id"), "vocab_id differs from manifest");
        const auto v = finite_numbers(body.at("logits"), "logits");
        const auto size = m->at("vocab_size").get<std::size_t>();
        require(v.size() == size, "logit count " + std::to_string(v.size()) + " differs from vocab_size");
        const json &idx = body.at("affirmative_token_index");
        require(idx.is_number_integer(), "affirmative_token_index missing from reply");
        require(idx == m->at("affirmative_token_index"), "affirmative_token_index differs from manifest");
        require(idx.get<std::size_t>() < size, "affirmative_token_index outside the vocabulary");
    } else if (name == "clip_shape_preserved") {
        const auto in = clip_from_payload_or_fail(request.at("clip"));
        const auto out = clip_from_payload_or_fail(body.at("clip"));
        require(in.shape() == out.shape(), "returned clip shape differs");
    } else if (name == "flow_length") {
        const auto in = clip_from_payload_or_fail(request.at("clip"));
        const auto v = finite_numbers(body.at("magnitudes"), "magnitudes");
        require(v.size() + 1 == in.frame_count(), "expected one magnitude per frame pair");
        for (double x : v) require(x >= 0.0, "negative magnitude");
    } else if (name == "deterministic") {
        const Reply again = transport(method, path, request);
        require(again.status == reply.status && again.body == body, "repeated request gave a different reply");
    } else {
        throw Error(Errc::ParseError, "unknown conformance check '" + name + "'");
    }
}

}  // namespace

Transport http_transport(const wire::Endpoint &endpoint) {
    return [endpoint](const std::string &method, const std::string &path, const json &body) {
        const auto scheme = endpoint.url.find("://");
        if (scheme == std::string::npos) throw Error(Errc::InvalidArgument, "endpoint '" + endpoint.url + "' lacks a scheme");
        const auto slash = endpoint.url.find('/', scheme + 3);
        const std::string origin = slash == std::string::npos ? endpoint.url : endpoint.url.substr(0, slash);
        std::string base = slash == std::string::npos ? "" : endpoint.url.substr(slash);
        while (!base.empty() && base.back() == '/') base.pop_back();

        httplib::Client cli(origin);
        const auto ms = std::chrono::milliseconds(endpoint.timeout_ms);
        cli.set_connection_timeout(ms);
        cli.set_read_timeout(ms);
        auto res = method == "GET" ? cli.Get(base + path) : cli.Post(base + path, body.dump(), "application/json");
        if (!res) throw Error(Errc::BackendError, path + ": " + httplib::to_string(res.error()));
        Reply reply{res->status, json()};
        try {
            reply.body = json::parse(res->body);
        } catch (const json::parse_error &) {
            reply.body = res->body;
        }
        return reply;
    };
}

json expand_body(const json &body) {
    if (body.is_object()) {
        if (body.size() == 1 && body.contains("$clip")) return wire::clip_payload(load_video(body.at("$clip").get<std::string>()));
        json out = json::object();
        for (const auto &[k, v] : body.items()) out[k] = expand_body(v);
        return out;
    }
    if (body.is_array()) {
        json out = json::array();
        for (const auto &v : body) out.push_back(expand_body(v));
        return out;
    }
    return body;
}

std::vector<VectorResult> run(const json &vectors, const Transport &transport) {
    if (!vectors.is_object() || !vectors.contains("vectors") || !vectors.at("vectors").is_array()) {
        throw Error(Errc::ParseError, "conformance document needs a 'vectors' array");
    }
    const Reply health = transport("GET", "/health", json());
    std::vector<VectorResult> results;
    for (const auto &v : vectors.at("vectors")) {
        VectorResult r;
        try {
            r.name = v.at("name").get<std::string>();
            r.role = v.value("role", "");
            const std::string method = v.value("method", "POST");
            const std::string path = v.at("path").get<std::string>();
            r.path = path;
            const json expect = v.value("expect", json::object());
            if (!r.role.empty() && manifest_for(health.body, r.role) == nullptr) {
                r.skipped = true;
                r.passed = true;
                r.message = "role not served";
                results.push_back(std::move(r));
                continue;
            }
            r.request = expand_body(v.value("body", json::object()));
            const Reply reply = transport(method, path, r.request);
            r.response = reply.body;
            r.status = reply.status;
            const int status = expect.value("status", 200);
            require(reply.status == status,
                    "HTTP " + std::to_string(reply.status) + " (expected " + std::to_string(status) + ")");
            const json fields = expect.value("fields", json::object());
            for (const auto &[field, type] : fields.items()) {
                require(reply.body.is_object() && reply.body.contains(field), "field '" + field + "' missing");
                require(type_matches(reply.body.at(field), type.get<std::string>()),
                        "field '" + field + "' is not " + type.get<std::string>());
            }
            for (const auto &c : expect.value("checks", json::array())) {
                check(c.get<std::string>(), r.request, reply, health.body, transport, method, path);
            }
            r.passed = true;
        } catch (const Failure &f) {
            r.message = f.message;
        } catch (const json::exception &e) {
            r.message = std::string("malformed vector or reply: ") + e.what();
        } catch (const Error &e) {
            r.message = e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace finequest::conformance
