#include "finequest/wire.hpp"

#include "finequest/errors.hpp"
#include "finequest/util.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>

namespace finequest::wire {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string origin;
    std::string base_path;
};

SplitUrl split_url(const std::string &url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(Errc::InvalidArgument, "endpoint '" + url + "' lacks a scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string base = url.substr(slash);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {url.substr(0, slash), base};
}

json parse_reply(const httplib::Result &res, const std::string &path, const Endpoint &endpoint,
                 std::chrono::steady_clock::time_point started) {
    if (!res) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout ||
            (err == httplib::Error::Read && elapsed.count() >= endpoint.timeout_ms)) {
            throw Error(Errc::Timeout, path + " timed out after " + std::to_string(elapsed.count()) + " ms");
        }
        throw Error(Errc::BackendError, path + ": " + httplib::to_string(err));
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error &) {
        throw Error(Errc::BackendError, path + ": reply is not JSON (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        const std::string msg = body.is_object() && body.contains("error") ? body["error"].dump() : res->body;
        throw Error(Errc::BackendError, path + ": HTTP " + std::to_string(res->status) + " " + msg);
    }
    return body;
}

template <typename T>
T reply_field(const json &body, const char *key, const std::string &path) {
    try {
        return body.at(key).get<T>();
    } catch (const json::exception &) {
        throw Error(Errc::BackendError, path + ": reply field '" + key + "' missing or mistyped");
    }
}

void configure(httplib::Client &cli, const Endpoint &endpoint) {
    const auto ms = std::chrono::milliseconds(endpoint.timeout_ms);
    cli.set_connection_timeout(ms);
    cli.set_read_timeout(ms);
    cli.set_write_timeout(ms);
}

void reply(httplib::Response &res, const json &body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

/// Wraps a route handler with JSON parsing and error translation.
template <typename Fn>
httplib::Server::Handler json_route(Fn fn) {
    return [fn](const httplib::Request &req, httplib::Response &res) {
        try {
            const json body = req.body.empty() ? json::object() : json::parse(req.body);
            reply(res, fn(body));
        } catch (const json::exception &e) {
            reply(res, {{"error", std::string("bad request: ") + e.what()}}, 400);
        } catch (const Error &e) {
            const int status = e.code() == Errc::BackendUnavailable ? 404 : (e.code() == Errc::ParseError ? 400 : 500);
            reply(res, {{"error", e.what()}, {"code", to_string(e.code())}}, status);
        }
    };
}

}  // namespace

json clip_payload(const ClipTensor &clip, std::size_t inline_threshold) {
    const auto bytes = encode_clip(clip);
    if (bytes.size() <= inline_threshold) {
        return {{"encoding", "inline"}, {"format", "fqclip"}, {"data", util::base64_encode(bytes)}};
    }
    const auto path = std::filesystem::temp_directory_path() / ("finequest-" + clip.content_hash() + ".fqclip");
    if (!std::filesystem::exists(path)) save_clip_file(clip, path.string());
    return {{"encoding", "path"}, {"format", "fqclip"}, {"path", path.string()}};
}

ClipTensor clip_from_payload(const json &payload) {
    if (!payload.is_object()) throw Error(Errc::ParseError, "clip payload must be an object");
    const std::string encoding = payload.value("encoding", "");
    if (payload.value("format", "fqclip") != "fqclip") throw Error(Errc::ParseError, "unsupported clip format");
    if (encoding == "inline") {
        const auto bytes = util::base64_decode(payload.at("data").get<std::string>());
        return decode_clip(bytes);
    }
    if (encoding == "path") return load_clip_file(payload.at("path").get<std::string>());
    throw Error(Errc::ParseError, "clip payload encoding must be 'inline' or 'path'");
}

json post_json(const Endpoint &endpoint, const std::string &path, const json &body) {
    const auto url = split_url(endpoint.url);
    httplib::Client cli(url.origin);
    configure(cli, endpoint);
    const auto started = std::chrono::steady_clock::now();
    auto res = cli.Post(url.base_path + path, body.dump(), "application/json");
    return parse_reply(res, path, endpoint, started);
}

json get_json(const Endpoint &endpoint, const std::string &path) {
    const auto url = split_url(endpoint.url);
    httplib::Client cli(url.origin);
    configure(cli, endpoint);
    const auto started = std::chrono::steady_clock::now();
    auto res = cli.Get(url.base_path + path);
    return parse_reply(res, path, endpoint, started);
}

std::string HttpAgent::respond(const backends::AgentRequest &request) const {
    json body = {{"prompt", request.prompt},
                 {"question", request.question},
                 {"options", json::array()},
                 {"video_ref", request.video_ref},
                 {"role", "agent"}};
    if (request.clip != nullptr) body["clip"] = clip_payload(*request.clip, endpoint_.inline_threshold);
    return reply_field<std::string>(post_json(endpoint_, "/reason", body), "answer", "/reason");
}

std::string HttpCaptioner::caption(const ClipTensor &clip) const {
    const json body = {{"clip", clip_payload(clip, endpoint_.inline_threshold)}};
    return reply_field<std::string>(post_json(endpoint_, "/caption", body), "caption", "/caption");
}

backends::LogitVector HttpScorer::score_logits(const ClipTensor &clip, const std::string &prompt) const {
    const json body = {{"clip", clip_payload(clip, endpoint_.inline_threshold)}, {"prompt", prompt}};
    const json r = post_json(endpoint_, "/score_logits", body);
    return {reply_field<std::string>(r, "vocab_id", "/score_logits"),
            reply_field<std::vector<double>>(r, "logits", "/score_logits")};
}

backends::Embedding HttpEmbedder::embed_text(std::string_view text) const {
    const json body = {{"text", std::string(text)}};
    return reply_field<backends::Embedding>(post_json(endpoint_, "/embed_text", body), "embedding", "/embed_text");
}

backends::Embedding HttpEmbedder::embed_clip(const ClipTensor &clip) const {
    const json body = {{"clip", clip_payload(clip, endpoint_.inline_threshold)}};
    return reply_field<backends::Embedding>(post_json(endpoint_, "/embed_clip", body), "embedding", "/embed_clip");
}

std::string HttpReasoner::reason(const backends::ReasonRequest &request) const {
    const json body = {{"prompt", request.prompt}, {"question", request.question}, {"options", request.options}};
    return reply_field<std::string>(post_json(endpoint_, "/reason", body), "answer", "/reason");
}

ClipTensor HttpMasker::mask(const ClipTensor &clip) const {
    const json body = {{"clip", clip_payload(clip, endpoint_.inline_threshold)}};
    const json r = post_json(endpoint_, "/mask", body);
    try {
        return clip_from_payload(r.at("clip"));
    } catch (const json::exception &) {
        throw Error(Errc::BackendError, "/mask: reply clip missing or malformed");
    } catch (const Error &e) {
        throw Error(Errc::BackendError, std::string("/mask: ") + e.what());
    }
}

std::vector<double> HttpFlow::flow_magnitudes(const ClipTensor &clip) const {
    const json body = {{"clip", clip_payload(clip, endpoint_.inline_threshold)}};
    return reply_field<std::vector<double>>(post_json(endpoint_, "/flow", body), "magnitudes", "/flow");
}

json health_document(const backends::BackendSet &b) {
    json manifests = json::array();
    auto add = [&](backends::Role role, bool present, json extra = json::object()) {
        if (!present) return;
        extra["role"] = to_string(role);
        manifests.push_back(std::move(extra));
    };
    add(backends::Role::Agent, b.agent != nullptr);
    add(backends::Role::Captioner, b.captioner != nullptr);
    if (b.scorer) {
        const auto v = b.scorer->vocabulary();
        json m = {{"vocab_id", v.vocab_id}, {"vocab_size", v.size}};
        m["affirmative_token_index"] = v.affirmative_token_index ? json(*v.affirmative_token_index) : json(nullptr);
        add(backends::Role::Scorer, true, m);
    }
    if (b.embedder) add(backends::Role::Embedder, true, {{"embedding_dim", b.embedder->dim()}});
    add(backends::Role::Reasoner, b.reasoner != nullptr);
    add(backends::Role::Masker, b.masker != nullptr);
    add(backends::Role::Flow, b.flow != nullptr);
    return {{"status", "ok"}, {"manifests", manifests}};
}

void mount_backend_routes(httplib::Server &server, backends::BackendSet b) {
    server.Get("/health", [b](const httplib::Request &, httplib::Response &res) { reply(res, health_document(b)); });
    server.Post("/caption", json_route([b](const json &body) {
        return json{{"caption", backends::caption(b.require_captioner(), clip_from_payload(body.at("clip")))}};
    }));
    server.Post("/score_logits", json_route([b](const json &body) {
        const auto &scorer = b.require_scorer();
        const auto logits = backends::score_logits(scorer, clip_from_payload(body.at("clip")), body.at("prompt").get<std::string>());
        const auto vocab = scorer.vocabulary();
        json out = {{"vocab_id", logits.vocab_id}, {"logits", logits.values}};
        out["affirmative_token_index"] = vocab.affirmative_token_index ? json(*vocab.affirmative_token_index) : json(nullptr);
        return out;
    }));
    server.Post("/embed_text", json_route([b](const json &body) {
        return json{{"embedding", backends::embed_text(b.require_embedder(), body.at("text").get<std::string>())}};
    }));
    server.Post("/embed_clip", json_route([b](const json &body) {
        return json{{"embedding", backends::embed_clip(b.require_embedder(), clip_from_payload(body.at("clip")))}};
    }));
    server.Post("/reason", json_route([b](const json &body) {
        // Agent calls share this endpoint; they are tagged with role "agent" or carry the video clip.
        const bool has_clip = body.contains("clip") && !body.at("clip").is_null();
        if (body.value("role", "") == "agent" || has_clip) {
            std::optional<ClipTensor> clip;
            if (has_clip) clip = clip_from_payload(body.at("clip"));
            backends::AgentRequest req{body.value("video_ref", ""), clip ? &*clip : nullptr, body.value("prompt", ""),
                                       body.value("question", "")};
            return json{{"answer", b.require_agent().respond(req)}};
        }
        backends::ReasonRequest req{body.value("prompt", ""), body.value("question", ""),
                                    body.value("options", std::vector<std::string>{})};
        return json{{"answer", backends::reason(b.require_reasoner(), req)}};
    }));
    server.Post("/mask", json_route([b](const json &body) {
        return json{{"clip", clip_payload(backends::mask(b.require_masker(), clip_from_payload(body.at("clip"))))}};
    }));
    server.Post("/flow", json_route([b](const json &body) {
        return json{{"magnitudes", backends::flow_magnitudes(b.require_flow(), clip_from_payload(body.at("clip")))}};
    }));
}

}  // namespace finequest::wire
