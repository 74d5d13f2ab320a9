#pragma once

#include "finequest/backends.hpp"

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

/// JSON-over-HTTP backend protocol.
///
///   POST /caption       {clip}                                   -> {caption}
///   POST /score_logits  {clip, prompt}                           -> {vocab_id, logits, affirmative_token_index}
///   POST /embed_text    {text}                                   -> {embedding}
///   POST /embed_clip    {clip}                                   -> {embedding}
///   POST /reason        {prompt, question, options[, role, video_ref, clip]} -> {answer}
///                       (role "agent" or an attached clip selects the agent role)
///   POST /mask          {clip}                                   -> {clip}
///   POST /flow          {clip}                                   -> {magnitudes}
///   GET  /health                                                 -> {status, manifests}
///
/// A clip payload is {"encoding": "inline", "format": "fqclip", "data": <base64>} or
/// {"encoding": "path", "format": "fqclip", "path": <file>}. Errors are non-2xx replies
/// with body {"error": <message>}.
namespace finequest::wire {

inline constexpr std::size_t kDefaultInlineThreshold = 8U * 1024U * 1024U;

struct Endpoint {
    std::string url;  ///< scheme://host:port[/base]
    int timeout_ms = 30000;
    std::size_t inline_threshold = kDefaultInlineThreshold;
};

nlohmann::json clip_payload(const ClipTensor &clip, std::size_t inline_threshold = kDefaultInlineThreshold);
ClipTensor clip_from_payload(const nlohmann::json &payload);

/// POSTs `body` to `url + path`; maps transport failures to Timeout / BackendError.
nlohmann::json post_json(const Endpoint &endpoint, const std::string &path, const nlohmann::json &body);
nlohmann::json get_json(const Endpoint &endpoint, const std::string &path);

class HttpAgent final : public backends::Agent {
  public:
    explicit HttpAgent(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string respond(const backends::AgentRequest &request) const override;

  private:
    Endpoint endpoint_;
};

class HttpCaptioner final : public backends::Captioner {
  public:
    explicit HttpCaptioner(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string caption(const ClipTensor &clip) const override;

  private:
    Endpoint endpoint_;
};

class HttpScorer final : public backends::Scorer {
  public:
    HttpScorer(Endpoint endpoint, backends::ScorerVocabulary vocabulary)
        : endpoint_(std::move(endpoint)), vocabulary_(std::move(vocabulary)) {}
    [[nodiscard]] backends::ScorerVocabulary vocabulary() const override { return vocabulary_; }
    backends::LogitVector score_logits(const ClipTensor &clip, const std::string &prompt) const override;

  private:
    Endpoint endpoint_;
    backends::ScorerVocabulary vocabulary_;
};

class HttpEmbedder final : public backends::Embedder {
  public:
    HttpEmbedder(Endpoint endpoint, std::size_t dim) : endpoint_(std::move(endpoint)), dim_(dim) {}
    [[nodiscard]] std::size_t dim() const override { return dim_; }
    backends::Embedding embed_text(std::string_view text) const override;
    backends::Embedding embed_clip(const ClipTensor &clip) const override;

  private:
    Endpoint endpoint_;
    std::size_t dim_;
};

class HttpReasoner final : public backends::Reasoner {
  public:
    explicit HttpReasoner(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string reason(const backends::ReasonRequest &request) const override;

  private:
    Endpoint endpoint_;
};

class HttpMasker final : public backends::Masker {
  public:
    explicit HttpMasker(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    ClipTensor mask(const ClipTensor &clip) const override;

  private:
    Endpoint endpoint_;
};

class HttpFlow final : public backends::FlowEstimator {
  public:
    explicit HttpFlow(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<double> flow_magnitudes(const ClipTensor &clip) const override;

  private:
    Endpoint endpoint_;
};

/// Serves the protocol above from an in-process BackendSet (used to expose mocks).
void mount_backend_routes(httplib::Server &server, backends::BackendSet backends);

/// /health body describing the roles present in `backends`.
nlohmann::json health_document(const backends::BackendSet &backends);

}  // namespace finequest::wire
