#include "finequest/backends.hpp"

#include "finequest/errors.hpp"
#include "finequest/ssgraph.hpp"

#include <cmath>

namespace finequest::backends {

namespace {

template <typename T>
const T &require(const std::shared_ptr<const T> &ptr, Role role) {
    if (!ptr) throw Error(Errc::BackendUnavailable, "no " + std::string(to_string(role)) + " backend configured");
    return *ptr;
}

Embedding checked_embedding(Embedding e, std::size_t dim, const char *what) {
    if (e.size() != dim) {
        throw Error(Errc::DimensionError, std::string(what) + " returned length " + std::to_string(e.size()) +
                                              ", declared dim " + std::to_string(dim));
    }
    bool nonzero = false;
    for (double x : e) {
        if (!std::isfinite(x)) throw Error(Errc::BackendError, std::string(what) + " returned a non-finite value");
        nonzero = nonzero || x != 0.0;
    }
    if (!nonzero) throw Error(Errc::BackendError, std::string(what) + " returned an all-zero vector");
    return e;
}

}  // namespace

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::Agent: return "agent";
        case Role::Captioner: return "captioner";
        case Role::Scorer: return "scorer";
        case Role::Embedder: return "embedder";
        case Role::Reasoner: return "reasoner";
        case Role::Masker: return "masker";
        case Role::Flow: return "flow";
    }
    return "agent";
}

Role parse_role(std::string_view text) {
    for (Role r : kAllRoles)
        if (to_string(r) == text) return r;
    throw Error(Errc::ParseError, "unknown backend role '" + std::string(text) + "'");
}

const Agent &BackendSet::require_agent() const { return require(agent, Role::Agent); }
const Captioner &BackendSet::require_captioner() const { return require(captioner, Role::Captioner); }
const Scorer &BackendSet::require_scorer() const { return require(scorer, Role::Scorer); }
const Embedder &BackendSet::require_embedder() const { return require(embedder, Role::Embedder); }
const Reasoner &BackendSet::require_reasoner() const { return require(reasoner, Role::Reasoner); }
const Masker &BackendSet::require_masker() const { return require(masker, Role::Masker); }
const FlowEstimator &BackendSet::require_flow() const { return require(flow, Role::Flow); }

std::string caption(const Captioner &captioner, const ClipTensor &clip) {
    std::string text = captioner.caption(clip);
    if (text.empty()) throw Error(Errc::BackendError, "captioner returned an empty caption");
    return text;
}

LogitVector score_logits(const Scorer &scorer, const ClipTensor &clip, const std::string &prompt) {
    const auto vocab = scorer.vocabulary();
    LogitVector out = scorer.score_logits(clip, prompt);
    if (out.vocab_id != vocab.vocab_id || out.values.size() != vocab.size) {
        throw Error(Errc::VocabMismatch, "scorer returned " + std::to_string(out.values.size()) + " logits over '" +
                                             out.vocab_id + "', manifest declares " + std::to_string(vocab.size) +
                                             " over '" + vocab.vocab_id + "'");
    }
    for (double v : out.values) {
        if (!std::isfinite(v)) throw Error(Errc::BackendError, "scorer returned a non-finite logit");
    }
    return out;
}

Embedding embed_text(const Embedder &embedder, std::string_view text) {
    return checked_embedding(embedder.embed_text(text), embedder.dim(), "embed_text");
}

Embedding embed_clip(const Embedder &embedder, const ClipTensor &clip) {
    return checked_embedding(embedder.embed_clip(clip), embedder.dim(), "embed_clip");
}

std::string reason(const Reasoner &reasoner, const ReasonRequest &request) { return reasoner.reason(request); }

ClipTensor mask(const Masker &masker, const ClipTensor &clip) {
    ClipTensor out = masker.mask(clip);
    if (out.shape() != clip.shape()) throw Error(Errc::BackendError, "masker changed the clip shape");
    return out;
}

std::vector<double> flow_magnitudes(const FlowEstimator &flow, const ClipTensor &clip) {
    auto out = flow.flow_magnitudes(clip);
    for (double v : out) {
        if (!std::isfinite(v) || v < 0.0) throw Error(Errc::BackendError, "flow magnitudes must be finite and >= 0");
    }
    return out;
}

void check_wiring(const BackendSet &backends, const ssgraph::SportsGraph &graph) {
    if (backends.embedder && backends.embedder->dim() != graph.embedding_dim) {
        throw Error(Errc::DimensionError, "embedder dimension " + std::to_string(backends.embedder->dim()) +
                                              " does not match graph embedding_dim " +
                                              std::to_string(graph.embedding_dim));
    }
    if (backends.scorer) {
        const auto vocab = backends.scorer->vocabulary();
        if (vocab.affirmative_token_index && *vocab.affirmative_token_index >= vocab.size) {
            throw Error(Errc::MissingAffirmativeToken, "affirmative_token_index outside the scorer vocabulary");
        }
    }
}

}  // namespace finequest::backends
