#pragma once

#include "finequest/clip.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finequest {
namespace ssgraph {
struct SportsGraph;
}

/// Model-facing roles and the clients that serve them. Every client must tolerate
/// concurrent in-flight calls; the engine treats them as pure functions of their inputs.
namespace backends {

using Embedding = std::vector<double>;

enum class Role { Agent, Captioner, Scorer, Embedder, Reasoner, Masker, Flow };

inline constexpr Role kAllRoles[] = {Role::Agent,    Role::Captioner, Role::Scorer, Role::Embedder,
                                     Role::Reasoner, Role::Masker,    Role::Flow};

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view text);

/// Pre-softmax scores over a backend-declared vocabulary.
struct LogitVector {
    std::string vocab_id;
    std::vector<double> values;

    bool operator==(const LogitVector &) const = default;
};

struct ScorerVocabulary {
    std::string vocab_id;
    std::size_t size = 0;
    /// Index of the affirmative ("yes") token; absent when the vocabulary lacks one.
    std::optional<std::size_t> affirmative_token_index;
};

struct AgentRequest {
    std::string video_ref;
    const ClipTensor *clip = nullptr;
    std::string prompt;
    std::string question;
};

struct ReasonRequest {
    std::string prompt;
    std::string question;
    std::vector<std::string> options;
};

class Agent {
  public:
    virtual ~Agent() = default;
    virtual std::string respond(const AgentRequest &request) const = 0;
};

class Captioner {
  public:
    virtual ~Captioner() = default;
    virtual std::string caption(const ClipTensor &clip) const = 0;
};

class Scorer {
  public:
    virtual ~Scorer() = default;
    [[nodiscard]] virtual ScorerVocabulary vocabulary() const = 0;
    virtual LogitVector score_logits(const ClipTensor &clip, const std::string &prompt) const = 0;
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    virtual Embedding embed_text(std::string_view text) const = 0;
    virtual Embedding embed_clip(const ClipTensor &clip) const = 0;
};

class Reasoner {
  public:
    virtual ~Reasoner() = default;
    virtual std::string reason(const ReasonRequest &request) const = 0;
};

/// Athlete highlighting preprocessor; returns a clip of identical shape.
class Masker {
  public:
    virtual ~Masker() = default;
    virtual ClipTensor mask(const ClipTensor &clip) const = 0;
};

/// Aggregated optical-flow magnitude per consecutive frame pair.
class FlowEstimator {
  public:
    virtual ~FlowEstimator() = default;
    virtual std::vector<double> flow_magnitudes(const ClipTensor &clip) const = 0;
};

/// The wired set of clients. Any role may be absent; the require_* accessors raise
/// BackendUnavailable naming the role.
struct BackendSet {
    std::shared_ptr<const Agent> agent;
    std::shared_ptr<const Captioner> captioner;
    std::shared_ptr<const Scorer> scorer;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const Reasoner> reasoner;
    std::shared_ptr<const Masker> masker;
    std::shared_ptr<const FlowEstimator> flow;

    const Agent &require_agent() const;
    const Captioner &require_captioner() const;
    const Scorer &require_scorer() const;
    const Embedder &require_embedder() const;
    const Reasoner &require_reasoner() const;
    const Masker &require_masker() const;
    const FlowEstimator &require_flow() const;
};

// Contract-checked calls. These enforce the post-conditions of each role regardless
// of which client sits behind it.

/// Non-empty caption or BackendError.
std::string caption(const Captioner &captioner, const ClipTensor &clip);
/// Vector over the scorer's declared vocabulary or VocabMismatch.
LogitVector score_logits(const Scorer &scorer, const ClipTensor &clip, const std::string &prompt);
/// Finite, non-zero vector of the embedder's dimension or DimensionError / BackendError.
Embedding embed_text(const Embedder &embedder, std::string_view text);
Embedding embed_clip(const Embedder &embedder, const ClipTensor &clip);
std::string reason(const Reasoner &reasoner, const ReasonRequest &request);
ClipTensor mask(const Masker &masker, const ClipTensor &clip);
std::vector<double> flow_magnitudes(const FlowEstimator &flow, const ClipTensor &clip);

/// Wiring-time compatibility check: embedder dimension must equal the graph's D.
void check_wiring(const BackendSet &backends, const ssgraph::SportsGraph &graph);

}  // namespace backends
}  // namespace finequest
