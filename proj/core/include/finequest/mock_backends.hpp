#pragma once

#include "finequest/backends.hpp"
#include "finequest/errors.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

// Deterministic in-process backends. Each mock is a pure function of its inputs and
// seed; scripted tables take precedence over the seeded fallback. All are safe for
// concurrent calls.
namespace finequest::backends::mock {

/// Shared failure injection and call accounting.
class MockBase {
  public:
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }
    void reset_calls() noexcept { calls_ = 0; }
    /// Every subsequent call throws Error(code).
    void fail_with(Errc code, std::string message = "injected failure");
    void clear_failure();

  protected:
    void enter() const;
    mutable std::mutex mutex_;

  private:
    mutable std::atomic<std::size_t> calls_{0};
    std::optional<std::pair<Errc, std::string>> failure_;
};

class MockAgent final : public Agent, public MockBase {
  public:
    using Handler = std::function<std::string(const AgentRequest &)>;

    MockAgent();
    void script(const std::string &question, std::string response);
    void set_default(std::string response);
    void set_handler(Handler handler);

    std::string respond(const AgentRequest &request) const override;

    /// Assessment JSON a well-behaved agent returns.
    static std::string assessment_json(bool switch_needed, const std::string &answer = "",
                                       const std::string &rationale = "");

  private:
    std::map<std::string, std::string> by_question_;
    std::string default_response_;
    Handler handler_;
};

class MockCaptioner final : public Captioner, public MockBase {
  public:
    void script(const std::string &clip_hash, std::string caption);
    std::string caption(const ClipTensor &clip) const override;

  private:
    std::map<std::string, std::string> by_clip_;
};

class MockScorer final : public Scorer, public MockBase {
  public:
    using Handler = std::function<LogitVector(const ClipTensor &, const std::string &)>;

    explicit MockScorer(ScorerVocabulary vocabulary = default_vocabulary(), std::uint64_t seed = 0);

    static ScorerVocabulary default_vocabulary();

    void script(const std::string &clip_hash, const std::string &prompt_hash, std::vector<double> logits);
    void set_handler(Handler handler);

    [[nodiscard]] ScorerVocabulary vocabulary() const override { return vocabulary_; }
    LogitVector score_logits(const ClipTensor &clip, const std::string &prompt) const override;

  private:
    ScorerVocabulary vocabulary_;
    std::uint64_t seed_;
    std::map<std::pair<std::string, std::string>, std::vector<double>> table_;
    Handler handler_;
};

/// SHA-256(input) seeds a Gaussian vector which is then L2-normalized.
class MockEmbedder final : public Embedder, public MockBase {
  public:
    explicit MockEmbedder(std::size_t dim, std::uint64_t seed = 0);

    void script_text(const std::string &text, Embedding embedding);
    void script_clip(const std::string &clip_hash, Embedding embedding);

    [[nodiscard]] std::size_t dim() const override { return dim_; }
    Embedding embed_text(std::string_view text) const override;
    Embedding embed_clip(const ClipTensor &clip) const override;

    /// The seeded unit vector for an arbitrary byte string.
    static Embedding hash_to_unit_vector(std::string_view bytes, std::size_t dim, std::uint64_t seed);

  private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::map<std::string, Embedding> text_;
    std::map<std::string, Embedding> clip_;
};

class MockReasoner final : public Reasoner, public MockBase {
  public:
    using Handler = std::function<std::string(const ReasonRequest &)>;

    void script_question(const std::string &question, std::string answer);
    void script_prompt(const std::string &prompt_hash, std::string answer);
    void set_default(std::string answer);
    void set_handler(Handler handler);

    std::string reason(const ReasonRequest &request) const override;

  private:
    std::map<std::string, std::string> by_question_;
    std::map<std::string, std::string> by_prompt_;
    std::string default_answer_ = "A";
    Handler handler_;
};

/// Identity masker.
class MockMasker final : public Masker, public MockBase {
  public:
    ClipTensor mask(const ClipTensor &clip) const override;
};

/// Mean absolute frame difference standing in for optical flow.
class MockFlow final : public FlowEstimator, public MockBase {
  public:
    std::vector<double> flow_magnitudes(const ClipTensor &clip) const override;
};

/// Concrete handles on a full mock wiring, for tests that script and inspect calls.
struct MockBackends {
    std::shared_ptr<MockAgent> agent = std::make_shared<MockAgent>();
    std::shared_ptr<MockCaptioner> captioner = std::make_shared<MockCaptioner>();
    std::shared_ptr<MockScorer> scorer = std::make_shared<MockScorer>();
    std::shared_ptr<MockEmbedder> embedder;
    std::shared_ptr<MockReasoner> reasoner = std::make_shared<MockReasoner>();
    std::shared_ptr<MockMasker> masker = std::make_shared<MockMasker>();
    std::shared_ptr<MockFlow> flow = std::make_shared<MockFlow>();

    explicit MockBackends(std::size_t embedding_dim, std::uint64_t seed = 0);

    [[nodiscard]] BackendSet set() const;
    /// Calls made to the captioner, scorer, embedder and reasoner.
    [[nodiscard]] std::size_t deliberative_calls() const;
    void reset_calls();

    /// Applies a fixture document (per-role scripted tables).
    void load_fixtures(const nlohmann::json &doc);
};

}  // namespace finequest::backends::mock
