#pragma once

#include "finequest/backends.hpp"
#include "finequest/clip.hpp"
#include "finequest/contrastive_selector.hpp"
#include "finequest/distortions.hpp"
#include "finequest/errors.hpp"
#include "finequest/matcher.hpp"
#include "finequest/motion_segmenter.hpp"
#include "finequest/ssgraph.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finequest::router {

enum class Relevance { Direct, Indirect };
enum class QuestionType { Static, Dynamic };
enum class Reasoning { SingleStep, MultiStep };
enum class Decision { Answer, Switch };
enum class Mode { Reactive, Deliberative };
enum class ForceMode { Auto, Reactive, Deliberative };

std::string_view to_string(Relevance v) noexcept;
std::string_view to_string(QuestionType v) noexcept;
std::string_view to_string(Reasoning v) noexcept;
std::string_view to_string(Decision v) noexcept;
std::string_view to_string(Mode v) noexcept;
std::string_view to_string(ForceMode v) noexcept;
ForceMode parse_force_mode(std::string_view text);

struct DifficultyAssessment {
    Relevance relevance = Relevance::Direct;
    QuestionType question_type = QuestionType::Static;
    Reasoning reasoning = Reasoning::SingleStep;
    bool external_knowledge = false;
    Decision decision = Decision::Answer;
    std::string rationale;
    /// Direct answer carried by the agent reply (reactive path only).
    std::string answer;
    /// Set when the reply was not valid JSON and the keyword fallback decided.
    bool fallback = false;
    /// Set when the engine rewrote the backend's decision.
    bool overridden = false;

    bool operator==(const DifficultyAssessment &) const = default;
};

/// The shipped reactive instruction prompt (versioned asset compiled into the library).
const std::string &default_reactive_prompt();
inline constexpr const char *kReactivePromptVersion = "reactive_prompt_v1";

/// Fills {{video_ref}}, {{question}} and {{options}} in a prompt template.
std::string render_reactive_prompt(const std::string &prompt_template, const std::string &video_ref,
                                   const std::string &question, const std::vector<std::string> &options);

/// Parses an agent reply. Accepts a bare JSON object, one wrapped in a code fence, or
/// one embedded in surrounding text. Falls back to keyword detection ("switch" anywhere
/// means switch). Applies the consistency override: multi_step or external knowledge
/// always switches. Throws UnparseableResponse on a blank reply.
DifficultyAssessment parse_assessment(const std::string &reply);

/// One agent call plus parse_assessment.
DifficultyAssessment classify_query(const std::string &video_ref, const std::string &question,
                                    const backends::Agent &agent, const ClipTensor *clip = nullptr,
                                    const std::vector<std::string> &options = {},
                                    const std::string &prompt_template = default_reactive_prompt());

nlohmann::json to_json(const DifficultyAssessment &a);

struct StageRecord {
    std::string stage;
    nlohmann::json detail;

    bool operator==(const StageRecord &) const = default;
};

using Trace = std::vector<StageRecord>;

/// Ordered names of the deliberative stages.
inline constexpr const char *kDeliberativeStages[] = {"segment", "select", "caption", "embed", "match", "reason"};

struct RoutedAnswer {
    std::string text;
    /// Option letter extracted from `text` when options were supplied.
    std::optional<char> letter;
    Mode mode = Mode::Reactive;
    DifficultyAssessment assessment;
    Trace trace;
};

nlohmann::json to_json(const RoutedAnswer &answer);

/// A failure inside one pipeline stage; keeps the trace recorded up to that point.
class StageError : public Error {
  public:
    StageError(std::string stage, const Error &cause, Trace partial_trace);

    [[nodiscard]] const std::string &stage() const noexcept { return stage_; }
    [[nodiscard]] const Trace &trace() const noexcept { return trace_; }

  private:
    std::string stage_;
    Trace trace_;
};

struct PipelineConfig {
    segmenter::SegmenterConfig segmenter;
    segmenter::MotionEstimator estimator = segmenter::MotionEstimator::FrameDiff;
    /// Runs the masker backend before segmentation when one is wired.
    bool use_mask = false;
    double noise_sigma = 0.1;
    double warp_strength = 0.5;
    distortions::SpatialVariant spatial_variant = distortions::SpatialVariant::GaussianNoise;
    distortions::TemporalVariant temporal_variant = distortions::TemporalVariant::TemporalWarp;
    selector::ContrastiveWeights weights;
    /// 0 selects the duration-bucketed value.
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    matcher::MatchOptions match;
    std::string reasoning_prompt =
        "Answer the multiple-choice question about the sports video using the clip captions and the domain "
        "knowledge below. Reply with the letter of the correct option.";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    ForceMode force_mode = ForceMode::Auto;
    /// Empty means the compiled-in reactive prompt.
    std::string reactive_prompt_path;

    void validate() const;
};

/// Reads a config document; absent keys keep their defaults. Throws ParseError.
PipelineConfig pipeline_config_from_json(const nlohmann::json &doc);
nlohmann::json to_json(const PipelineConfig &cfg);

/// The routed question-answering engine. Immutable after construction, so answer()
/// may be called concurrently.
class Engine {
  public:
    /// Validates the config and backend wiring. `graph` may be null when only the
    /// reactive path is exercised; the match stage then fails with EmptyGraph.
    Engine(PipelineConfig config, backends::BackendSet backends, std::shared_ptr<const ssgraph::SportsGraph> graph);

    RoutedAnswer answer(const std::string &video_ref, const std::string &question,
                        const std::vector<std::string> &options = {}) const;

    /// Same as above with the video already decoded.
    RoutedAnswer answer(const ClipTensor &video, const std::string &video_ref, const std::string &question,
                        const std::vector<std::string> &options = {}) const;

    [[nodiscard]] const PipelineConfig &config() const noexcept { return config_; }

  private:
    std::string deliberate(const ClipTensor &video, const std::string &question,
                           const std::vector<std::string> &options, Trace &trace) const;

    PipelineConfig config_;
    backends::BackendSet backends_;
    std::shared_ptr<const ssgraph::SportsGraph> graph_;
    std::string reactive_prompt_;
};

}  // namespace finequest::router
