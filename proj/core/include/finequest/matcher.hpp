#pragma once

#include "finequest/clip.hpp"
#include "finequest/ssgraph.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace finequest::matcher {

using ssgraph::Embedding;

/// A selected key clip in embedding space together with its caption.
struct EmbeddedClip {
    FrameInterval clip_ref;
    Embedding embedding;
    std::string caption_text;
    Embedding caption_embedding;
};

struct ScoreBreakdown {
    double t2t = 0.0;
    double v2v = 0.0;
    double t2v = 0.0;
    double v2t = 0.0;
    double v2r = 0.0;

    bool operator==(const ScoreBreakdown &) const = default;
};

struct MatchResult {
    std::string node_id;
    std::string terminology;
    std::string description_text;
    ScoreBreakdown score_breakdown;
    double combined = 0.0;

    bool operator==(const MatchResult &) const = default;
};

/// combined = weighted mean of the four cosine channels + v2r_weight * v2r.
struct ChannelWeights {
    double t2t = 1.0;
    double v2v = 1.0;
    double t2v = 1.0;
    double v2t = 1.0;
    double v2r = 1.0;

    void validate() const;
};

struct MatchOptions {
    std::size_t top_k = 5;
    ChannelWeights weights;
    /// Restricts the scan to one sport when set.
    std::optional<ssgraph::SportCode> sport;
};

/// Throws ZeroVector / LengthMismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Instance-level candidates: union of the top-k elements by text-to-text and by
/// visual-to-visual similarity, each with all four cross-modal channels filled.
/// Candidates are returned in graph order. Throws EmptyGraph / DimensionError.
std::vector<MatchResult> instance_match(const EmbeddedClip &item, const ssgraph::SportsGraph &graph,
                                        const MatchOptions &options = {});

/// Mean over relation sentences of cos(clip, positive) - cos(clip, negative).
/// Throws NoRelationSentences.
double relational_score(const EmbeddedClip &clip, const ssgraph::ElementNode &node);

double combine(const ScoreBreakdown &scores, const ChannelWeights &weights);

/// Top-n2 elements by combined score, ties by node_id.
std::vector<MatchResult> match(const EmbeddedClip &item, const ssgraph::SportsGraph &graph, std::size_t n2,
                               const MatchOptions &options = {});

/// Appends a "Domain knowledge:" block, one "{terminology}: {description}" line per match.
/// Throws EmptyMatches.
std::string enrich_prompt(const std::string &base, std::span<const MatchResult> matches);

nlohmann::json to_json(const MatchResult &result);
nlohmann::json to_json(std::span<const MatchResult> results);

}  // namespace finequest::matcher
