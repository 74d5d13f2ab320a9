#pragma once

#include "finequest/backends.hpp"
#include "finequest/clip.hpp"
#include "finequest/distortions.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace finequest::selector {

using backends::LogitVector;

/// Contrastive weights for the spatial, temporal and spatio-temporal distortions.
struct ContrastiveWeights {
    double alpha_s = 0.5;
    double alpha_t = 0.3;
    double alpha_st = 0.2;

    [[nodiscard]] double total() const noexcept { return alpha_s + alpha_t + alpha_st; }
    void validate() const;
};

/// Selection prompt appended to the query before scoring.
inline constexpr const char *kSelectionPrompt = "Is this clip relevant to the question? Answer yes or no.";

std::string selection_query(const std::string &query);

/// (1 + a) * orig - a_s * spa - a_t * tem - a_st * st, elementwise.
/// Throws VocabMismatch / LengthMismatch.
LogitVector contrastive_logits(const LogitVector &orig, const LogitVector &spa, const LogitVector &tem,
                               const LogitVector &st, const ContrastiveWeights &weights);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

std::vector<double> contrastive_distribution(const LogitVector &orig, const LogitVector &spa, const LogitVector &tem,
                                             const LogitVector &st, const ContrastiveWeights &weights);

/// Contrastive probability of the scorer's affirmative token for one clip.
double relevance_score(const ClipTensor &clip, const std::string &query, const ContrastiveWeights &weights,
                       const distortions::DistortionSet &specs, const backends::Scorer &scorer);

struct ClipScore {
    std::size_t clip_index = 0;
    double score = 0.0;
};

/// Run of adjacent selected clips, [first_clip, end_clip) in clip-index space.
struct ClipRun {
    std::size_t first_clip = 0;
    std::size_t end_clip = 0;

    bool operator==(const ClipRun &) const = default;
};

/// Indices of the n1 highest scores, ties to the lower clip index, returned ascending.
std::vector<std::size_t> top_n_indices(std::span<const ClipScore> scores, std::size_t n1);

/// Merges ascending indices into runs of consecutive indices.
std::vector<ClipRun> merge_adjacent(std::span<const std::size_t> sorted_indices);

struct Selection {
    std::vector<ClipScore> scores;
    std::vector<std::size_t> selected;
    std::vector<ClipRun> runs;
};

/// Scores every clip, keeps the top n1 and merges neighbours. Throws EmptyClipList.
/// `workers` > 1 scores clips concurrently.
Selection select_key_clips(std::span<const ClipTensor> clips, const std::string &query,
                           const ContrastiveWeights &weights, const distortions::DistortionSet &specs,
                           const backends::Scorer &scorer, std::size_t n1, std::size_t workers = 1);

/// Length-bucketed clip count: 10 per started 30 seconds.
std::size_t bucketed_n(double duration_s);

}  // namespace finequest::selector
