#include "finequest/contrastive_selector.hpp"

#include "finequest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

namespace finequest::selector {

namespace {

void check_compatible(const LogitVector &a, const LogitVector &b) {
    if (a.vocab_id != b.vocab_id) {
        throw Error(Errc::VocabMismatch, "vocab '" + a.vocab_id + "' vs '" + b.vocab_id + "'");
    }
    if (a.values.size() != b.values.size()) {
        throw Error(Errc::LengthMismatch, std::to_string(a.values.size()) + " vs " + std::to_string(b.values.size()) + " logits");
    }
}

}  // namespace

void ContrastiveWeights::validate() const {
    for (double a : {alpha_s, alpha_t, alpha_st}) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw Error(Errc::InvalidArgument, "contrastive weights must be finite and >= 0");
    }
}

std::string selection_query(const std::string &query) { return query + "\n" + kSelectionPrompt; }

LogitVector contrastive_logits(const LogitVector &orig, const LogitVector &spa, const LogitVector &tem,
                               const LogitVector &st, const ContrastiveWeights &weights) {
    weights.validate();
    check_compatible(orig, spa);
    check_compatible(orig, tem);
    check_compatible(orig, st);
    const double amplify = 1.0 + weights.total();
    LogitVector out{orig.vocab_id, std::vector<double>(orig.values.size())};
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] = amplify * orig.values[k] - weights.alpha_s * spa.values[k] - weights.alpha_t * tem.values[k] -
                        weights.alpha_st * st.values[k];
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw Error(Errc::LengthMismatch, "softmax of an empty vector");
    const double peak = *std::ranges::max_element(logits);
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - peak);
        total += out[k];
    }
    for (auto &p : out) p /= total;
    return out;
}

std::vector<double> contrastive_distribution(const LogitVector &orig, const LogitVector &spa, const LogitVector &tem,
                                             const LogitVector &st, const ContrastiveWeights &weights) {
    return softmax(contrastive_logits(orig, spa, tem, st, weights).values);
}

double relevance_score(const ClipTensor &clip, const std::string &query, const ContrastiveWeights &weights,
                       const distortions::DistortionSet &specs, const backends::Scorer &scorer) {
    const auto vocab = scorer.vocabulary();
    if (!vocab.affirmative_token_index || *vocab.affirmative_token_index >= vocab.size) {
        throw Error(Errc::MissingAffirmativeToken, "scorer vocabulary '" + vocab.vocab_id + "' declares no affirmative token");
    }
    const std::string prompt = selection_query(query);
    const auto orig = backends::score_logits(scorer, clip, prompt);
    const auto spa = backends::score_logits(scorer, distortions::spatial_distort(clip, specs.spatial), prompt);
    const auto tem = backends::score_logits(scorer, distortions::temporal_warp(clip, specs.temporal), prompt);
    const auto st = backends::score_logits(scorer, distortions::spatiotemporal_distort(clip, specs.spatiotemporal), prompt);
    return contrastive_distribution(orig, spa, tem, st, weights)[*vocab.affirmative_token_index];
}

std::vector<std::size_t> top_n_indices(std::span<const ClipScore> scores, std::size_t n1) {
    std::vector<ClipScore> ranked(scores.begin(), scores.end());
    std::ranges::sort(ranked, [](const ClipScore &a, const ClipScore &b) {
        if (a.score != b.score) return a.score > b.score;
        return a.clip_index < b.clip_index;
    });
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < std::min(n1, ranked.size()); ++k) out.push_back(ranked[k].clip_index);
    std::ranges::sort(out);
    return out;
}

std::vector<ClipRun> merge_adjacent(std::span<const std::size_t> sorted_indices) {
    std::vector<ClipRun> runs;
    for (std::size_t idx : sorted_indices) {
        if (!runs.empty() && runs.back().end_clip == idx) {
            runs.back().end_clip = idx + 1;
        } else {
            runs.push_back({idx, idx + 1});
        }
    }
    return runs;
}

Selection select_key_clips(std::span<const ClipTensor> clips, const std::string &query,
                           const ContrastiveWeights &weights, const distortions::DistortionSet &specs,
                           const backends::Scorer &scorer, std::size_t n1, std::size_t workers) {
    if (clips.empty()) throw Error(Errc::EmptyClipList, "no clips to select from");
    if (n1 == 0) throw Error(Errc::InvalidArgument, "n1 must be at least 1");

    Selection sel;
    sel.scores.resize(clips.size());
    auto score_one = [&](std::size_t i) {
        sel.scores[i] = {i, relevance_score(clips[i], query, weights, specs, scorer)};
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < clips.size(); ++i) score_one(i);
    } else {
        // Strided partition; each slot is written by exactly one task.
        std::vector<std::future<void>> tasks;
        const std::size_t n_tasks = std::min(workers, clips.size());
        for (std::size_t w = 0; w < n_tasks; ++w) {
            tasks.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < clips.size(); i += n_tasks) score_one(i);
            }));
        }
        for (auto &t : tasks) t.get();
    }
    sel.selected = top_n_indices(sel.scores, n1);
    sel.runs = merge_adjacent(sel.selected);
    return sel;
}

std::size_t bucketed_n(double duration_s) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw Error(Errc::InvalidArgument, "duration must be positive");
    return 10 * static_cast<std::size_t>(std::ceil(duration_s / 30.0));
}

}  // namespace finequest::selector
