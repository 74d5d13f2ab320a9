#pragma once

#include "finequest/clip.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finequest {
namespace backends {
class FlowEstimator;
}

namespace segmenter {

/// One non-negative motion magnitude per consecutive frame pair.
struct MotionSignal {
    std::vector<double> values;
    double fps = 25.0;

    [[nodiscard]] std::size_t frame_count() const noexcept { return values.size() + 1; }
};

struct SegmenterConfig {
    std::size_t win_size = 16;
    double z_min = 0.5;
    double z_max = 2.0;
    std::size_t clip_len_min = 8;
    std::size_t clip_len_max = 32;

    /// Throws InvalidArgument on win_size < 2, z_min < 0, or inverted ranges.
    void validate() const;
};

using SegmentProposal = FrameInterval;

enum class MotionEstimator { FrameDiff, BackendFlow };

MotionEstimator parse_estimator(std::string_view text);
std::string_view to_string(MotionEstimator estimator) noexcept;

/// Window statistics driving the adaptive threshold at one step.
struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
    double cv = 0.0;  ///< stddev / mean clamped to [0, 1]; 0 when mean is 0
    double z = 0.0;
    double threshold = 0.0;
    std::size_t min_clip_len = 0;
};

WindowStats window_stats(std::span<const double> window, const SegmenterConfig &cfg);

/// Mean absolute per-pixel difference between consecutive frames, or the flow
/// backend's aggregated magnitude. Throws TooFewFrames / BackendUnavailable.
MotionSignal extract_motion_signal(const ClipTensor &clip, MotionEstimator estimator,
                                   const backends::FlowEstimator *flow = nullptr);

/// Boundary signal indices emitted by the sliding-window adaptive threshold.
std::vector<std::size_t> find_boundaries(std::span<const double> motions, const SegmenterConfig &cfg);

/// Sub-action proposals tiling [0, len(motions) + 1). Throws SignalTooShort.
std::vector<SegmentProposal> segment(const MotionSignal &signal, const SegmenterConfig &cfg);

std::vector<SegmentProposal> proposals_from_boundaries(std::span<const std::size_t> boundaries,
                                                       std::size_t frame_count);

std::vector<SegmentProposal> segment_video(const ClipTensor &clip, const SegmenterConfig &cfg,
                                           MotionEstimator estimator,
                                           const backends::FlowEstimator *flow = nullptr);

MotionSignal motion_signal_from_json(const nlohmann::json &doc);
nlohmann::json to_json(const MotionSignal &signal);
nlohmann::json to_json(std::span<const SegmentProposal> proposals);

}  // namespace segmenter
}  // namespace finequest
