#include "finequest/motion_segmenter.hpp"

#include "finequest/backends.hpp"
#include "finequest/errors.hpp"

#include <algorithm>
#include <cmath>

namespace finequest::segmenter {

void SegmenterConfig::validate() const {
    if (win_size < 2) throw Error(Errc::InvalidArgument, "win_size must be at least 2");
    if (!(z_min >= 0.0) || !(z_min <= z_max) || !std::isfinite(z_max)) {
        throw Error(Errc::InvalidArgument, "z_range must satisfy 0 <= z_min <= z_max");
    }
    if (clip_len_min == 0 || clip_len_min > clip_len_max) {
        throw Error(Errc::InvalidArgument, "clip_len_range must satisfy 0 < L_min <= L_max");
    }
}

MotionEstimator parse_estimator(std::string_view text) {
    if (text == "frame_diff") return MotionEstimator::FrameDiff;
    if (text == "backend_flow") return MotionEstimator::BackendFlow;
    throw Error(Errc::InvalidArgument, "unknown estimator '" + std::string(text) + "' (frame_diff|backend_flow)");
}

std::string_view to_string(MotionEstimator estimator) noexcept {
    return estimator == MotionEstimator::FrameDiff ? "frame_diff" : "backend_flow";
}

WindowStats window_stats(std::span<const double> window, const SegmenterConfig &cfg) {
    WindowStats s;
    const auto n = static_cast<double>(window.size());
    // Shifted by the first sample so a constant window gives mean == sample, std == 0 exactly.
    const double pivot = window.front();
    double shifted_sum = 0.0;
    for (double x : window) shifted_sum += x - pivot;
    const double shifted_mean = shifted_sum / n;
    double ss = 0.0;
    for (double x : window) {
        const double d = (x - pivot) - shifted_mean;
        ss += d * d;
    }
    s.mean = pivot + shifted_mean;
    s.stddev = std::sqrt(ss / n);
    s.cv = s.mean > 0.0 ? std::clamp(s.stddev / s.mean, 0.0, 1.0) : 0.0;
    s.z = cfg.z_min + (cfg.z_max - cfg.z_min) * s.cv;
    s.threshold = s.mean - s.z * s.stddev;
    const double len = static_cast<double>(cfg.clip_len_min) +
                       static_cast<double>(cfg.clip_len_max - cfg.clip_len_min) * (1.0 - s.cv);
    s.min_clip_len = static_cast<std::size_t>(std::lround(len));
    return s;
}

MotionSignal extract_motion_signal(const ClipTensor &clip, MotionEstimator estimator,
                                   const backends::FlowEstimator *flow) {
    if (clip.frame_count() < 2) {
        throw Error(Errc::TooFewFrames, "motion extraction needs at least 2 frames, got " +
                                            std::to_string(clip.frame_count()));
    }
    MotionSignal signal;
    signal.fps = clip.fps();
    if (estimator == MotionEstimator::BackendFlow) {
        if (flow == nullptr) throw Error(Errc::BackendUnavailable, "backend_flow estimator needs a flow backend");
        signal.values = backends::flow_magnitudes(*flow, clip);
        return signal;
    }
    signal.values.reserve(clip.frame_count() - 1);
    for (std::size_t t = 0; t + 1 < clip.frame_count(); ++t) {
        const auto a = clip.frame(t);
        const auto b = clip.frame(t + 1);
        double total = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) total += std::fabs(static_cast<double>(b[k]) - static_cast<double>(a[k]));
        signal.values.push_back(a.empty() ? 0.0 : total / static_cast<double>(a.size()));
    }
    return signal;
}

std::vector<std::size_t> find_boundaries(std::span<const double> motions, const SegmenterConfig &cfg) {
    cfg.validate();
    if (motions.size() < cfg.win_size) {
        throw Error(Errc::SignalTooShort, "signal of length " + std::to_string(motions.size()) +
                                              " is shorter than win_size " + std::to_string(cfg.win_size));
    }
    std::vector<std::size_t> boundaries;
    std::size_t last_boundary = 0;
    for (std::size_t i = cfg.win_size; i < motions.size(); ++i) {
        const WindowStats s = window_stats(motions.subspan(i - cfg.win_size, cfg.win_size), cfg);
        if (motions[i] < s.threshold && i - last_boundary >= s.min_clip_len) {
            boundaries.push_back(i);
            last_boundary = i;
        }
    }
    return boundaries;
}

std::vector<SegmentProposal> proposals_from_boundaries(std::span<const std::size_t> boundaries,
                                                       std::size_t frame_count) {
    std::vector<SegmentProposal> out;
    std::size_t start = 0;
    for (std::size_t b : boundaries) {
        if (b <= start || b >= frame_count) continue;
        out.push_back({start, b});
        start = b;
    }
    out.push_back({start, frame_count});
    return out;
}

std::vector<SegmentProposal> segment(const MotionSignal &signal, const SegmenterConfig &cfg) {
    for (double v : signal.values) {
        if (!std::isfinite(v) || v < 0.0) throw Error(Errc::InvalidArgument, "motion values must be finite and non-negative");
    }
    const auto boundaries = find_boundaries(signal.values, cfg);
    return proposals_from_boundaries(boundaries, signal.frame_count());
}

std::vector<SegmentProposal> segment_video(const ClipTensor &clip, const SegmenterConfig &cfg,
                                           MotionEstimator estimator, const backends::FlowEstimator *flow) {
    const MotionSignal signal = extract_motion_signal(clip, estimator, flow);
    if (signal.values.size() != clip.frame_count() - 1) {
        throw Error(Errc::BackendError, "flow backend returned " + std::to_string(signal.values.size()) +
                                            " magnitudes for " + std::to_string(clip.frame_count()) + " frames");
    }
    return segment(signal, cfg);
}

MotionSignal motion_signal_from_json(const nlohmann::json &doc) {
    MotionSignal signal;
    const nlohmann::json *values = &doc;
    if (doc.is_object()) {
        if (!doc.contains("values")) throw Error(Errc::ParseError, "motion signal object needs a 'values' array");
        values = &doc.at("values");
        if (doc.contains("fps")) {
            if (!doc.at("fps").is_number()) throw Error(Errc::ParseError, "'fps' must be a number");
            signal.fps = doc.at("fps").get<double>();
        }
    }
    if (!values->is_array()) throw Error(Errc::ParseError, "motion signal values must be an array");
    for (const auto &v : *values) {
        if (!v.is_number()) throw Error(Errc::ParseError, "motion signal values must be numbers");
        signal.values.push_back(v.get<double>());
    }
    if (!(signal.fps > 0.0)) throw Error(Errc::ParseError, "'fps' must be positive");
    return signal;
}

nlohmann::json to_json(const MotionSignal &signal) { return {{"fps", signal.fps}, {"values", signal.values}}; }

nlohmann::json to_json(std::span<const SegmentProposal> proposals) {
    auto out = nlohmann::json::array();
    for (const auto &p : proposals) out.push_back({{"start_frame", p.start}, {"end_frame", p.end}});
    return out;
}

}  // namespace finequest::segmenter
