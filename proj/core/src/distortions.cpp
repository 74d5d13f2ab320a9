#include "finequest/distortions.hpp"

#include "finequest/errors.hpp"
#include "finequest/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace finequest::distortions {

namespace {

constexpr std::uint64_t kWarpSalt = 0x7E3A5C1D2B4F6A89ULL;
constexpr std::uint64_t kNoiseSalt = 0x5A17C3E9B2D40F61ULL;
constexpr std::size_t kLocalShuffleWindow = 4;

void require_kind(const DistortionSpec &spec, DistortionKind kind) {
    if (spec.kind != kind) {
        throw Error(Errc::InvalidArgument, "expected a " + std::string(to_string(kind)) + " spec, got " +
                                               std::string(to_string(spec.kind)));
    }
}

ClipTensor remap_frames(const ClipTensor &clip, const std::vector<std::size_t> &map) {
    ClipTensor out(clip.shape(), clip.fps());
    for (std::size_t j = 0; j < map.size(); ++j) std::ranges::copy(clip.frame(map[j]), out.frame(j).begin());
    return out;
}

ClipTensor gaussian_noise(const ClipTensor &clip, double sigma, std::uint64_t seed) {
    if (sigma == 0.0) return clip;
    ClipTensor out = clip;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto &v : out.values()) v = static_cast<float>(std::clamp(static_cast<double>(v) + noise(rng), 0.0, 1.0));
    return out;
}

ClipTensor cutmix(const ClipTensor &clip, double area, std::uint64_t seed) {
    if (area == 0.0 || clip.frame_count() < 2) return clip;
    const auto &s = clip.shape();
    const double side = std::sqrt(area);
    const auto box_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(side * static_cast<double>(s.height))));
    const auto box_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(side * static_cast<double>(s.width))));
    ClipTensor out = clip;
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < s.frames; ++t) {
        std::size_t donor = rng() % (s.frames - 1);
        if (donor >= t) ++donor;
        const std::size_t y0 = rng() % (s.height - box_h + 1);
        const std::size_t x0 = rng() % (s.width - box_w + 1);
        const auto src = clip.frame(donor);
        auto dst = out.frame(t);
        for (std::size_t y = y0; y < y0 + box_h; ++y) {
            const std::size_t row = (y * s.width + x0) * s.channels;
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(row), box_w * s.channels,
                        dst.begin() + static_cast<std::ptrdiff_t>(row));
        }
    }
    return out;
}

ClipTensor box_blur(const ClipTensor &clip, double strength) {
    const auto &s = clip.shape();
    const auto radius = static_cast<long>(std::lround(strength * static_cast<double>(std::min(s.height, s.width))));
    if (radius == 0) return clip;
    ClipTensor out = clip;
    const auto h = static_cast<long>(s.height);
    const auto w = static_cast<long>(s.width);
    for (std::size_t t = 0; t < s.frames; ++t) {
        const auto src = clip.frame(t);
        auto dst = out.frame(t);
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                for (std::size_t c = 0; c < s.channels; ++c) {
                    double sum = 0.0;
                    int count = 0;
                    for (long yy = std::max(0L, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
                        for (long xx = std::max(0L, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
                            sum += src[(static_cast<std::size_t>(yy * w + xx)) * s.channels + c];
                            ++count;
                        }
                    }
                    dst[(static_cast<std::size_t>(y * w + x)) * s.channels + c] = static_cast<float>(sum / count);
                }
            }
        }
    }
    return out;
}

ClipTensor color_jitter(const ClipTensor &clip, double strength, std::uint64_t seed) {
    if (strength == 0.0) return clip;
    const auto &s = clip.shape();
    ClipTensor out = clip;
    std::mt19937_64 rng(seed);
    auto jitter = [&] { return strength * (2.0 * util::bits_to_unit(rng()) - 1.0); };
    std::vector<double> gain(s.channels);
    for (std::size_t t = 0; t < s.frames; ++t) {
        const double brightness = jitter();
        for (auto &g : gain) g = 1.0 + jitter();
        auto frame = out.frame(t);
        for (std::size_t k = 0; k < frame.size(); ++k) {
            const double v = static_cast<double>(frame[k]) * gain[k % s.channels] + brightness;
            frame[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace

void DistortionSpec::validate() const {
    if (!(noise_sigma >= 0.0 && noise_sigma <= 1.0)) throw Error(Errc::InvalidArgument, "noise_sigma must lie in [0, 1]");
    if (!(warp_strength >= 0.0 && warp_strength <= 1.0)) throw Error(Errc::InvalidArgument, "warp_strength must lie in [0, 1]");
}

std::string_view to_string(DistortionKind kind) noexcept {
    switch (kind) {
        case DistortionKind::Spatial: return "spatial";
        case DistortionKind::Temporal: return "temporal";
        case DistortionKind::SpatioTemporal: return "spatiotemporal";
    }
    return "spatial";
}

std::string_view to_string(SpatialVariant variant) noexcept {
    switch (variant) {
        case SpatialVariant::GaussianNoise: return "gaussian";
        case SpatialVariant::CutMix: return "cutmix";
        case SpatialVariant::Blur: return "blur";
        case SpatialVariant::ColorJitter: return "color_jitter";
    }
    return "gaussian";
}

std::string_view to_string(TemporalVariant variant) noexcept {
    switch (variant) {
        case TemporalVariant::TemporalWarp: return "warp";
        case TemporalVariant::AllShuffle: return "all_shuffle";
        case TemporalVariant::LocalShuffle: return "local_shuffle";
        case TemporalVariant::Reverse: return "reverse";
    }
    return "warp";
}

DistortionKind parse_kind(std::string_view text) {
    for (auto k : {DistortionKind::Spatial, DistortionKind::Temporal, DistortionKind::SpatioTemporal})
        if (to_string(k) == text) return k;
    throw Error(Errc::InvalidArgument, "unknown distortion kind '" + std::string(text) + "'");
}

SpatialVariant parse_spatial_variant(std::string_view text) {
    for (auto v : {SpatialVariant::GaussianNoise, SpatialVariant::CutMix, SpatialVariant::Blur, SpatialVariant::ColorJitter})
        if (to_string(v) == text) return v;
    throw Error(Errc::InvalidArgument, "unknown spatial variant '" + std::string(text) + "'");
}

TemporalVariant parse_temporal_variant(std::string_view text) {
    for (auto v : {TemporalVariant::TemporalWarp, TemporalVariant::AllShuffle, TemporalVariant::LocalShuffle,
                   TemporalVariant::Reverse})
        if (to_string(v) == text) return v;
    throw Error(Errc::InvalidArgument, "unknown temporal variant '" + std::string(text) + "'");
}

std::uint64_t warp_subseed(std::uint64_t seed) noexcept { return util::splitmix64(seed ^ kWarpSalt); }
std::uint64_t noise_subseed(std::uint64_t seed) noexcept { return util::splitmix64(seed ^ kNoiseSalt); }

ClipTensor spatial_distort(const ClipTensor &clip, const DistortionSpec &spec) {
    require_kind(spec, DistortionKind::Spatial);
    spec.validate();
    switch (spec.spatial_variant) {
        case SpatialVariant::GaussianNoise: return gaussian_noise(clip, spec.noise_sigma, spec.seed);
        case SpatialVariant::CutMix: return cutmix(clip, spec.noise_sigma, spec.seed);
        case SpatialVariant::Blur: return box_blur(clip, spec.noise_sigma);
        case SpatialVariant::ColorJitter: return color_jitter(clip, spec.noise_sigma, spec.seed);
    }
    return clip;
}

std::vector<std::size_t> temporal_warp_map(std::size_t frame_count, double strength, std::uint64_t seed) {
    if (frame_count < 2) throw Error(Errc::TooFewFrames, "temporal warp needs at least 2 frames");
    std::mt19937_64 rng(seed);
    std::vector<double> durations(frame_count);
    for (auto &d : durations) d = 1.0 - strength + 2.0 * strength * util::bits_to_unit(rng());
    const double total = std::accumulate(durations.begin(), durations.end(), 0.0);
    const double scale = static_cast<double>(frame_count) / total;

    // positions[i]: warped start time of input frame i.
    std::vector<double> positions(frame_count);
    double acc = 0.0;
    for (std::size_t i = 0; i < frame_count; ++i) {
        positions[i] = acc;
        acc += durations[i] * scale;
    }

    std::vector<std::size_t> map(frame_count);
    for (std::size_t j = 0; j < frame_count; ++j) {
        const double target = static_cast<double>(j);
        const auto upper = std::ranges::lower_bound(positions, target);
        std::size_t best = frame_count - 1;
        if (upper != positions.end()) {
            best = static_cast<std::size_t>(upper - positions.begin());
        }
        if (upper != positions.begin()) {
            // Earliest index holding the value just below the target; wins ties.
            const double below = *(upper - 1);
            const auto first_below = static_cast<std::size_t>(std::ranges::lower_bound(positions, below) - positions.begin());
            if (upper == positions.end() || target - below <= positions[best] - target) best = first_below;
        }
        map[j] = best;
    }
    return map;
}

ClipTensor temporal_warp(const ClipTensor &clip, const DistortionSpec &spec) {
    require_kind(spec, DistortionKind::Temporal);
    spec.validate();
    const std::size_t n = clip.frame_count();
    if (n < 2) throw Error(Errc::TooFewFrames, "temporal distortion needs at least 2 frames");
    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    switch (spec.temporal_variant) {
        case TemporalVariant::TemporalWarp:
            if (spec.warp_strength == 0.0) return clip;
            map = temporal_warp_map(n, spec.warp_strength, spec.seed);
            break;
        case TemporalVariant::AllShuffle: std::shuffle(map.begin(), map.end(), rng); break;
        case TemporalVariant::LocalShuffle:
            for (std::size_t start = 0; start < n; start += kLocalShuffleWindow) {
                const auto end = std::min(n, start + kLocalShuffleWindow);
                std::shuffle(map.begin() + static_cast<std::ptrdiff_t>(start), map.begin() + static_cast<std::ptrdiff_t>(end), rng);
            }
            break;
        case TemporalVariant::Reverse: std::ranges::reverse(map); break;
    }
    return remap_frames(clip, map);
}

ClipTensor spatiotemporal_distort(const ClipTensor &clip, const DistortionSpec &spec) {
    require_kind(spec, DistortionKind::SpatioTemporal);
    spec.validate();
    DistortionSpec temporal = spec;
    temporal.kind = DistortionKind::Temporal;
    temporal.seed = warp_subseed(spec.seed);
    DistortionSpec spatial = spec;
    spatial.kind = DistortionKind::Spatial;
    spatial.seed = noise_subseed(spec.seed);
    return spatial_distort(temporal_warp(clip, temporal), spatial);
}

ClipTensor distort(const ClipTensor &clip, const DistortionSpec &spec) {
    switch (spec.kind) {
        case DistortionKind::Spatial: return spatial_distort(clip, spec);
        case DistortionKind::Temporal: return temporal_warp(clip, spec);
        case DistortionKind::SpatioTemporal: return spatiotemporal_distort(clip, spec);
    }
    return clip;
}

DistortionSet default_distortion_set(std::uint64_t seed, double noise_sigma, double warp_strength) {
    DistortionSet set;
    set.spatial = {DistortionKind::Spatial, noise_sigma, warp_strength, util::splitmix64(seed + 1)};
    set.temporal = {DistortionKind::Temporal, noise_sigma, warp_strength, util::splitmix64(seed + 2)};
    set.spatiotemporal = {DistortionKind::SpatioTemporal, noise_sigma, warp_strength, util::splitmix64(seed + 3)};
    return set;
}

}  // namespace finequest::distortions
