#pragma once

#include "finequest/clip.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace finequest::distortions {

enum class DistortionKind { Spatial, Temporal, SpatioTemporal };

/// Spatial and temporal families compared in the distortion ablation. The pipeline
/// default is GaussianNoise + TemporalWarp.
enum class SpatialVariant { GaussianNoise, CutMix, Blur, ColorJitter };
enum class TemporalVariant { TemporalWarp, AllShuffle, LocalShuffle, Reverse };

struct DistortionSpec {
    DistortionKind kind = DistortionKind::Spatial;
    double noise_sigma = 0.1;    ///< fraction of the [0, 1] value range
    double warp_strength = 0.5;  ///< in [0, 1]
    std::uint64_t seed = 0;
    SpatialVariant spatial_variant = SpatialVariant::GaussianNoise;
    TemporalVariant temporal_variant = TemporalVariant::TemporalWarp;

    void validate() const;
};

std::string_view to_string(DistortionKind kind) noexcept;
std::string_view to_string(SpatialVariant variant) noexcept;
std::string_view to_string(TemporalVariant variant) noexcept;
DistortionKind parse_kind(std::string_view text);
SpatialVariant parse_spatial_variant(std::string_view text);
TemporalVariant parse_temporal_variant(std::string_view text);

/// Clamped additive Gaussian noise (or the configured spatial variant).
ClipTensor spatial_distort(const ClipTensor &clip, const DistortionSpec &spec);

/// Monotone index map of the duration-jitter warp: output frame j shows input frame map[j].
std::vector<std::size_t> temporal_warp_map(std::size_t frame_count, double strength, std::uint64_t seed);

/// Order-preserving re-timing (or the configured temporal variant). Throws TooFewFrames.
ClipTensor temporal_warp(const ClipTensor &clip, const DistortionSpec &spec);

/// temporal_warp followed by spatial_distort with sub-seeds derived from spec.seed.
ClipTensor spatiotemporal_distort(const ClipTensor &clip, const DistortionSpec &spec);

/// Dispatches on spec.kind.
ClipTensor distort(const ClipTensor &clip, const DistortionSpec &spec);

/// Sub-seeds used by the spatio-temporal composition.
std::uint64_t warp_subseed(std::uint64_t seed) noexcept;
std::uint64_t noise_subseed(std::uint64_t seed) noexcept;

/// The three specs consumed by contrastive scoring, sharing magnitudes and a base seed.
struct DistortionSet {
    DistortionSpec spatial;
    DistortionSpec temporal;
    DistortionSpec spatiotemporal;
};

DistortionSet default_distortion_set(std::uint64_t seed, double noise_sigma = 0.1, double warp_strength = 0.5);

}  // namespace finequest::distortions
