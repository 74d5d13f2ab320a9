#include "finequest/distortions.hpp"
#include "finequest/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace finequest;
using namespace finequest::distortions;

namespace {

ClipTensor fixture_clip() { return make_synthetic_clip({"noise", 16, 8, 8, 3, 25.0, 20, 10, 1}); }

DistortionSpec spec_of(DistortionKind kind, double sigma, double strength, std::uint64_t seed) {
    DistortionSpec s;
    s.kind = kind;
    s.noise_sigma = sigma;
    s.warp_strength = strength;
    s.seed = seed;
    return s;
}

bool in_unit_range(const ClipTensor &c) {
    for (float v : c.values()) {
        if (!(v >= 0.0F && v <= 1.0F)) return false;
    }
    return true;
}

}  // namespace

TEST(Distortions, ZeroSigmaIsIdentity) {
    const auto clip = fixture_clip();
    EXPECT_EQ(spatial_distort(clip, spec_of(DistortionKind::Spatial, 0.0, 0.5, 3)), clip);
}

TEST(Distortions, SpatialIsSeededAndDeterministic) {
    const auto clip = fixture_clip();
    const auto s = spec_of(DistortionKind::Spatial, 0.1, 0.5, 3);
    EXPECT_EQ(spatial_distort(clip, s), spatial_distort(clip, s));
    EXPECT_NE(spatial_distort(clip, s), spatial_distort(clip, spec_of(DistortionKind::Spatial, 0.1, 0.5, 4)));
}

TEST(Distortions, SpatialMeanAbsoluteDeviation) {
    const auto clip = fixture_clip();
    const auto out = spatial_distort(clip, spec_of(DistortionKind::Spatial, 0.1, 0.5, 7));
    double mad = 0.0;
    for (std::size_t i = 0; i < clip.values().size(); ++i) mad += std::fabs(out.values()[i] - clip.values()[i]);
    mad /= static_cast<double>(clip.values().size());
    EXPECT_GE(mad, 0.05);
    EXPECT_LE(mad, 0.12);
    EXPECT_TRUE(in_unit_range(out));
}

TEST(Distortions, ZeroStrengthWarpIsIdentity) {
    const auto clip = fixture_clip();
    EXPECT_EQ(temporal_warp(clip, spec_of(DistortionKind::Temporal, 0.1, 0.0, 9)), clip);
    const auto map = temporal_warp_map(17, 0.0, 9);
    for (std::size_t j = 0; j < map.size(); ++j) EXPECT_EQ(map[j], j);
}

TEST(Distortions, WarpMapIsMonotone) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto map = temporal_warp_map(3 + seed % 40, 0.9, seed);
        for (std::size_t j = 1; j < map.size(); ++j) ASSERT_LE(map[j - 1], map[j]) << seed;
        EXPECT_EQ(map.front(), 0U);
    }
}

TEST(Distortions, WarpMapMatchesConstruction) {
    for (std::uint64_t seed : {1ULL, 3ULL, 42ULL, 1000ULL}) {
        for (std::size_t n : {2U, 10U, 31U}) {
            EXPECT_EQ(temporal_warp_map(n, 0.5, seed), fqtest::reference_warp_map(n, 0.5, seed)) << seed << " " << n;
        }
    }
}

TEST(Distortions, WarpGoldenTenFrames) {
    const std::vector<std::size_t> golden{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_EQ(temporal_warp_map(10, 0.5, 3), golden);
    const std::vector<std::size_t> strong{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 13, 13, 14, 16, 17, 18, 18, 19};
    EXPECT_EQ(temporal_warp_map(20, 0.9, 3), strong);
}

TEST(Distortions, TemporalWarpUsesIndexMap) {
    const auto clip = make_synthetic_clip({"ramp", 10, 2, 2, 1, 25.0, 20, 10, 0});
    const auto out = temporal_warp(clip, spec_of(DistortionKind::Temporal, 0.0, 0.5, 3));
    const auto map = temporal_warp_map(10, 0.5, 3);
    for (std::size_t j = 0; j < 10; ++j) {
        const auto a = out.frame(j);
        const auto b = clip.frame(map[j]);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST(Distortions, TemporalNeedsTwoFrames) {
    const auto clip = make_synthetic_clip({"static", 1, 2, 2, 1, 25.0, 20, 10, 0});
    try {
        temporal_warp(clip, spec_of(DistortionKind::Temporal, 0.1, 0.5, 1));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::TooFewFrames);
    }
}

TEST(Distortions, SpatioTemporalComposition) {
    const auto clip = fixture_clip();
    EXPECT_EQ(spatiotemporal_distort(clip, spec_of(DistortionKind::SpatioTemporal, 0.0, 0.0, 5)), clip);
    const auto st_spec = spec_of(DistortionKind::SpatioTemporal, 0.1, 0.5, 5);
    const auto st = spatiotemporal_distort(clip, st_spec);
    EXPECT_EQ(st, spatiotemporal_distort(clip, st_spec));
    EXPECT_NE(st, spatial_distort(clip, spec_of(DistortionKind::Spatial, 0.1, 0.5, 5)));
    EXPECT_NE(st, temporal_warp(clip, spec_of(DistortionKind::Temporal, 0.1, 0.5, 5)));
    const auto expected = spatial_distort(temporal_warp(clip, spec_of(DistortionKind::Temporal, 0.1, 0.5, warp_subseed(5))),
                                          spec_of(DistortionKind::Spatial, 0.1, 0.5, noise_subseed(5)));
    EXPECT_EQ(st, expected);
    EXPECT_NE(warp_subseed(5), noise_subseed(5));
}

TEST(Distortions, EveryVariantPreservesShapeAndRange) {
    const auto clip = fixture_clip();
    for (auto sv : {SpatialVariant::GaussianNoise, SpatialVariant::CutMix, SpatialVariant::Blur, SpatialVariant::ColorJitter}) {
        for (auto tv : {TemporalVariant::TemporalWarp, TemporalVariant::AllShuffle, TemporalVariant::LocalShuffle,
                        TemporalVariant::Reverse}) {
            for (auto kind : {DistortionKind::Spatial, DistortionKind::Temporal, DistortionKind::SpatioTemporal}) {
                auto s = spec_of(kind, 0.2, 0.7, 11);
                s.spatial_variant = sv;
                s.temporal_variant = tv;
                const auto out = distort(clip, s);
                EXPECT_EQ(out.shape(), clip.shape());
                EXPECT_TRUE(in_unit_range(out));
                EXPECT_EQ(out, distort(clip, s));
            }
        }
    }
}

TEST(Distortions, ReverseVariantReversesFrames) {
    const auto clip = make_synthetic_clip({"ramp", 6, 2, 2, 1, 25.0, 20, 10, 0});
    auto s = spec_of(DistortionKind::Temporal, 0.0, 0.5, 1);
    s.temporal_variant = TemporalVariant::Reverse;
    const auto out = temporal_warp(clip, s);
    EXPECT_FLOAT_EQ(out.frame(0)[0], 1.0F);
    EXPECT_FLOAT_EQ(out.frame(5)[0], 0.0F);
}

TEST(Distortions, SpecValidation) {
    EXPECT_THROW(spec_of(DistortionKind::Spatial, -0.1, 0.5, 0).validate(), Error);
    EXPECT_THROW(spec_of(DistortionKind::Spatial, 1.5, 0.5, 0).validate(), Error);
    EXPECT_THROW(spec_of(DistortionKind::Temporal, 0.1, 1.5, 0).validate(), Error);
    EXPECT_NO_THROW(spec_of(DistortionKind::Temporal, 1.0, 1.0, 0).validate());
}

TEST(Distortions, NameParsing) {
    EXPECT_EQ(parse_kind("spatiotemporal"), DistortionKind::SpatioTemporal);
    EXPECT_EQ(parse_spatial_variant(to_string(SpatialVariant::ColorJitter)), SpatialVariant::ColorJitter);
    EXPECT_EQ(parse_temporal_variant(to_string(TemporalVariant::LocalShuffle)), TemporalVariant::LocalShuffle);
    EXPECT_THROW(parse_kind("sideways"), Error);
}

TEST(Distortions, DefaultSetSharesMagnitudes) {
    const auto set = default_distortion_set(4, 0.2, 0.3);
    EXPECT_EQ(set.spatial.kind, DistortionKind::Spatial);
    EXPECT_EQ(set.temporal.kind, DistortionKind::Temporal);
    EXPECT_EQ(set.spatiotemporal.kind, DistortionKind::SpatioTemporal);
    for (const auto *s : {&set.spatial, &set.temporal, &set.spatiotemporal}) {
        EXPECT_EQ(s->noise_sigma, 0.2);
        EXPECT_EQ(s->warp_strength, 0.3);
        EXPECT_EQ(s->spatial_variant, SpatialVariant::GaussianNoise);
        EXPECT_EQ(s->temporal_variant, TemporalVariant::TemporalWarp);
    }
}
