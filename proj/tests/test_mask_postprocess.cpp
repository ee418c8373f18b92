#include <gtest/gtest.h>

#include <random>

#include "osteorad/mask_postprocess.hpp"
#include "test_util.hpp"

using namespace osteorad;
using namespace osteorad::postprocess;

namespace {

LabelMap from_mask(const BinaryMask& m, int label) {
    return map_pixels<std::uint8_t>(m, [label](std::uint8_t v) { return v ? static_cast<std::uint8_t>(label) : 0; });
}

void paint(LabelMap& map, const BinaryMask& m, int label) {
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (m[i]) map[i] = static_cast<std::uint8_t>(label);
    }
}

// Limb of soft tissue with a tibia and fibula, each a cortical ring around trabecular bone.
LabelMap leg_map(int side = 128) {
    LabelMap map(side, side, 100.0, std::uint8_t{0});
    paint(map, test::disk_mask(side, side, side / 2.0, side / 2.0, side * 0.45), id(Tissue::ST));
    paint(map, test::disk_mask(side, side, side * 0.42, side * 0.45, side * 0.17), id(Tissue::TT));
    paint(map, test::annulus_mask(side, side, side * 0.42, side * 0.45, side * 0.17 - 4, side * 0.17), id(Tissue::TC));
    paint(map, test::disk_mask(side, side, side * 0.70, side * 0.60, side * 0.08), id(Tissue::FT));
    paint(map, test::annulus_mask(side, side, side * 0.70, side * 0.60, side * 0.08 - 3, side * 0.08), id(Tissue::FC));
    return map;
}

std::size_t component_count(const LabelMap& map, int label) {
    BinaryMask m = map_pixels<std::uint8_t>(map, [label](std::uint8_t v) { return v == label ? 1 : 0; });
    return morph::connected_components(m, 8).count();
}

}  // namespace

TEST(SingleComponent, KeepsLargestBlob) {
    LabelMap map(30, 20, 1.0, std::uint8_t{0});
    for (int y = 2; y < 7; ++y) {
        for (int x = 2; x < 12; ++x) map.at(x, y) = 1;  // 50 px
    }
    for (int x = 20; x < 27; ++x) map.at(x, 15) = 1;  // 7 px
    const auto r = enforce_single_component(map, 1);
    EXPECT_EQ(r.components_removed, 1u);
    EXPECT_EQ(r.fragments.size(), 7u);
    EXPECT_EQ(r.map.at(2, 2), 1);
    EXPECT_EQ(r.map.at(20, 15), kUnlabeled);
}

TEST(SingleComponent, SingleBlobUntouchedAndAbsentClass) {
    const LabelMap map = from_mask(test::disk_mask(20, 20, 10, 10, 5), 2);
    const auto r = enforce_single_component(map, 2);
    EXPECT_EQ(r.components_removed, 0u);
    EXPECT_EQ(r.map, map);
    EXPECT_TRUE(enforce_single_component(map, 3).absent);
    EXPECT_THROW(enforce_single_component(map, 6), ConfigError);
}

TEST(SingleComponent, TieKeepsFirstInRasterOrder) {
    LabelMap map(10, 10, 1.0, std::uint8_t{0});
    map.at(7, 1) = 4;
    map.at(8, 1) = 4;
    map.at(1, 6) = 4;
    map.at(2, 6) = 4;
    const auto r = enforce_single_component(map, 4);
    EXPECT_EQ(r.map.at(7, 1), 4);
    EXPECT_EQ(r.map.at(1, 6), kUnlabeled);
}

TEST(Relabel, FragmentInsideSoftTissue) {
    LabelMap map(9, 9, 1.0, std::uint8_t{5});
    map.at(4, 4) = kUnlabeled;
    map.at(5, 4) = kUnlabeled;
    EXPECT_EQ(relabel_fragments_by_neighbor_majority(map).at(4, 4), 5);
    EXPECT_EQ(relabel_fragments_by_neighbor_majority(map).at(5, 4), 5);
}

TEST(Relabel, MajorityAndTieBreak) {
    LabelMap map(3, 3, 1.0, std::uint8_t{2});
    map.at(1, 1) = kUnlabeled;
    map.at(0, 0) = 5;
    map.at(1, 0) = 5;
    map.at(2, 0) = 5;  // 3 ST vs 5 TT
    EXPECT_EQ(relabel_fragments_by_neighbor_majority(map).at(1, 1), 2);
    map.at(0, 1) = 5;  // 4 vs 4
    EXPECT_EQ(relabel_fragments_by_neighbor_majority(map).at(1, 1), 2);
    map.at(2, 1) = 5;  // 5 ST vs 3 TT
    EXPECT_EQ(relabel_fragments_by_neighbor_majority(map).at(1, 1), 5);
}

TEST(Relabel, IsolatedUnitBecomesBackground) {
    LabelMap map(2, 2, 1.0, kUnlabeled);
    const auto out = relabel_fragments_by_neighbor_majority(map);
    for (auto v : out.pixels()) EXPECT_EQ(v, 0);
}

TEST(Continuity, ClosedRingIsContinuous) {
    const auto map = from_mask(test::annulus_mask(120, 120, 60, 60, 40, 45), id(Tissue::TC));
    const auto c = check_cortical_continuity(map, Bone::Tibia);
    EXPECT_TRUE(c.continuous);
    EXPECT_GT(c.ratio, 0.97);
    EXPECT_LE(c.ratio, 1.0 + 1e-12);
}

TEST(Continuity, QuarterGapIsDiscontinuous) {
    const BinaryMask ring = test::annulus_mask(120, 120, 60, 60, 40, 45, 0.0, M_PI / 2);
    const auto c = check_cortical_continuity(from_mask(ring, id(Tissue::TC)), Bone::Tibia);
    EXPECT_FALSE(c.continuous);
    // Pixel-count oracle: an open ring encloses nothing, so the ratio is close to
    // ring pixels over hull pixels.
    const double oracle = static_cast<double>(count_true(ring)) / morph::pixel_hull_area(ring);
    EXPECT_NEAR(c.ratio, oracle, 0.05);
}

TEST(Continuity, TooFewPixels) {
    LabelMap map(5, 5, 1.0, std::uint8_t{0});
    map.at(1, 1) = 3;
    map.at(2, 1) = 3;
    EXPECT_THROW(check_cortical_continuity(map, Bone::Fibula), DataError);
}

TEST(Closing, SmallGapClosedAtInitialRadius) {
    LabelMap map(120, 120, 1.0, std::uint8_t{5});
    const BinaryMask ring = test::annulus_mask(120, 120, 60, 60, 40, 45);
    paint(map, ring, id(Tissue::TC));
    for (int y = 55; y < 58; ++y) {
        for (int x = 100; x < 110; ++x) map.at(x, y) = 5;  // 3-px gap
    }
    ASSERT_FALSE(check_cortical_continuity(map, Bone::Tibia).continuous);
    const auto r = close_cortical_gaps(map, Bone::Tibia);
    EXPECT_EQ(r.radius, 2);
    EXPECT_TRUE(r.continuity.continuous);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i] == id(Tissue::TC)) EXPECT_EQ(r.map[i], id(Tissue::TC));
    }
}

TEST(Closing, WideGapFails) {
    const auto map = from_mask(test::annulus_mask(240, 240, 120, 120, 100, 105, 0.0, M_PI / 2), id(Tissue::TC));
    EXPECT_THROW(close_cortical_gaps(map, Bone::Tibia), DataError);
}

TEST(Closing, OnlyBackgroundAndSoftTissueConvert) {
    LabelMap map(120, 120, 1.0, std::uint8_t{5});
    paint(map, test::disk_mask(120, 120, 60, 60, 40), id(Tissue::TT));
    paint(map, test::annulus_mask(120, 120, 60, 60, 40, 45, 0.0, 0.08), id(Tissue::TC));
    const auto r = close_cortical_gaps(map, Bone::Tibia);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i] == 2) EXPECT_EQ(r.map[i], 2);
    }
    EXPECT_TRUE(r.continuity.continuous);
}

TEST(Fill, InteriorBecomesTrabecular) {
    LabelMap map(60, 60, 1.0, std::uint8_t{5});
    paint(map, test::annulus_mask(60, 60, 30, 30, 15, 19), id(Tissue::FC));
    const auto out = fill_trabecular_interior(map, Bone::Fibula);
    EXPECT_EQ(out.at(30, 30), id(Tissue::FT));
    EXPECT_EQ(out.at(30, 42), id(Tissue::FT));
    EXPECT_EQ(out.at(2, 2), 5);
    EXPECT_EQ(out.at(30, 11), id(Tissue::FC));
}

TEST(Pipeline, CleanMapIsFixedPoint) {
    const auto map = leg_map();
    const auto r = postprocess_pipeline(map);
    EXPECT_EQ(r.map, map);
    EXPECT_EQ(r.report.passes, 1);
    EXPECT_TRUE(r.report.tibia.present);
    EXPECT_EQ(r.report.tibia.closing_radius, 0);
}

TEST(Pipeline, SaltNoiseIsRepairedAndIdempotent) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        auto map = leg_map();
        for (int k = 0; k < 60; ++k) {
            map[rng() % map.size()] = static_cast<std::uint8_t>(rng() % 6);
        }
        const auto r = postprocess_pipeline(map);
        for (int c = 1; c <= 5; ++c) EXPECT_LE(component_count(r.map, c), 1u) << "class " << c;
        EXPECT_GE(check_cortical_continuity(r.map, Bone::Tibia).ratio, 0.9);
        EXPECT_GE(check_cortical_continuity(r.map, Bone::Fibula).ratio, 0.9);
        const auto again = postprocess_pipeline(r.map);
        EXPECT_EQ(again.map, r.map);
        EXPECT_EQ(again.report.passes, 1);
    }
}

TEST(Pipeline, RejectsInvalidLabels) {
    LabelMap map(4, 4, 1.0, std::uint8_t{0});
    map[3] = 9;
    EXPECT_THROW(postprocess_pipeline(map), DataError);
}
