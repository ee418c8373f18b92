#include <gtest/gtest.h>

#include "osteorad/phantom.hpp"
#include "osteorad/soft_tissue.hpp"
#include "test_util.hpp"

using namespace osteorad;
using namespace osteorad::soft;

namespace {

// Soft-tissue disk of uniform HU with a small tibia ring in the middle.
struct Slab {
    HUImage img;
    LabelMap map;

    Slab(int side, double voxel, int hu) : img(side, side, voxel, static_cast<std::int16_t>(hu)), map(side, side, voxel, std::uint8_t{0}) {
        const auto limb = test::disk_mask(side, side, side / 2.0, side / 2.0, side * 0.48, voxel);
        const auto bone = test::disk_mask(side, side, side / 2.0, side / 2.0, side * 0.08, voxel);
        for (std::size_t i = 0; i < map.size(); ++i) {
            if (limb[i]) map[i] = id(Tissue::ST);
            if (bone[i]) map[i] = id(Tissue::TC);
        }
    }
};

std::size_t count_label(const LabelMap& m, int label) {
    std::size_t n = 0;
    for (auto v : m.pixels()) n += v == label;
    return n;
}

}  // namespace

TEST(SkinBand, RadiusRounding) {
    EXPECT_EQ(skin_band_radius_px(60.7), 33);
    EXPECT_EQ(skin_band_radius_px(121.4), 17);
    EXPECT_EQ(skin_band_radius_px(100.0), 20);
}

TEST(SkinBand, PartitionAndWidth) {
    const auto soft = test::disk_mask(101, 101, 50, 50, 45, 121.4);
    const auto s = peel_skin_band(soft);
    for (std::size_t i = 0; i < soft.size(); ++i) {
        EXPECT_EQ(soft[i], s.skin[i] | s.interior[i]);
        EXPECT_FALSE(s.skin[i] && s.interior[i]);
    }
    // Along the row through the centre the band is exactly r = 17 pixels thick.
    int thick = 0;
    for (int x = 0; x < 50; ++x) thick += s.skin.at(x, 50);
    EXPECT_EQ(thick, 17);
}

TEST(SkinBand, TooThin) {
    const auto soft = test::disk_mask(40, 40, 20, 20, 10, 60.7);
    EXPECT_THROW(peel_skin_band(soft), DataError);
}

TEST(Seeds, RangesAndMinimumSize) {
    HUImage img(80, 20, 100.0, std::int16_t{0});
    const BinaryMask interior(80, 20, 100.0, std::uint8_t{1});
    for (int x = 0; x < 29; ++x) img.at(x, 2) = 350;       // 29-px blob
    for (int x = 40; x < 70; ++x) img.at(x, 10) = -400;    // 30-px blob
    for (int x = 0; x < 30; ++x) img.at(x, 17) = 600;      // upper bound inclusive
    const auto s = plant_seeds(img, interior);
    EXPECT_EQ(s.myo.at(0, 2), 0);
    EXPECT_EQ(s.adipose.at(40, 10), 1);
    EXPECT_EQ(s.myo.at(0, 17), 1);
    EXPECT_EQ(count_true(s.myo), 30u);
    EXPECT_EQ(count_true(s.adipose), 30u);
    EXPECT_EQ(s.myo.at(50, 5), 0);  // HU 0 is in neither range
    EXPECT_EQ(s.adipose.at(50, 5), 0);
}

TEST(Seeds, RespectInterior) {
    HUImage img(40, 40, 100.0, std::int16_t{300});
    const auto interior = test::disk_mask(40, 40, 20, 20, 10, 100.0);
    const auto s = plant_seeds(img, interior);
    EXPECT_EQ(s.myo, interior);
}

TEST(Growth, UnobstructedSquareBall) {
    const BinaryMask interior(61, 61, 100.0, std::uint8_t{1});
    Seeds seeds{BinaryMask(61, 61, 100.0, std::uint8_t{0}), BinaryMask(61, 61, 100.0, std::uint8_t{0})};
    seeds.myo.at(30, 30) = 1;
    const auto g = grow_regions(seeds, interior, 20);
    for (int y = 0; y < 61; ++y) {
        for (int x = 0; x < 61; ++x) {
            const bool in_ball = std::abs(x - 30) <= 20 && std::abs(y - 30) <= 20;
            EXPECT_EQ(g.myo.at(x, y), in_ball ? 1 : 0);
            EXPECT_EQ(g.unassigned.at(x, y), in_ball ? 0 : 1);
        }
    }
}

TEST(Growth, NoSeedsAllUnassigned) {
    const auto interior = test::disk_mask(30, 30, 15, 15, 12);
    Seeds seeds{BinaryMask(30, 30, 1000.0, std::uint8_t{0}), BinaryMask(30, 30, 1000.0, std::uint8_t{0})};
    EXPECT_EQ(grow_regions(seeds, interior).unassigned, interior);
}

TEST(Growth, MeetingFrontsAreContested) {
    const BinaryMask interior(31, 21, 100.0, std::uint8_t{1});
    Seeds seeds{BinaryMask(31, 21, 100.0, std::uint8_t{0}), BinaryMask(31, 21, 100.0, std::uint8_t{0})};
    seeds.myo.at(10, 10) = 1;
    seeds.adipose.at(20, 10) = 1;
    const auto g = grow_regions(seeds, interior, 20);
    // Fronts advance one column per step and meet on the midline x = 15.
    for (int y = 5; y <= 15; ++y) EXPECT_EQ(g.contested.at(15, y), 1) << y;
    EXPECT_EQ(g.myo.at(14, 10), 1);
    EXPECT_EQ(g.adipose.at(16, 10), 1);
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 31; ++x) {
            EXPECT_EQ(g.myo.at(x, y) + g.adipose.at(x, y) + g.contested.at(x, y) + g.unassigned.at(x, y), 1);
        }
    }
}

TEST(Resolve, ThresholdBoundary) {
    EXPECT_TRUE(resolves_to_myo(-49));
    EXPECT_FALSE(resolves_to_myo(-50));
    EXPECT_FALSE(resolves_to_myo(-51));
    for (auto [hu, expect] : {std::pair{-49, Tissue::MT}, std::pair{-50, Tissue::AT}, std::pair{-51, Tissue::AT}}) {
        Slab s(120, 121.4, hu);  // no seeds: every interior pixel is resolved by threshold
        const auto r = segment_soft_tissue(s.img, s.map);
        EXPECT_GT(count_label(r.map, id(expect)), 0u);
        EXPECT_EQ(count_label(r.map, id(expect == Tissue::MT ? Tissue::AT : Tissue::MT)), 0u);
    }
}

TEST(Segment, UniformInteriorAndBonesUntouched) {
    for (auto [hu, expect] : {std::pair{300, Tissue::MT}, std::pair{-400, Tissue::AT}}) {
        Slab s(120, 121.4, hu);
        const auto r = segment_soft_tissue(s.img, s.map);
        EXPECT_EQ(count_label(r.map, id(Tissue::ST)), 0u);
        EXPECT_EQ(count_label(r.map, id(Tissue::TC)), count_label(s.map, id(Tissue::TC)));
        EXPECT_EQ(count_label(r.map, id(expect)) + count_label(r.map, id(Tissue::SK)), count_label(s.map, id(Tissue::ST)));
        const double px = 0.1214 * 0.1214;
        EXPECT_NEAR(r.areas.skin_mm2 + r.areas.myo_mm2 + r.areas.adipose_mm2, count_label(s.map, id(Tissue::ST)) * px, 1e-9);
    }
}

TEST(Segment, PartitionOnRandomPhantoms) {
    CounterRng rng(99);
    for (int t = 0; t < 100; ++t) {
        auto p = phantom::default_params(128, 121.4);
        p.seed = rng();
        p.myo_fraction = rng.uniform();
        p.noise_sigma = rng.uniform(0, 150);
        p.trabecular_density = rng.uniform(0.1, 0.7);
        const auto ph = phantom::generate_phantom(p);
        const auto five = phantom::collapse_soft_tissue(ph.truth);
        const auto r = segment_soft_tissue(ph.image, five);
        for (std::size_t i = 0; i < five.size(); ++i) {
            if (five[i] == id(Tissue::ST)) {
                ASSERT_TRUE(r.map[i] >= id(Tissue::SK) && r.map[i] <= id(Tissue::AT));
            } else {
                ASSERT_EQ(r.map[i], five[i]);
            }
        }
    }
}

TEST(Segment, ResolvedPixelsFollowThreshold) {
    auto p = phantom::default_params(128, 121.4);
    p.noise_sigma = 250;  // plenty of out-of-range pixels
    const auto ph = phantom::generate_phantom(p);
    const auto five = phantom::collapse_soft_tissue(ph.truth);
    const Params prm;
    const auto r = segment_soft_tissue(ph.image, five, prm);
    const auto split = peel_skin_band(mask_of(five, {id(Tissue::ST)}), mask_of(five, {1, 2, 3, 4, 5}));
    const auto g = grow_regions(plant_seeds(ph.image, split.interior, prm), split.interior, prm.dilation_iters);
    std::size_t resolved = 0;
    for (std::size_t i = 0; i < five.size(); ++i) {
        if (!(g.contested[i] || g.unassigned[i])) continue;
        ++resolved;
        if (r.map[i] == id(Tissue::MT)) EXPECT_GT(ph.image[i], -50);
        if (r.map[i] == id(Tissue::AT)) EXPECT_LE(ph.image[i], -50);
    }
    EXPECT_GT(resolved, 0u);
}

TEST(Segment, ZeroNoisePhantomAreasRecovered) {
    for (double frac : {0.25, 0.6, 1.0}) {
        auto p = phantom::default_params(192, 60.7);
        p.noise_sigma = 0;
        p.myo_fraction = frac;
        const auto ph = phantom::generate_phantom(p);
        const auto r = segment_soft_tissue(ph.image, phantom::collapse_soft_tissue(ph.truth));
        for (Tissue t : {Tissue::MT, Tissue::AT, Tissue::SK}) {
            const double truth = static_cast<double>(count_label(ph.truth, id(t)));
            const double got = static_cast<double>(count_label(r.map, id(t)));
            EXPECT_LE(std::abs(got - truth), 0.02 * truth + 1e-9) << tissue_name(id(t)) << " frac " << frac;
        }
    }
}

TEST(RadialBand, NestingAndCompartment) {
    // Coarse voxels so that the 10 and 20 mm bands stay inside the limb.
    const auto ph = phantom::generate_phantom(phantom::default_params(128, 500.0));
    const auto b10 = radial_band_mask(ph.truth, 10);
    const auto b20 = radial_band_mask(ph.truth, 20);
    const auto ball = radial_band_mask(ph.truth, kWholeCompartment);
    EXPECT_EQ(ball, mask_of(ph.truth, {5, 6, 7, 8}));
    EXPECT_LT(count_true(b10), count_true(b20));
    EXPECT_LT(count_true(b20), count_true(ball));
    for (std::size_t i = 0; i < b10.size(); ++i) {
        EXPECT_LE(b10[i], b20[i]);
        EXPECT_LE(b20[i], ball[i]);
    }
    // Soft-tissue pixels touching the tibial cortex lie in every band.
    std::size_t touching = 0;
    for (int y = 1; y + 1 < 128; ++y) {
        for (int x = 1; x + 1 < 128; ++x) {
            if (!ball.at(x, y)) continue;
            bool adj = false;
            for (auto [dx, dy] : kNeighbors4) adj |= ph.truth.at(x + dx, y + dy) == id(Tissue::TC);
            if (!adj) continue;
            ++touching;
            EXPECT_TRUE(radial_band_mask(ph.truth, 0.5).at(x, y));
            EXPECT_TRUE(b10.at(x, y));
        }
    }
    EXPECT_GT(touching, 0u);
}

TEST(RadialBand, MissingTibia) {
    LabelMap map(10, 10, 100.0, std::uint8_t{5});
    EXPECT_THROW(radial_band_mask(map, 10), DataError);
}

TEST(Params, Validation) {
    Params p;
    p.myo_seed = {-300, 0};
    EXPECT_THROW(p.validate(), ConfigError);
    Params q;
    q.dilation_iters = -1;
    EXPECT_THROW(q.validate(), ConfigError);
}
