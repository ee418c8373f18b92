#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "osteorad/imaging.hpp"
#include "test_util.hpp"

using namespace osteorad;

TEST(HUImageIO, DecodesLittleEndianTwosComplement) {
    const std::vector<unsigned char> bytes = {0x10, 0x27, 0xF0, 0xD8};
    const HUImage img = decode_hu(bytes, RasterMeta{2, 1, 60.7});
    ASSERT_EQ(img.size(), 2u);
    EXPECT_EQ(img[0], 10000);
    EXPECT_EQ(img[1], -10000);
}

TEST(HUImageIO, RejectsLengthMismatch) {
    const std::vector<unsigned char> bytes(7, 0);
    try {
        decode_hu(bytes, RasterMeta{2, 2, 60.7});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
    }
}

TEST(HUImageIO, MissingSidecarAndBadDimensions) {
    test::TempDir dir;
    const auto raw = dir.path() / "a.raw";
    write_bytes(raw, {0, 0, 0, 0});
    EXPECT_THROW(load_hu_image(raw), DataError);
    write_sidecar(dir.path() / "a.meta.json", {0, 2, 60.7});
    EXPECT_THROW(load_hu_image(raw), DataError);
    EXPECT_THROW(HUImage(0, 3, 1.0), DataError);
    EXPECT_THROW(HUImage(3, 3, 0.0), DataError);
}

TEST(HUImageIO, RoundTripIsBitIdentical) {
    test::TempDir dir;
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dist(INT16_MIN, INT16_MAX);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 1 + static_cast<int>(rng() % 17);
        const int h = 1 + static_cast<int>(rng() % 13);
        std::vector<std::int16_t> px(static_cast<std::size_t>(w * h));
        for (auto& v : px) v = static_cast<std::int16_t>(dist(rng));
        const HUImage img(w, h, 60.7 + trial, px);
        const auto raw = dir.path() / ("img" + std::to_string(trial) + ".raw");
        write_hu_image(img, raw);
        EXPECT_EQ(load_hu_image(raw), img);
    }
}

TEST(LabelMapIO, RejectsIdsAboveEight) {
    test::TempDir dir;
    const auto raw = dir.path() / "m.mask.raw";
    write_bytes(raw, {0, 1, 8, 9});
    write_sidecar(sidecar_for(raw), {2, 2, 60.7});
    EXPECT_THROW(load_label_map(raw), DataError);
    write_bytes(raw, {0, 1, 8, 7});
    const LabelMap m = load_label_map(raw);
    EXPECT_EQ(m.at(0, 1), 8);
}

TEST(LabelMapIO, SidecarSharedWithImage) {
    EXPECT_EQ(sidecar_for("d/s000.raw"), std::filesystem::path("d/s000.meta.json"));
    EXPECT_EQ(sidecar_for("d/s000.mask.raw"), std::filesystem::path("d/s000.meta.json"));
}

TEST(RegionMask, AllTrueWhenMapIsConstant) {
    const LabelMap map(4, 3, 60.7, std::uint8_t{2});
    const auto rm = extract_region_mask(map, 2);
    EXPECT_EQ(rm.count(), 12u);
    EXPECT_EQ(rm.region_id, 2);
}

TEST(RegionMask, EmptyRegionIsDistinctError) {
    const LabelMap map(4, 3, 60.7, std::uint8_t{2});
    EXPECT_THROW(extract_region_mask(map, 7), EmptyRegionError);
    EXPECT_THROW(extract_region_mask(map, 0), ConfigError);
    EXPECT_THROW(extract_region_mask(map, 9), ConfigError);
}

TEST(RegionMask, SinglePixel) {
    const LabelMap map(2, 2, 60.7, std::vector<std::uint8_t>{1, 2, 2, 2});
    const auto rm = extract_region_mask(map, 1);
    EXPECT_EQ(rm.count(), 1u);
    EXPECT_EQ(rm.mask.at(0, 0), 1);
}

TEST(RegionMask, UnionOverRegionsEqualsForeground) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        LabelMap map(9, 7, 60.7, std::uint8_t{0});
        for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<std::uint8_t>(rng() % 9);
        BinaryMask uni(9, 7, 60.7, std::uint8_t{0});
        for (int r = 1; r <= 8; ++r) {
            try {
                const auto rm = extract_region_mask(map, r);
                for (std::size_t i = 0; i < uni.size(); ++i) uni[i] |= rm.mask[i];
            } catch (const EmptyRegionError&) {
            }
        }
        for (std::size_t i = 0; i < map.size(); ++i) EXPECT_EQ(uni[i] != 0, map[i] != 0);
    }
}

TEST(Manifest, LoadsTwoPatients) {
    test::TempDir dir;
    write_hu_image(HUImage(2, 2, 60.7, std::int16_t{0}), dir.path() / "a.raw");
    std::ofstream(dir.path() / "manifest.json") << R"({"patients":[
        {"patient_id":"P1","group":"osteoporosis","covariates":{"age":71.5},"slices":[{"image":"a.raw"}]},
        {"patient_id":"P2","group":"control","slices":["a.raw"]}]})";
    const auto m = load_manifest(dir.path() / "manifest.json");
    ASSERT_EQ(m.patients.size(), 2u);
    EXPECT_EQ(m.patients[0].group, Group::Osteoporosis);
    EXPECT_EQ(m.patients[1].group, Group::Control);
    EXPECT_DOUBLE_EQ(m.patients[0].covariates.at(0).second, 71.5);
}

TEST(Manifest, RejectsDuplicatesUnknownGroupsAndMissingFiles) {
    test::TempDir dir;
    const auto path = dir.path() / "m.json";
    std::ofstream(path) << R"({"patients":[{"patient_id":"P1","group":"control"},{"patient_id":"P1","group":"control"}]})";
    EXPECT_THROW(load_manifest(path), DataError);
    std::ofstream(path) << R"({"patients":[{"patient_id":"P1","group":"healthy"}]})";
    EXPECT_THROW(load_manifest(path), DataError);
    std::ofstream(path) << R"({"patients":[{"patient_id":"P1","group":"control","slices":["nope.raw"]}]})";
    try {
        load_manifest(path);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.raw"), std::string::npos);
    }
}

TEST(FeatureTableCsv, WideTableRoundTripsLosslessly) {
    std::vector<std::string> names;
    for (int i = 0; i < 939; ++i) names.push_back("original_firstorder_F" + std::to_string(i));
    FeatureTable t(names);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1e3);
    std::vector<double> row(names.size());
    for (int r = 0; r < 6; ++r) {
        for (auto& v : row) v = nd(rng) * std::pow(10.0, static_cast<int>(rng() % 21) - 10);
        t.add_row(RowKey{"P" + std::to_string(r), r * 3, "TT"}, row);
    }
    std::stringstream ss;
    write_feature_table(t, ss);
    const FeatureTable back = read_feature_table(ss);
    ASSERT_EQ(back.rows(), t.rows());
    ASSERT_EQ(back.names(), t.names());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        EXPECT_EQ(back.keys()[r], t.keys()[r]);
        for (std::size_t c = 0; c < t.cols(); ++c) {
            const double a = t.at(r, c);
            const double b = back.at(r, c);
            EXPECT_LE(std::abs(a - b), 1e-15 * std::abs(a));
        }
    }
}

TEST(FeatureTableCsv, ProvenanceFromColumnName) {
    const auto p = column_provenance("gradient_firstorder_Maximum");
    EXPECT_EQ(p.filter, "gradient");
    EXPECT_EQ(p.feature_class, "firstorder");
    EXPECT_EQ(p.name, "Maximum");
    const auto s = column_provenance("shape2D_Perimeter");
    EXPECT_EQ(s.feature_class, "shape2D");
    EXPECT_EQ(s.name, "Perimeter");
}
