#include <gtest/gtest.h>

#include <random>
#include <set>

#include "osteorad/preprocess.hpp"

using namespace osteorad;
using namespace osteorad::preprocess;

namespace {

HUImage row_image(std::vector<std::int16_t> px) {
    const int w = static_cast<int>(px.size());
    return HUImage(w, 1, 60.7, std::move(px));
}

// Keys cubic with a = -0.5 written out in expanded form.
double keys_kernel(double t) {
    t = std::abs(t);
    if (t <= 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
    if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
    return 0;
}

double oracle_bicubic(const NormImage& img, int ox, int oy, int factor) {
    const double sx = (ox + 0.5) * factor - 0.5;
    const double sy = (oy + 0.5) * factor - 0.5;
    double acc = 0;
    for (int j = static_cast<int>(std::floor(sy)) - 1; j <= static_cast<int>(std::floor(sy)) + 2; ++j) {
        for (int i = static_cast<int>(std::floor(sx)) - 1; i <= static_cast<int>(std::floor(sx)) + 2; ++i) {
            const int ci = std::clamp(i, 0, img.width() - 1);
            const int cj = std::clamp(j, 0, img.height() - 1);
            acc += keys_kernel(sx - i) * keys_kernel(sy - j) * img.at(ci, cj);
        }
    }
    return std::clamp(acc, 0.0, 1.0);
}

}  // namespace

TEST(Clip, DefaultBounds) {
    const auto out = clip_intensity(row_image({7000, -9000, 1234}));
    EXPECT_EQ(out[0], 6000);
    EXPECT_EQ(out[1], -4000);
    EXPECT_EQ(out[2], 1234);
}

TEST(Clip, IdempotentAndRejectsInvertedRange) {
    std::mt19937 rng(1);
    std::vector<std::int16_t> px(500);
    for (auto& v : px) v = static_cast<std::int16_t>(static_cast<int>(rng() % 65536) - 32768);
    const auto once = clip_intensity(row_image(px));
    EXPECT_EQ(clip_intensity(once), once);
    EXPECT_THROW(clip_intensity(once, 10, 10), ConfigError);
}

TEST(Normalize, LinearMap) {
    const auto out = normalize_intensity(row_image({-4000, 1000, 6000}));
    EXPECT_DOUBLE_EQ(out[0], 0.0);
    EXPECT_DOUBLE_EQ(out[1], 0.5);
    EXPECT_DOUBLE_EQ(out[2], 1.0);
}

TEST(Normalize, ConstantImageIsDegenerate) {
    EXPECT_THROW(normalize_intensity(row_image({5, 5, 5})), NumericError);
}

TEST(Normalize, PerImageRangeIsExactlyUnit) {
    std::mt19937 rng(2);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::int16_t> px(64);
        for (auto& v : px) v = static_cast<std::int16_t>(static_cast<int>(rng() % 10000) - 4000);
        px[0] = -100;
        px[1] = 200;
        const auto out = normalize_intensity(clip_intensity(row_image(px)));
        const auto [mn, mx] = std::minmax_element(out.data().begin(), out.data().end());
        EXPECT_EQ(*mn, 0.0);
        EXPECT_EQ(*mx, 1.0);
    }
}

TEST(Normalize, FixedRangeUsesClipBounds) {
    const auto out = normalize_intensity(row_image({0, 1000}), Normalization::FixedRange);
    EXPECT_DOUBLE_EQ(out[0], 0.4);
    EXPECT_DOUBLE_EQ(out[1], 0.5);
    EXPECT_EQ(normalization_from_name("fixed_range"), Normalization::FixedRange);
    EXPECT_THROW(normalization_from_name("global"), ConfigError);
}

TEST(Crop, OffsetForScannerSize) {
    HUImage img(2304, 2304, 60.7, std::int16_t{0});
    img.at(352, 352) = 7;
    img.at(352 + 1599, 352 + 1599) = 9;
    const auto out = center_crop(img);
    EXPECT_EQ(out.width(), 1600);
    EXPECT_EQ(out.height(), 1600);
    EXPECT_EQ(out.at(0, 0), 7);
    EXPECT_EQ(out.at(1599, 1599), 9);
}

TEST(Crop, IdentityAndTooSmall) {
    HUImage img(1600, 1600, 60.7, std::int16_t{3});
    EXPECT_EQ(center_crop(img), img);
    EXPECT_THROW(center_crop(HUImage(1599, 1600, 60.7)), DataError);
}

TEST(Crop, OddMarginDropsHighEdge) {
    HUImage img(5, 5, 1.0, std::int16_t{0});
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) img.at(x, y) = static_cast<std::int16_t>(10 * y + x);
    }
    // Margin of 3: one pixel dropped on the low edge, two on the high edge.
    const auto out = center_crop(img, 2);
    EXPECT_EQ(out.at(0, 0), 11);
    EXPECT_EQ(out.at(1, 1), 22);
}

TEST(Bicubic, ConstantStaysConstant) {
    const NormImage img(1600, 1600, 60.7, 0.4);
    const auto out = downsample_bicubic(img);
    EXPECT_EQ(out.width(), 800);
    EXPECT_EQ(out.height(), 800);
    for (double v : out.data()) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(Bicubic, RampMatchesDirectKernelSum) {
    NormImage img(4, 4, 60.7);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) img.at(x, y) = (x + 2.0 * y) / 10.0;
    }
    const auto out = downsample_bicubic(img, 2);
    ASSERT_EQ(out.width(), 2);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) EXPECT_NEAR(out.at(x, y), oracle_bicubic(img, x, y, 2), 1e-14);
    }
}

TEST(Bicubic, RandomImagesMatchDirectKernelSum) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int factor : {2, 3}) {
        NormImage img(12, 6, 60.7);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
        const auto out = downsample_bicubic(img, factor);
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) EXPECT_NEAR(out.at(x, y), oracle_bicubic(img, x, y, factor), 1e-14);
        }
    }
}

TEST(Bicubic, NonDivisibleDimensions) { EXPECT_THROW(downsample_bicubic(NormImage(5, 4, 1.0), 2), DataError); }

TEST(MaskResize, NoNewLabels) {
    std::mt19937 rng(4);
    LabelMap m(40, 40, 60.7);
    const std::uint8_t ids[3] = {0, 1, 5};
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = ids[rng() % 3];
    for (auto [w, h] : {std::pair{20, 20}, std::pair{13, 29}, std::pair{80, 80}}) {
        const auto out = resize_mask_nearest(m, w, h);
        std::set<int> labels(out.data().begin(), out.data().end());
        for (int l : labels) EXPECT_TRUE(l == 0 || l == 1 || l == 5);
    }
}

TEST(MaskResize, UpsampleConstantAndRoundTrip) {
    const LabelMap m(200, 200, 485.6, std::uint8_t{3});
    const auto up = upsample_mask_nearest(m);
    EXPECT_EQ(up.width(), 1600);
    for (auto v : up.data()) EXPECT_EQ(v, 3);
    const auto down = resize_mask_nearest(up, 200, 200);
    EXPECT_EQ(down.data(), m.data());
}

TEST(MaskResize, CheckerboardBlocks) {
    const LabelMap m(2, 2, 1.0, std::vector<std::uint8_t>{1, 2, 3, 4});
    const auto up = upsample_mask_nearest(m, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) EXPECT_EQ(up.at(x, y), m.at(x / 8, y / 8));
    }
}

TEST(Standardize, DeterministicBytes) {
    std::mt19937 rng(8);
    HUImage img(40, 40, 60.7);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::int16_t>(static_cast<int>(rng() % 20000) - 10000);
    Params p;
    p.crop = 32;
    const auto a = standardize(img, p);
    const auto b = standardize(img, p);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.width(), 16);
}
