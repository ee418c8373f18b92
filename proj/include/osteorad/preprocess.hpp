#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "osteorad/imaging.hpp"

namespace osteorad::preprocess {

inline constexpr int kDefaultClipLo = -4000;
inline constexpr int kDefaultClipHi = 6000;
inline constexpr int kDefaultCrop = 1600;
inline constexpr int kDefaultFactor = 2;

enum class Normalization { PerImage, FixedRange };

inline Normalization normalization_from_name(std::string_view s) {
    if (s == "per_image") return Normalization::PerImage;
    if (s == "fixed_range") return Normalization::FixedRange;
    throw ConfigError("unknown normalization '" + std::string(s) + "' (expected per_image or fixed_range)");
}

struct Params {
    int clip_lo = kDefaultClipLo;
    int clip_hi = kDefaultClipHi;
    int crop = kDefaultCrop;
    int factor = kDefaultFactor;
    Normalization normalization = Normalization::PerImage;
};

inline HUImage clip_intensity(const HUImage& img, int lo = kDefaultClipLo, int hi = kDefaultClipHi) {
    if (lo >= hi) throw ConfigError("clip range requires lo < hi");
    if (lo < INT16_MIN || hi > INT16_MAX) throw ConfigError("clip bounds must fit in int16");
    return map_pixels<std::int16_t>(img, [lo, hi](std::int16_t v) { return std::clamp<int>(v, lo, hi); });
}

/// Maps clipped HU to [0,1]. PerImage uses the image's own extremes; FixedRange
/// uses the clip bounds [lo, hi].
inline NormImage normalize_intensity(const HUImage& clipped, Normalization mode = Normalization::PerImage,
                                     int lo = kDefaultClipLo, int hi = kDefaultClipHi) {
    double mn = lo;
    double mx = hi;
    if (mode == Normalization::PerImage) {
        const auto [a, b] = std::minmax_element(clipped.data().begin(), clipped.data().end());
        mn = *a;
        mx = *b;
    }
    if (!(mx > mn)) throw NumericError("degenerate intensity range");
    const double span = mx - mn;
    return map_pixels<double>(clipped, [mn, span](std::int16_t v) { return std::clamp((v - mn) / span, 0.0, 1.0); });
}

/// Centred side x side window; odd margins drop the extra pixel on the high edge.
template <typename T>
Grid<T> center_crop(const Grid<T>& img, int side = kDefaultCrop) {
    if (side <= 0) throw ConfigError("crop side must be positive");
    if (img.width() < side || img.height() < side) {
        throw DataError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " smaller than crop " + std::to_string(side));
    }
    const int ox = (img.width() - side) / 2;
    const int oy = (img.height() - side) / 2;
    Grid<T> out(side, side, img.voxel_size_um());
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) out.at(x, y) = img.at(x + ox, y + oy);
    }
    return out;
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double catmull_rom(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

namespace detail {

// Four tap positions and weights for output sample `o` when shrinking by `factor`.
struct Taps {
    std::array<int, 4> idx{};
    std::array<double, 4> w{};
};

inline Taps taps_for(int o, int factor, int n) {
    const double src = (o + 0.5) * factor - 0.5;
    const int base = static_cast<int>(std::floor(src));
    Taps t;
    for (int k = 0; k < 4; ++k) {
        const int i = base - 1 + k;
        t.idx[static_cast<std::size_t>(k)] = std::clamp(i, 0, n - 1);
        t.w[static_cast<std::size_t>(k)] = catmull_rom(src - i);
    }
    return t;
}

}  // namespace detail

/// Separable Catmull-Rom downsampling with clamped edges, re-clamped to [0,1].
inline NormImage downsample_bicubic(const NormImage& img, int factor = kDefaultFactor) {
    if (factor < 1) throw ConfigError("downsample factor must be >= 1");
    if (img.width() % factor != 0 || img.height() % factor != 0) {
        throw DataError("image dimensions not divisible by factor " + std::to_string(factor));
    }
    const int ow = img.width() / factor;
    const int oh = img.height() / factor;
    Grid<double> rows(ow, img.height(), img.voxel_size_um());
    for (int x = 0; x < ow; ++x) {
        const auto t = detail::taps_for(x, factor, img.width());
        for (int y = 0; y < img.height(); ++y) {
            double s = 0;
            for (std::size_t k = 0; k < 4; ++k) s += t.w[k] * img.at(t.idx[k], y);
            rows.at(x, y) = s;
        }
    }
    NormImage out(ow, oh, img.voxel_size_um() * factor);
    for (int y = 0; y < oh; ++y) {
        const auto t = detail::taps_for(y, factor, img.height());
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (std::size_t k = 0; k < 4; ++k) s += t.w[k] * rows.at(x, t.idx[k]);
            out.at(x, y) = std::clamp(s, 0.0, 1.0);
        }
    }
    return out;
}

/// Nearest-neighbour resampling with pixel-centre alignment.
inline LabelMap resize_mask_nearest(const LabelMap& map, int target_w, int target_h) {
    if (target_w <= 0 || target_h <= 0) throw ConfigError("target dimensions must be positive");
    const double sx = static_cast<double>(map.width()) / target_w;
    const double sy = static_cast<double>(map.height()) / target_h;
    LabelMap out(target_w, target_h, map.voxel_size_um() * sx);
    for (int y = 0; y < target_h; ++y) {
        const int src_y = std::min(map.height() - 1, static_cast<int>(std::floor((y + 0.5) * sy)));
        for (int x = 0; x < target_w; ++x) {
            const int src_x = std::min(map.width() - 1, static_cast<int>(std::floor((x + 0.5) * sx)));
            out.at(x, y) = map.at(src_x, src_y);
        }
    }
    return out;
}

inline LabelMap upsample_mask_nearest(const LabelMap& map, int target = kDefaultCrop) {
    if (target < map.width() || target < map.height()) throw ConfigError("upsample target smaller than input");
    return resize_mask_nearest(map, target, target);
}

/// Network input for one slice: crop, clip, normalise, downsample.
inline NormImage standardize(const HUImage& img, const Params& p) {
    const HUImage cropped = center_crop(img, p.crop);
    const HUImage clipped = clip_intensity(cropped, p.clip_lo, p.clip_hi);
    return downsample_bicubic(normalize_intensity(clipped, p.normalization, p.clip_lo, p.clip_hi), p.factor);
}

}  // namespace osteorad::preprocess
