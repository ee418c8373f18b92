#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "osteorad/grid.hpp"
#include "osteorad/imaging.hpp"

namespace osteorad::filters {

enum class FilterKind {
    Original,
    LogSigma2,
    WaveletL,
    WaveletH,
    Square,
    SquareRoot,
    Logarithm,
    Exponential,
    Gradient,
    Lbp2D,
};

inline constexpr std::array<FilterKind, 10> kAllFilters = {
    FilterKind::Original, FilterKind::LogSigma2,   FilterKind::WaveletL, FilterKind::WaveletH, FilterKind::Square,
    FilterKind::SquareRoot, FilterKind::Logarithm, FilterKind::Exponential, FilterKind::Gradient, FilterKind::Lbp2D,
};

// Column prefixes; no underscores so `<filter>_<class>_<name>` splits cleanly.
inline constexpr std::array<std::string_view, 10> kFilterNames = {
    "original", "log-sigma2", "wavelet-L", "wavelet-H", "square",
    "squareroot", "logarithm", "exponential", "gradient", "lbp-2D",
};

inline std::string_view filter_name(FilterKind k) { return kFilterNames[static_cast<std::size_t>(k)]; }

inline FilterKind filter_from_name(std::string_view s) {
    for (std::size_t i = 0; i < kFilterNames.size(); ++i) {
        if (kFilterNames[i] == s) return kAllFilters[i];
    }
    throw ConfigError("unknown filter kind '" + std::string(s) + "'");
}

/// Half-sample symmetric reflection into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

/// Sampled Gaussian on [-radius, radius], normalised to unit sum.
inline std::vector<double> gaussian_kernel_1d(double sigma, int radius) {
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double s = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        s += v;
    }
    for (auto& v : k) v /= s;
    return k;
}

/// Sampled Laplacian of Gaussian truncated at ceil(4 sigma), shifted to zero sum.
inline Grid<double> log_kernel(double sigma) {
    const int r = static_cast<int>(std::ceil(4 * sigma));
    const int n = 2 * r + 1;
    Grid<double> k(n, n, 1.0, 0.0);
    const double s2 = sigma * sigma;
    double sum = 0;
    for (int y = -r; y <= r; ++y) {
        for (int x = -r; x <= r; ++x) {
            const double q = (x * x + y * y) / (2 * s2);
            const double v = -1.0 / (3.14159265358979323846 * s2 * s2) * (1 - q) * std::exp(-q);
            k.at(x + r, y + r) = v;
            sum += v;
        }
    }
    const double mean = sum / (n * n);
    for (auto& v : k.pixels()) v -= mean;
    return k;
}

inline FilteredImage convolve_reflect(const FilteredImage& img, const Grid<double>& kernel) {
    const int r = kernel.width() / 2;
    const int w = img.width();
    const int h = img.height();
    FilteredImage out(w, h, img.voxel_size_um(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = reflect_index(y - dy, h);
                for (int dx = -r; dx <= r; ++dx) {
                    s += kernel.at(dx + r, dy + r) * img.at(reflect_index(x - dx, w), sy);
                }
            }
            out.at(x, y) = s;
        }
    }
    return out;
}

inline FilteredImage laplacian_of_gaussian(const FilteredImage& img, double sigma = 2.0) {
    return convolve_reflect(img, log_kernel(sigma));
}

enum class HaarBand { LL, HH };

/// One level of the orthonormal Haar transform on 2x2 blocks (odd edges
/// reflected), nearest-upsampled back to the input size.
inline FilteredImage haar_band(const FilteredImage& img, HaarBand band) {
    const int w = img.width();
    const int h = img.height();
    FilteredImage out(w, h, img.voxel_size_um(), 0.0);
    for (int by = 0; by < (h + 1) / 2; ++by) {
        for (int bx = 0; bx < (w + 1) / 2; ++bx) {
            const int x0 = 2 * bx;
            const int y0 = 2 * by;
            const int x1 = reflect_index(x0 + 1, w);
            const int y1 = reflect_index(y0 + 1, h);
            const double a = img.at(x0, y0);
            const double b = img.at(x1, y0);
            const double c = img.at(x0, y1);
            const double d = img.at(x1, y1);
            const double v = band == HaarBand::LL ? (a + b + c + d) / 2 : (a - b - c + d) / 2;
            for (int y = y0; y < std::min(y0 + 2, h); ++y) {
                for (int x = x0; x < std::min(x0 + 2, w); ++x) out.at(x, y) = v;
            }
        }
    }
    return out;
}

inline double max_abs(const FilteredImage& img) {
    double m = 0;
    for (double v : img.pixels()) m = std::max(m, std::abs(v));
    return m;
}

inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Pointwise maps scaled by M = max |x| over the image.
inline FilteredImage square_filter(const FilteredImage& img) {
    const double m = max_abs(img);
    return map_pixels<double>(img, [m](double x) { return m > 0 ? x * x / m : 0.0; });
}

inline FilteredImage squareroot_filter(const FilteredImage& img) {
    const double m = max_abs(img);
    return map_pixels<double>(img, [m](double x) { return std::sqrt(std::abs(x) * m) * sign(x); });
}

inline FilteredImage logarithm_filter(const FilteredImage& img) {
    const double m = max_abs(img);
    const double scale = m > 0 ? m / std::log(m + 1) : 0.0;
    return map_pixels<double>(img, [scale](double x) { return sign(x) * std::log(std::abs(x) + 1) * scale; });
}

inline FilteredImage exponential_filter(const FilteredImage& img) {
    const double m = max_abs(img);
    const double c = m > 0 ? std::log(m) / m : 0.0;
    return map_pixels<double>(img, [c](double x) { return std::exp(c * x); });
}

/// Central-difference gradient magnitude; one-sided at the border.
inline FilteredImage gradient_magnitude(const FilteredImage& img) {
    const int w = img.width();
    const int h = img.height();
    FilteredImage out(w, h, img.voxel_size_um(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            const double gx = xr > xl ? (img.at(xr, y) - img.at(xl, y)) / (xr - xl) : 0.0;
            const double gy = yd > yu ? (img.at(x, yd) - img.at(x, yu)) / (yd - yu) : 0.0;
            out.at(x, y) = std::hypot(gx, gy);
        }
    }
    return out;
}

/// Rotation-invariant uniform LBP over the 8-neighbour ring (codes 0..9).
/// Border neighbours are replicated.
inline FilteredImage lbp_riu2(const FilteredImage& img) {
    static constexpr std::array<std::array<int, 2>, 8> ring = {
        {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
    const int w = img.width();
    const int h = img.height();
    FilteredImage out(w, h, img.voxel_size_um(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = img.at(x, y);
            std::array<int, 8> bits{};
            for (std::size_t k = 0; k < 8; ++k) {
                const int nx = std::clamp(x + ring[k][0], 0, w - 1);
                const int ny = std::clamp(y + ring[k][1], 0, h - 1);
                bits[k] = img.at(nx, ny) >= c ? 1 : 0;
            }
            int transitions = 0;
            int ones = 0;
            for (std::size_t k = 0; k < 8; ++k) {
                transitions += bits[k] != bits[(k + 1) % 8];
                ones += bits[k];
            }
            out.at(x, y) = transitions <= 2 ? ones : 9;
        }
    }
    return out;
}

inline FilteredImage apply_filter(const FilteredImage& img, FilterKind kind) {
    if (img.size() == 0) throw DataError("filter: empty image");
    switch (kind) {
        case FilterKind::Original: return img;
        case FilterKind::LogSigma2: return laplacian_of_gaussian(img, 2.0);
        case FilterKind::WaveletL: return haar_band(img, HaarBand::LL);
        case FilterKind::WaveletH: return haar_band(img, HaarBand::HH);
        case FilterKind::Square: return square_filter(img);
        case FilterKind::SquareRoot: return squareroot_filter(img);
        case FilterKind::Logarithm: return logarithm_filter(img);
        case FilterKind::Exponential: return exponential_filter(img);
        case FilterKind::Gradient: return gradient_magnitude(img);
        case FilterKind::Lbp2D: return lbp_riu2(img);
    }
    throw ConfigError("unknown filter kind");
}

inline FilteredImage to_filtered(const HUImage& img) {
    return map_pixels<double>(img, [](std::int16_t v) { return static_cast<double>(v); });
}

inline FilteredImage apply_filter(const HUImage& img, FilterKind kind) { return apply_filter(to_filtered(img), kind); }

}  // namespace osteorad::filters
