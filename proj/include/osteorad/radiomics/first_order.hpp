#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "osteorad/radiomics/discretize.hpp"

namespace osteorad::radiomics {

inline constexpr std::array<std::string_view, 18> kFirstOrderNames = {
    "Energy",     "TotalEnergy",        "Entropy",  "Minimum",  "10Percentile",
    "90Percentile", "Maximum",          "Mean",     "Median",   "InterquartileRange",
    "Range",      "MeanAbsoluteDeviation", "RobustMeanAbsoluteDeviation", "RootMeanSquared",
    "Skewness",   "Kurtosis",           "Variance", "Uniformity",
};

/// Linear interpolation between order statistics (position p/100 * (n-1)).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw EmptyRegionError("percentile of empty set");
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// `values` are the ROI intensities; entropy and uniformity use the level histogram.
inline std::array<double, 18> first_order_features(std::vector<double> values, const std::vector<std::size_t>& hist,
                                                   double pixel_area_mm2) {
    if (values.empty()) throw EmptyRegionError("first-order features of an empty region");
    const auto n = static_cast<double>(values.size());
    std::sort(values.begin(), values.end());

    double sum = 0, energy = 0;
    for (double v : values) {
        sum += v;
        energy += v * v;
    }
    const double mean = sum / n;
    double m2 = 0, m3 = 0, m4 = 0, mad = 0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;

    const double p10 = percentile_sorted(values, 10);
    const double p90 = percentile_sorted(values, 90);
    double rsum = 0;
    std::size_t rn = 0;
    for (double v : values) {
        if (v >= p10 && v <= p90) {
            rsum += v;
            ++rn;
        }
    }
    const double rmean = rsum / static_cast<double>(rn);
    double rmad = 0;
    for (double v : values) {
        if (v >= p10 && v <= p90) rmad += std::abs(v - rmean);
    }
    rmad /= static_cast<double>(rn);

    double total = 0;
    for (std::size_t c : hist) total += static_cast<double>(c);
    double entropy = 0, uniformity = 0;
    for (std::size_t c : hist) {
        const double p = static_cast<double>(c) / total;
        entropy += entropy2(p);
        uniformity += p * p;
    }

    return {
        energy,
        energy * pixel_area_mm2,
        entropy,
        values.front(),
        p10,
        p90,
        values.back(),
        mean,
        percentile_sorted(values, 50),
        percentile_sorted(values, 75) - percentile_sorted(values, 25),
        values.back() - values.front(),
        mad,
        rmad,
        std::sqrt(energy / n),
        m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0,
        m2 > 0 ? m4 / (m2 * m2) : 0.0,
        m2,
        uniformity,
    };
}

template <typename T>
std::array<double, 18> first_order_features(const Grid<T>& img, const BinaryMask& mask, const Discretization& d = {}) {
    const double px_mm = img.voxel_size_um() / 1000.0;
    return first_order_features(roi_values(img, mask), level_histogram(discretize(img, mask, d)), px_mm * px_mm);
}

}  // namespace osteorad::radiomics
