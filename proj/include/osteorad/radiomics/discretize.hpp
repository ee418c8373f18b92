#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "osteorad/grid.hpp"
#include "osteorad/imaging.hpp"

namespace osteorad::radiomics {

enum class BinPolicy { FixedCount, FixedWidth };

inline BinPolicy bin_policy_from_name(std::string_view s) {
    if (s == "count" || s == "fixed_count") return BinPolicy::FixedCount;
    if (s == "width" || s == "fixed_width") return BinPolicy::FixedWidth;
    throw ConfigError("unknown bin policy '" + std::string(s) + "'");
}

struct Discretization {
    BinPolicy policy = BinPolicy::FixedCount;
    int bin_count = 32;
    double bin_width = 25.0;

    void validate() const {
        if (policy == BinPolicy::FixedCount && bin_count < 1) throw ConfigError("bin count must be >= 1");
        if (policy == BinPolicy::FixedWidth && !(bin_width > 0)) throw ConfigError("bin width must be > 0");
    }
};

/// Gray levels 1..ng for ROI pixels, 0 elsewhere.
struct QuantizedROI {
    Grid<int> levels;
    int ng = 0;
    std::vector<double> bin_edges;  // ng + 1 edges in intensity units
    std::size_t count = 0;

    int width() const { return levels.width(); }
    int height() const { return levels.height(); }
    bool in_roi(int x, int y) const { return levels.contains(x, y) && levels.at(x, y) > 0; }
};

template <typename T>
std::vector<double> roi_values(const Grid<T>& img, const BinaryMask& mask) {
    if (!img.same_shape(mask)) throw DataError("image and mask differ in shape");
    std::vector<double> v;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (mask[i]) v.push_back(static_cast<double>(img[i]));
    }
    if (v.empty()) throw EmptyRegionError("region mask is empty");
    return v;
}

/// Fixed bin count spans [min, max] of the ROI with a right-closed top bin;
/// Ng equals the bin count. A constant ROI gets a single level.
template <typename T>
QuantizedROI discretize(const Grid<T>& img, const BinaryMask& mask, const Discretization& d = {}) {
    d.validate();
    const auto vals = roi_values(img, mask);
    const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
    const double lo = *mn_it;
    const double hi = *mx_it;
    QuantizedROI q{Grid<int>(img.width(), img.height(), img.voxel_size_um(), 0), 0, {}, vals.size()};

    if (d.policy == BinPolicy::FixedCount) {
        if (!(hi > lo)) {
            q.ng = 1;
            q.bin_edges = {lo, hi};
        } else {
            q.ng = d.bin_count;
            const double width = (hi - lo) / d.bin_count;
            for (int b = 0; b <= q.ng; ++b) q.bin_edges.push_back(b == q.ng ? hi : lo + b * width);
            for (std::size_t i = 0; i < img.size(); ++i) {
                if (!mask[i]) continue;
                const double v = static_cast<double>(img[i]);
                const int l = static_cast<int>(std::floor((v - lo) / width)) + 1;
                q.levels[i] = std::clamp(l, 1, q.ng);
            }
            return q;
        }
    } else {
        const double base = std::floor(lo / d.bin_width);
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (!mask[i]) continue;
            const int l = static_cast<int>(std::floor(static_cast<double>(img[i]) / d.bin_width) - base) + 1;
            q.levels[i] = l;
            q.ng = std::max(q.ng, l);
        }
        for (int b = 0; b <= q.ng; ++b) q.bin_edges.push_back((base + b) * d.bin_width);
        return q;
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (mask[i]) q.levels[i] = 1;
    }
    return q;
}

/// Level histogram, index 0 unused.
inline std::vector<std::size_t> level_histogram(const QuantizedROI& q) {
    std::vector<std::size_t> h(static_cast<std::size_t>(q.ng) + 1, 0);
    for (int l : q.levels.pixels()) {
        if (l > 0) ++h[static_cast<std::size_t>(l)];
    }
    return h;
}

/// -sum p log2 p with 0 log 0 = 0.
inline double entropy2(double p) { return p > 0 ? -p * std::log2(p) : 0.0; }

}  // namespace osteorad::radiomics
