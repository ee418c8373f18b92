#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "osteorad/grid.hpp"
#include "osteorad/imaging.hpp"

namespace osteorad::morph {

struct Components {
    Grid<int> labels;                      // -1 outside the mask
    std::vector<std::size_t> sizes;        // pixel count per component
    std::vector<std::size_t> first_index;  // smallest row-major index in each component

    std::size_t count() const noexcept { return sizes.size(); }
};

/// Components are numbered in order of their first pixel in a raster scan.
inline Components connected_components(const BinaryMask& mask, int connectivity = 8) {
    Components cc{Grid<int>(mask.width(), mask.height(), mask.voxel_size_um(), -1), {}, {}};
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::size_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = mask.index(x, y);
            if (!mask[start] || cc.labels[start] >= 0) continue;
            const int label = static_cast<int>(cc.sizes.size());
            std::size_t size = 0;
            cc.labels[start] = label;
            stack.assign(1, start);
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                ++size;
                const int px = static_cast<int>(p % static_cast<std::size_t>(w));
                const int py = static_cast<int>(p / static_cast<std::size_t>(w));
                auto visit = [&](int dx, int dy) {
                    const int nx = px + dx;
                    const int ny = py + dy;
                    if (!mask.contains(nx, ny)) return;
                    const std::size_t q = mask.index(nx, ny);
                    if (mask[q] && cc.labels[q] < 0) {
                        cc.labels[q] = label;
                        stack.push_back(q);
                    }
                };
                if (connectivity == 4) {
                    for (auto [dx, dy] : kNeighbors4) visit(dx, dy);
                } else {
                    for (auto [dx, dy] : kNeighbors8) visit(dx, dy);
                }
            }
            cc.sizes.push_back(size);
            cc.first_index.push_back(start);
        }
    }
    return cc;
}

/// Removes 8-connected components smaller than `min_size` pixels.
inline BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_size) {
    const auto cc = connected_components(mask, 8);
    BinaryMask out = mask;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int l = cc.labels[i];
        if (l >= 0 && cc.sizes[static_cast<std::size_t>(l)] < min_size) out[i] = 0;
    }
    return out;
}

namespace detail {

inline constexpr double kFar = 1e20;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place.
inline void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    d.resize(static_cast<std::size_t>(n));
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = 0;
        while (true) {
            const int p = v[static_cast<std::size_t>(k)];
            s = ((f[static_cast<std::size_t>(q)] + double(q) * q) - (f[static_cast<std::size_t>(p)] + double(p) * p)) /
                (2.0 * q - 2.0 * p);
            if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
        const int p = v[static_cast<std::size_t>(k)];
        d[static_cast<std::size_t>(q)] = double(q - p) * double(q - p) + f[static_cast<std::size_t>(p)];
    }
    f = d;
}

}  // namespace detail

/// Exact squared Euclidean distance (in pixels) from every pixel to the nearest
/// pixel of `set`. Pixels beyond the image border count as members of the set
/// when `outside_in_set` is true. With an empty set the result is ~1e20.
inline Grid<double> squared_distance_to(const BinaryMask& set, bool outside_in_set = false) {
    const int pad = outside_in_set ? 1 : 0;
    const int w = set.width() + 2 * pad;
    const int h = set.height() + 2 * pad;
    std::vector<double> g(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), detail::kFar);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int sx = x - pad;
            const int sy = y - pad;
            const bool member = set.contains(sx, sy) ? set.at(sx, sy) != 0 : true;
            if (member) g[static_cast<std::size_t>(y) * w + x] = 0.0;
        }
    }
    std::vector<double> f, d, z;
    std::vector<int> v;
    f.resize(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = g[static_cast<std::size_t>(y) * w + x];
        detail::edt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * w + x] = f[static_cast<std::size_t>(y)];
    }
    f.resize(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = g[static_cast<std::size_t>(y) * w + x];
        detail::edt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) g[static_cast<std::size_t>(y) * w + x] = f[static_cast<std::size_t>(x)];
    }
    Grid<double> out(set.width(), set.height(), set.voxel_size_um(), 0.0);
    for (int y = 0; y < set.height(); ++y) {
        for (int x = 0; x < set.width(); ++x) {
            out.at(x, y) = g[static_cast<std::size_t>(y + pad) * w + (x + pad)];
        }
    }
    return out;
}

inline BinaryMask complement(const BinaryMask& m) {
    return map_pixels<std::uint8_t>(m, [](std::uint8_t v) { return v ? 0 : 1; });
}

/// Dilation by the disk {dx^2 + dy^2 <= r^2}.
inline BinaryMask dilate_disk(const BinaryMask& m, double r) {
    const auto d2 = squared_distance_to(m);
    return map_pixels<std::uint8_t>(d2, [r](double v) { return v <= r * r ? 1 : 0; });
}

/// Erosion by the disk {dx^2 + dy^2 <= r^2}; pixels beyond the border are background.
inline BinaryMask erode_disk(const BinaryMask& m, double r) {
    const auto d2 = squared_distance_to(complement(m), /*outside_in_set=*/true);
    return map_pixels<std::uint8_t>(d2, [r](double v) { return v > r * r ? 1 : 0; });
}

/// Closing computed on a zero-padded canvas so the result is always a superset.
inline BinaryMask close_disk(const BinaryMask& m, int r) {
    const int pad = 2 * r + 2;
    BinaryMask big(m.width() + 2 * pad, m.height() + 2 * pad, m.voxel_size_um(), std::uint8_t{0});
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) big.at(x + pad, y + pad) = m.at(x, y);
    }
    const BinaryMask closed = erode_disk(dilate_disk(big, r), r);
    BinaryMask out(m.width(), m.height(), m.voxel_size_um(), std::uint8_t{0});
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) out.at(x, y) = closed.at(x + pad, y + pad);
    }
    return out;
}

/// One step of 8-neighbourhood (3x3 square) dilation.
inline BinaryMask dilate_square(const BinaryMask& m) {
    BinaryMask out(m.width(), m.height(), m.voxel_size_um(), std::uint8_t{0});
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (m.contains(x + dx, y + dy)) out.at(x + dx, y + dy) = 1;
                }
            }
        }
    }
    return out;
}

/// Pixels reachable from the border through 4-connected non-mask pixels.
inline BinaryMask outside_region(const BinaryMask& barrier) {
    const int w = barrier.width();
    const int h = barrier.height();
    BinaryMask out(w, h, barrier.voxel_size_um(), std::uint8_t{0});
    std::vector<std::size_t> stack;
    auto seed = [&](int x, int y) {
        const std::size_t i = barrier.index(x, y);
        if (!barrier[i] && !out[i]) {
            out[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int px = static_cast<int>(p % static_cast<std::size_t>(w));
        const int py = static_cast<int>(p / static_cast<std::size_t>(w));
        for (auto [dx, dy] : kNeighbors4) {
            const int nx = px + dx;
            const int ny = py + dy;
            if (!barrier.contains(nx, ny)) continue;
            const std::size_t q = barrier.index(nx, ny);
            if (!barrier[q] && !out[q]) {
                out[q] = 1;
                stack.push_back(q);
            }
        }
    }
    return out;
}

/// Mask plus every pixel it encloses.
inline BinaryMask fill_holes(const BinaryMask& m) {
    const auto outside = outside_region(m);
    return map_pixels<std::uint8_t>(outside, [](std::uint8_t v) { return v ? 0 : 1; });
}

struct Point2 {
    double x = 0;
    double y = 0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Andrew's monotone chain; counter-clockwise, no collinear points.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_area(const std::vector<Point2>& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return std::abs(a) * 0.5;
}

/// Convex hull area of the union of the unit squares covering the mask pixels.
inline double pixel_hull_area(const BinaryMask& m) {
    std::vector<Point2> corners;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            // Interior corners never lie on the hull; only emit the square's
            // corners when a 4-neighbour is missing.
            bool boundary = false;
            for (auto [dx, dy] : kNeighbors4) {
                if (!m.contains(x + dx, y + dy) || !m.at(x + dx, y + dy)) {
                    boundary = true;
                    break;
                }
            }
            if (!boundary) continue;
            const double fx = x;
            const double fy = y;
            corners.push_back({fx, fy});
            corners.push_back({fx + 1, fy});
            corners.push_back({fx, fy + 1});
            corners.push_back({fx + 1, fy + 1});
        }
    }
    return polygon_area(convex_hull(std::move(corners)));
}

/// Area and perimeter of the marching-squares contour (iso-level 0.5, pixel
/// centres on the integer lattice, zero outside the image). Diagonal saddles are
/// resolved as connected, matching 8-connectivity of the foreground.
struct ContourMeasure {
    double area = 0;
    double perimeter = 0;
};

inline ContourMeasure contour_measure(const BinaryMask& m) {
    constexpr double kHalfDiag = 0.70710678118654752440;
    ContourMeasure out;
    auto in = [&](int x, int y) { return m.contains(x, y) && m.at(x, y) != 0; };
    for (int y = -1; y < m.height(); ++y) {
        for (int x = -1; x < m.width(); ++x) {
            const bool a = in(x, y);
            const bool b = in(x + 1, y);
            const bool c = in(x + 1, y + 1);
            const bool d = in(x, y + 1);
            const int n = a + b + c + d;
            switch (n) {
                case 0:
                    break;
                case 1:
                    out.area += 0.125;
                    out.perimeter += kHalfDiag;
                    break;
                case 2:
                    if (a == c) {  // diagonal saddle
                        out.area += 0.75;
                        out.perimeter += 2 * kHalfDiag;
                    } else {
                        out.area += 0.5;
                        out.perimeter += 1.0;
                    }
                    break;
                case 3:
                    out.area += 0.875;
                    out.perimeter += kHalfDiag;
                    break;
                default:
                    out.area += 1.0;
                    break;
            }
        }
    }
    return out;
}

/// Marching-squares vertices: midpoints between each foreground pixel and its
/// 4-neighbours that are background or outside the image.
inline std::vector<Point2> contour_vertices(const BinaryMask& m) {
    std::vector<Point2> pts;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            for (auto [dx, dy] : kNeighbors4) {
                if (!m.contains(x + dx, y + dy) || !m.at(x + dx, y + dy)) {
                    pts.push_back({x + 0.5 * dx, y + 0.5 * dy});
                }
            }
        }
    }
    return pts;
}

}  // namespace osteorad::morph
