#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include <Eigen/Dense>

#include "osteorad/morphology.hpp"

namespace osteorad::radiomics {

inline constexpr std::array<std::string_view, 9> kShapeNames = {
    "MeshSurface",     "Perimeter",       "PerimeterSurfaceRatio", "Sphericity", "SphericalDisproportion",
    "MaximumDiameter", "MajorAxisLength", "MinorAxisLength",       "Elongation",
};

/// Area and perimeter come from the marching-squares contour, axes from the
/// pixel-coordinate covariance. Lengths in mm, areas in mm^2.
inline std::array<double, 9> shape2d_features(const BinaryMask& mask) {
    const std::size_t n = count_true(mask);
    if (n < 3) throw DataError("shape features need at least 3 mask pixels");
    const double mm = mask.voxel_size_um() / 1000.0;
    const auto cm = morph::contour_measure(mask);
    const double area = cm.area * mm * mm;
    const double perim = cm.perimeter * mm;

    const auto hull = morph::convex_hull(morph::contour_vertices(mask));
    double dmax2 = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        for (std::size_t j = i + 1; j < hull.size(); ++j) {
            const double dx = hull[i].x - hull[j].x;
            const double dy = hull[i].y - hull[j].y;
            dmax2 = std::max(dmax2, dx * dx + dy * dy);
        }
    }

    double sx = 0, sy = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            sx += x;
            sy += y;
        }
    }
    const double nn = static_cast<double>(n);
    const double mx = sx / nn, my = sy / nn;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const double dx = x - mx, dy = y - my;
            cov(0, 0) += dx * dx;
            cov(0, 1) += dx * dy;
            cov(1, 1) += dy * dy;
        }
    }
    cov(1, 0) = cov(0, 1);
    cov /= nn;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov, Eigen::EigenvaluesOnly);
    const double lmin = std::max(es.eigenvalues()(0), 0.0);
    const double lmax = std::max(es.eigenvalues()(1), 0.0);

    const double circ = 2.0 * std::sqrt(3.14159265358979323846 * area);
    return {
        area,
        perim,
        perim / area,
        circ / perim,
        perim / circ,
        std::sqrt(dmax2) * mm,
        4.0 * std::sqrt(lmax) * mm,
        4.0 * std::sqrt(lmin) * mm,
        lmax > 0 ? std::sqrt(lmin / lmax) : 0.0,
    };
}

}  // namespace osteorad::radiomics
