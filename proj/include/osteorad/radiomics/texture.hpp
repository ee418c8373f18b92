#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "osteorad/grid.hpp"
#include "osteorad/radiomics/discretize.hpp"

namespace osteorad::radiomics {

using Matrix = Eigen::MatrixXd;

// The four unique in-plane directions at distance 1.
inline constexpr std::array<std::array<int, 2>, 4> kDirections = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

inline void require_roi(const QuantizedROI& q) {
    if (q.count == 0 || q.ng < 1) throw EmptyRegionError("texture features of an empty region");
}

// ---------------------------------------------------------------------------
// GLCM
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 24> kGlcmNames = {
    "Autocorrelation",    "JointAverage",  "ClusterProminence", "ClusterShade", "ClusterTendency",
    "Contrast",           "Correlation",   "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance",
    "JointEnergy",        "JointEntropy",  "Imc1",              "Imc2",         "Idm",
    "Idmn",               "Id",            "Idn",               "InverseVariance", "MaximumProbability",
    "SumAverage",         "SumEntropy",    "SumSquares",        "MCC",
};

/// Symmetric co-occurrence counts for one direction (not normalised).
inline Matrix glcm_matrix(const QuantizedROI& q, int dx, int dy) {
    Matrix p = Matrix::Zero(q.ng, q.ng);
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const int a = q.levels.at(x, y);
            if (a == 0 || !q.in_roi(x + dx, y + dy)) continue;
            const int b = q.levels.at(x + dx, y + dy);
            p(a - 1, b - 1) += 1;
            p(b - 1, a - 1) += 1;
        }
    }
    return p;
}

/// Features of one normalised, symmetric co-occurrence matrix.
inline std::array<double, 24> glcm_features_from_matrix(const Matrix& p, int ng) {
    const int n = static_cast<int>(p.rows());
    Eigen::VectorXd px = p.rowwise().sum();
    Eigen::VectorXd py = p.colwise().sum().transpose();
    double ux = 0, uy = 0;
    for (int i = 0; i < n; ++i) {
        ux += (i + 1) * px(i);
        uy += (i + 1) * py(i);
    }
    double sx2 = 0, sy2 = 0;
    for (int i = 0; i < n; ++i) {
        sx2 += (i + 1 - ux) * (i + 1 - ux) * px(i);
        sy2 += (i + 1 - uy) * (i + 1 - uy) * py(i);
    }
    std::vector<double> psum(static_cast<std::size_t>(2 * n + 1), 0.0), pdiff(static_cast<std::size_t>(n), 0.0);
    double autoc = 0, prom = 0, shade = 0, tend = 0, contrast = 0, energy = 0, hxy = 0;
    double idm = 0, idmn = 0, id = 0, idn = 0, maxp = 0, sumsq = 0, hxy1 = 0, hxy2 = 0;
    const double ng2 = static_cast<double>(ng) * ng;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = p(i, j);
            const double gi = i + 1, gj = j + 1;
            const double s = gi + gj - ux - uy;
            const double d = gi - gj;
            const double ad = std::abs(d);
            psum[static_cast<std::size_t>(i + j + 2)] += v;
            pdiff[static_cast<std::size_t>(ad)] += v;
            autoc += gi * gj * v;
            prom += s * s * s * s * v;
            shade += s * s * s * v;
            tend += s * s * v;
            contrast += d * d * v;
            energy += v * v;
            hxy += entropy2(v);
            idm += v / (1 + d * d);
            idmn += v / (1 + d * d / ng2);
            id += v / (1 + ad);
            idn += v / (1 + ad / ng);
            maxp = std::max(maxp, v);
            sumsq += (gi - ux) * (gi - ux) * v;
            const double pxy = px(i) * py(j);
            if (pxy > 0) {
                hxy1 -= v * std::log2(pxy);
                hxy2 -= pxy * std::log2(pxy);
            }
        }
    }
    double hx = 0, hy = 0;
    for (int i = 0; i < n; ++i) {
        hx += entropy2(px(i));
        hy += entropy2(py(i));
    }
    double davg = 0, dent = 0, inv = 0;
    for (int k = 0; k < n; ++k) {
        const double v = pdiff[static_cast<std::size_t>(k)];
        davg += k * v;
        dent += entropy2(v);
        if (k > 0) inv += v / (static_cast<double>(k) * k);
    }
    double dvar = 0;
    for (int k = 0; k < n; ++k) dvar += (k - davg) * (k - davg) * pdiff[static_cast<std::size_t>(k)];
    double savg = 0, sent = 0;
    for (int k = 2; k <= 2 * n; ++k) {
        savg += k * psum[static_cast<std::size_t>(k)];
        sent += entropy2(psum[static_cast<std::size_t>(k)]);
    }
    const double sd = std::sqrt(sx2 * sy2);
    const double corr = sd > 0 ? (autoc - ux * uy) / sd : 1.0;
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax > 0 ? (hxy - hxy1) / hmax : 0.0;
    const double imc2 = hxy2 > hxy ? std::sqrt(1 - std::exp(-2 * (hxy2 - hxy))) : 0.0;

    // MCC: second largest eigenvalue of Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)).
    // For symmetric P, Q is similar to A^2 with A = D^-1/2 P D^-1/2, D = diag(px).
    std::vector<int> nz;
    for (int i = 0; i < n; ++i) {
        if (px(i) > 0) nz.push_back(i);
    }
    double mcc = 1.0;
    if (nz.size() >= 2) {
        const auto m = static_cast<Eigen::Index>(nz.size());
        Matrix a(m, m);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < m; ++c) {
                a(r, c) = p(nz[static_cast<std::size_t>(r)], nz[static_cast<std::size_t>(c)]) /
                          std::sqrt(px(nz[static_cast<std::size_t>(r)]) * px(nz[static_cast<std::size_t>(c)]));
            }
        }
        const Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
        std::vector<double> sq;
        for (Eigen::Index k = 0; k < m; ++k) sq.push_back(es.eigenvalues()(k) * es.eigenvalues()(k));
        std::sort(sq.begin(), sq.end(), std::greater<>());
        mcc = std::sqrt(std::max(sq[1], 0.0));
    }

    return {autoc, ux,  prom, shade, tend, contrast, corr, davg,  dent,  dvar, energy, hxy,
            imc1,  imc2, idm, idmn,  id,   idn,      inv,  maxp,  savg,  sent, sumsq,  mcc};
}

/// Direction-averaged GLCM features; directions without pairs are skipped.
/// A region with no pairs at all yields zeros.
inline std::array<double, 24> glcm_features(const QuantizedROI& q) {
    require_roi(q);
    std::array<double, 24> acc{};
    int used = 0;
    for (auto [dx, dy] : kDirections) {
        Matrix p = glcm_matrix(q, dx, dy);
        const double total = p.sum();
        if (total <= 0) continue;
        p /= total;
        const auto f = glcm_features_from_matrix(p, q.ng);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += f[k];
        ++used;
    }
    if (used > 0) {
        for (auto& v : acc) v /= used;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// GLRLM / GLSZM share one set of emphasis features
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 16> kGlrlmNames = {
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
};

inline constexpr std::array<std::string_view, 16> kGlszmNames = {
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
};

/// M(i, j): count of runs/zones with gray level i+1 and length/size j+1;
/// `np` is the number of ROI pixels.
inline std::array<double, 16> size_matrix_features(const Matrix& m, double np) {
    const double nz = m.sum();
    std::array<double, 16> f{};
    if (nz <= 0) return f;
    const Eigen::VectorXd row = m.rowwise().sum();
    const Eigen::VectorXd col = m.colwise().sum().transpose();
    double ui = 0, uj = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double p = m(i, j) / nz;
            ui += (i + 1) * p;
            uj += (j + 1) * p;
        }
    }
    double sre = 0, lre = 0, gv = 0, rv = 0, ent = 0, lg = 0, hg = 0, srlg = 0, srhg = 0, lrlg = 0, lrhg = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double gi = static_cast<double>(i + 1);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (v == 0) continue;
            const double p = v / nz;
            const double gj = static_cast<double>(j + 1);
            sre += p / (gj * gj);
            lre += p * gj * gj;
            gv += p * (gi - ui) * (gi - ui);
            rv += p * (gj - uj) * (gj - uj);
            ent += entropy2(p);
            lg += p / (gi * gi);
            hg += p * gi * gi;
            srlg += p / (gi * gi * gj * gj);
            srhg += p * gi * gi / (gj * gj);
            lrlg += p * gj * gj / (gi * gi);
            lrhg += p * gi * gi * gj * gj;
        }
    }
    const double gln = row.squaredNorm() / nz;
    const double rln = col.squaredNorm() / nz;
    return {sre, lre, gln, gln / nz, rln, rln / nz, nz / np, gv, rv, ent, lg, hg, srlg, srhg, lrlg, lrhg};
}

/// Run-length counts along (dx, dy); columns cover lengths 1..max(w, h).
inline Matrix glrlm_matrix(const QuantizedROI& q, int dx, int dy) {
    Matrix m = Matrix::Zero(q.ng, std::max(q.width(), q.height()));
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const int l = q.levels.at(x, y);
            if (l == 0) continue;
            if (q.in_roi(x - dx, y - dy) && q.levels.at(x - dx, y - dy) == l) continue;  // not a run start
            int len = 1;
            while (q.in_roi(x + len * dx, y + len * dy) && q.levels.at(x + len * dx, y + len * dy) == l) ++len;
            m(l - 1, len - 1) += 1;
        }
    }
    return m;
}

inline std::array<double, 16> glrlm_features_direction(const QuantizedROI& q, int dx, int dy) {
    require_roi(q);
    return size_matrix_features(glrlm_matrix(q, dx, dy), static_cast<double>(q.count));
}

inline std::array<double, 16> glrlm_features(const QuantizedROI& q) {
    require_roi(q);
    std::array<double, 16> acc{};
    for (auto [dx, dy] : kDirections) {
        const auto f = glrlm_features_direction(q, dx, dy);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += f[k] / kDirections.size();
    }
    return acc;
}

/// Zone counts: 8-connected equal-level components, columns cover sizes 1..Np.
inline Matrix glszm_matrix(const QuantizedROI& q) {
    Matrix m = Matrix::Zero(q.ng, static_cast<Eigen::Index>(q.count));
    Grid<std::uint8_t> seen(q.width(), q.height(), 1.0, std::uint8_t{0});
    std::vector<std::size_t> stack;
    const int w = q.width();
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = q.levels.at(x, y);
            if (l == 0 || seen.at(x, y)) continue;
            std::size_t size = 0;
            seen.at(x, y) = 1;
            stack.assign(1, q.levels.index(x, y));
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                ++size;
                const int px = static_cast<int>(p % static_cast<std::size_t>(w));
                const int py = static_cast<int>(p / static_cast<std::size_t>(w));
                for (auto [ox, oy] : kNeighbors8) {
                    const int nx = px + ox, ny = py + oy;
                    if (!q.in_roi(nx, ny) || seen.at(nx, ny) || q.levels.at(nx, ny) != l) continue;
                    seen.at(nx, ny) = 1;
                    stack.push_back(q.levels.index(nx, ny));
                }
            }
            m(l - 1, static_cast<Eigen::Index>(size) - 1) += 1;
        }
    }
    return m;
}

inline std::array<double, 16> glszm_features(const QuantizedROI& q) {
    require_roi(q);
    return size_matrix_features(glszm_matrix(q), static_cast<double>(q.count));
}

// ---------------------------------------------------------------------------
// NGTDM
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kNgtdmNames = {"Coarseness", "Contrast", "Busyness", "Complexity",
                                                                "Strength"};
inline constexpr double kCoarsenessCap = 1e6;

struct Ngtdm {
    std::vector<double> n;  // pixel count per level (index 0 = level 1)
    std::vector<double> s;  // sum of |level - neighbourhood mean|
};

/// Pixels without any ROI neighbour are left out.
inline Ngtdm ngtdm_matrix(const QuantizedROI& q) {
    Ngtdm t{std::vector<double>(static_cast<std::size_t>(q.ng), 0.0), std::vector<double>(static_cast<std::size_t>(q.ng), 0.0)};
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const int l = q.levels.at(x, y);
            if (l == 0) continue;
            double sum = 0;
            int cnt = 0;
            for (auto [dx, dy] : kNeighbors8) {
                if (!q.in_roi(x + dx, y + dy)) continue;
                sum += q.levels.at(x + dx, y + dy);
                ++cnt;
            }
            if (cnt == 0) continue;
            t.n[static_cast<std::size_t>(l - 1)] += 1;
            t.s[static_cast<std::size_t>(l - 1)] += std::abs(l - sum / cnt);
        }
    }
    return t;
}

inline std::array<double, 5> ngtdm_features(const QuantizedROI& q) {
    require_roi(q);
    const Ngtdm t = ngtdm_matrix(q);
    double nvp = 0;
    for (double v : t.n) nvp += v;
    if (nvp == 0) return {kCoarsenessCap, 0, 0, 0, 0};
    std::vector<double> p(t.n.size());
    int ngp = 0;
    double ps = 0, ssum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = t.n[i] / nvp;
        ngp += p[i] > 0;
        ps += p[i] * t.s[i];
        ssum += t.s[i];
    }
    const double coarse = ps > 0 ? std::min(1.0 / ps, kCoarsenessCap) : kCoarsenessCap;
    double c1 = 0, bden = 0, complexity = 0, strength = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0) continue;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (p[j] == 0) continue;
            const double gi = static_cast<double>(i + 1), gj = static_cast<double>(j + 1);
            const double d = gi - gj;
            c1 += p[i] * p[j] * d * d;
            bden += std::abs(gi * p[i] - gj * p[j]);
            complexity += std::abs(d) * (p[i] * t.s[i] + p[j] * t.s[j]) / (p[i] + p[j]);
            strength += (p[i] + p[j]) * d * d;
        }
    }
    const double contrast = ngp > 1 ? c1 / (ngp * (ngp - 1.0)) * ssum / nvp : 0.0;
    return {
        coarse,
        contrast,
        bden > 0 ? ps / bden : 0.0,
        complexity / nvp,
        ssum > 0 ? strength / ssum : 0.0,
    };
}

// ---------------------------------------------------------------------------
// GLDM (alpha = 0, distance 1, 8-neighbourhood)
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 14> kGldmNames = {
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
};

/// Dependence of a pixel = 1 + number of equal-level ROI neighbours (1..9).
inline Matrix gldm_matrix(const QuantizedROI& q) {
    Matrix m = Matrix::Zero(q.ng, 9);
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const int l = q.levels.at(x, y);
            if (l == 0) continue;
            int dep = 1;
            for (auto [dx, dy] : kNeighbors8) dep += q.in_roi(x + dx, y + dy) && q.levels.at(x + dx, y + dy) == l;
            m(l - 1, dep - 1) += 1;
        }
    }
    return m;
}

inline std::array<double, 14> gldm_features(const QuantizedROI& q) {
    require_roi(q);
    const auto f = size_matrix_features(gldm_matrix(q), static_cast<double>(q.count));
    // Same emphasis algebra as run/zone matrices, minus GLNN and the percentage term.
    return {f[0], f[1], f[2], f[4], f[5], f[7], f[8], f[9], f[10], f[11], f[12], f[13], f[14], f[15]};
}

}  // namespace osteorad::radiomics
