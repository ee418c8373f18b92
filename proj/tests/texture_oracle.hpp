#pragma once

// Brute-force texture references: every matrix is built by enumerating pixel
// pairs or by union-find over the ROI pixel list, never by raster walking.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "osteorad/radiomics/discretize.hpp"

namespace osteorad::oracle {

struct Px {
    int x, y, level;
};

using Mat = std::vector<std::vector<double>>;

inline std::vector<Px> roi_pixels(const radiomics::QuantizedROI& q) {
    std::vector<Px> out;
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            if (q.levels.at(x, y) > 0) out.push_back({x, y, q.levels.at(x, y)});
        }
    }
    return out;
}

inline double h2(double p) { return p > 0 ? -p * std::log(p) / std::log(2.0) : 0.0; }

inline Mat zeros(int r, int c) { return Mat(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(c), 0.0)); }

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

inline std::vector<std::size_t> component_sizes(UnionFind& uf, std::size_t n, std::vector<std::size_t>& root_of) {
    std::vector<std::size_t> size(n, 0);
    root_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        root_of[i] = uf.find(i);
        ++size[root_of[i]];
    }
    return size;
}

// ---------------------------------------------------------------------------
// GLCM
// ---------------------------------------------------------------------------

inline Mat glcm(const std::vector<Px>& px, int ng, int dx, int dy) {
    Mat m = zeros(ng, ng);
    for (const auto& a : px) {
        for (const auto& b : px) {
            const int ox = b.x - a.x, oy = b.y - a.y;
            if ((ox == dx && oy == dy) || (ox == -dx && oy == -dy)) m[a.level - 1][b.level - 1] += 1;
        }
    }
    return m;
}

inline std::vector<double> glcm_feats(Mat p, int ng) {
    const int n = static_cast<int>(p.size());
    double total = 0;
    for (auto& r : p) total += std::accumulate(r.begin(), r.end(), 0.0);
    for (auto& r : p) {
        for (auto& v : r) v /= total;
    }
    std::vector<double> px(n, 0), py(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            px[i] += p[i][j];
            py[j] += p[i][j];
        }
    }
    auto sum_ij = [&](auto fn) {
        double s = 0;
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n; ++j) s += fn(i, j, p[i - 1][j - 1]);
        }
        return s;
    };
    const double ux = sum_ij([](int i, int, double v) { return i * v; });
    const double uy = sum_ij([](int, int j, double v) { return j * v; });
    const double vx = sum_ij([&](int i, int, double v) { return (i - ux) * (i - ux) * v; });
    const double vy = sum_ij([&](int, int j, double v) { return (j - uy) * (j - uy) * v; });
    const double autoc = sum_ij([](int i, int j, double v) { return double(i) * j * v; });
    auto cl = [&](int k) { return sum_ij([&](int i, int j, double v) { return std::pow(i + j - ux - uy, k) * v; }); };

    std::vector<double> pd(n, 0), ps(2 * n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            pd[std::abs(i - j)] += p[i - 1][j - 1];
            ps[i + j] += p[i - 1][j - 1];
        }
    }
    double da = 0, de = 0, iv = 0;
    for (int k = 0; k < n; ++k) {
        da += k * pd[k];
        de += h2(pd[k]);
        if (k) iv += pd[k] / (k * k);
    }
    double dv = 0;
    for (int k = 0; k < n; ++k) dv += (k - da) * (k - da) * pd[k];
    double sa = 0, se = 0;
    for (int k = 2; k <= 2 * n; ++k) {
        sa += k * ps[k];
        se += h2(ps[k]);
    }
    double hx = 0, hy = 0, hxy = 0, hxy1 = 0, hxy2 = 0, maxp = 0, energy = 0;
    for (int i = 0; i < n; ++i) {
        hx += h2(px[i]);
        hy += h2(py[i]);
        for (int j = 0; j < n; ++j) {
            hxy += h2(p[i][j]);
            energy += p[i][j] * p[i][j];
            maxp = std::max(maxp, p[i][j]);
            if (px[i] * py[j] > 0) {
                hxy1 += -p[i][j] * std::log2(px[i] * py[j]);
                hxy2 += -px[i] * py[j] * std::log2(px[i] * py[j]);
            }
        }
    }
    const double corr = vx * vy > 0 ? (autoc - ux * uy) / std::sqrt(vx * vy) : 1.0;
    const double imc1 = std::max(hx, hy) > 0 ? (hxy - hxy1) / std::max(hx, hy) : 0.0;
    const double imc2 = hxy2 > hxy ? std::sqrt(1 - std::exp(-2 * (hxy2 - hxy))) : 0.0;

    // MCC from the general (non-symmetric) Q matrix.
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
        if (px[i] > 0) keep.push_back(i);
    }
    double mcc = 1.0;
    if (keep.size() >= 2) {
        const int m = static_cast<int>(keep.size());
        Eigen::MatrixXd q(m, m);
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                double s = 0;
                for (int k : keep) s += p[keep[a]][k] * p[keep[b]][k] / (px[keep[a]] * py[k]);
                q(a, b) = s;
            }
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(q, false);
        std::vector<double> ev;
        for (int k = 0; k < m; ++k) ev.push_back(es.eigenvalues()(k).real());
        std::sort(ev.rbegin(), ev.rend());
        mcc = std::sqrt(std::max(ev[1], 0.0));
    }
    const double ng2 = double(ng) * ng;
    return {
        autoc,
        ux,
        cl(4),
        cl(3),
        cl(2),
        sum_ij([](int i, int j, double v) { return double(i - j) * (i - j) * v; }),
        corr,
        da,
        de,
        dv,
        energy,
        hxy,
        imc1,
        imc2,
        sum_ij([](int i, int j, double v) { return v / (1.0 + (i - j) * (i - j)); }),
        sum_ij([&](int i, int j, double v) { return v / (1.0 + (i - j) * (i - j) / ng2); }),
        sum_ij([](int i, int j, double v) { return v / (1.0 + std::abs(i - j)); }),
        sum_ij([&](int i, int j, double v) { return v / (1.0 + std::abs(i - j) / double(ng)); }),
        iv,
        maxp,
        sa,
        se,
        vx,
        mcc,
    };
}

inline std::vector<double> glcm_features(const radiomics::QuantizedROI& q) {
    const auto px = roi_pixels(q);
    std::vector<double> acc(24, 0.0);
    int used = 0;
    for (auto [dx, dy] : {std::pair{1, 0}, std::pair{1, 1}, std::pair{0, 1}, std::pair{-1, 1}}) {
        const Mat m = glcm(px, q.ng, dx, dy);
        double tot = 0;
        for (const auto& r : m) tot += std::accumulate(r.begin(), r.end(), 0.0);
        if (tot == 0) continue;
        const auto f = glcm_feats(m, q.ng);
        for (int k = 0; k < 24; ++k) acc[k] += f[k];
        ++used;
    }
    for (auto& v : acc) v = used ? v / used : 0.0;
    return acc;
}

// ---------------------------------------------------------------------------
// Run / zone / dependence matrices
// ---------------------------------------------------------------------------

/// Emphasis features written out from the textbook definitions.
inline std::vector<double> size_feats(const Mat& m, double np) {
    double nz = 0;
    for (const auto& r : m) nz += std::accumulate(r.begin(), r.end(), 0.0);
    std::vector<double> out(16, 0.0);
    if (nz == 0) return out;
    const int ni = static_cast<int>(m.size());
    const int nj = static_cast<int>(m[0].size());
    double ui = 0, uj = 0;
    for (int i = 1; i <= ni; ++i) {
        for (int j = 1; j <= nj; ++j) {
            ui += i * m[i - 1][j - 1] / nz;
            uj += j * m[i - 1][j - 1] / nz;
        }
    }
    double gln = 0, rln = 0;
    for (int i = 0; i < ni; ++i) {
        const double s = std::accumulate(m[i].begin(), m[i].end(), 0.0);
        gln += s * s;
    }
    for (int j = 0; j < nj; ++j) {
        double s = 0;
        for (int i = 0; i < ni; ++i) s += m[i][j];
        rln += s * s;
    }
    for (int i = 1; i <= ni; ++i) {
        for (int j = 1; j <= nj; ++j) {
            const double p = m[i - 1][j - 1] / nz;
            const double ii = double(i) * i, jj = double(j) * j;
            out[0] += p / jj;
            out[1] += p * jj;
            out[7] += p * (i - ui) * (i - ui);
            out[8] += p * (j - uj) * (j - uj);
            out[9] += h2(p);
            out[10] += p / ii;
            out[11] += p * ii;
            out[12] += p / (ii * jj);
            out[13] += p * ii / jj;
            out[14] += p * jj / ii;
            out[15] += p * ii * jj;
        }
    }
    out[2] = gln / nz;
    out[3] = gln / (nz * nz);
    out[4] = rln / nz;
    out[5] = rln / (nz * nz);
    out[6] = nz / np;
    return out;
}

inline Mat glrlm(const std::vector<Px>& px, int ng, int dx, int dy, int max_len) {
    UnionFind uf(px.size());
    for (std::size_t a = 0; a < px.size(); ++a) {
        for (std::size_t b = 0; b < px.size(); ++b) {
            if (px[b].x - px[a].x == dx && px[b].y - px[a].y == dy && px[a].level == px[b].level) uf.unite(a, b);
        }
    }
    std::vector<std::size_t> root;
    const auto size = component_sizes(uf, px.size(), root);
    Mat m = zeros(ng, max_len);
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (root[i] == i) m[px[i].level - 1][size[i] - 1] += 1;
    }
    return m;
}

inline std::vector<double> glrlm_features(const radiomics::QuantizedROI& q) {
    const auto px = roi_pixels(q);
    std::vector<double> acc(16, 0.0);
    for (auto [dx, dy] : {std::pair{1, 0}, std::pair{1, 1}, std::pair{0, 1}, std::pair{-1, 1}}) {
        const auto f = size_feats(glrlm(px, q.ng, dx, dy, std::max(q.width(), q.height())), double(px.size()));
        for (int k = 0; k < 16; ++k) acc[k] += f[k] / 4;
    }
    return acc;
}

inline bool touching(const Px& a, const Px& b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) == 1;
}

inline std::vector<double> glszm_features(const radiomics::QuantizedROI& q) {
    const auto px = roi_pixels(q);
    UnionFind uf(px.size());
    for (std::size_t a = 0; a < px.size(); ++a) {
        for (std::size_t b = a + 1; b < px.size(); ++b) {
            if (touching(px[a], px[b]) && px[a].level == px[b].level) uf.unite(a, b);
        }
    }
    std::vector<std::size_t> root;
    const auto size = component_sizes(uf, px.size(), root);
    Mat m = zeros(q.ng, static_cast<int>(px.size()));
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (root[i] == i) m[px[i].level - 1][size[i] - 1] += 1;
    }
    return size_feats(m, double(px.size()));
}

inline std::vector<double> gldm_features(const radiomics::QuantizedROI& q) {
    const auto px = roi_pixels(q);
    Mat m = zeros(q.ng, 9);
    for (const auto& a : px) {
        int dep = 1;
        for (const auto& b : px) dep += touching(a, b) && a.level == b.level;
        m[a.level - 1][dep - 1] += 1;
    }
    const auto f = size_feats(m, double(px.size()));
    return {f[0], f[1], f[2], f[4], f[5], f[7], f[8], f[9], f[10], f[11], f[12], f[13], f[14], f[15]};
}

inline std::vector<double> ngtdm_features(const radiomics::QuantizedROI& q) {
    const auto px = roi_pixels(q);
    std::vector<double> n(q.ng, 0), s(q.ng, 0);
    for (const auto& a : px) {
        double sum = 0;
        int cnt = 0;
        for (const auto& b : px) {
            if (!touching(a, b)) continue;
            sum += b.level;
            ++cnt;
        }
        if (!cnt) continue;
        n[a.level - 1] += 1;
        s[a.level - 1] += std::abs(a.level - sum / cnt);
    }
    const double nvp = std::accumulate(n.begin(), n.end(), 0.0);
    if (nvp == 0) return {1e6, 0, 0, 0, 0};
    std::vector<int> lv;
    std::vector<double> p(q.ng);
    for (int i = 0; i < q.ng; ++i) {
        p[i] = n[i] / nvp;
        if (p[i] > 0) lv.push_back(i);
    }
    double ps = 0, ssum = 0;
    for (int i : lv) {
        ps += p[i] * s[i];
        ssum += s[i];
    }
    double con = 0, bden = 0, comp = 0, str = 0;
    for (int i : lv) {
        for (int j : lv) {
            const double d = i - j;
            con += p[i] * p[j] * d * d;
            bden += std::abs((i + 1) * p[i] - (j + 1) * p[j]);
            comp += std::abs(d) * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]);
            str += (p[i] + p[j]) * d * d;
        }
    }
    const double g = static_cast<double>(lv.size());
    return {
        ps > 0 ? std::min(1 / ps, 1e6) : 1e6,
        g > 1 ? con / (g * (g - 1)) * ssum / nvp : 0.0,
        bden > 0 ? ps / bden : 0.0,
        comp / nvp,
        ssum > 0 ? str / ssum : 0.0,
    };
}

/// Random ROI up to max_side x max_side with levels 1..ng (some may be absent).
inline radiomics::QuantizedROI random_roi(std::mt19937_64& rng, int max_side = 12) {
    std::uniform_int_distribution<int> side(1, max_side);
    const int w = side(rng), h = side(rng);
    const int ng = std::uniform_int_distribution<int>(1, 8)(rng);
    const double fill = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
    radiomics::QuantizedROI q{Grid<int>(w, h, 100.0, 0), ng, {}, 0};
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> lev(1, ng);
    for (auto& v : q.levels.pixels()) {
        if (u(rng) < fill) v = lev(rng);
    }
    if (std::all_of(q.levels.pixels().begin(), q.levels.pixels().end(), [](int v) { return v == 0; })) q.levels[0] = 1;
    for (int v : q.levels.pixels()) q.count += v > 0;
    return q;
}

}  // namespace osteorad::oracle
