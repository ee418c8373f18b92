#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "osteorad/classifiers/common.hpp"

namespace osteorad::ml {

// ---------------------------------------------------------------------------
// k nearest neighbours
// ---------------------------------------------------------------------------

struct KnnModel {
    Matrix x;
    Labels y;
    int k = 5;

    /// Fraction of positive labels among the k nearest training rows (k capped
    /// at the training size); equal distances go to the lower row index.
    Vector proba(const Matrix& q) const {
        const auto n = static_cast<std::size_t>(x.rows());
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
        Vector out(q.rows());
        std::vector<std::pair<double, std::size_t>> d(n);
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            for (std::size_t i = 0; i < n; ++i) d[i] = {(x.row(static_cast<Eigen::Index>(i)) - q.row(r)).squaredNorm(), i};
            std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
            double pos = 0;
            for (std::size_t j = 0; j < kk; ++j) pos += y[d[j].second];
            out(r) = pos / static_cast<double>(kk);
        }
        return out;
    }
};

inline KnnModel fit_knn(const Matrix& x, const Labels& y, double k) {
    check_training(x, y);
    if (!(k >= 1) || k != std::floor(k)) throw ConfigError("kNN: k must be a positive integer");
    return {x, y, static_cast<int>(k)};
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

inline constexpr double kNbVarianceFloor = 1e-9;

struct GaussianNbModel {
    Matrix mean;  // 2 x p, row = class
    Matrix var;   // 2 x p
    double log_prior[2] = {0, 0};

    double log_likelihood(int cls, const Eigen::RowVectorXd& row) const {
        double s = log_prior[cls];
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            const double v = var(cls, j);
            const double d = row(j) - mean(cls, j);
            s += -0.5 * std::log(2 * 3.14159265358979323846 * v) - d * d / (2 * v);
        }
        return s;
    }

    Vector proba(const Matrix& q) const {
        Vector out(q.rows());
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            const double l0 = log_likelihood(0, q.row(r));
            const double l1 = log_likelihood(1, q.row(r));
            out(r) = sigmoid(l1 - l0);
        }
        return out;
    }
};

/// Per-class maximum-likelihood mean and variance, variance floored.
inline GaussianNbModel fit_gaussian_nb(const Matrix& x, const Labels& y) {
    check_training(x, y);
    const Eigen::Index p = x.cols();
    GaussianNbModel m{Matrix::Zero(2, p), Matrix::Zero(2, p), {0, 0}};
    double count[2] = {0, 0};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int c = y[static_cast<std::size_t>(i)];
        m.mean.row(c) += x.row(i);
        count[c] += 1;
    }
    for (int c = 0; c < 2; ++c) m.mean.row(c) /= count[c];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int c = y[static_cast<std::size_t>(i)];
        m.var.row(c) += (x.row(i) - m.mean.row(c)).array().square().matrix();
    }
    for (int c = 0; c < 2; ++c) {
        m.var.row(c) /= count[c];
        m.var.row(c) = m.var.row(c).cwiseMax(kNbVarianceFloor);
        m.log_prior[c] = std::log(count[c] / static_cast<double>(x.rows()));
    }
    return m;
}

}  // namespace osteorad::ml
