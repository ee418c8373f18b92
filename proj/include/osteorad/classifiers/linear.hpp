#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "osteorad/classifiers/common.hpp"

namespace osteorad::ml {

// ---------------------------------------------------------------------------
// L2-penalised logistic regression
// ---------------------------------------------------------------------------

struct LogisticModel {
    Vector w;
    double b = 0;

    Vector decision(const Matrix& x) const { return (x * w).array() + b; }
    Vector proba(const Matrix& x) const { return decision(x).unaryExpr([](double z) { return sigmoid(z); }); }
};

/// Penalised log-likelihood sum_i [y z - log(1+e^z)] - |w|^2 / (2C).
inline double logistic_penalised_loglik(const Matrix& x, const Vector& y, const Vector& w, double b, double c) {
    const Vector z = (x * w).array() + b;
    double ll = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) ll += y(i) * z(i) - softplus(z(i));
    return ll - w.squaredNorm() / (2 * c);
}

/// Newton (IRLS) with step halving; the intercept is not penalised.
inline LogisticModel fit_logistic(const Matrix& x, const Labels& labels, double c) {
    check_training(x, labels);
    if (!(c > 0)) throw ConfigError("logistic regression: C must be positive");
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const Vector y = to_vector(labels);
    Matrix xa(n, p + 1);
    xa.leftCols(p) = x;
    xa.col(p).setOnes();
    Vector theta = Vector::Zero(p + 1);
    Vector pen = Vector::Constant(p + 1, 1.0 / c);
    pen(p) = 0;
    const auto objective = [&](const Vector& t) { return logistic_penalised_loglik(x, y, t.head(p), t(p), c); };
    double obj = objective(theta);
    for (int iter = 0; iter < 200; ++iter) {
        const Vector z = xa * theta;
        Vector mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = sigmoid(z(i));
            w(i) = mu(i) * (1 - mu(i));
        }
        const Vector grad = xa.transpose() * (y - mu) - pen.cwiseProduct(theta);
        Matrix h = xa.transpose() * w.asDiagonal() * xa;
        h.diagonal() += pen;
        h.diagonal().array() += 1e-12;
        const Vector step = h.ldlt().solve(grad);
        double t = 1.0;
        Vector next = theta + step;
        double next_obj = objective(next);
        const double slack = 1e-12 * std::abs(obj);
        while (next_obj < obj - slack && t > 1e-10) {
            t *= 0.5;
            next = theta + t * step;
            next_obj = objective(next);
        }
        if (next_obj < obj - slack) break;
        const double change = (next - theta).cwiseAbs().maxCoeff();
        theta = next;
        obj = next_obj;
        if (change < 1e-10) break;
    }
    return {theta.head(p), theta(p)};
}

// ---------------------------------------------------------------------------
// Linear SVM with Platt scaling
// ---------------------------------------------------------------------------

struct PlattScaling {
    double a = 0;
    double b = 0;

    double operator()(double f) const { return sigmoid(-(a * f + b)); }
};

/// Platt's sigmoid P(y=1|f) = 1/(1+exp(A f + B)) with smoothed targets,
/// fitted by Newton's method with backtracking.
inline PlattScaling fit_platt(const Vector& f, const Labels& y) {
    double prior1 = 0, prior0 = 0;
    for (int v : y) (v ? prior1 : prior0) += 1;
    const double hi = (prior1 + 1) / (prior1 + 2);
    const double lo = 1 / (prior0 + 2);
    const Eigen::Index n = f.size();
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = y[static_cast<std::size_t>(i)] ? hi : lo;
    const auto value = [&](double a, double b) {
        double s = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = f(i) * a + b;
            s += z >= 0 ? t(i) * z + std::log1p(std::exp(-z)) : (t(i) - 1) * z + std::log1p(std::exp(z));
        }
        return s;
    };
    double a = 0;
    double b = std::log((prior0 + 1) / (prior1 + 1));
    double fval = value(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = f(i) * a + b;
            const double p = sigmoid(-z);
            const double q = 1 - p;
            const double d2 = p * q;
            h11 += f(i) * f(i) * d2;
            h22 += d2;
            h21 += f(i) * d2;
            const double d1 = t(i) - p;
            g1 += f(i) * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1;
        while (step >= 1e-10) {
            const double nv = value(a + step * da, b + step * db);
            if (nv < fval + 1e-4 * step * gd) {
                a += step * da;
                b += step * db;
                fval = nv;
                break;
            }
            step /= 2;
        }
        if (step < 1e-10) break;
    }
    return {a, b};
}

struct LinearSvmModel {
    Vector w;
    double b = 0;
    PlattScaling platt;

    Vector decision(const Matrix& x) const { return (x * w).array() + b; }
    Vector proba(const Matrix& x) const {
        return decision(x).unaryExpr([this](double f) { return platt(f); });
    }
};

inline constexpr int kSvmEpochs = 2000;

/// Hinge loss (lambda/2)|w|^2 + mean max(0, 1 - s f) with lambda = 1/(C n) and
/// the bias as a constant feature. Full-batch subgradient steps 1/(lambda t)
/// with projection onto the ball of radius 1/sqrt(lambda); the iterate with
/// the lowest objective is kept.
inline LinearSvmModel fit_linear_svm(const Matrix& x, const Labels& labels, double c) {
    check_training(x, labels);
    if (!(c > 0)) throw ConfigError("linear SVM: C must be positive");
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Matrix xa(n, p + 1);
    xa.leftCols(p) = x;
    xa.col(p).setOnes();
    Vector s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    const double lambda = 1.0 / (c * static_cast<double>(n));
    const double radius = 1.0 / std::sqrt(lambda);
    const auto objective = [&](const Vector& w) {
        const Vector m = s.cwiseProduct(xa * w);
        return lambda / 2 * w.squaredNorm() + (1.0 - m.array()).max(0.0).sum() / static_cast<double>(n);
    };
    Vector w = Vector::Zero(p + 1);
    Vector best = w;
    double best_obj = objective(w);
    for (int t = 1; t <= kSvmEpochs; ++t) {
        const Vector m = s.cwiseProduct(xa * w);
        Vector g = lambda * w;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (m(i) < 1) g -= s(i) * xa.row(i).transpose() / static_cast<double>(n);
        }
        w -= g / (lambda * t);
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
        const double obj = objective(w);
        if (obj < best_obj) {
            best_obj = obj;
            best = w;
        }
    }
    LinearSvmModel m{best.head(p), best(p), {}};
    m.platt = fit_platt(m.decision(x), labels);
    return m;
}

}  // namespace osteorad::ml
