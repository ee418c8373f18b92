#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "osteorad/error.hpp"

namespace osteorad::stats {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Distribution tails
// ---------------------------------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Two-sided p-value of a standard normal statistic.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

namespace detail {

// Series for the lower regularised gamma P(a, x); converges for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz) for the upper Q(a, x); x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Upper regularised incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double gamma_q(double a, double x) {
    if (!(a > 0) || !(x >= 0)) throw NumericError("gamma_q: need a > 0 and x >= 0");
    if (x == 0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi2_sf(double x, double dof) {
    if (x <= 0) return 1.0;
    return gamma_q(dof / 2, x / 2);
}

// ---------------------------------------------------------------------------
// Variance inflation
// ---------------------------------------------------------------------------

/// VIF_j = 1/(1 - R_j^2), regressing column j on the others with an intercept.
/// A column that the others reproduce exactly (or a constant column) is +inf.
inline std::vector<double> vif(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2 || p == 0) throw DataError("VIF needs at least 2 rows and 1 column");
    std::vector<double> out(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::VectorXd yj = x.col(j);
        const double sst = (yj.array() - yj.mean()).square().sum();
        if (!(sst > 0)) {
            out[static_cast<std::size_t>(j)] = kInf;
            continue;
        }
        Eigen::MatrixXd a(n, p);
        a.col(0).setOnes();
        for (Eigen::Index k = 0, c = 1; k < p; ++k) {
            if (k != j) a.col(c++) = x.col(k);
        }
        const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(yj);
        const double ssr = (yj - a * beta).squaredNorm();
        const double one_minus_r2 = ssr / sst;
        out[static_cast<std::size_t>(j)] = one_minus_r2 <= 1e-12 ? kInf : std::max(1.0, 1.0 / one_minus_r2);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hosmer-Lemeshow
// ---------------------------------------------------------------------------

struct HosmerLemeshow {
    double statistic = 0;
    int dof = 0;
    double p = 1;
    std::vector<std::size_t> group_sizes;
    std::vector<double> observed;
    std::vector<double> expected;
};

/// Equal-count groups of sorted predicted risk with tied risks kept in one
/// group. A group whose expected count is 0 or its size is merged into its
/// neighbour. Statistic sum (O-E)^2 / (E (1 - E/n_g)) on groups - 2 dof.
inline HosmerLemeshow hosmer_lemeshow(const std::vector<double>& probs, const std::vector<int>& labels,
                                      int groups = 10) {
    const std::size_t n = probs.size();
    if (labels.size() != n) throw DataError("probabilities and labels differ in length");
    if (groups < 3) throw ConfigError("Hosmer-Lemeshow needs at least 3 groups");
    if (n < static_cast<std::size_t>(groups)) throw DataError("fewer observations than Hosmer-Lemeshow groups");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(probs[i] > 0 && probs[i] < 1)) throw DataError("Hosmer-Lemeshow probabilities must lie in (0, 1)");
        if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return probs[a] < probs[b] || (probs[a] == probs[b] && labels[a] < labels[b]);
    });
    std::vector<std::size_t> cuts{0};
    for (int k = 1; k < groups; ++k) {
        std::size_t b = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n) / groups));
        b = std::max(b, cuts.back());
        while (b > 0 && b < n && probs[idx[b]] == probs[idx[b - 1]]) ++b;
        if (b > cuts.back() && b < n) cuts.push_back(b);
    }
    cuts.push_back(n);
    HosmerLemeshow hl;
    for (std::size_t g = 0; g + 1 < cuts.size(); ++g) {
        double o = 0, e = 0;
        for (std::size_t k = cuts[g]; k < cuts[g + 1]; ++k) {
            o += labels[idx[k]];
            e += probs[idx[k]];
        }
        hl.group_sizes.push_back(cuts[g + 1] - cuts[g]);
        hl.observed.push_back(o);
        hl.expected.push_back(e);
    }
    const auto degenerate = [&](std::size_t g) {
        const double ng = static_cast<double>(hl.group_sizes[g]);
        return hl.expected[g] * (1 - hl.expected[g] / ng) <= 0;
    };
    for (std::size_t g = 0; g < hl.group_sizes.size() && hl.group_sizes.size() > 1;) {
        if (!degenerate(g)) {
            ++g;
            continue;
        }
        const std::size_t into = g + 1 < hl.group_sizes.size() ? g + 1 : g - 1;
        hl.group_sizes[into] += hl.group_sizes[g];
        hl.observed[into] += hl.observed[g];
        hl.expected[into] += hl.expected[g];
        hl.group_sizes.erase(hl.group_sizes.begin() + static_cast<std::ptrdiff_t>(g));
        hl.observed.erase(hl.observed.begin() + static_cast<std::ptrdiff_t>(g));
        hl.expected.erase(hl.expected.begin() + static_cast<std::ptrdiff_t>(g));
        if (into < g) --g;
    }
    hl.dof = static_cast<int>(hl.group_sizes.size()) - 2;
    if (hl.dof < 1) throw DataError("too few distinct risk groups for Hosmer-Lemeshow");
    for (std::size_t g = 0; g < hl.group_sizes.size(); ++g) {
        const double ng = static_cast<double>(hl.group_sizes[g]);
        const double d = hl.observed[g] - hl.expected[g];
        hl.statistic += d * d / (hl.expected[g] * (1 - hl.expected[g] / ng));
    }
    hl.p = chi2_sf(hl.statistic, hl.dof);
    return hl;
}

// ---------------------------------------------------------------------------
// Multivariable logistic regression inference
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxInferenceCovariates = 5;
inline constexpr double kWaldZ = 1.959963984540054;

struct CoefficientRow {
    std::string name;
    double beta = 0;
    double se = 0;
    double odds_ratio = 0;
    double ci_low = 0;
    double ci_high = 0;
    double z = 0;
    double p = 1;
    double vif = 1;  // not defined for the intercept; left at 1
    bool significant = false;
};

struct LogisticInference {
    CoefficientRow intercept;
    std::vector<CoefficientRow> rows;
    double log_likelihood = 0;
    std::vector<double> log_likelihood_trace;
    int iterations = 0;
    std::size_t n = 0;
    HosmerLemeshow hl;
    bool hl_available = false;
};

inline double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
    double ll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double e = eta(i);
        ll += y(i) * e - (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    return ll;
}

/// Maximum likelihood by IRLS with step halving, Wald standard errors from the
/// inverse observed information. Perfect separation (diverging coefficients)
/// is reported as an error rather than returning a meaningless fit.
inline LogisticInference logistic_inference(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                            const std::vector<std::string>& names, int hl_groups = 10) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    if (static_cast<Eigen::Index>(names.size()) != k) throw DataError("covariate names do not match columns");
    if (k == 0 || static_cast<std::size_t>(k) > kMaxInferenceCovariates) {
        throw DataError("logistic inference takes 1 to " + std::to_string(kMaxInferenceCovariates) + " covariates");
    }
    if (static_cast<Eigen::Index>(labels.size()) != n) throw DataError("label count differs from rows");
    if (!x.allFinite()) throw NumericError("non-finite covariate");
    Eigen::VectorXd y(n);
    std::size_t pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int v = labels[static_cast<std::size_t>(i)];
        if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
        y(i) = v;
        pos += static_cast<std::size_t>(v);
    }
    if (pos == 0 || pos == static_cast<std::size_t>(n)) throw DataError("outcome has a single class");
    if (n <= k + 1) throw DataError("too few observations for the number of covariates");

    Eigen::MatrixXd a(n, k + 1);
    a.col(0).setOnes();
    a.rightCols(k) = x;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k + 1);
    const double ybar = static_cast<double>(pos) / static_cast<double>(n);
    theta(0) = std::log(ybar / (1 - ybar));
    LogisticInference out;
    out.n = static_cast<std::size_t>(n);
    double ll = bernoulli_loglik(a * theta, y);
    out.log_likelihood_trace.push_back(ll);
    bool converged = false;
    Eigen::MatrixXd info;
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::VectorXd eta = a * theta;
        Eigen::VectorXd mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = 1 / (1 + std::exp(-eta(i)));
            w(i) = mu(i) * (1 - mu(i));
        }
        info = a.transpose() * w.asDiagonal() * a;
        const Eigen::VectorXd step = info.ldlt().solve(a.transpose() * (y - mu));
        double t = 1;
        Eigen::VectorXd next = theta + step;
        double next_ll = bernoulli_loglik(a * next, y);
        // Near the optimum the likelihood is flat to rounding, so only a clear
        // decrease triggers halving.
        const double slack = 1e-12 * std::abs(ll);
        while (next_ll < ll - slack && t > 1e-10) {
            t /= 2;
            next = theta + t * step;
            next_ll = bernoulli_loglik(a * next, y);
        }
        if (next_ll < ll - slack) break;
        const double change = (next - theta).cwiseAbs().maxCoeff();
        theta = next;
        ll = next_ll;
        out.log_likelihood_trace.push_back(ll);
        out.iterations = iter + 1;
        if (change < 1e-10) {
            converged = true;
            break;
        }
    }
    const Eigen::VectorXd eta = a * theta;
    if (!converged || eta.cwiseAbs().maxCoeff() > 30) {
        throw NumericError("logistic inference: coefficients diverge (perfect or quasi-complete separation)");
    }
    // Information at the final estimate.
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = 1 / (1 + std::exp(-eta(i)));
        w(i) = m * (1 - m);
    }
    info = a.transpose() * w.asDiagonal() * a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) throw NumericError("logistic inference: singular information matrix");
    const Eigen::MatrixXd cov = lu.inverse();
    out.log_likelihood = ll;
    const auto vifs = vif(x);
    const auto make_row = [&](Eigen::Index j, std::string name) {
        CoefficientRow r;
        r.name = std::move(name);
        r.beta = theta(j);
        r.se = std::sqrt(cov(j, j));
        r.odds_ratio = std::exp(r.beta);
        r.ci_low = std::exp(r.beta - kWaldZ * r.se);
        r.ci_high = std::exp(r.beta + kWaldZ * r.se);
        r.z = r.beta / r.se;
        r.p = normal_two_sided_p(r.z);
        r.significant = r.p < 0.05;
        return r;
    };
    out.intercept = make_row(0, "(intercept)");
    for (Eigen::Index j = 0; j < k; ++j) {
        out.rows.push_back(make_row(j + 1, names[static_cast<std::size_t>(j)]));
        out.rows.back().vif = vifs[static_cast<std::size_t>(j)];
    }
    if (n >= hl_groups) {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = 1 / (1 + std::exp(-eta(i)));
        try {
            out.hl = hosmer_lemeshow(p, labels, hl_groups);
            out.hl_available = true;
        } catch (const DataError&) {
            out.hl_available = false;
        }
    }
    return out;
}

}  // namespace osteorad::stats
