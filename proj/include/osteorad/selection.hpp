#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osteorad/cv.hpp"
#include "osteorad/error.hpp"
#include "osteorad/imaging.hpp"
#include "osteorad/parallel.hpp"

namespace osteorad::selection {

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

struct MinMax {
    std::vector<std::string> names;
    std::vector<double> lo;
    std::vector<double> hi;
};

inline MinMax fit_minmax(const FeatureTable& train) {
    if (train.rows() == 0 || train.cols() == 0) throw DataError("min-max: empty training table");
    MinMax m{train.names(), std::vector<double>(train.cols()), std::vector<double>(train.cols())};
    for (std::size_t c = 0; c < train.cols(); ++c) {
        double lo = train.at(0, c), hi = lo;
        for (std::size_t r = 0; r < train.rows(); ++r) {
            const double v = train.at(r, c);
            if (!std::isfinite(v)) throw NumericError("min-max: non-finite value in '" + train.names()[c] + "'");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        m.lo[c] = lo;
        m.hi[c] = hi;
    }
    return m;
}

/// Scales the model's columns of `table`; a constant training column maps to 0.
/// Values outside the training range are not clamped.
inline FeatureTable apply_minmax(const MinMax& m, const FeatureTable& table) {
    FeatureTable out = table.select_columns(m.names);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
            const double span = m.hi[c] - m.lo[c];
            out.at(r, c) = span > 0 ? (out.at(r, c) - m.lo[c]) / span : 0.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Variance and correlation filters
// ---------------------------------------------------------------------------

inline double population_variance(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size());
}

/// Columns with population variance strictly above `threshold`, in table order.
inline std::vector<std::string> variance_filter(const FeatureTable& table, double threshold = 0.02) {
    std::vector<std::string> keep;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (population_variance(table.column(c)) > threshold) keep.push_back(table.names()[c]);
    }
    return keep;
}

/// Pearson correlation matrix; any pair involving a constant column is 0.
inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x) {
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::VectorXd norm(p);
    for (Eigen::Index j = 0; j < p; ++j) norm(j) = c.col(j).norm();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        r(i, i) = norm(i) > 0 ? 1.0 : 0.0;
        for (Eigen::Index j = i + 1; j < p; ++j) {
            if (norm(i) > 0 && norm(j) > 0) {
                const double v = std::clamp(c.col(i).dot(c.col(j)) / (norm(i) * norm(j)), -1.0, 1.0);
                r(i, j) = r(j, i) = v;
            }
        }
    }
    return r;
}

inline Eigen::MatrixXd to_matrix(const FeatureTable& t) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.at(r, c);
        }
    }
    return x;
}

/// Greedy pruning of pairs with |r| > r_max, strongest pair first. Of each pair
/// whose members both survive so far, the one with the larger summed |r| to the
/// other survivors is dropped; on a tie the later column goes.
inline std::vector<std::string> correlation_filter(const FeatureTable& table, double r_max = 0.9) {
    const std::size_t p = table.cols();
    const Eigen::MatrixXd r = correlation_matrix(to_matrix(table));
    struct Pair {
        double abs_r;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const double a = std::abs(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            if (a > r_max) pairs.push_back({a, i, j});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.abs_r > b.abs_r; });
    std::vector<bool> alive(p, true);
    const auto load = [&](std::size_t k) {
        double s = 0;
        for (std::size_t m = 0; m < p; ++m) {
            if (m != k && alive[m]) s += std::abs(r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)));
        }
        return s;
    };
    for (const auto& pr : pairs) {
        if (!alive[pr.i] || !alive[pr.j]) continue;
        alive[load(pr.i) > load(pr.j) ? pr.i : pr.j] = false;
    }
    std::vector<std::string> keep;
    for (std::size_t k = 0; k < p; ++k) {
        if (alive[k]) keep.push_back(table.names()[k]);
    }
    return keep;
}

// ---------------------------------------------------------------------------
// LASSO
// ---------------------------------------------------------------------------

enum class LassoLoss { Linear, Logistic };

inline std::string_view lasso_loss_name(LassoLoss l) { return l == LassoLoss::Logistic ? "logistic" : "linear"; }

inline LassoLoss lasso_loss_from_name(std::string_view s) {
    if (s == "linear") return LassoLoss::Linear;
    if (s == "logistic") return LassoLoss::Logistic;
    throw ConfigError("unknown LASSO loss '" + std::string(s) + "'");
}

struct LassoControl {
    double tol = 1e-8;
    std::size_t max_sweeps = 100000;
    LassoLoss loss = LassoLoss::Linear;
};

struct LassoFit {
    Eigen::VectorXd beta;
    double intercept = 0;
    double lambda = 0;
    std::size_t sweeps = 0;
    bool converged = false;
    std::vector<double> objective;  // after every sweep (outer iteration for logistic)
};

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

namespace detail {

/// Weighted centring shared by lambda_max and the solver, so that both compute
/// the zero-coefficient gradient with the same arithmetic and agree bit for bit.
struct CentredDesign {
    Eigen::RowVectorXd mu;
    Eigen::MatrixXd xc;
    Eigen::MatrixXd xw;
    double zbar = 0;
    Eigen::VectorXd zc;

    CentredDesign(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
        const double wsum = w.sum();
        mu = (w.transpose() * x) / wsum;
        xc = x.rowwise() - mu;
        xw = w.asDiagonal() * xc;
        zbar = w.dot(z) / wsum;
        zc = z.array() - zbar;
    }
};

}  // namespace detail

/// Smallest lambda at which every coefficient is zero.
inline double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const double n = static_cast<double>(x.rows());
    const detail::CentredDesign d(x, y, Eigen::VectorXd::Ones(x.rows()));
    double m = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) m = std::max(m, std::abs(d.xw.col(j).dot(d.zc) / n));
    return m;
}

/// Descending log-spaced grid from lmax to ratio*lmax.
inline std::vector<double> lambda_grid(double lmax, int points = 50, double ratio = 1e-3) {
    if (points < 1 || !(ratio > 0 && ratio < 1)) throw ConfigError("bad lambda grid");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
        g[static_cast<std::size_t>(k)] = lmax * std::pow(ratio, t);
    }
    return g;
}

namespace detail {

inline void check_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (!x.allFinite() || !y.allFinite()) throw NumericError("LASSO: non-finite input");
    if (x.rows() < 2) throw DataError("LASSO: need at least 2 rows");
    if (y.size() != x.rows()) throw DataError("LASSO: label count differs from row count");
}

/// Weighted cyclic coordinate descent for
/// (1/2n) sum w_i (z_i - b0 - x_i b)^2 + lambda |b|_1, updating b0 and b in place.
/// Columns are centred by their weighted means so the intercept decouples.
inline std::size_t weighted_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& w,
                               double lambda, double tol, std::size_t max_sweeps, double& b0, Eigen::VectorXd& b,
                               std::vector<double>* trace, bool& converged) {
    const double n = static_cast<double>(x.rows());
    const Eigen::Index p = x.cols();
    const CentredDesign d(x, z, w);
    const Eigen::MatrixXd& xc = d.xc;
    const Eigen::MatrixXd& xw = d.xw;
    Eigen::VectorXd r = d.zc;
    if (!b.isZero(0.0)) r -= xc * b;
    Eigen::VectorXd a(p);
    for (Eigen::Index j = 0; j < p; ++j) a(j) = xw.col(j).dot(xc.col(j)) / n;
    // One coordinate pass over `cols`; returns the largest coefficient change.
    const auto pass = [&](const std::vector<Eigen::Index>& cols) {
        double max_delta = 0;
        for (Eigen::Index j : cols) {
            if (a(j) <= 1e-20) {
                b(j) = 0;
                continue;
            }
            const double old = b(j);
            const double nb = soft_threshold(xw.col(j).dot(r) / n + a(j) * old, lambda) / a(j);
            if (nb != old) {
                r -= xc.col(j) * (nb - old);
                b(j) = nb;
                max_delta = std::max(max_delta, std::abs(nb - old));
            }
        }
        if (trace) trace->push_back((w.array() * r.array().square()).sum() / (2 * n) + lambda * b.lpNorm<1>());
        return max_delta;
    };
    std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    // Active-set cycling: full passes alternate with passes over the nonzero
    // coefficients until those settle. Convergence is only declared on a full
    // pass, so the stopping rule is the plain cyclic one.
    converged = false;
    std::size_t sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        if (pass(all) < tol) {
            converged = true;
            break;
        }
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (b(j) != 0) active.push_back(j);
        }
        while (sweep < max_sweeps) {
            ++sweep;
            if (pass(active) < tol) break;
        }
    }
    b0 = d.zbar - d.mu.dot(b);
    return sweep;
}

inline double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

inline double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double b0,
                                 const Eigen::VectorXd& b, double lambda) {
    const Eigen::VectorXd eta = (x * b).array() + b0;
    double nll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log(1 + e^eta) - y*eta, computed stably
        const double e = eta(i);
        nll += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - y(i) * e;
    }
    return nll / static_cast<double>(x.rows()) + lambda * b.lpNorm<1>();
}

}  // namespace detail

/// Minimises (1/2n)|y - b0 - Xb|^2 + lambda |b|_1 (or the penalised mean logistic
/// loss) by cyclic coordinate descent with an unpenalised intercept.
inline LassoFit lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          const LassoControl& ctl = {}, const LassoFit* warm = nullptr) {
    detail::check_finite(x, y);
    if (!(lambda >= 0)) throw ConfigError("LASSO: lambda must be non-negative");
    const Eigen::Index p = x.cols();
    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = warm ? warm->beta : Eigen::VectorXd::Zero(p);
    fit.intercept = warm ? warm->intercept : 0.0;
    if (ctl.loss == LassoLoss::Linear) {
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(x.rows());
        fit.sweeps = detail::weighted_cd(x, y, w, lambda, ctl.tol, ctl.max_sweeps, fit.intercept, fit.beta,
                                         &fit.objective, fit.converged);
        return fit;
    }
    // Logistic: quadratic approximation at the current fit, then weighted CD.
    if (!warm) {
        const double ybar = std::clamp(y.mean(), 1e-6, 1 - 1e-6);
        fit.intercept = std::log(ybar / (1 - ybar));
    }
    for (std::size_t outer = 0; outer < 100; ++outer) {
        const Eigen::VectorXd eta = (x * fit.beta).array() + fit.intercept;
        Eigen::VectorXd w(x.rows()), z(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double pr = detail::logistic(eta(i));
            w(i) = std::max(pr * (1 - pr), 1e-5);
            z(i) = eta(i) + (y(i) - pr) / w(i);
        }
        const Eigen::VectorXd before = fit.beta;
        const double b0_before = fit.intercept;
        bool inner_ok = false;
        fit.sweeps += detail::weighted_cd(x, z, w, lambda, ctl.tol, ctl.max_sweeps, fit.intercept, fit.beta, nullptr,
                                          inner_ok);
        fit.objective.push_back(detail::logistic_objective(x, y, fit.intercept, fit.beta, lambda));
        const double change =
            std::max((fit.beta - before).cwiseAbs().maxCoeff(), std::abs(fit.intercept - b0_before));
        if (change < ctl.tol * 10) {
            fit.converged = inner_ok;
            break;
        }
    }
    return fit;
}

inline Eigen::VectorXd lasso_predict(const LassoFit& f, const Eigen::MatrixXd& x) {
    return (x * f.beta).array() + f.intercept;
}

struct LambdaCv {
    std::vector<double> lambdas;
    std::vector<double> cv_error;
    std::size_t best = 0;
};

/// Cross-validated lambda over a log grid. Error is pooled squared error (linear)
/// or mean binomial deviance (logistic); ties go to the larger lambda.
inline LambdaCv cv_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& fold, int folds,
                          const LassoControl& ctl = {}, int points = 50, double ratio = 1e-3, unsigned threads = 1) {
    detail::check_finite(x, y);
    LambdaCv cv;
    const double lmax = lambda_max(x, y);
    cv.lambdas = lambda_grid(lmax > 0 ? lmax : 1.0, points, ratio);
    // Folds run in parallel into their own error slots, summed in fold order.
    std::vector<std::vector<double>> fold_error(static_cast<std::size_t>(folds), std::vector<double>(cv.lambdas.size(), 0.0));
    parallel_for(
        static_cast<std::size_t>(folds),
        [&](std::size_t k) {
            const auto tr = fold_rows(fold, static_cast<int>(k), false);
            const auto va = fold_rows(fold, static_cast<int>(k), true);
            if (va.empty()) return;
            if (tr.size() < 2) throw DataError("LASSO CV: training fold too small");
            Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr.size()), x.cols());
            Eigen::VectorXd yt(static_cast<Eigen::Index>(tr.size()));
            for (std::size_t i = 0; i < tr.size(); ++i) {
                xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(tr[i]));
                yt(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(tr[i]));
            }
            auto& err = fold_error[k];
            std::optional<LassoFit> prev;
            for (std::size_t g = 0; g < cv.lambdas.size(); ++g) {
                LassoFit f = lasso_fit(xt, yt, cv.lambdas[g], ctl, prev ? &*prev : nullptr);
                for (auto r : va) {
                    const auto ri = static_cast<Eigen::Index>(r);
                    const double eta = x.row(ri).dot(f.beta) + f.intercept;
                    if (ctl.loss == LassoLoss::Linear) {
                        err[g] += (y(ri) - eta) * (y(ri) - eta);
                    } else {
                        const double pr = std::clamp(detail::logistic(eta), 1e-12, 1 - 1e-12);
                        err[g] += -2 * (y(ri) * std::log(pr) + (1 - y(ri)) * std::log(1 - pr));
                    }
                }
                prev = std::move(f);
            }
        },
        threads);
    cv.cv_error.assign(cv.lambdas.size(), 0.0);
    for (const auto& err : fold_error) {
        for (std::size_t g = 0; g < err.size(); ++g) cv.cv_error[g] += err[g];
    }
    for (auto& e : cv.cv_error) e /= static_cast<double>(x.rows());
    for (std::size_t g = 1; g < cv.cv_error.size(); ++g) {
        if (cv.cv_error[g] < cv.cv_error[cv.best]) cv.best = g;
    }
    return cv;
}

// ---------------------------------------------------------------------------
// Final selection
// ---------------------------------------------------------------------------

/// Names with nonzero coefficient (top_k == 0), or the top_k largest |beta|
/// among them, ties by column order. Output keeps column order.
inline std::vector<std::string> select_features(const std::vector<std::string>& names, const Eigen::VectorXd& beta,
                                                int top_k, std::vector<std::string>* warnings = nullptr) {
    if (static_cast<Eigen::Index>(names.size()) != beta.size()) throw DataError("coefficient count mismatch");
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (beta(static_cast<Eigen::Index>(j)) != 0.0) nz.push_back(j);
    }
    if (top_k > 0) {
        if (nz.empty()) throw DataError("no informative features");
        if (static_cast<std::size_t>(top_k) > nz.size()) {
            if (warnings) {
                warnings->push_back("top_k=" + std::to_string(top_k) + " exceeds " + std::to_string(nz.size()) +
                                    " nonzero coefficients; keeping all of them");
            }
        } else {
            std::stable_sort(nz.begin(), nz.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(beta(static_cast<Eigen::Index>(a))) > std::abs(beta(static_cast<Eigen::Index>(b)));
            });
            nz.resize(static_cast<std::size_t>(top_k));
            std::sort(nz.begin(), nz.end());
        }
    }
    std::vector<std::string> out;
    for (auto j : nz) out.push_back(names[j]);
    return out;
}

struct SelectionOptions {
    double variance_threshold = 0.02;
    double r_max = 0.9;
    std::optional<double> lambda;  // nullopt: choose by grouped CV
    int top_k = 0;                 // 0: keep every nonzero coefficient
    int folds = 5;
    std::uint64_t seed = 0;
    int grid_points = 50;
    double grid_ratio = 1e-3;
    LassoLoss loss = LassoLoss::Linear;
    unsigned threads = 1;  // CV folds in parallel; 0: hardware concurrency

    void validate() const {
        if (!(variance_threshold >= 0)) throw ConfigError("variance threshold must be non-negative");
        if (!(r_max > 0 && r_max <= 1)) throw ConfigError("r_max must be in (0, 1]");
        if (lambda && !(*lambda >= 0)) throw ConfigError("lambda must be non-negative");
        if (top_k < 0) throw ConfigError("top_k must be non-negative");
        if (folds < 2) throw ConfigError("need at least 2 CV folds");
    }
};

struct SelectionModel {
    MinMax scaling;
    std::vector<std::string> variance_survivors;
    std::vector<std::string> correlation_survivors;
    std::vector<double> coefficients;  // aligned with correlation_survivors
    double intercept = 0;
    double lambda = 0;
    LassoLoss loss = LassoLoss::Linear;
    int top_k = 0;
    std::vector<std::string> selected;
    std::optional<LambdaCv> cv;
    std::vector<std::string> warnings;

    /// Normalised training-scale values of the selected columns.
    FeatureTable transform(const FeatureTable& table) const {
        return apply_minmax(scaling, table).select_columns(selected);
    }
};

inline Eigen::VectorXd label_vector(const std::vector<int>& y) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
        v(static_cast<Eigen::Index>(i)) = y[i];
    }
    return v;
}

/// Full reduction fitted on training rows only: scaling, variance, correlation, LASSO.
inline SelectionModel fit_selection(const FeatureTable& train, const std::vector<int>& labels,
                                    const std::vector<std::string>& groups, const SelectionOptions& opt = {}) {
    opt.validate();
    if (labels.size() != train.rows() || groups.size() != train.rows()) {
        throw DataError("labels/groups do not align with training rows");
    }
    SelectionModel m;
    m.loss = opt.loss;
    m.top_k = opt.top_k;
    m.scaling = fit_minmax(train);
    const FeatureTable scaled = apply_minmax(m.scaling, train);
    m.variance_survivors = variance_filter(scaled, opt.variance_threshold);
    if (m.variance_survivors.empty()) throw DataError("no feature passes the variance threshold");
    const FeatureTable var_t = scaled.select_columns(m.variance_survivors);
    m.correlation_survivors = correlation_filter(var_t, opt.r_max);
    const Eigen::MatrixXd x = to_matrix(var_t.select_columns(m.correlation_survivors));
    const Eigen::VectorXd y = label_vector(labels);
    LassoControl ctl;
    ctl.loss = opt.loss;
    if (opt.lambda) {
        m.lambda = *opt.lambda;
    } else {
        const auto fold = grouped_folds(groups, opt.folds, opt.seed, &labels);
        m.cv = cv_lambda(x, y, fold, opt.folds, ctl, opt.grid_points, opt.grid_ratio, opt.threads);
        m.lambda = m.cv->lambdas[m.cv->best];
    }
    const LassoFit fit = lasso_fit(x, y, m.lambda, ctl);
    if (!fit.converged) m.warnings.push_back("LASSO reached the sweep limit before converging");
    m.coefficients.assign(fit.beta.data(), fit.beta.data() + fit.beta.size());
    m.intercept = fit.intercept;
    m.selected = select_features(m.correlation_survivors, fit.beta, opt.top_k, &m.warnings);
    return m;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

inline constexpr int kSelectionFormatVersion = 1;

inline nlohmann::ordered_json to_json(const SelectionModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "osteorad.selection";
    j["version"] = kSelectionFormatVersion;
    j["scaling"] = {{"names", m.scaling.names}, {"min", m.scaling.lo}, {"max", m.scaling.hi}};
    j["variance_survivors"] = m.variance_survivors;
    j["correlation_survivors"] = m.correlation_survivors;
    j["lasso"] = {{"loss", lasso_loss_name(m.loss)},
                  {"lambda", m.lambda},
                  {"intercept", m.intercept},
                  {"coefficients", m.coefficients}};
    if (m.cv) j["lasso"]["cv"] = {{"lambdas", m.cv->lambdas}, {"error", m.cv->cv_error}, {"best", m.cv->best}};
    j["top_k"] = m.top_k;
    j["selected"] = m.selected;
    j["warnings"] = m.warnings;
    return j;
}

inline SelectionModel selection_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "osteorad.selection") throw DataError("not a selection model document");
        if (j.at("version").get<int>() != kSelectionFormatVersion) throw DataError("unsupported selection version");
        SelectionModel m;
        const auto& s = j.at("scaling");
        m.scaling = {s.at("names").get<std::vector<std::string>>(), s.at("min").get<std::vector<double>>(),
                     s.at("max").get<std::vector<double>>()};
        m.variance_survivors = j.at("variance_survivors").get<std::vector<std::string>>();
        m.correlation_survivors = j.at("correlation_survivors").get<std::vector<std::string>>();
        const auto& l = j.at("lasso");
        m.loss = lasso_loss_from_name(l.at("loss").get<std::string>());
        m.lambda = l.at("lambda").get<double>();
        m.intercept = l.at("intercept").get<double>();
        m.coefficients = l.at("coefficients").get<std::vector<double>>();
        if (l.contains("cv")) {
            m.cv = LambdaCv{l["cv"].at("lambdas").get<std::vector<double>>(),
                            l["cv"].at("error").get<std::vector<double>>(), l["cv"].at("best").get<std::size_t>()};
        }
        m.top_k = j.at("top_k").get<int>();
        m.selected = j.at("selected").get<std::vector<std::string>>();
        m.warnings = j.value("warnings", std::vector<std::string>{});
        if (m.coefficients.size() != m.correlation_survivors.size()) throw DataError("coefficient count mismatch");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed selection model: ") + e.what());
    }
}

}  // namespace osteorad::selection
