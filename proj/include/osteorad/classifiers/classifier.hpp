#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "osteorad/classifiers/common.hpp"
#include "osteorad/classifiers/linear.hpp"
#include "osteorad/classifiers/neighbors_bayes.hpp"
#include "osteorad/classifiers/trees.hpp"
#include "osteorad/cv.hpp"
#include "osteorad/imaging.hpp"
#include "osteorad/metrics.hpp"
#include "osteorad/parallel.hpp"

namespace osteorad::ml {

enum class Family { LogisticRegression, LinearSvm, Knn, GaussianNb, RandomForest, GradientBoosting };

inline constexpr std::array<Family, 6> kAllFamilies = {Family::LogisticRegression, Family::LinearSvm,
                                                       Family::Knn,                Family::GaussianNb,
                                                       Family::RandomForest,       Family::GradientBoosting};

inline constexpr std::array<std::string_view, 6> kFamilyNames = {
    "logistic_regression", "linear_svm", "knn", "gaussian_nb", "random_forest", "gradient_boosting"};

inline std::string_view family_name(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

inline Family family_from_name(std::string_view s) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
        if (kFamilyNames[i] == s) return kAllFamilies[i];
    }
    throw ConfigError("unknown classifier family '" + std::string(s) + "'");
}

/// Hyperparameters each family requires, in grid order.
inline std::vector<std::string> required_params(Family f) {
    switch (f) {
        case Family::LogisticRegression:
        case Family::LinearSvm: return {"C"};
        case Family::Knn: return {"k"};
        case Family::GaussianNb: return {};
        case Family::RandomForest: return {"n_trees", "max_depth", "max_features"};
        case Family::GradientBoosting: return {"learning_rate", "n_trees", "max_depth"};
    }
    return {};
}

using GridAxis = std::pair<std::string, std::vector<double>>;

struct ClassifierSpec {
    Family family = Family::LogisticRegression;
    std::vector<GridAxis> grid;
    std::uint64_t seed = 0;
    int folds = 5;

    void validate() const {
        const auto need = required_params(family);
        if (grid.size() != need.size()) {
            throw ConfigError(std::string(family_name(family)) + " grid must have axes for exactly its hyperparameters");
        }
        for (std::size_t i = 0; i < need.size(); ++i) {
            if (grid[i].first != need[i]) {
                throw ConfigError("grid axis " + std::to_string(i) + " of " + std::string(family_name(family)) +
                                  " must be '" + need[i] + "'");
            }
            if (grid[i].second.empty()) throw ConfigError("grid axis '" + grid[i].first + "' is empty");
        }
        if (folds < 2) throw ConfigError("need at least 2 CV folds");
    }
};

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

/// Repository default grids.
inline ClassifierSpec default_spec(Family f, std::uint64_t seed = 0) {
    ClassifierSpec s{f, {}, seed, 5};
    switch (f) {
        case Family::LogisticRegression:
        case Family::LinearSvm: s.grid = {{"C", {0.01, 0.1, 1, 10}}}; break;
        case Family::Knn: s.grid = {{"k", {5, 11, 21, 51}}}; break;
        case Family::GaussianNb: break;
        case Family::RandomForest:
            s.grid = {{"n_trees", {100, 300}}, {"max_depth", {8, 16, kUnlimited}}, {"max_features", {0}}};
            break;
        case Family::GradientBoosting:
            s.grid = {{"learning_rate", {0.05, 0.1}}, {"n_trees", {100, 300}}, {"max_depth", {2, 3}}};
            break;
    }
    return s;
}

/// Cartesian product, last axis fastest. A family without hyperparameters has
/// a single empty assignment.
inline std::vector<Params> expand_grid(const std::vector<GridAxis>& grid) {
    std::vector<Params> out{Params{}};
    for (const auto& [name, values] : grid) {
        std::vector<Params> next;
        for (const auto& p : out) {
            for (double v : values) {
                Params q = p;
                q.values.emplace_back(name, v);
                next.push_back(std::move(q));
            }
        }
        out = std::move(next);
    }
    return out;
}

using Model = std::variant<LogisticModel, LinearSvmModel, KnnModel, GaussianNbModel, RandomForestModel, BoostedModel>;

struct FittedClassifier {
    Family family = Family::LogisticRegression;
    Params params;
    std::vector<std::string> feature_names;
    Model model;
};

inline Model fit_model(Family f, const Params& p, const Matrix& x, const Labels& y, std::uint64_t seed) {
    switch (f) {
        case Family::LogisticRegression: return fit_logistic(x, y, p.get("C"));
        case Family::LinearSvm: return fit_linear_svm(x, y, p.get("C"));
        case Family::Knn: return fit_knn(x, y, p.get("k"));
        case Family::GaussianNb: return fit_gaussian_nb(x, y);
        case Family::RandomForest:
            return fit_random_forest(x, y, p.get("n_trees"), p.get("max_depth"), p.get("max_features"), seed);
        case Family::GradientBoosting:
            return fit_gradient_boosting(x, y, p.get("learning_rate"), p.get("n_trees"), p.get("max_depth"));
    }
    throw ConfigError("unknown classifier family");
}

inline Vector model_proba(const Model& m, const Matrix& x) {
    return std::visit([&](const auto& mm) -> Vector { return mm.proba(x); }, m);
}

inline FittedClassifier fit_with_params(Family f, const Params& p, const Matrix& x, const Labels& y,
                                        std::vector<std::string> names, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(names.size()) != x.cols()) throw DataError("feature name count differs from columns");
    return {f, p, std::move(names), fit_model(f, p, x, y, seed)};
}

/// Scores in [0, 1]; `names` must equal the training feature names in order.
inline std::vector<double> predict_proba(const FittedClassifier& c, const Matrix& x,
                                         const std::vector<std::string>& names) {
    if (names != c.feature_names) throw DataError("feature names differ from the training features");
    if (x.rows() == 0) throw DataError("empty feature matrix");
    if (!x.allFinite()) throw NumericError("non-finite feature value");
    if (x.cols() != static_cast<Eigen::Index>(names.size())) throw DataError("feature matrix width differs from names");
    const Vector p = model_proba(c.model, x);
    std::vector<double> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = std::clamp(p(i), 0.0, 1.0);
    return out;
}

/// Model for an empty feature set: the C -> 0 limit of logistic regression,
/// which scores every row with the training prevalence.
inline FittedClassifier prior_model(const Labels& y) {
    check_training(Matrix::Zero(static_cast<Eigen::Index>(y.size()), 1), y);
    const double prev = static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
    return {Family::LogisticRegression, Params{{{"C", 0.0}}}, {}, LogisticModel{Vector(0), std::log(prev / (1 - prev))}};
}

inline Matrix table_matrix(const FeatureTable& t) {
    Matrix x(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.at(r, c);
    }
    return x;
}

inline std::vector<double> predict_proba(const FittedClassifier& c, const FeatureTable& t) {
    return predict_proba(c, table_matrix(t), t.names());
}

inline std::vector<int> predict(const FittedClassifier& c, const FeatureTable& t, double threshold = 0.5) {
    return metrics::threshold_scores(predict_proba(c, t), threshold);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct CvRow {
    Params params;
    std::vector<double> fold_auroc;  // NaN where the validation fold has one class
    double mean_auroc = 0;
};

struct GridSearchResult {
    std::vector<CvRow> table;
    std::size_t best = 0;
    std::vector<int> fold;  // per training row
};

/// Grouped, class-stratified k-fold CV over the grid; best = highest mean
/// AUROC over folds where it is defined, ties to the smaller grid index.
inline GridSearchResult grid_search_cv(const ClassifierSpec& spec, const Matrix& x, const Labels& y,
                                       const std::vector<std::string>& groups, unsigned threads = 1) {
    spec.validate();
    check_training(x, y);
    if (groups.size() != y.size()) throw DataError("groups do not align with rows");
    GridSearchResult res;
    res.fold = grouped_folds(groups, spec.folds, spec.seed, &y);
    const auto grid = expand_grid(spec.grid);
    res.table.resize(grid.size());
    const std::size_t cells = grid.size() * static_cast<std::size_t>(spec.folds);
    std::vector<double> auc(cells, metrics::kUndefined);
    parallel_for(
        cells,
        [&](std::size_t cell) {
            const auto g = cell / static_cast<std::size_t>(spec.folds);
            const int k = static_cast<int>(cell % static_cast<std::size_t>(spec.folds));
            const auto tr = fold_rows(res.fold, k, false);
            const auto va = fold_rows(res.fold, k, true);
            const auto ytr = take(y, tr);
            const auto yva = take(y, va);
            const auto pos_tr = std::count(ytr.begin(), ytr.end(), 1);
            const auto pos_va = std::count(yva.begin(), yva.end(), 1);
            if (pos_tr == 0 || pos_tr == static_cast<long>(ytr.size())) return;
            if (pos_va == 0 || pos_va == static_cast<long>(yva.size())) return;
            const Model m = fit_model(spec.family, grid[g], take_rows(x, tr), ytr, spec.seed);
            const Vector p = model_proba(m, take_rows(x, va));
            auc[cell] = metrics::roc_auroc(yva, vec_of(p)).auroc;
        },
        threads);
    bool any = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto& row = res.table[g];
        row.params = grid[g];
        double s = 0;
        int n = 0;
        for (int k = 0; k < spec.folds; ++k) {
            const double a = auc[g * static_cast<std::size_t>(spec.folds) + static_cast<std::size_t>(k)];
            row.fold_auroc.push_back(a);
            if (!std::isnan(a)) {
                s += a;
                ++n;
            }
        }
        row.mean_auroc = n > 0 ? s / n : metrics::kUndefined;
        if (n > 0) {
            if (!any || row.mean_auroc > res.table[res.best].mean_auroc) res.best = g;
            any = true;
        }
    }
    if (!any) throw DataError("no CV fold contains both classes");
    return res;
}

struct TrainResult {
    FittedClassifier model;
    std::optional<GridSearchResult> search;  // absent for a single-point grid
};

/// Grid search (skipped for a single grid point), then a refit on all rows.
inline TrainResult train(const ClassifierSpec& spec, const FeatureTable& t, const Labels& y,
                         const std::vector<std::string>& groups, unsigned threads = 1) {
    spec.validate();
    const Matrix x = table_matrix(t);
    const auto grid = expand_grid(spec.grid);
    TrainResult out;
    Params chosen = grid.front();
    if (grid.size() > 1) {
        out.search = grid_search_cv(spec, x, y, groups, threads);
        chosen = grid[out.search->best];
    }
    check_training(x, y);
    out.model = fit_with_params(spec.family, chosen, x, y, t.names(), spec.seed);
    return out;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json model_json(const Model& m) {
    nlohmann::ordered_json j;
    std::visit(
        [&](const auto& mm) {
            using T = std::decay_t<decltype(mm)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                j = {{"w", vec_of(mm.w)}, {"b", mm.b}};
            } else if constexpr (std::is_same_v<T, LinearSvmModel>) {
                j = {{"w", vec_of(mm.w)}, {"b", mm.b}, {"platt_a", mm.platt.a}, {"platt_b", mm.platt.b}};
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                j = {{"k", mm.k}, {"x", matrix_json(mm.x)}, {"y", mm.y}};
            } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
                j = {{"mean", matrix_json(mm.mean)},
                     {"var", matrix_json(mm.var)},
                     {"log_prior", {mm.log_prior[0], mm.log_prior[1]}}};
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                nlohmann::ordered_json trees = nlohmann::ordered_json::array();
                for (const auto& t : mm.trees) trees.push_back(to_json(t));
                j = {{"trees", trees}};
            } else {
                nlohmann::ordered_json trees = nlohmann::ordered_json::array();
                for (const auto& t : mm.trees) trees.push_back(to_json(t));
                j = {{"f0", mm.f0}, {"trees", trees}};
            }
        },
        m);
    return j;
}

inline nlohmann::ordered_json to_json(const FittedClassifier& c) {
    nlohmann::ordered_json j;
    j["format"] = "osteorad.classifier";
    j["version"] = kModelFormatVersion;
    j["family"] = family_name(c.family);
    j["params"] = to_json(c.params);
    j["features"] = c.feature_names;
    j["model"] = model_json(c.model);
    return j;
}

inline FittedClassifier classifier_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "osteorad.classifier") throw DataError("not a classifier document");
        if (j.at("version").get<int>() != kModelFormatVersion) throw DataError("unsupported classifier version");
        FittedClassifier c;
        c.family = family_from_name(j.at("family").get<std::string>());
        for (const auto& name : required_params(c.family)) {
            c.params.values.emplace_back(name, param_value_from_json(j.at("params").at(name)));
        }
        c.feature_names = j.at("features").get<std::vector<std::string>>();
        const auto p = static_cast<Eigen::Index>(c.feature_names.size());
        const auto& m = j.at("model");
        const auto check_len = [p](const Vector& v) {
            if (v.size() != p) throw DataError("coefficient count differs from feature count");
            return v;
        };
        switch (c.family) {
            case Family::LogisticRegression:
                c.model = LogisticModel{check_len(vector_from(m.at("w").get<std::vector<double>>())), m.at("b").get<double>()};
                break;
            case Family::LinearSvm:
                c.model = LinearSvmModel{check_len(vector_from(m.at("w").get<std::vector<double>>())), m.at("b").get<double>(),
                                         {m.at("platt_a").get<double>(), m.at("platt_b").get<double>()}};
                break;
            case Family::Knn: {
                KnnModel k{matrix_from_json(m.at("x")), m.at("y").get<Labels>(), m.at("k").get<int>()};
                if (k.x.cols() != p || k.x.rows() != static_cast<Eigen::Index>(k.y.size()) || k.y.empty()) {
                    throw DataError("malformed kNN model");
                }
                c.model = std::move(k);
                break;
            }
            case Family::GaussianNb: {
                GaussianNbModel g{matrix_from_json(m.at("mean")), matrix_from_json(m.at("var")), {0, 0}};
                const auto lp = m.at("log_prior").get<std::vector<double>>();
                if (lp.size() != 2 || g.mean.rows() != 2 || g.mean.cols() != p || g.var.rows() != 2 || g.var.cols() != p) {
                    throw DataError("malformed naive Bayes model");
                }
                g.log_prior[0] = lp[0];
                g.log_prior[1] = lp[1];
                c.model = std::move(g);
                break;
            }
            case Family::RandomForest: {
                RandomForestModel rf;
                for (const auto& t : m.at("trees")) rf.trees.push_back(tree_from_json(t, p));
                if (rf.trees.empty()) throw DataError("random forest without trees");
                c.model = std::move(rf);
                break;
            }
            case Family::GradientBoosting: {
                BoostedModel b;
                b.f0 = m.at("f0").get<double>();
                for (const auto& t : m.at("trees")) b.trees.push_back(tree_from_json(t, p));
                c.model = std::move(b);
                break;
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed classifier document: ") + e.what());
    }
}

/// Grid axes from a JSON object {"name": [values...]}; axes ordered as the
/// family requires, null meaning unlimited.
inline std::vector<GridAxis> grid_from_json(Family f, const nlohmann::json& j) {
    std::vector<GridAxis> grid;
    for (const auto& name : required_params(f)) {
        if (!j.contains(name)) throw ConfigError("grid for " + std::string(family_name(f)) + " lacks '" + name + "'");
        std::vector<double> values;
        for (const auto& v : j.at(name)) values.push_back(param_value_from_json(v));
        grid.emplace_back(name, std::move(values));
    }
    for (const auto& [k, v] : j.items()) {
        const auto need = required_params(f);
        if (std::find(need.begin(), need.end(), k) == need.end()) {
            throw ConfigError("unknown hyperparameter '" + k + "' for " + std::string(family_name(f)));
        }
    }
    return grid;
}

inline nlohmann::ordered_json to_json(const GridSearchResult& r) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.table) {
        nlohmann::ordered_json folds = nlohmann::ordered_json::array();
        for (double a : row.fold_auroc) folds.push_back(std::isnan(a) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a));
        rows.push_back({{"params", to_json(row.params)},
                        {"fold_auroc", folds},
                        {"mean_auroc", std::isnan(row.mean_auroc) ? nlohmann::ordered_json(nullptr)
                                                                  : nlohmann::ordered_json(row.mean_auroc)}});
    }
    return {{"best", r.best}, {"rows", rows}};
}

}  // namespace osteorad::ml
