#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "osteorad/classifiers/common.hpp"
#include "osteorad/rng.hpp"

namespace osteorad::ml {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    template <typename Row>
    double predict(const Row& x) const {
        int k = 0;
        while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
            const auto& n = nodes[static_cast<std::size_t>(k)];
            k = x(n.feature) <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(k)].value;
    }

    int depth() const { return depth_from(0); }

private:
    int depth_from(int k) const {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        return n.feature < 0 ? 0 : 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

struct TreeSettings {
    double max_depth = std::numeric_limits<double>::infinity();
    int max_features = 0;  // features drawn per split; 0 or >= p: all
    std::size_t min_samples_split = 2;
};

namespace detail {

/// Recursive CART builder. Splits minimise the summed squared error of `target`
/// (for a 0/1 target this is the Gini criterion up to a factor 2); leaves hold
/// sum(num)/sum(den). Best split: strictly largest gain, scanning candidate
/// features in draw order and thresholds ascending.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Vector& target, const Vector& num, const Vector& den, const TreeSettings& s,
                CounterRng* rng)
        : x_(x), t_(target), num_(num), den_(den), s_(s), rng_(rng) {}

    Tree build(std::vector<std::size_t> rows) {
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        double sn = 0, sd = 0, st = 0;
        bool pure = true;
        for (auto r : rows) {
            sn += num_(static_cast<Eigen::Index>(r));
            sd += den_(static_cast<Eigen::Index>(r));
            st += t_(static_cast<Eigen::Index>(r));
            pure = pure && t_(static_cast<Eigen::Index>(r)) == t_(static_cast<Eigen::Index>(rows[0]));
        }
        tree_.nodes[static_cast<std::size_t>(id)].value = sd > 1e-12 ? sn / sd : 0.0;
        if (pure || rows.size() < s_.min_samples_split || depth >= s_.max_depth) return id;

        const auto m = static_cast<double>(rows.size());
        const double parent = st * st / m;
        double best_gain = 1e-12;
        int best_f = -1;
        double best_thr = 0;
        std::vector<std::size_t> order(rows);
        for (int f : candidate_features()) {
            const auto col = static_cast<Eigen::Index>(f);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = x_(static_cast<Eigen::Index>(a), col), vb = x_(static_cast<Eigen::Index>(b), col);
                return va < vb || (va == vb && a < b);
            });
            double sl = 0;
            for (std::size_t k = 1; k < order.size(); ++k) {
                sl += t_(static_cast<Eigen::Index>(order[k - 1]));
                const double lo = x_(static_cast<Eigen::Index>(order[k - 1]), col);
                const double hi = x_(static_cast<Eigen::Index>(order[k]), col);
                if (!(lo < hi)) continue;
                const auto nl = static_cast<double>(k);
                const double sr = st - sl;
                const double gain = sl * sl / nl + sr * sr / (m - nl) - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = f;
                    double thr = lo + (hi - lo) / 2;
                    if (!(thr < hi)) thr = lo;
                    best_thr = thr;
                }
            }
        }
        if (best_f < 0) return id;
        std::vector<std::size_t> left, right;
        for (auto r : rows) (x_(static_cast<Eigen::Index>(r), best_f) <= best_thr ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best_f;
        node.threshold = best_thr;
        node.left = l;
        node.right = r;
        return id;
    }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(x_.cols());
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        if (s_.max_features <= 0 || s_.max_features >= p || rng_ == nullptr) return all;
        // Partial Fisher-Yates: the first max_features entries are the draw.
        for (int i = 0; i < s_.max_features; ++i) {
            const auto j = i + static_cast<int>(rng_->below(static_cast<std::uint64_t>(p - i)));
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        }
        all.resize(static_cast<std::size_t>(s_.max_features));
        return all;
    }

    const Matrix& x_;
    const Vector& t_;
    const Vector& num_;
    const Vector& den_;
    TreeSettings s_;
    CounterRng* rng_;
    Tree tree_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct RandomForestModel {
    std::vector<Tree> trees;

    Vector proba(const Matrix& q) const {
        Vector out = Vector::Zero(q.rows());
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            double s = 0;
            for (const auto& t : trees) s += t.predict(q.row(r));
            out(r) = s / static_cast<double>(trees.size());
        }
        return out;
    }
};

/// `max_features` 0 means floor(sqrt(p)). Tree k bootstraps and draws split
/// features from its own stream derived from (seed, k).
inline RandomForestModel fit_random_forest(const Matrix& x, const Labels& y, double n_trees, double max_depth,
                                           double max_features, std::uint64_t seed) {
    check_training(x, y);
    if (!(n_trees >= 1) || n_trees != std::floor(n_trees)) throw ConfigError("random forest: bad tree count");
    if (!(max_depth >= 1)) throw ConfigError("random forest: max_depth must be >= 1");
    if (!(max_features >= 0)) throw ConfigError("random forest: bad max_features");
    const auto n = static_cast<std::size_t>(x.rows());
    const Vector t = to_vector(y);
    const Vector ones = Vector::Ones(x.rows());
    TreeSettings s;
    s.max_depth = max_depth;
    s.max_features = max_features == 0 ? std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))))
                                       : static_cast<int>(max_features);
    RandomForestModel m;
    for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(n_trees); ++k) {
        CounterRng rng(derive_key(seed, {0x7EE, k}));
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        m.trees.push_back(detail::TreeBuilder(x, t, t, ones, s, &rng).build(std::move(rows)));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Gradient boosting on the logistic loss
// ---------------------------------------------------------------------------

struct BoostedModel {
    double f0 = 0;
    std::vector<Tree> trees;  // leaf values already include the stage step
    std::vector<double> train_loss;  // mean log loss after f0 and after each stage

    Vector decision(const Matrix& q) const {
        Vector f = Vector::Constant(q.rows(), f0);
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            for (const auto& t : trees) f(r) += t.predict(q.row(r));
        }
        return f;
    }
    Vector proba(const Matrix& q) const { return decision(q).unaryExpr([](double z) { return sigmoid(z); }); }
};

inline double mean_log_loss(const Vector& f, const Vector& y) {
    double s = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) s += softplus(f(i)) - y(i) * f(i);
    return s / static_cast<double>(f.size());
}

/// Each stage fits a regression tree to the gradient y - p and sets leaves to
/// the Newton step sum(g)/sum(p(1-p)), scaled by the learning rate. If a stage
/// would raise the training loss its step is halved (up to 30 times) and the
/// stage is dropped if that does not help, so the loss never increases.
inline BoostedModel fit_gradient_boosting(const Matrix& x, const Labels& y, double learning_rate, double n_trees,
                                          double max_depth) {
    check_training(x, y);
    if (!(learning_rate > 0 && learning_rate <= 1)) throw ConfigError("boosting: learning rate must be in (0, 1]");
    if (!(n_trees >= 1) || n_trees != std::floor(n_trees)) throw ConfigError("boosting: bad tree count");
    if (!(max_depth >= 1)) throw ConfigError("boosting: max_depth must be >= 1");
    const Eigen::Index n = x.rows();
    const Vector yv = to_vector(y);
    const double ybar = yv.mean();
    BoostedModel m;
    m.f0 = std::log(ybar / (1 - ybar));
    Vector f = Vector::Constant(n, m.f0);
    double loss = mean_log_loss(f, yv);
    m.train_loss.push_back(loss);
    TreeSettings s;
    s.max_depth = max_depth;
    std::vector<std::size_t> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    Vector g(n), h(n), step(n);
    for (int stage = 0; stage < static_cast<int>(n_trees); ++stage) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(f(i));
            g(i) = yv(i) - p;
            h(i) = p * (1 - p);
        }
        Tree t = detail::TreeBuilder(x, g, g, h, s, nullptr).build(all);
        for (Eigen::Index i = 0; i < n; ++i) step(i) = t.predict(x.row(i));
        double scale = learning_rate;
        double next = mean_log_loss(f + scale * step, yv);
        for (int k = 0; k < 30 && next > loss; ++k) {
            scale /= 2;
            next = mean_log_loss(f + scale * step, yv);
        }
        if (next > loss) {
            m.train_loss.push_back(loss);
            continue;
        }
        for (auto& node : t.nodes) node.value *= scale;
        f += scale * step;
        loss = next;
        m.train_loss.push_back(loss);
        m.trees.push_back(std::move(t));
    }
    return m;
}

inline nlohmann::ordered_json to_json(const Tree& t) {
    nlohmann::ordered_json j;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    j["feature"] = feature;
    j["threshold"] = threshold;
    j["left"] = left;
    j["right"] = right;
    j["value"] = value;
    return j;
}

inline Tree tree_from_json(const nlohmann::json& j, Eigen::Index n_features) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
        throw DataError("malformed tree in model document");
    }
    Tree t;
    for (std::size_t k = 0; k < n; ++k) {
        if (feature[k] >= 0) {
            const auto ok = [&](int c) { return c > static_cast<int>(k) && c < static_cast<int>(n); };
            if (feature[k] >= n_features || !ok(left[k]) || !ok(right[k])) throw DataError("malformed tree node");
        }
        t.nodes.push_back({feature[k], threshold[k], left[k], right[k], value[k]});
    }
    return t;
}

}  // namespace osteorad::ml
