#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osteorad/imaging.hpp"

namespace osteorad::seg {

/// Dense (N, C, K) volume: batch, channel, pixel; channel-major within each image.
struct Volume {
    int n = 0;
    int c = 0;
    int k = 0;
    std::vector<double> values;

    Volume() = default;
    Volume(int n_, int c_, int k_, double fill = 0.0) : n(n_), c(c_), k(k_) {
        if (n < 1 || c < 1 || k < 1) throw ConfigError("volume dimensions must be >= 1");
        values.assign(static_cast<std::size_t>(n) * c * k, fill);
    }

    std::size_t index(int in, int ic, int ik) const noexcept {
        return (static_cast<std::size_t>(in) * c + ic) * k + ik;
    }
    double& operator()(int in, int ic, int ik) { return values[index(in, ic, ik)]; }
    double operator()(int in, int ic, int ik) const { return values[index(in, ic, ik)]; }
    bool same_shape(const Volume& o) const noexcept { return n == o.n && c == o.c && k == o.k; }
};

using LogitVolume = Volume;
using OneHotLabels = Volume;

/// Per-pixel class indices, laid out as [n * K + k].
struct ClassIndexVolume {
    int n = 0;
    int k = 0;
    std::vector<int> labels;

    int operator()(int in, int ik) const { return labels[static_cast<std::size_t>(in) * k + ik]; }
};

inline void require_finite(const Volume& v) {
    for (double x : v.values) {
        if (!std::isfinite(x)) throw NumericError("non-finite logit");
    }
}

/// Softmax over the channel axis with max subtraction.
inline Volume softmax_channels(const LogitVolume& logits) {
    require_finite(logits);
    Volume out(logits.n, logits.c, logits.k);
    for (int in = 0; in < logits.n; ++in) {
        for (int ik = 0; ik < logits.k; ++ik) {
            double mx = logits(in, 0, ik);
            for (int ic = 1; ic < logits.c; ++ic) mx = std::max(mx, logits(in, ic, ik));
            double sum = 0;
            for (int ic = 0; ic < logits.c; ++ic) {
                const double e = std::exp(logits(in, ic, ik) - mx);
                out(in, ic, ik) = e;
                sum += e;
            }
            for (int ic = 0; ic < logits.c; ++ic) out(in, ic, ik) /= sum;
        }
    }
    return out;
}

inline void check_labels(const LogitVolume& logits, const ClassIndexVolume& labels) {
    if (labels.n != logits.n || labels.k != logits.k ||
        labels.labels.size() != static_cast<std::size_t>(logits.n) * logits.k) {
        throw ConfigError("label volume shape does not match logits");
    }
    for (int l : labels.labels) {
        if (l < 0 || l >= logits.c) throw ConfigError("label " + std::to_string(l) + " out of range");
    }
}

/// Mean negative log-softmax of the true class over all N*K pixels.
inline double cross_entropy_loss(const LogitVolume& logits, const ClassIndexVolume& labels) {
    require_finite(logits);
    check_labels(logits, labels);
    double total = 0;
    for (int in = 0; in < logits.n; ++in) {
        for (int ik = 0; ik < logits.k; ++ik) {
            double mx = logits(in, 0, ik);
            for (int ic = 1; ic < logits.c; ++ic) mx = std::max(mx, logits(in, ic, ik));
            double sum = 0;
            for (int ic = 0; ic < logits.c; ++ic) sum += std::exp(logits(in, ic, ik) - mx);
            const double log_p = logits(in, labels(in, ik), ik) - mx - std::log(sum);
            total += log_p;
        }
    }
    return -total / (static_cast<double>(logits.n) * logits.k);
}

/// d L_CE / d logits = (softmax - onehot) / (N K).
inline Volume cross_entropy_grad(const LogitVolume& logits, const ClassIndexVolume& labels) {
    check_labels(logits, labels);
    Volume g = softmax_channels(logits);
    const double scale = 1.0 / (static_cast<double>(logits.n) * logits.k);
    for (int in = 0; in < logits.n; ++in) {
        for (int ik = 0; ik < logits.k; ++ik) {
            g(in, labels(in, ik), ik) -= 1.0;
            for (int ic = 0; ic < logits.c; ++ic) g(in, ic, ik) *= scale;
        }
    }
    return g;
}

inline OneHotLabels one_hot(const ClassIndexVolume& labels, int classes) {
    OneHotLabels out(labels.n, classes, labels.k);
    for (int in = 0; in < labels.n; ++in) {
        for (int ik = 0; ik < labels.k; ++ik) {
            const int l = labels(in, ik);
            if (l < 0 || l >= classes) throw ConfigError("label " + std::to_string(l) + " out of range");
            out(in, l, ik) = 1.0;
        }
    }
    return out;
}

struct DiceOptions {
    double eps = 1e-6;
    bool include_background = true;  // channel 0 takes part in the class mean
};

/// Per-(image, class) soft Dice scores, laid out [n * C + c].
inline std::vector<double> dice_scores(const Volume& probs, const OneHotLabels& onehot, double eps) {
    if (!probs.same_shape(onehot)) throw ConfigError("dice: shape mismatch between prediction and one-hot truth");
    std::vector<double> scores(static_cast<std::size_t>(probs.n) * probs.c);
    for (int in = 0; in < probs.n; ++in) {
        for (int ic = 0; ic < probs.c; ++ic) {
            double inter = 0;
            double sp = 0;
            double sy = 0;
            for (int ik = 0; ik < probs.k; ++ik) {
                const double p = probs(in, ic, ik);
                const double y = onehot(in, ic, ik);
                inter += p * y;
                sp += p;
                sy += y;
            }
            scores[static_cast<std::size_t>(in) * probs.c + ic] = (2.0 * inter + eps) / (sp + sy + eps);
        }
    }
    return scores;
}

inline double dice_loss_from_probs(const Volume& probs, const OneHotLabels& onehot, const DiceOptions& opt = {}) {
    const auto scores = dice_scores(probs, onehot, opt.eps);
    const int c0 = opt.include_background ? 0 : 1;
    if (c0 >= probs.c) throw ConfigError("dice: no classes left after excluding background");
    double sum = 0;
    for (int in = 0; in < probs.n; ++in) {
        for (int ic = c0; ic < probs.c; ++ic) sum += scores[static_cast<std::size_t>(in) * probs.c + ic];
    }
    return 1.0 - sum / (static_cast<double>(probs.n) * (probs.c - c0));
}

inline double dice_loss(const LogitVolume& logits, const OneHotLabels& onehot, const DiceOptions& opt = {}) {
    if (!logits.same_shape(onehot)) throw ConfigError("dice: shape mismatch between logits and one-hot truth");
    return dice_loss_from_probs(softmax_channels(logits), onehot, opt);
}

struct LossBreakdown {
    double cross_entropy = 0;
    double dice = 0;
    double total = 0;
};

inline LossBreakdown total_loss(const LogitVolume& logits, const ClassIndexVolume& labels, const OneHotLabels& onehot,
                                const DiceOptions& opt = {}) {
    LossBreakdown b;
    b.cross_entropy = cross_entropy_loss(logits, labels);
    b.dice = dice_loss(logits, onehot, opt);
    b.total = b.cross_entropy + b.dice;
    return b;
}

// ---------------------------------------------------------------------------
// Segmentation evaluation
// ---------------------------------------------------------------------------

/// Metrics for one class. Empty optionals mark undefined values (0/0).
struct ClassMetrics {
    int class_id = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> iou;

    bool defined() const noexcept { return f1.has_value(); }
};

struct SegmentationReport {
    std::vector<ClassMetrics> classes;  // ids 1..8
    std::optional<double> mean_precision;
    std::optional<double> mean_recall;
    std::optional<double> mean_f1;
    std::optional<double> mean_iou;
};

inline ClassMetrics class_metrics(int class_id, std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassMetrics m{class_id, tp, fp, fn, {}, {}, {}, {}};
    const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
    m.iou = ratio(tp, tp + fp + fn);
    return m;
}

inline SegmentationReport eval_segmentation(const LabelMap& pred, const LabelMap& truth) {
    if (!pred.same_shape(truth)) throw DataError("seg-eval: dimension mismatch between prediction and truth");
    std::vector<std::size_t> tp(kNumClasses, 0), fp(kNumClasses, 0), fn(kNumClasses, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i];
        const int t = truth[i];
        if (p > kMaxClassId || t > kMaxClassId) throw DataError("seg-eval: label id out of range");
        if (p == t) {
            ++tp[static_cast<std::size_t>(p)];
        } else {
            ++fp[static_cast<std::size_t>(p)];
            ++fn[static_cast<std::size_t>(t)];
        }
    }
    SegmentationReport r;
    std::vector<double> ps, rs, fs, is;
    for (int c = 1; c <= kMaxClassId; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        auto m = class_metrics(c, tp[uc], fp[uc], fn[uc]);
        if (m.precision) ps.push_back(*m.precision);
        if (m.recall) rs.push_back(*m.recall);
        if (m.f1) fs.push_back(*m.f1);
        if (m.iou) is.push_back(*m.iou);
        r.classes.push_back(m);
    }
    const auto mean = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    r.mean_precision = mean(ps);
    r.mean_recall = mean(rs);
    r.mean_f1 = mean(fs);
    r.mean_iou = mean(is);
    return r;
}

}  // namespace osteorad::seg
