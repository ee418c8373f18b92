#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "osteorad/error.hpp"
#include "osteorad/imaging.hpp"

namespace osteorad::metrics {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct RocPoint {
    double fpr = 0;
    double tpr = 0;
    double threshold = 0;  // predicted positive when score >= threshold
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auroc = 0;
};

inline void check_binary(const std::vector<int>& labels) {
    for (int v : labels) {
        if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    }
}

/// ROC with one point per distinct score, from (0,0) at +inf down to (1,1).
/// Tied scores move TPR and FPR together, so the trapezoid area equals the
/// Mann-Whitney statistic with ties counted as one half.
inline RocCurve roc_auroc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw DataError("labels and scores differ in length");
    check_binary(labels);
    const auto npos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const auto nneg = static_cast<double>(labels.size()) - npos;
    if (npos == 0 || nneg == 0) throw DataError("ROC needs both classes");
    for (double s : scores) {
        if (std::isnan(s)) throw NumericError("NaN score");
    }
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    RocCurve c;
    c.points.push_back({0, 0, std::numeric_limits<double>::infinity()});
    double tp = 0, fp = 0;
    for (std::size_t k = 0; k < idx.size();) {
        const double s = scores[idx[k]];
        for (; k < idx.size() && scores[idx[k]] == s; ++k) (labels[idx[k]] ? tp : fp) += 1;
        c.points.push_back({fp / nneg, tp / npos, s});
    }
    // Integrate with counts to keep the sum exact for small cases.
    double area2 = 0;
    for (std::size_t k = 1; k < c.points.size(); ++k) {
        const double dfp = (c.points[k].fpr - c.points[k - 1].fpr) * nneg;
        const double stp = (c.points[k].tpr + c.points[k - 1].tpr) * npos;
        area2 += dfp * stp;
    }
    c.auroc = area2 / (2 * npos * nneg);
    return c;
}

struct YoudenPoint {
    double threshold = 0;
    double j = 0;
    double fpr = 0;
    double tpr = 0;
};

/// Maximises TPR - FPR; ties go to the smaller FPR, then the lower threshold.
inline YoudenPoint youden_threshold(const RocCurve& curve) {
    if (curve.points.empty()) throw DataError("empty ROC curve");
    YoudenPoint best{curve.points[0].threshold, curve.points[0].tpr - curve.points[0].fpr, curve.points[0].fpr,
                     curve.points[0].tpr};
    for (const auto& p : curve.points) {
        const double j = p.tpr - p.fpr;
        const bool better = j > best.j || (j == best.j && (p.fpr < best.fpr ||
                                                           (p.fpr == best.fpr && p.threshold < best.threshold)));
        if (better) best = {p.threshold, j, p.fpr, p.tpr};
    }
    return best;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct ClassificationMetrics {
    Confusion confusion;
    double accuracy = kUndefined;
    double sensitivity = kUndefined;
    double specificity = kUndefined;
    double f1 = kUndefined;
};

/// Metrics on the positive (osteoporosis) class; undefined ratios are NaN.
inline ClassificationMetrics classification_metrics(const std::vector<int>& labels, const std::vector<int>& predicted) {
    if (labels.size() != predicted.size()) throw DataError("labels and predictions differ in length");
    check_binary(labels);
    check_binary(predicted);
    ClassificationMetrics m;
    auto& c = m.confusion;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            (predicted[i] ? c.tp : c.fn) += 1;
        } else {
            (predicted[i] ? c.fp : c.tn) += 1;
        }
    }
    const auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? kUndefined : static_cast<double>(a) / static_cast<double>(b);
    };
    m.accuracy = ratio(c.tp + c.tn, labels.size());
    m.sensitivity = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    return m;
}

inline std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold) {
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
    return out;
}

struct PatientAggregate {
    FeatureTable table;  // one row per (patient, region); slice_index = -1
    std::vector<std::size_t> slice_counts;
    std::vector<std::string> warnings;
};

/// Per-feature mean over each patient's slices. Rows are summed in slice order
/// and emitted sorted by (patient, region), so input row order never matters.
inline PatientAggregate aggregate_patient(const FeatureTable& t, std::size_t expected_slices = 0) {
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, std::size_t>>> groups;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto& k = t.keys()[r];
        groups[{k.patient_id, k.region}].push_back({k.slice_index, r});
    }
    PatientAggregate out{FeatureTable(t.names()), {}, {}};
    std::vector<double> mean(t.cols());
    for (auto& [key, rows] : groups) {
        std::sort(rows.begin(), rows.end());
        std::fill(mean.begin(), mean.end(), 0.0);
        for (const auto& [slice, r] : rows) {
            for (std::size_t c = 0; c < t.cols(); ++c) mean[c] += t.at(r, c);
        }
        for (auto& v : mean) v /= static_cast<double>(rows.size());
        out.table.add_row({key.first, -1, key.second}, mean);
        out.slice_counts.push_back(rows.size());
        if (expected_slices > 0 && rows.size() != expected_slices) {
            out.warnings.push_back("patient " + key.first + " has " + std::to_string(rows.size()) + " slices, expected " +
                                   std::to_string(expected_slices));
        }
    }
    return out;
}

}  // namespace osteorad::metrics
