#include <gtest/gtest.h>

#include <random>

#include "osteorad/seg_objectives.hpp"

using namespace osteorad;
using namespace osteorad::seg;

namespace {

// N=1, C=2, K=2: true class 0 everywhere, class-0 probabilities {0.8, 0.6}.
struct HandCase {
    LogitVolume logits{1, 2, 2};
    ClassIndexVolume labels{1, 2, {0, 0}};

    HandCase() {
        logits(0, 0, 0) = std::log(0.8);
        logits(0, 1, 0) = std::log(0.2);
        logits(0, 0, 1) = std::log(0.6);
        logits(0, 1, 1) = std::log(0.4);
    }
};

LogitVolume random_logits(std::mt19937_64& rng, int n, int c, int k, double scale = 3.0) {
    std::normal_distribution<double> nd(0.0, scale);
    LogitVolume v(n, c, k);
    for (auto& x : v.values) x = nd(rng);
    return v;
}

ClassIndexVolume random_labels(std::mt19937_64& rng, int n, int c, int k) {
    ClassIndexVolume l{n, k, std::vector<int>(static_cast<std::size_t>(n) * k)};
    for (auto& x : l.labels) x = static_cast<int>(rng() % static_cast<unsigned>(c));
    return l;
}

}  // namespace

TEST(Softmax, SymmetricAndClosedForm) {
    LogitVolume v(1, 2, 2);
    v(0, 0, 0) = 1.3;
    v(0, 1, 0) = 1.3;
    v(0, 0, 1) = std::log(1.0);
    v(0, 1, 1) = std::log(3.0);
    const auto p = softmax_channels(v);
    EXPECT_DOUBLE_EQ(p(0, 0, 0), 0.5);
    EXPECT_DOUBLE_EQ(p(0, 1, 0), 0.5);
    EXPECT_NEAR(p(0, 0, 1), 0.25, 1e-15);
    EXPECT_NEAR(p(0, 1, 1), 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalized) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        auto v = random_logits(rng, 2, 6, 5);
        const auto p = softmax_channels(v);
        for (auto& x : v.values) x += 123.456;
        const auto q = softmax_channels(v);
        for (std::size_t i = 0; i < p.values.size(); ++i) EXPECT_NEAR(p.values[i], q.values[i], 1e-12);
        for (int n = 0; n < 2; ++n) {
            for (int k = 0; k < 5; ++k) {
                double s = 0;
                for (int c = 0; c < 6; ++c) s += p(n, c, k);
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
        }
    }
}

TEST(Softmax, RejectsNaN) {
    LogitVolume v(1, 2, 1);
    v(0, 0, 0) = std::nan("");
    EXPECT_THROW(softmax_channels(v), NumericError);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
    const LogitVolume v(2, 6, 7, 0.25);
    std::mt19937_64 rng(2);
    EXPECT_NEAR(cross_entropy_loss(v, random_labels(rng, 2, 6, 7)), std::log(6.0), 1e-12);
}

TEST(CrossEntropy, HandCase) {
    const HandCase h;
    const double expected = -(std::log(0.8) + std::log(0.6)) / 2.0;  // 0.3669846
    EXPECT_NEAR(cross_entropy_loss(h.logits, h.labels), expected, 1e-12);
    EXPECT_NEAR(expected, 0.3669846, 1e-6);
}

TEST(CrossEntropy, MonotoneInTrueLogit) {
    LogitVolume v(1, 3, 1);
    const ClassIndexVolume l{1, 1, {1}};
    double prev = cross_entropy_loss(v, l);
    for (double x = 1; x <= 30; x += 1) {
        v(0, 1, 0) = x;
        const double cur = cross_entropy_loss(v, l);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
    EXPECT_LT(prev, 1e-12);
}

TEST(CrossEntropy, LabelOutOfRange) {
    const LogitVolume v(1, 2, 1);
    EXPECT_THROW(cross_entropy_loss(v, ClassIndexVolume{1, 1, {2}}), ConfigError);
}

TEST(CrossEntropy, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(3);
    const double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 2);
        const int c = 2 + static_cast<int>(rng() % 4);
        const int k = 1 + static_cast<int>(rng() % 6);
        auto v = random_logits(rng, n, c, k);
        const auto l = random_labels(rng, n, c, k);
        const auto g = cross_entropy_grad(v, l);
        double num = 0;
        double den = 0;
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            const double x0 = v.values[i];
            v.values[i] = x0 + h;
            const double fp = cross_entropy_loss(v, l);
            v.values[i] = x0 - h;
            const double fm = cross_entropy_loss(v, l);
            v.values[i] = x0;
            const double fd = (fp - fm) / (2 * h);
            num += (fd - g.values[i]) * (fd - g.values[i]);
            den += g.values[i] * g.values[i];
        }
        EXPECT_LE(std::sqrt(num / den), 1e-6);
    }
}

TEST(Dice, PerfectPredictionIsZero) {
    std::mt19937_64 rng(4);
    const auto l = random_labels(rng, 2, 4, 9);
    const auto oh = one_hot(l, 4);
    EXPECT_NEAR(dice_loss_from_probs(oh, oh), 0.0, 1e-12);
}

TEST(Dice, HandCase) {
    const HandCase h;
    const auto oh = one_hot(h.labels, 2);
    const double loss = dice_loss(h.logits, oh, DiceOptions{1e-12, true});
    EXPECT_NEAR(loss, 1.0 - (2.8 / 3.4) / 2.0, 1e-9);
    EXPECT_NEAR(loss, 0.5882, 1e-4);
    const auto scores = dice_scores(softmax_channels(h.logits), oh, 1e-12);
    EXPECT_NEAR(scores[0], 2.8 / 3.4, 1e-9);
    EXPECT_NEAR(scores[1], 0.0, 1e-9);
}

TEST(Dice, AbsentClassWithNoMassScoresOne) {
    Volume probs(1, 3, 4);
    ClassIndexVolume l{1, 4, {0, 0, 1, 1}};
    const auto oh = one_hot(l, 3);
    probs.values = oh.values;
    const auto s = dice_scores(probs, oh, 1e-6);
    EXPECT_DOUBLE_EQ(s[2], 1.0);
}

TEST(Dice, ScoreInUnitIntervalAndSymmetric) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        const auto p = softmax_channels(random_logits(rng, 1, 3, 8));
        const auto oh = one_hot(random_labels(rng, 1, 3, 8), 3);
        const auto a = dice_scores(p, oh, 1e-6);
        const auto b = dice_scores(oh, p, 1e-6);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_GT(a[i], 0.0);
            EXPECT_LE(a[i], 1.0);
            EXPECT_DOUBLE_EQ(a[i], b[i]);
        }
    }
}

TEST(Dice, ShapeMismatchAndBackgroundFlag) {
    const Volume a(1, 2, 3), b(1, 3, 3);
    EXPECT_THROW(dice_loss(a, b), ConfigError);
    const HandCase h;
    const auto oh = one_hot(h.labels, 2);
    // Only class 1 remains: its score is ~0, so the loss is ~1.
    EXPECT_NEAR(dice_loss(h.logits, oh, DiceOptions{1e-12, false}), 1.0, 1e-9);
}

TEST(TotalLoss, SumOfComponents) {
    const HandCase h;
    const auto oh = one_hot(h.labels, 2);
    const auto b = total_loss(h.logits, h.labels, oh, DiceOptions{1e-12, true});
    EXPECT_NEAR(b.total, b.cross_entropy + b.dice, 1e-12);
    EXPECT_NEAR(b.total, -(std::log(0.8) + std::log(0.6)) / 2.0 + 1.0 - (2.8 / 3.4) / 2.0, 1e-9);
}

TEST(TotalLoss, PerfectPredictionLimit) {
    ClassIndexVolume l{1, 3, {0, 1, 2}};
    LogitVolume v(1, 3, 3, -30.0);
    for (int k = 0; k < 3; ++k) v(0, l(0, k), k) = 30.0;
    const auto b = total_loss(v, l, one_hot(l, 3));
    EXPECT_LT(b.total, 1e-6);
}

TEST(SegEval, IdenticalMapsScoreOne) {
    LabelMap m(4, 4, 60.7, std::vector<std::uint8_t>{0, 1, 1, 2, 2, 2, 3, 4, 5, 5, 6, 7, 8, 8, 0, 0});
    const auto r = eval_segmentation(m, m);
    for (const auto& c : r.classes) {
        ASSERT_TRUE(c.defined());
        EXPECT_DOUBLE_EQ(*c.precision, 1.0);
        EXPECT_DOUBLE_EQ(*c.recall, 1.0);
        EXPECT_DOUBLE_EQ(*c.f1, 1.0);
        EXPECT_DOUBLE_EQ(*c.iou, 1.0);
    }
}

TEST(SegEval, DisjointMasksScoreZero) {
    const LabelMap pred(2, 1, 1.0, std::vector<std::uint8_t>{1, 0});
    const LabelMap truth(2, 1, 1.0, std::vector<std::uint8_t>{0, 1});
    const auto& c = eval_segmentation(pred, truth).classes[0];
    EXPECT_DOUBLE_EQ(*c.precision, 0.0);
    EXPECT_DOUBLE_EQ(*c.recall, 0.0);
    EXPECT_DOUBLE_EQ(*c.f1, 0.0);
    EXPECT_DOUBLE_EQ(*c.iou, 0.0);
}

TEST(SegEval, HandCountedTwoByTwo) {
    const LabelMap truth(2, 2, 1.0, std::vector<std::uint8_t>{1, 1, 0, 0});
    const LabelMap pred(2, 2, 1.0, std::vector<std::uint8_t>{1, 0, 0, 0});
    const auto r = eval_segmentation(pred, truth);
    const auto& c = r.classes[0];
    EXPECT_DOUBLE_EQ(*c.precision, 1.0);
    EXPECT_DOUBLE_EQ(*c.recall, 0.5);
    EXPECT_NEAR(*c.f1, 2.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(*c.iou, 0.5);
    // Every other class is absent from both maps and excluded from the means.
    for (std::size_t i = 1; i < r.classes.size(); ++i) EXPECT_FALSE(r.classes[i].defined());
    EXPECT_DOUBLE_EQ(*r.mean_iou, 0.5);
}

TEST(SegEval, F1IouIdentity) {
    std::mt19937 rng(6);
    for (int t = 0; t < 50; ++t) {
        LabelMap a(8, 8, 1.0), b(8, 8, 1.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = static_cast<std::uint8_t>(rng() % 9);
            b[i] = static_cast<std::uint8_t>(rng() % 9);
        }
        for (const auto& c : eval_segmentation(a, b).classes) {
            if (!c.defined()) continue;
            EXPECT_NEAR(*c.f1, 2 * *c.iou / (1 + *c.iou), 1e-12);
        }
    }
}

TEST(SegEval, DimensionMismatch) {
    EXPECT_THROW(eval_segmentation(LabelMap(2, 2, 1.0), LabelMap(2, 3, 1.0)), DataError);
}
