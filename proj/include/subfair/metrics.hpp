#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "subfair/types.hpp"

namespace subfair {

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Scope { positives, negatives, both };

template <typename Scalar>
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    Scalar threshold{};
};

template <typename Scalar>
struct RocPoint {
    Scalar fpr;
    Scalar tpr;
    Scalar threshold;
};

/// Ordered from (0,0) at threshold +inf to (1,1) at threshold -inf.
template <typename Scalar>
struct RocCurve {
    std::vector<RocPoint<Scalar>> points;

    /// Trapezoidal area under the curve.
    Scalar area() const {
        Scalar a = 0;
        for (std::size_t i = 1; i < points.size(); ++i) {
            a += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / Scalar(2);
        }
        return a;
    }
};

template <typename Scalar>
struct ScoreSummary {
    std::size_t n = 0;
    Scalar mean{};
    Scalar std{};  // sample (n-1) standard deviation, 0 for n == 1
    Scalar min{};
    Scalar q1{};
    Scalar median{};
    Scalar q3{};
    Scalar max{};
};

template <typename Scalar>
struct OperatingPoint {
    Scalar threshold{};
    Scalar population_tpr{};
    std::vector<std::pair<GroupRef, Scalar>> fpr;  // in the order the groups were requested
};

namespace detail {

// Scores of counted records in descending order, each tagged positive/negative.
template <typename Derived>
std::vector<std::pair<typename Derived::Scalar, bool>> ranked(const Eigen::DenseBase<Derived>& scores,
                                                              const Mask& as_positive, const Mask& as_negative) {
    using Scalar = typename Derived::Scalar;
    if (scores.size() != as_positive.size() || scores.size() != as_negative.size()) {
        throw std::invalid_argument("score and mask lengths differ");
    }
    std::vector<std::pair<Scalar, bool>> out;
    out.reserve(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (as_positive(i)) out.emplace_back(scores(i), true);
        else if (as_negative(i)) out.emplace_back(scores(i), false);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    return out;
}

// Quantile with linear interpolation between order statistics of a sorted range.
template <typename Scalar>
Scalar sorted_quantile(const std::vector<Scalar>& sorted, Scalar q) {
    const Scalar pos = q * Scalar(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const Scalar frac = pos - Scalar(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Confusion counts under the rule "positive iff score >= threshold".
/// `selected` picks the records in the group; `scope` restricts the classes counted.
template <typename Derived>
ConfusionCounts<typename Derived::Scalar> confusion_at(const Eigen::DenseBase<Derived>& scores, const Mask& positive,
                                                       const Mask& selected, typename Derived::Scalar threshold,
                                                       Scope scope) {
    if (scores.size() != positive.size() || scores.size() != selected.size()) {
        throw std::invalid_argument("score and mask lengths differ");
    }
    ConfusionCounts<typename Derived::Scalar> c;
    c.threshold = threshold;
    const bool want_pos = scope != Scope::negatives;
    const bool want_neg = scope != Scope::positives;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (!selected(i)) continue;
        const bool predicted = scores(i) >= threshold;
        if (positive(i) && want_pos) (predicted ? c.tp : c.fn)++;
        if (!positive(i) && want_neg) (predicted ? c.fp : c.tn)++;
    }
    if (want_pos && c.tp + c.fn == 0) throw EmptyGroupError("selection contains no positives");
    if (want_neg && c.fp + c.tn == 0) throw EmptyGroupError("selection contains no negatives");
    return c;
}

/// ROC curve of the records flagged `as_positive` (TPR axis) against those
/// flagged `as_negative` (FPR axis), one point per distinct score plus the
/// two infinite sentinel thresholds.
template <typename Derived>
RocCurve<typename Derived::Scalar> roc_curve(const Eigen::DenseBase<Derived>& scores, const Mask& as_positive,
                                             const Mask& as_negative) {
    using Scalar = typename Derived::Scalar;
    const auto ranked = detail::ranked(scores, as_positive, as_negative);
    std::int64_t n_pos = 0;
    for (const auto& r : ranked) n_pos += r.second;
    const std::int64_t n_neg = static_cast<std::int64_t>(ranked.size()) - n_pos;
    if (n_pos == 0) throw EmptyGroupError("no positives for the TPR axis");
    if (n_neg == 0) throw EmptyGroupError("no negatives for the FPR axis");

    RocCurve<Scalar> curve;
    curve.points.push_back({Scalar(0), Scalar(0), std::numeric_limits<Scalar>::infinity()});
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    for (std::size_t i = 0; i < ranked.size();) {
        const Scalar t = ranked[i].first;
        for (; i < ranked.size() && ranked[i].first == t; ++i) (ranked[i].second ? tp : fp)++;
        curve.points.push_back({Scalar(fp) / Scalar(n_neg), Scalar(tp) / Scalar(n_pos), t});
    }
    curve.points.push_back({Scalar(1), Scalar(1), -std::numeric_limits<Scalar>::infinity()});
    return curve;
}

/// Trapezoidal ROC area accumulated in integer counts, so the result equals
/// (wins + ties/2) / (P * N) up to a single rounding.
template <typename Derived>
typename Derived::Scalar roc_area(const Eigen::DenseBase<Derived>& scores, const Mask& as_positive,
                                  const Mask& as_negative) {
    using Scalar = typename Derived::Scalar;
    const auto ranked = detail::ranked(scores, as_positive, as_negative);
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t twice_area = 0;  // sum of dFP * (TP_prev + TP_next)
    for (std::size_t i = 0; i < ranked.size();) {
        const Scalar t = ranked[i].first;
        const std::int64_t tp_prev = tp;
        const std::int64_t fp_prev = fp;
        for (; i < ranked.size() && ranked[i].first == t; ++i) (ranked[i].second ? tp : fp)++;
        twice_area += (fp - fp_prev) * (tp_prev + tp);
    }
    if (tp == 0) throw EmptyGroupError("no positives for the TPR axis");
    if (fp == 0) throw EmptyGroupError("no negatives for the FPR axis");
    return Scalar(twice_area) / (Scalar(2) * Scalar(tp) * Scalar(fp));
}

/// Largest threshold at which the fraction of positives scoring >= threshold
/// reaches `min_tpr`.
template <typename Derived>
typename Derived::Scalar shared_threshold(const Eigen::DenseBase<Derived>& scores, const Mask& positive,
                                          typename Derived::Scalar min_tpr) {
    using Scalar = typename Derived::Scalar;
    if (!(min_tpr > Scalar(0) && min_tpr <= Scalar(1))) throw std::invalid_argument("min_tpr must lie in (0, 1]");
    if (scores.size() != positive.size()) throw std::invalid_argument("score and mask lengths differ");
    std::vector<Scalar> pos;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (positive(i)) pos.push_back(scores(i));
    }
    if (pos.empty()) throw EmptyGroupError("cohort contains no positives");
    std::sort(pos.begin(), pos.end(), std::greater<>());
    const auto n = static_cast<Scalar>(pos.size());
    for (std::size_t k = 1; k <= pos.size(); ++k) {
        // the k-th largest score admits at least k positives; ties only add more
        if (Scalar(k) / n >= min_tpr) return pos[k - 1];
    }
    throw std::logic_error("shared_threshold: TPR target unreachable with threshold at the minimum positive score");
}

template <typename Derived>
ScoreSummary<typename Derived::Scalar> summarize(const Eigen::DenseBase<Derived>& values) {
    using Scalar = typename Derived::Scalar;
    if (values.size() == 0) throw EmptyGroupError("empty score selection");
    const Vector<Scalar> v = values;
    std::vector<Scalar> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end());
    ScoreSummary<Scalar> s;
    s.n = sorted.size();
    s.mean = v.mean();
    if (s.n > 1) {
        const Scalar ss = (v.array() - s.mean).square().sum();
        s.std = std::sqrt(ss / Scalar(s.n - 1));
    }
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = detail::sorted_quantile(sorted, Scalar(0.25));
    s.median = detail::sorted_quantile(sorted, Scalar(0.5));
    s.q3 = detail::sorted_quantile(sorted, Scalar(0.75));
    return s;
}

// ---- cohort-level API -------------------------------------------------------

enum class ClassSelection { normal, diseased, both };

Vector<double> scores_of(const Cohort& cohort);
Mask positives_of(const Cohort& cohort);
Mask members_of(const Cohort& cohort, const GroupRef& group);

ConfusionCounts<double> confusion_at(const Cohort& cohort, double threshold, const GroupRef& group, Scope scope);

/// Population TPR against the group's own FPR, integrated over all thresholds.
double sauroc(const Cohort& cohort, const GroupRef& group);

/// Curve behind `sauroc`.
RocCurve<double> sauroc_curve(const Cohort& cohort, const GroupRef& group);

/// Ordinary AUROC using only the group's own positives and negatives.
double auroc_naive(const Cohort& cohort, const GroupRef& group);

/// One population-wide threshold for `min_tpr`, FPR reported per group.
OperatingPoint<double> fpr_at_tpr(const Cohort& cohort, const std::vector<GroupRef>& groups, double min_tpr);

/// FPR of the group's negatives at a fixed threshold.
double fpr_at(const Cohort& cohort, const GroupRef& group, double threshold);

ScoreSummary<double> score_stats(const Cohort& cohort, const GroupRef& group, ClassSelection cls);

}  // namespace subfair
