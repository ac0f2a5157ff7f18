#include "subfair/metrics.hpp"

namespace subfair {

namespace {

void require_nonempty(const Cohort& cohort) {
    if (cohort.empty()) throw EmptyGroupError("empty cohort");
}

std::string describe(const GroupRef& group) { return "group '" + to_string(group) + "'"; }

}  // namespace

Vector<double> scores_of(const Cohort& cohort) {
    Vector<double> s(static_cast<Eigen::Index>(cohort.size()));
    for (std::size_t i = 0; i < cohort.size(); ++i) s(static_cast<Eigen::Index>(i)) = cohort.records[i].score;
    return s;
}

Mask positives_of(const Cohort& cohort) {
    Mask m(static_cast<Eigen::Index>(cohort.size()));
    for (std::size_t i = 0; i < cohort.size(); ++i) m(static_cast<Eigen::Index>(i)) = cohort.records[i].positive();
    return m;
}

Mask members_of(const Cohort& cohort, const GroupRef& group) {
    Mask m(static_cast<Eigen::Index>(cohort.size()));
    for (std::size_t i = 0; i < cohort.size(); ++i) m(static_cast<Eigen::Index>(i)) = matches(group, cohort.records[i]);
    return m;
}

ConfusionCounts<double> confusion_at(const Cohort& cohort, double threshold, const GroupRef& group, Scope scope) {
    require_nonempty(cohort);
    try {
        return confusion_at(scores_of(cohort), positives_of(cohort), members_of(cohort, group), threshold, scope);
    } catch (const EmptyGroupError& e) {
        throw EmptyGroupError(describe(group) + ": " + e.what());
    }
}

double sauroc(const Cohort& cohort, const GroupRef& group) {
    require_nonempty(cohort);
    const Mask pos = positives_of(cohort);
    const Mask neg = !pos && members_of(cohort, group);
    try {
        return roc_area(scores_of(cohort), pos, neg);
    } catch (const EmptyGroupError& e) {
        throw EmptyGroupError(describe(group) + ": " + e.what());
    }
}

RocCurve<double> sauroc_curve(const Cohort& cohort, const GroupRef& group) {
    require_nonempty(cohort);
    const Mask pos = positives_of(cohort);
    const Mask neg = !pos && members_of(cohort, group);
    try {
        return roc_curve(scores_of(cohort), pos, neg);
    } catch (const EmptyGroupError& e) {
        throw EmptyGroupError(describe(group) + ": " + e.what());
    }
}

double auroc_naive(const Cohort& cohort, const GroupRef& group) {
    require_nonempty(cohort);
    const Mask in_group = members_of(cohort, group);
    const Mask pos = positives_of(cohort);
    try {
        return roc_area(scores_of(cohort), pos && in_group, !pos && in_group);
    } catch (const EmptyGroupError& e) {
        throw EmptyGroupError(describe(group) + ": " + e.what());
    }
}

double fpr_at(const Cohort& cohort, const GroupRef& group, double threshold) {
    const auto c = confusion_at(cohort, threshold, group, Scope::negatives);
    return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

OperatingPoint<double> fpr_at_tpr(const Cohort& cohort, const std::vector<GroupRef>& groups, double min_tpr) {
    require_nonempty(cohort);
    OperatingPoint<double> op;
    op.threshold = shared_threshold(scores_of(cohort), positives_of(cohort), min_tpr);
    const auto pop = confusion_at(cohort, op.threshold, Population{}, Scope::positives);
    op.population_tpr = static_cast<double>(pop.tp) / static_cast<double>(pop.tp + pop.fn);
    if (op.population_tpr < min_tpr) throw std::logic_error("fpr_at_tpr: selected threshold misses the TPR target");
    op.fpr.reserve(groups.size());
    for (const auto& g : groups) op.fpr.emplace_back(g, fpr_at(cohort, g, op.threshold));
    return op;
}

ScoreSummary<double> score_stats(const Cohort& cohort, const GroupRef& group, ClassSelection cls) {
    std::vector<double> selected;
    for (const auto& r : cohort.records) {
        if (!matches(group, r)) continue;
        if (cls == ClassSelection::normal && r.positive()) continue;
        if (cls == ClassSelection::diseased && !r.positive()) continue;
        selected.push_back(r.score);
    }
    if (selected.empty()) throw EmptyGroupError(describe(group) + ": no records in the requested class");
    return summarize(Eigen::Map<const Vector<double>>(selected.data(), static_cast<Eigen::Index>(selected.size())));
}

}  // namespace subfair
