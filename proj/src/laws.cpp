#include "subfair/laws.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace subfair {

namespace {

void check_measurement(const CompositionMeasurement& m) {
    if (!(m.ratio >= 0.0 && m.ratio <= 1.0)) throw std::invalid_argument("composition ratio outside [0, 1]");
    if (!(m.metric >= 0.0 && m.metric <= 1.0)) throw std::invalid_argument("metric value outside [0, 1]");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double raw_gap(const FairnessLaw& a, const FairnessLaw& b, double r) {
    return std::abs(predict_at(a, r) - predict_at(b, r));
}

// Interpolation MAE at interior ratios for one ratio -> metric curve.
double curve_mae(const std::map<double, std::vector<double>>& curve, const std::string& context) {
    const auto lo = curve.find(0.0);
    const auto hi = curve.find(1.0);
    if (lo == curve.end() || hi == curve.end()) {
        throw InputError(context + ": endpoint ratios 0 and 1 are both required");
    }
    const FairnessLaw law = fit_endpoints(SampleSet<double>(lo->second), SampleSet<double>(hi->second), Population{});
    std::vector<double> pred;
    std::vector<double> actual;
    for (const auto& [ratio, values] : curve) {
        if (ratio == 0.0 || ratio == 1.0) continue;
        for (double v : values) {
            pred.push_back(predict_at(law, ratio));
            actual.push_back(v);
        }
    }
    if (pred.empty()) throw InputError(context + ": no interior ratios to validate against");
    return mean_abs_err(pred, actual);
}

}  // namespace

FairnessLaw fit_endpoints(const SampleSet<double>& at_zero, const SampleSet<double>& at_one, GroupRef subgroup) {
    if (at_zero.size() == 0 || at_one.size() == 0) throw std::invalid_argument("fit_endpoints: empty endpoint sample");
    FairnessLaw law;
    law.subgroup = std::move(subgroup);
    law.intercept = at_zero.mean();
    law.slope = at_one.mean() - at_zero.mean();
    law.kind = FitKind::endpoints;
    return law;
}

FairnessLaw fit_regression(std::span<const CompositionMeasurement> measurements, GroupRef subgroup) {
    if (measurements.size() < 2) throw DegenerateFitError("fit_regression needs at least two measurements");
    const auto n = static_cast<Eigen::Index>(measurements.size());
    Eigen::ArrayXd x(n);
    Eigen::ArrayXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = measurements[static_cast<std::size_t>(i)];
        check_measurement(m);
        x(i) = m.ratio;
        y(i) = m.metric;
    }
    // shifting y by its first value keeps a constant metric's slope exactly zero
    const Eigen::ArrayXd dx = x - x.mean();
    const Eigen::ArrayXd dy = y - y(0);
    const double sxx = dx.square().sum();
    if (sxx == 0.0) throw DegenerateFitError("fit_regression: all ratios identical");
    const Eigen::Vector2d beta(y.mean() - (dx * dy).sum() / sxx * x.mean(), (dx * dy).sum() / sxx);
    const Eigen::ArrayXd residual = y - (beta(0) + beta(1) * x);

    FairnessLaw law;
    law.subgroup = std::move(subgroup);
    law.intercept = beta(0);
    law.slope = beta(1);
    law.kind = FitKind::regression;
    law.residual_mae = residual.abs().mean();
    if (n > 2) law.slope_stderr = std::sqrt(residual.square().sum() / static_cast<double>(n - 2) / sxx);
    return law;
}

double predict_at(const FairnessLaw& law, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("predict_at: ratio outside [0, 1]");
    return std::clamp(law.intercept + law.slope * ratio, 0.0, 1.0);
}

FairnessLaw complement(const FairnessLaw& law) {
    FairnessLaw out = law;
    out.intercept = law.intercept + law.slope;
    out.slope = -law.slope;
    return out;
}

Parity parity_ratio(const FairnessLaw& a, const FairnessLaw& b) {
    const double d0 = a.intercept - b.intercept;
    const double d1 = a.slope - b.slope;
    if (d0 == 0.0 && d1 == 0.0) return {0.5, 0.0};

    // Clamped predictions are piecewise linear; the minimum of their gap sits
    // at the crossing, a boundary, or a point where one law hits 0 or 1.
    std::vector<double> candidates{0.0, 1.0};
    for (const FairnessLaw* law : {&a, &b}) {
        if (law->slope == 0.0) continue;
        for (double level : {0.0, 1.0}) {
            const double r = (level - law->intercept) / law->slope;
            if (r > 0.0 && r < 1.0) candidates.push_back(r);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    if (d1 != 0.0) {
        const double crossing = -d0 / d1;
        if (crossing >= 0.0 && crossing <= 1.0) candidates.insert(candidates.begin(), crossing);
    }

    // first strict minimum: the crossing wins ties, then the smallest ratio
    Parity best{candidates.front(), raw_gap(a, b, candidates.front())};
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double g = raw_gap(a, b, candidates[i]);
        if (g < best.gap) best = {candidates[i], g};
    }
    return best;
}

InterpolationError interpolation_error(std::span<const CompositionMeasurement> measurements, MaeMode mode) {
    for (const auto& m : measurements) check_measurement(m);
    InterpolationError out;
    if (mode == MaeMode::per_seed) {
        std::map<int, std::map<double, std::vector<double>>> by_seed;
        for (const auto& m : measurements) by_seed[m.seed][m.ratio].push_back(m.metric);
        if (by_seed.empty()) throw InputError("interpolation_error: no measurements");
        for (const auto& [seed, curve] : by_seed) {
            out.seeds.push_back(seed);
            out.per_seed.push_back(curve_mae(curve, "seed " + std::to_string(seed)));
        }
        out.mean = mean_of(out.per_seed);
        return out;
    }
    std::map<double, std::vector<double>> pooled;
    for (const auto& m : measurements) pooled[m.ratio].push_back(m.metric);
    std::map<double, std::vector<double>> averaged;
    for (const auto& [ratio, values] : pooled) averaged[ratio] = {mean_of(values)};
    out.mean = curve_mae(averaged, "seed-averaged curve");
    return out;
}

}  // namespace subfair
