#pragma once

#include <optional>
#include <span>
#include <vector>

#include "subfair/stats.hpp"
#include "subfair/types.hpp"

namespace subfair {

/// One (training ratio, metric) observation for a subgroup.
struct CompositionMeasurement {
    double ratio = 0.0;   // fraction of training samples drawn from the subgroup
    double metric = 0.0;  // typically sAUROC
    int seed = 0;
};

enum class FitKind { endpoints, regression };

/// Linear model metric(ratio) = intercept + slope * ratio.
struct FairnessLaw {
    GroupRef subgroup;
    double intercept = 0.0;
    double slope = 0.0;
    FitKind kind = FitKind::endpoints;
    std::optional<double> residual_mae;
    std::optional<double> slope_stderr;  // regression fits with more than two points
};

/// Law through the seed means at ratio 0 and ratio 1.
FairnessLaw fit_endpoints(const SampleSet<double>& at_zero, const SampleSet<double>& at_one, GroupRef subgroup);

/// Ordinary least squares over every (ratio, metric) pair, seeds pooled.
FairnessLaw fit_regression(std::span<const CompositionMeasurement> measurements, GroupRef subgroup);

/// intercept + slope * ratio, clamped to [0, 1]. Throws for ratio outside [0, 1].
double predict_at(const FairnessLaw& law, double ratio);

/// Same law expressed in terms of 1 - ratio, e.g. male share -> female share.
FairnessLaw complement(const FairnessLaw& law);

struct Parity {
    double ratio = 0.5;
    double gap = 0.0;
};

/// Ratio in [0, 1] minimizing |predict_at(a) - predict_at(b)|; both laws must
/// share the same ratio axis. Ties go to the unclamped crossing, then to the
/// smallest ratio. Identical laws give ratio 0.5 and gap 0.
Parity parity_ratio(const FairnessLaw& a, const FairnessLaw& b);

enum class MaeMode { per_seed, seed_averaged };

struct InterpolationError {
    std::vector<int> seeds;         // per_seed mode only
    std::vector<double> per_seed;   // per_seed mode only
    double mean = 0.0;
};

/// Error of endpoint interpolation at the interior ratios. In per_seed mode
/// each seed gets its own endpoint law; in seed_averaged mode one law is fit
/// to the seed-mean curve.
InterpolationError interpolation_error(std::span<const CompositionMeasurement> measurements, MaeMode mode);

}  // namespace subfair
