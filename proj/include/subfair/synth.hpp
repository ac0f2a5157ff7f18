#pragma once

#include <cstdint>
#include <vector>

#include "subfair/types.hpp"

namespace subfair {

/// Gaussian score family for one (subgroup, class) cell of a synthetic cohort.
struct GroupScoreSpec {
    SubgroupKey subgroup;
    Label label = Label::normal;
    double mean = 0.0;
    double std = 1.0;
    std::size_t count = 1;
};

struct Gaussian {
    double mean = 0.0;
    double std = 1.0;
};

/// Draws every spec's scores from its Gaussian; all specs must constrain the
/// same attributes. Image and patient ids are unique per record.
Cohort sample_cohort(const std::vector<GroupScoreSpec>& specs, std::uint64_t seed);

/// Expected sAUROC when pooled positives ~ pos and the group's negatives ~ neg.
double closed_form_sauroc(const Gaussian& pos, const Gaussian& neg);

/// Negative-class mean that makes closed_form_sauroc equal `target`.
double negative_mean_for(double target, const Gaussian& pos, double neg_std);

/// O(n^2) pair count of (any positive, group negative) with ties as 1/2.
double pairwise_oracle(const Cohort& cohort, const GroupRef& group);

}  // namespace subfair
