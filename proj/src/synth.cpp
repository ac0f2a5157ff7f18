#include "subfair/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "subfair/stats.hpp"

namespace subfair {

namespace {

std::string numbered(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%07zu", prefix, i);
    return buf;
}

std::vector<std::string> attribute_names(const SubgroupKey& key) {
    std::vector<std::string> names;
    for (const auto& [attr, cat] : key.constraints()) names.push_back(attr);
    return names;
}

}  // namespace

Cohort sample_cohort(const std::vector<GroupScoreSpec>& specs, std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("sample_cohort: no specs");
    Cohort cohort;
    cohort.schema = attribute_names(specs.front().subgroup);
    std::mt19937_64 rng(seed);
    std::size_t next = 0;
    for (const auto& spec : specs) {
        if (!(spec.std > 0.0)) throw std::invalid_argument("sample_cohort: std must be positive");
        if (spec.count == 0) throw std::invalid_argument("sample_cohort: count must be positive");
        if (attribute_names(spec.subgroup) != cohort.schema) {
            throw std::invalid_argument("sample_cohort: specs constrain different attributes");
        }
        std::normal_distribution<double> draw(spec.mean, spec.std);
        std::map<std::string, std::string> attrs(spec.subgroup.constraints().begin(), spec.subgroup.constraints().end());
        for (std::size_t i = 0; i < spec.count; ++i, ++next) {
            cohort.records.push_back({numbered("syn", next), numbered("synp", next), draw(rng), spec.label, attrs});
        }
    }
    return cohort;
}

double closed_form_sauroc(const Gaussian& pos, const Gaussian& neg) {
    if (!(pos.std > 0.0 && neg.std > 0.0)) throw std::invalid_argument("closed_form_sauroc: std must be positive");
    return normal_cdf((pos.mean - neg.mean) / std::hypot(pos.std, neg.std));
}

double negative_mean_for(double target, const Gaussian& pos, double neg_std) {
    if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("negative_mean_for: target outside (0, 1)");
    return pos.mean - normal_quantile(target) * std::hypot(pos.std, neg_std);
}

double pairwise_oracle(const Cohort& cohort, const GroupRef& group) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (const auto& r : cohort.records) {
        if (r.positive()) pos.push_back(r.score);
        else if (matches(group, r)) neg.push_back(r.score);
    }
    if (pos.empty() || neg.empty()) throw EmptyGroupError("pairwise_oracle: group '" + to_string(group) + "' lacks a class");
    std::int64_t twice_wins = 0;
    for (double p : pos) {
        for (double n : neg) twice_wins += p > n ? 2 : (p == n ? 1 : 0);
    }
    return static_cast<double>(twice_wins) /
           (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace subfair
