#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "subfair/metrics.hpp"
#include "subfair/synth.hpp"

using namespace subfair;

namespace {

const SubgroupKey F("sex", "F");
const SubgroupKey M("sex", "M");

}  // namespace

TEST(Sample, CountsAndDeterminism) {
    const std::vector<GroupScoreSpec> one{{F, Label::diseased, 0.0, 1.0, 5}};
    const auto c = sample_cohort(one, 1);
    ASSERT_EQ(c.size(), 5u);
    std::set<std::string> patients;
    for (const auto& r : c.records) {
        EXPECT_TRUE(F.matches(r));
        EXPECT_TRUE(r.positive());
        patients.insert(r.patient_id);
    }
    EXPECT_EQ(patients.size(), 5u);
    const auto again = sample_cohort(one, 1);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(again.records[i].score, c.records[i].score);
    EXPECT_NE(sample_cohort(one, 2).records[0].score, c.records[0].score);
}

TEST(Sample, MeanWithinCltBound) {
    const auto c = sample_cohort({{F, Label::normal, 0.0, 1.0, 10000}}, 3);
    double s = 0;
    for (const auto& r : c.records) s += r.score;
    EXPECT_NEAR(s / 10000, 0.0, 0.05);
}

TEST(Sample, Preconditions) {
    EXPECT_THROW(sample_cohort({}, 1), std::invalid_argument);
    EXPECT_THROW(sample_cohort({{F, Label::normal, 0.0, 0.0, 1}}, 1), std::invalid_argument);
    EXPECT_THROW(sample_cohort({{F, Label::normal, 0.0, 1.0, 0}}, 1), std::invalid_argument);
    const SubgroupKey other("age", "old");
    EXPECT_THROW(sample_cohort({{F, Label::normal, 0, 1, 1}, {other, Label::normal, 0, 1, 1}}, 1),
                 std::invalid_argument);
}

TEST(ClosedForm, Values) {
    EXPECT_DOUBLE_EQ(closed_form_sauroc({0.3, 1.0}, {0.3, 2.5}), 0.5);
    boost::math::normal n;
    EXPECT_NEAR(closed_form_sauroc({1, 1}, {0, 1}), boost::math::cdf(n, 1 / std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(closed_form_sauroc({1, 1}, {0, 1}), 0.7602, 1e-4);
    EXPECT_EQ(closed_form_sauroc({100, 1}, {0, 1}), 1.0);
}

TEST(ClosedForm, MonteCarloAgreement) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> pos(1, 1), neg(0, 1);
    long double wins = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) wins += pos(rng) > neg(rng);
    EXPECT_NEAR(static_cast<double>(wins / n), closed_form_sauroc({1, 1}, {0, 1}), 0.005);
}

TEST(NegativeMean, InvertsClosedForm) {
    const Gaussian pos{1.5, 0.8};
    for (double target : {0.55, 0.7, 0.9}) {
        const double mu = negative_mean_for(target, pos, 1.2);
        EXPECT_NEAR(closed_form_sauroc(pos, {mu, 1.2}), target, 1e-12);
    }
    EXPECT_THROW(negative_mean_for(1.0, pos, 1.0), std::invalid_argument);
}

TEST(PairwiseOracle, Examples) {
    Cohort c;
    c.schema = {"sex"};
    c.records = {{"a", "a", 0.8, Label::diseased, {{"sex", "M"}}},
                 {"b", "b", 0.6, Label::diseased, {{"sex", "F"}}},
                 {"c", "c", 0.7, Label::normal, {{"sex", "F"}}},
                 {"d", "d", 0.2, Label::normal, {{"sex", "F"}}}};
    EXPECT_DOUBLE_EQ(pairwise_oracle(c, F), 0.75);
    for (auto& r : c.records) r.score = 0.4;
    EXPECT_DOUBLE_EQ(pairwise_oracle(c, F), 0.5);
    c.records[0].score = c.records[1].score = 2.0;
    EXPECT_DOUBLE_EQ(pairwise_oracle(c, F), 1.0);
    EXPECT_THROW(pairwise_oracle(c, M), EmptyGroupError);
}

TEST(PairwiseOracle, AgreesWithIndependentCount) {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
        const auto c = oracle::random_cohort(rng, 120);
        for (const auto& g : oracle::groups_of(c)) {
            if (oracle::select(c, g, false, true).empty()) continue;
            EXPECT_NEAR(pairwise_oracle(c, g), static_cast<double>(oracle::sauroc(c, g)), 1e-15);
        }
    }
}

TEST(ClosedForm, EmpiricalSaurocNearLargeN) {
    const auto c = sample_cohort({{F, Label::diseased, 1, 1, 20000},
                                  {M, Label::diseased, 1, 1, 20000},
                                  {F, Label::normal, 0, 1, 20000},
                                  {M, Label::normal, -0.5, 1, 20000}},
                                 8);
    EXPECT_NEAR(sauroc(c, F), closed_form_sauroc({1, 1}, {0, 1}), 0.01);
    EXPECT_NEAR(sauroc(c, M), closed_form_sauroc({1, 1}, {-0.5, 1}), 0.01);
}
