#pragma once
// Reference implementations used only by tests. Deliberately naive: direct
// enumeration, no shared code with the library's sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "subfair/cohort.hpp"
#include "subfair/types.hpp"

namespace oracle {

using subfair::Cohort;
using subfair::GroupRef;
using subfair::Label;
using subfair::ScoreRecord;

// P(pos > neg) + 0.5 P(pos == neg) over explicit score lists.
inline long double pair_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    long double wins = 0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) wins += 1;
            else if (p == n) wins += 0.5L;
        }
    }
    return wins / (static_cast<long double>(pos.size()) * static_cast<long double>(neg.size()));
}

inline std::vector<double> select(const Cohort& c, const GroupRef& g, bool positive, bool group_only) {
    std::vector<double> out;
    for (const auto& r : c.records) {
        if (r.positive() != positive) continue;
        if (group_only && !subfair::matches(g, r)) continue;
        out.push_back(r.score);
    }
    return out;
}

inline long double sauroc(const Cohort& c, const GroupRef& g) {
    return pair_auc(select(c, g, true, false), select(c, g, false, true));
}

inline long double naive(const Cohort& c, const GroupRef& g) {
    return pair_auc(select(c, g, true, true), select(c, g, false, true));
}

// Threshold search by trying every distinct score: the largest t with
// population TPR >= level.
inline double shared_threshold(const Cohort& c, double level) {
    std::set<double> candidates;
    for (const auto& r : c.records) candidates.insert(r.score);
    const auto pos = select(c, subfair::Population{}, true, false);
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        const auto hit = std::count_if(pos.begin(), pos.end(), [&](double s) { return s >= *it; });
        if (static_cast<double>(hit) / static_cast<double>(pos.size()) >= level) return *it;
    }
    return -INFINITY;
}

inline double fpr(const Cohort& c, const GroupRef& g, double t) {
    const auto neg = select(c, g, false, true);
    const auto hit = std::count_if(neg.begin(), neg.end(), [&](double s) { return s >= t; });
    return static_cast<double>(hit) / static_cast<double>(neg.size());
}

// Random cohort: 1-2 attributes with 2-3 categories each, scores drawn from a
// coarse grid so ties are common. Guarantees at least one positive.
inline Cohort random_cohort(std::mt19937_64& rng, std::size_t max_records = 200) {
    std::uniform_int_distribution<std::size_t> size_d(2, max_records);
    std::uniform_int_distribution<int> attr_d(1, 2);
    std::uniform_int_distribution<int> cat_d(2, 3);
    std::uniform_int_distribution<int> grid_d(0, 20);
    std::bernoulli_distribution coarse(0.5);
    std::uniform_real_distribution<double> fine(-3.0, 3.0);
    std::bernoulli_distribution pos_d(0.4);

    Cohort c;
    const int n_attr = attr_d(rng);
    std::vector<int> n_cat;
    for (int a = 0; a < n_attr; ++a) {
        c.schema.push_back("a" + std::to_string(a));
        n_cat.push_back(cat_d(rng));
    }
    const bool ties = coarse(rng);
    const std::size_t n = size_d(rng);
    for (std::size_t i = 0; i < n; ++i) {
        ScoreRecord r;
        r.image_id = "i" + std::to_string(i);
        r.patient_id = "p" + std::to_string(i);
        r.score = ties ? grid_d(rng) / 10.0 : fine(rng);
        r.label = pos_d(rng) ? Label::diseased : Label::normal;
        for (int a = 0; a < n_attr; ++a) {
            std::uniform_int_distribution<int> pick(0, n_cat[a] - 1);
            r.attributes[c.schema[a]] = "c" + std::to_string(pick(rng));
        }
        c.records.push_back(r);
    }
    c.records.front().label = Label::diseased;
    c.records.back().label = Label::normal;
    return c;
}

// Population, every single-attribute group and every observed pair intersection.
inline std::vector<GroupRef> groups_of(const Cohort& c) {
    std::vector<GroupRef> out{subfair::Population{}};
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : c.records) {
        for (const auto& kv : r.attributes) seen.insert(kv);
    }
    for (const auto& [a, v] : seen) out.push_back(subfair::SubgroupKey(a, v));
    if (c.schema.size() >= 2) {
        std::set<std::vector<std::pair<std::string, std::string>>> combos;
        for (const auto& r : c.records) {
            combos.insert({{c.schema[0], r.attributes.at(c.schema[0])}, {c.schema[1], r.attributes.at(c.schema[1])}});
        }
        for (const auto& k : combos) out.push_back(subfair::SubgroupKey(k));
    }
    return out;
}

// Toy metadata rows: patients with 1-3 frontal images each, sex F/M, roughly
// half diseased by patient.
inline std::vector<subfair::MetadataRow> toy_rows(std::mt19937_64& rng, std::size_t n_patients) {
    std::uniform_int_distribution<int> images_d(1, 3);
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> age_d(18, 90);
    std::vector<subfair::MetadataRow> rows;
    for (std::size_t p = 0; p < n_patients; ++p) {
        const bool female = coin(rng);
        const bool sick = coin(rng);
        const int k = images_d(rng);
        for (int i = 0; i < k; ++i) {
            subfair::MetadataRow r;
            r.patient_id = "P" + std::to_string(p);
            r.image_id = r.patient_id + "_" + std::to_string(i);
            r.sex = female ? "F" : "M";
            r.age = age_d(rng);
            if (sick) r.labels["Effusion"] = subfair::LabelState::positive;
            else r.no_finding = true;
            r.attributes["sex"] = r.sex;
            rows.push_back(r);
        }
    }
    return rows;
}

}  // namespace oracle
