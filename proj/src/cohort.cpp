#include "subfair/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace subfair {

namespace {

const char* class_name(Label l) { return l == Label::diseased ? "diseased" : "normal"; }

using CellKey = std::pair<Label, std::string>;  // class, category description

std::string describe(const CellKey& cell) {
    return std::string("(") + class_name(cell.first) + ", " + cell.second + ")";
}

// Patients in seeded random order with their eligible images sorted by id.
struct PatientPool {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetadataRow*>> images;

    PatientPool(std::span<const MetadataRow> rows, std::mt19937_64& rng) {
        for (const auto& r : rows) images[r.patient_id].push_back(&r);
        for (auto& [patient, list] : images) {
            std::sort(list.begin(), list.end(),
                      [](const MetadataRow* a, const MetadataRow* b) { return a->image_id < b->image_id; });
            order.push_back(patient);
        }
        std::shuffle(order.begin(), order.end(), rng);
    }
};

using CellOf = std::function<std::optional<CellKey>(const MetadataRow&)>;

// Walks patients in pool order, taking images into cells that still have quota.
// A patient contributing any image is marked used, so their other images are
// withheld from every later split.
std::vector<std::string> fill_cells(const PatientPool& pool, std::set<std::string>& used, const CellOf& cell_of,
                                    std::map<CellKey, std::size_t> quota, const std::string& split_name) {
    std::size_t outstanding = 0;
    for (const auto& [cell, q] : quota) outstanding += q;
    std::vector<std::string> taken;
    for (const auto& patient : pool.order) {
        if (outstanding == 0) break;
        if (used.count(patient)) continue;
        bool contributed = false;
        for (const MetadataRow* row : pool.images.at(patient)) {
            const auto cell = cell_of(*row);
            if (!cell) continue;
            auto it = quota.find(*cell);
            if (it == quota.end() || it->second == 0) continue;
            --it->second;
            --outstanding;
            taken.push_back(row->image_id);
            contributed = true;
        }
        if (contributed) used.insert(patient);
    }
    if (outstanding > 0) {
        std::ostringstream msg;
        msg << split_name << ": patient-grouped sampling could not fill";
        for (const auto& [cell, q] : quota) {
            if (q > 0) msg << ' ' << describe(cell) << " short by " << q;
        }
        throw InputError(msg.str());
    }
    std::sort(taken.begin(), taken.end());
    return taken;
}

void check_available(std::span<const MetadataRow> rows, const CellOf& cell_of,
                     const std::map<CellKey, std::size_t>& requested) {
    std::map<CellKey, std::size_t> available;
    for (const auto& r : rows) {
        if (auto cell = cell_of(r)) ++available[*cell];
    }
    for (const auto& [cell, want] : requested) {
        const std::size_t have = available[cell];
        if (have < want) {
            std::ostringstream msg;
            msg << "cell " << describe(cell) << ": requested " << want << ", available " << have << ", deficit "
                << (want - have);
            throw InputError(msg.str());
        }
    }
}

bool is_black(const std::string& race) {
    static const std::set<std::string> variants{"BLACK/AFRICAN AMERICAN", "BLACK/CAPE VERDEAN", "BLACK/AFRICAN",
                                                "BLACK/CARIBBEAN ISLAND"};
    return variants.count(race) > 0;
}

}  // namespace

std::optional<Label> MetadataRow::diagnosis() const {
    for (const auto& [name, state] : labels) {
        if (state == LabelState::positive) return Label::diseased;
    }
    if (no_finding) return Label::normal;
    return std::nullopt;
}

FilterResult filter_inclusion(std::vector<MetadataRow> rows) {
    FilterResult out;
    for (const char* reason : {"not_frontal", "support_devices", "all_uncertain", "no_class"}) out.removed[reason] = 0;
    for (auto& r : rows) {
        if (r.view != View::frontal) {
            ++out.removed["not_frontal"];
            continue;
        }
        if (r.support_devices) {
            ++out.removed["support_devices"];
            continue;
        }
        std::size_t uncertain = 0;
        std::size_t stated = 0;
        for (const auto& [name, state] : r.labels) {
            if (state == LabelState::absent) continue;
            ++stated;
            uncertain += state == LabelState::uncertain;
        }
        if (stated > 0 && uncertain == stated && !r.no_finding) {
            ++out.removed["all_uncertain"];
            continue;
        }
        if (!r.diagnosis()) {
            ++out.removed["no_class"];
            continue;
        }
        out.rows.push_back(std::move(r));
    }
    return out;
}

FilterResult assign_age_group(std::vector<MetadataRow> rows, const AgeStrategy& strategy) {
    double young_max = strategy.young_max;
    double old_min = strategy.old_min;
    if (strategy.kind == AgeStrategy::Kind::tertile_of_max) {
        int max_age = -1;
        for (const auto& r : rows) {
            if (r.age) max_age = std::max(max_age, *r.age);
        }
        young_max = max_age / 3.0;
        old_min = 2.0 * max_age / 3.0;
    }
    FilterResult out;
    out.removed["age_missing"] = 0;
    out.removed["age_middle_band"] = 0;
    for (auto& r : rows) {
        if (!r.age || *r.age < 0) {
            ++out.removed["age_missing"];
            continue;
        }
        if (*r.age <= young_max) {
            r.attributes["age"] = "young";
        } else if (*r.age >= old_min) {
            r.attributes["age"] = "old";
        } else {
            ++out.removed["age_middle_band"];
            continue;
        }
        out.rows.push_back(std::move(r));
    }
    return out;
}

FilterResult assign_race_group(std::vector<MetadataRow> rows) {
    FilterResult out;
    out.removed["race_missing"] = 0;
    out.removed["race_other"] = 0;
    for (auto& r : rows) {
        if (!r.race || r.race->empty()) {
            ++out.removed["race_missing"];
            continue;
        }
        if (*r.race == "WHITE") {
            r.attributes["race"] = "white";
        } else if (is_black(*r.race)) {
            r.attributes["race"] = "black";
        } else {
            ++out.removed["race_other"];
            continue;
        }
        out.rows.push_back(std::move(r));
    }
    return out;
}

FilterResult assign_sex_group(std::vector<MetadataRow> rows) {
    FilterResult out;
    out.removed["sex_missing"] = 0;
    for (auto& r : rows) {
        if (r.sex.empty()) {
            ++out.removed["sex_missing"];
            continue;
        }
        r.attributes["sex"] = r.sex;
        out.rows.push_back(std::move(r));
    }
    return out;
}

void CompositionSpec::validate() const {
    if (budget == 0) throw InputError("composition budget must be positive");
    if (ratios.empty()) throw InputError("composition needs at least one category");
    double sum = 0.0;
    for (const auto& [cat, share] : ratios) {
        if (!(share >= 0.0 && share <= 1.0)) throw InputError("composition share for '" + cat + "' outside [0, 1]");
        sum += share;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("composition shares for '" + attribute + "' do not sum to 1");
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const double> shares) {
    std::vector<std::size_t> counts(shares.size());
    std::vector<double> remainder(shares.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = static_cast<double>(total) * shares[i];
        // shave rounding noise so 0.3 * 1000 is 300, not 299 + 0.99999
        const double floored = std::floor(exact + 1e-9);
        counts[i] = static_cast<std::size_t>(floored);
        remainder[i] = std::max(0.0, exact - floored);
        assigned += counts[i];
    }
    if (assigned > total) throw std::logic_error("apportion: shares exceed 1");
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-9; });
    for (std::size_t k = 0; assigned < total; ++k) {
        ++counts[order[k % order.size()]];
        ++assigned;
    }
    return counts;
}

std::vector<std::string> categories_of(std::span<const MetadataRow> rows, const std::string& attribute) {
    std::set<std::string> cats;
    for (const auto& r : rows) {
        if (auto it = r.attributes.find(attribute); it != r.attributes.end()) cats.insert(it->second);
    }
    return {cats.begin(), cats.end()};
}

EvalSets build_eval_sets(std::span<const MetadataRow> rows, const std::string& attribute, std::size_t n_val,
                         std::size_t n_test, double prevalence, std::uint64_t seed) {
    if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw InputError("prevalence outside [0, 1]");
    EvalSets out;
    out.categories = categories_of(rows, attribute);
    if (out.categories.empty()) throw InputError("no rows carry attribute '" + attribute + "'");

    const CellOf cell_of = [&attribute](const MetadataRow& r) -> std::optional<CellKey> {
        const auto it = r.attributes.find(attribute);
        const auto dx = r.diagnosis();
        if (it == r.attributes.end() || !dx) return std::nullopt;
        return CellKey{*dx, attribute + "=" + it->second};
    };
    const std::vector<double> even(out.categories.size(), 1.0 / static_cast<double>(out.categories.size()));
    const auto quotas = [&](std::size_t n) {
        const std::vector<double> class_shares{1.0 - prevalence, prevalence};
        const auto per_class = apportion(n, class_shares);
        std::map<CellKey, std::size_t> q;
        for (Label l : {Label::normal, Label::diseased}) {
            const auto per_cat = apportion(per_class[static_cast<std::size_t>(l)], even);
            for (std::size_t c = 0; c < out.categories.size(); ++c) {
                q[{l, attribute + "=" + out.categories[c]}] = per_cat[c];
            }
        }
        return q;
    };
    const auto val_quota = quotas(n_val);
    const auto test_quota = quotas(n_test);
    auto combined = val_quota;
    for (const auto& [cell, q] : test_quota) combined[cell] += q;
    check_available(rows, cell_of, combined);

    std::mt19937_64 rng(seed);
    const PatientPool pool(rows, rng);
    std::set<std::string> used;
    out.val = fill_cells(pool, used, cell_of, val_quota, "validation set");
    out.test = fill_cells(pool, used, cell_of, test_quota, "test set");
    for (const auto& r : rows) {
        if (!used.count(r.patient_id) && r.diagnosis() == Label::normal && r.attributes.count(attribute)) {
            out.remaining_normal.push_back(r);
        }
    }
    return out;
}

std::vector<SplitManifest> build_composition_sweep(std::span<const MetadataRow> remaining_normal,
                                                   std::span<const CompositionSpec> grid, std::uint64_t seed) {
    std::vector<SplitManifest> out;
    if (grid.empty()) return out;
    const std::string& attribute = grid.front().attribute;
    for (const auto& spec : grid) {
        spec.validate();
        if (spec.attribute != attribute) throw InputError("composition grid mixes attributes");
    }

    // One seeded order per category, shared by every grid point, so smaller
    // category shares are prefixes of larger ones.
    std::map<std::string, std::vector<std::string>> pools;
    for (const auto& r : remaining_normal) {
        if (auto it = r.attributes.find(attribute); it != r.attributes.end()) pools[it->second].push_back(r.image_id);
    }
    std::mt19937_64 rng(seed);
    for (auto& [cat, ids] : pools) {
        std::sort(ids.begin(), ids.end());
        std::shuffle(ids.begin(), ids.end(), rng);
    }

    for (const auto& spec : grid) {
        for (const auto& [cat, ids] : pools) {
            const bool listed = std::any_of(spec.ratios.begin(), spec.ratios.end(),
                                            [&cat = cat](const auto& p) { return p.first == cat; });
            if (!listed) throw InputError("composition omits category '" + cat + "' of '" + attribute + "'");
        }
        std::vector<double> shares;
        for (const auto& [cat, share] : spec.ratios) shares.push_back(share);
        const auto counts = apportion(spec.budget, shares);

        SplitManifest m;
        m.seed = seed;
        m.composition = spec;
        for (std::size_t c = 0; c < spec.ratios.size(); ++c) {
            const std::string& cat = spec.ratios[c].first;
            const auto it = pools.find(cat);
            const std::size_t have = it == pools.end() ? 0 : it->second.size();
            if (counts[c] > have) {
                std::ostringstream msg;
                msg << "composition " << attribute << '=' << cat << " share " << spec.ratios[c].second
                    << " needs " << counts[c] << " of budget " << spec.budget << ", only " << have
                    << " normal images available";
                throw InputError(msg.str());
            }
            if (counts[c] > 0) m.train.insert(m.train.end(), it->second.begin(), it->second.begin() + counts[c]);
        }
        std::sort(m.train.begin(), m.train.end());
        out.push_back(std::move(m));
    }
    return out;
}

IntersectionalSets build_intersectional_sets(std::span<const MetadataRow> rows,
                                             std::span<const std::pair<std::string, std::string>> attribute_pairs,
                                             std::size_t n_per_cell, std::uint64_t seed) {
    std::vector<SubgroupKey> combos;
    for (const auto& [first, second] : attribute_pairs) {
        if (first == second) throw InputError("attribute pair repeats '" + first + "'");
        for (const auto& a : categories_of(rows, first)) {
            for (const auto& b : categories_of(rows, second)) combos.emplace_back(SubgroupKey({{first, a}, {second, b}}));
        }
    }
    if (combos.empty()) throw InputError("attribute pairs produce no intersections");

    const auto cell_for = [](const SubgroupKey& key) -> CellOf {
        return [key](const MetadataRow& r) -> std::optional<CellKey> {
            const auto dx = r.diagnosis();
            if (!dx || !key.matches(r.attributes)) return std::nullopt;
            return CellKey{*dx, key.str()};
        };
    };

    for (const auto& key : combos) {
        check_available(rows, cell_for(key),
                        {{{Label::normal, key.str()}, n_per_cell}, {{Label::diseased, key.str()}, n_per_cell}});
    }

    std::mt19937_64 rng(seed);
    const PatientPool pool(rows, rng);
    std::set<std::string> used;
    IntersectionalSets out;
    for (const auto& key : combos) {
        std::map<CellKey, std::size_t> quota{{{Label::normal, key.str()}, n_per_cell},
                                             {{Label::diseased, key.str()}, n_per_cell}};
        out.tests.push_back({key, fill_cells(pool, used, cell_for(key), quota, "test set " + key.str())});
    }
    for (const auto& r : rows) {
        if (!used.count(r.patient_id) && r.diagnosis() == Label::normal) out.train.push_back(r.image_id);
    }
    std::sort(out.train.begin(), out.train.end());
    return out;
}

PatientIndex patient_index(std::span<const MetadataRow> rows) {
    PatientIndex idx;
    for (const auto& r : rows) idx.emplace(r.image_id, r.patient_id);
    return idx;
}

DisjointReport verify_disjoint(const SplitManifest& manifest, const PatientIndex& patients) {
    DisjointReport report;
    std::map<std::string, int> image_seen;
    std::map<std::string, std::set<int>> patient_splits;
    std::set<std::string> unknown;
    const std::vector<std::string>* splits[] = {&manifest.train, &manifest.val, &manifest.test};
    for (int s = 0; s < 3; ++s) {
        for (const auto& id : *splits[s]) {
            ++image_seen[id];
            const auto it = patients.find(id);
            if (it == patients.end()) {
                unknown.insert(id);
                continue;
            }
            patient_splits[it->second].insert(s);
        }
    }
    for (const auto& [id, n] : image_seen) {
        if (n > 1) report.duplicate_images.push_back(id);
    }
    for (const auto& [patient, in] : patient_splits) {
        if (in.size() > 1) report.shared_patients.push_back(patient);
    }
    report.unknown_images.assign(unknown.begin(), unknown.end());
    return report;
}

}  // namespace subfair
