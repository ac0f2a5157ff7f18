#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subfair/types.hpp"

namespace subfair {

enum class View { frontal, lateral, other };
enum class LabelState { positive, negative, uncertain, absent };

/// One image of the raw metadata manifest, before inclusion filtering.
struct MetadataRow {
    std::string image_id;
    std::string patient_id;
    View view = View::frontal;
    bool support_devices = false;
    std::map<std::string, LabelState> labels;  // diagnostic findings
    bool no_finding = false;
    std::optional<int> age;
    std::string sex;                  // empty when missing
    std::optional<std::string> race;  // raw self-reported value
    std::map<std::string, std::string> attributes;  // derived protected-attribute groups

    /// diseased if any finding is positive, normal if flagged "no finding"
    /// without positive findings, otherwise no usable class.
    std::optional<Label> diagnosis() const;
};

/// Rows kept by a filtering/grouping step plus per-reason removal counts.
struct FilterResult {
    std::vector<MetadataRow> rows;
    std::map<std::string, std::size_t> removed;
};

/// Keeps frontal views without support devices whose labels are not all
/// uncertain and that resolve to normal or diseased.
FilterResult filter_inclusion(std::vector<MetadataRow> rows);

struct AgeStrategy {
    enum class Kind { fixed, tertile_of_max };
    Kind kind = Kind::fixed;
    int young_max = 31;
    int old_min = 61;
};

/// attributes["age"] = young | old; the middle band and missing ages are removed.
FilterResult assign_age_group(std::vector<MetadataRow> rows, const AgeStrategy& strategy = {});

/// attributes["race"] = white | black; everything else is removed.
FilterResult assign_race_group(std::vector<MetadataRow> rows);

/// attributes["sex"] = the row's sex value; rows without one are removed.
FilterResult assign_sex_group(std::vector<MetadataRow> rows);

/// Training composition at one sweep point.
struct CompositionSpec {
    std::string attribute;
    std::vector<std::pair<std::string, double>> ratios;  // category -> share, schema order
    std::size_t budget = 0;

    void validate() const;
};

struct SplitManifest {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    std::optional<CompositionSpec> composition;
    std::map<std::string, std::string> provenance;
};

/// Splits `total` into integer parts proportional to `shares` (summing to 1)
/// by largest remainder; equal remainders favour the earlier entry.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> shares);

/// Sorted distinct values of `attribute` over rows that carry it.
std::vector<std::string> categories_of(std::span<const MetadataRow> rows, const std::string& attribute);

struct EvalSets {
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::vector<MetadataRow> remaining_normal;
    std::vector<std::string> categories;
};

/// Validation and test sets balanced per (class x category) cell at the given
/// prevalence. Patients are sampled whole: once any of a patient's images is
/// taken, none of them can appear elsewhere.
EvalSets build_eval_sets(std::span<const MetadataRow> rows, const std::string& attribute, std::size_t n_val,
                         std::size_t n_test, double prevalence, std::uint64_t seed);

/// One training manifest per grid point, each with exactly `budget` normal images.
std::vector<SplitManifest> build_composition_sweep(std::span<const MetadataRow> remaining_normal,
                                                   std::span<const CompositionSpec> grid, std::uint64_t seed);

struct IntersectionalTest {
    SubgroupKey group;
    std::vector<std::string> test;
};

struct IntersectionalSets {
    std::vector<IntersectionalTest> tests;
    std::vector<std::string> train;  // every remaining normal image, uncontrolled
};

/// A balanced test set (n_per_cell normal + n_per_cell diseased) for every
/// category combination of every attribute pair.
IntersectionalSets build_intersectional_sets(std::span<const MetadataRow> rows,
                                             std::span<const std::pair<std::string, std::string>> attribute_pairs,
                                             std::size_t n_per_cell, std::uint64_t seed);

using PatientIndex = std::unordered_map<std::string, std::string>;  // image_id -> patient_id

PatientIndex patient_index(std::span<const MetadataRow> rows);

struct DisjointReport {
    std::vector<std::string> duplicate_images;  // image in more than one split (or twice in one)
    std::vector<std::string> shared_patients;   // patient present in more than one split
    std::vector<std::string> unknown_images;    // absent from the patient index

    bool ok() const { return duplicate_images.empty() && shared_patients.empty() && unknown_images.empty(); }
};

DisjointReport verify_disjoint(const SplitManifest& manifest, const PatientIndex& patients);

}  // namespace subfair
