#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subfair/io.hpp"
#include "subfair/laws.hpp"
#include "subfair/metrics.hpp"

namespace subfair::pipeline {

namespace fs = std::filesystem;
using json = io::json;

inline constexpr int kReportSchemaVersion = 1;

/// Command-line overrides applied on top of a config file.
struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out_dir;
    std::optional<fs::path> column_map;
    bool timestamps = true;
};

/// Training-composition axis of a sweep: the share of `category` within
/// `attribute`, the other categories splitting the remainder evenly.
struct CompositionAxis {
    std::string attribute;
    std::string category;
    std::vector<std::string> categories;  // every category of the attribute, sorted

    /// Per-category shares at swept share `rho`, in `categories` order.
    std::vector<std::pair<std::string, double>> shares(double rho) const;

    /// A group's own training share as offset + scale * rho. Groups that do
    /// not constrain the attribute follow rho itself.
    std::pair<double, double> own_ratio_affine(const GroupRef& group) const;
    double own_ratio(const GroupRef& group, double rho) const;

    /// Law over the group's own share re-expressed over rho.
    FairnessLaw on_axis(const FairnessLaw& law) const;
};

// ---- evaluate ---------------------------------------------------------------

struct Replicate {
    int seed = 0;
    Cohort cohort;
};

struct EvaluateSettings {
    std::vector<GroupRef> groups;
    std::vector<double> fpr_levels{0.95};
    std::vector<std::pair<GroupRef, GroupRef>> pairs;
    double ci_level = 0.95;
};

/// Metric report over one or more seed replicates. Per-group failures are
/// embedded as error entries; a cohort without positives aborts.
json evaluate(const std::vector<Replicate>& replicates, const EvaluateSettings& settings);

// ---- sweep ------------------------------------------------------------------

struct SweepPoint {
    double ratio = 0.0;
    int seed = 0;
    Cohort cohort;
};

struct SweepSettings {
    CompositionAxis axis;
    std::vector<GroupRef> groups;
    std::vector<double> fpr_levels{0.95};
    MaeMode mae_mode = MaeMode::per_seed;
    std::vector<std::pair<GroupRef, GroupRef>> parity;
};

struct SweepResult {
    json report;
    std::string plot_table;  // ratio, seed, subgroup, metric, value
};

SweepResult sweep(const std::vector<SweepPoint>& points, const SweepSettings& settings);

// ---- config-driven commands (files in, files out) ----------------------------

json run_evaluate(const fs::path& config_path, const RunOptions& options);
json run_sweep(const fs::path& config_path, const RunOptions& options);
json run_split(const fs::path& config_path, const RunOptions& options);
json run_simulate(const fs::path& config_path, const RunOptions& options);

/// "{ratio}" and "{seed}" substituted into a file pattern.
std::string expand_pattern(const std::string& pattern, double ratio, int seed);

}  // namespace subfair::pipeline
