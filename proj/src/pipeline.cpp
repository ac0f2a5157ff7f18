#include "subfair/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "subfair/cohort.hpp"
#include "subfair/synth.hpp"

namespace subfair::pipeline {

namespace {

// ---- config helpers ---------------------------------------------------------

struct Config {
    json doc;
    fs::path dir;
    std::string hash;

    fs::path path(const std::string& key) const {
        if (!doc.contains(key)) throw InputError("config: missing '" + key + "'");
        return resolve(doc.at(key).get<std::string>());
    }
    fs::path resolve(const std::string& p) const {
        const fs::path q(p);
        return q.is_absolute() ? q : dir / q;
    }
};

Config load_config(const fs::path& config_path, const RunOptions& options) {
    Config c;
    c.doc = io::read_json(config_path);
    if (!c.doc.is_object()) throw InputError(config_path.string() + ": config must be a JSON object");
    c.dir = config_path.parent_path();
    std::string overrides;
    if (options.seed) overrides += "seed=" + std::to_string(*options.seed);
    if (options.column_map) overrides += ";column_map=" + options.column_map->filename().string();
    c.hash = io::fnv1a_hex(c.doc.dump() + overrides);
    return c;
}

template <typename T>
T get(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError("config '" + key + "': " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? get<T>(j, key) : fallback;
}

std::vector<GroupRef> groups_from(const json& j, const std::string& key) {
    std::vector<GroupRef> out;
    try {
        for (const auto& g : get<std::vector<std::string>>(j, key)) out.push_back(parse_group(g));
    } catch (const std::invalid_argument& e) {
        throw InputError("config '" + key + "': " + e.what());
    }
    return out;
}

std::vector<std::pair<GroupRef, GroupRef>> pairs_from(const json& j, const std::string& key) {
    std::vector<std::pair<GroupRef, GroupRef>> out;
    if (!j.contains(key)) return out;
    try {
        for (const auto& p : get<std::vector<std::vector<std::string>>>(j, key)) {
            if (p.size() != 2) throw InputError("config '" + key + "': each entry needs two groups");
            out.emplace_back(parse_group(p[0]), parse_group(p[1]));
        }
    } catch (const std::invalid_argument& e) {
        throw InputError("config '" + key + "': " + e.what());
    }
    return out;
}

io::CohortColumns cohort_columns(const Config& c, const RunOptions& options) {
    if (options.column_map) return io::CohortColumns::from_json(io::read_json(*options.column_map));
    if (c.doc.contains("column_map")) return io::CohortColumns::from_json(io::read_json(c.path("column_map")));
    return {};
}

fs::path out_dir(const Config& c, const RunOptions& options) {
    if (options.out_dir) return *options.out_dir;
    if (c.doc.contains("out_dir")) return c.path("out_dir");
    throw InputError("no output directory: pass --out-dir or set 'out_dir' in the config");
}

std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json run_block(const Config& c, const RunOptions& options) {
    return {{"config_hash", c.hash}, {"generated_at", options.timestamps ? now_iso() : std::string()}};
}

// Places the run block right after schema_version/kind.
json with_run(const json& report, json run) {
    json out;
    for (auto it = report.begin(); it != report.end(); ++it) {
        out[it.key()] = it.value();
        if (it.key() == "kind") out["run"] = run;
    }
    if (!out.contains("run")) out["run"] = std::move(run);
    return out;
}

std::string level_key(double level) { return io::format_real(level); }

std::vector<std::string> distinct_values(const io::Table& t, const std::string& column) {
    const std::size_t c = t.column(column);
    std::set<std::string> vals;
    for (const auto& row : t.rows) {
        if (!row[c].empty()) vals.insert(row[c]);
    }
    return {vals.begin(), vals.end()};
}

// ---- report fragments -------------------------------------------------------

json summary_json(const ScoreSummary<double>& s) {
    return {{"n", s.n},           {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"q1", s.q1},
            {"median", s.median}, {"q3", s.q3},     {"max", s.max}};
}

json aggregate_json(const std::vector<double>& values, double ci_level) {
    const auto s = summarize(Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size())));
    json j = summary_json(s);
    if (values.size() >= 2) {
        const auto ci = gaussian_ci(SampleSet<double>(values), ci_level);
        j["ci"] = {ci.lo, ci.hi};
    } else {
        j["ci"] = nullptr;
    }
    return j;
}

json welch_json(const std::vector<double>& a, const std::vector<double>& b) {
    const auto w = welch_t_test(SampleSet<double>(a), SampleSet<double>(b));
    const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"t", finite_or_null(w.t)}, {"t_sign", w.t > 0 ? 1 : (w.t < 0 ? -1 : 0)}, {"dof", w.dof}, {"p", w.p}};
}

// One metric across seeds. A failing seed leaves null in the per-seed entry
// and turns the aggregate into an error.
struct Series {
    std::vector<double> values;
    std::optional<std::string> error;

    template <typename F>
    json attempt(F&& compute) {
        try {
            values.push_back(compute());
            return values.back();
        } catch (const MetricError& e) {
            if (!error) error = e.what();
            return nullptr;
        }
    }
    json aggregate(double ci_level) const {
        return error ? json{{"error", *error}} : aggregate_json(values, ci_level);
    }
};

json summary_or_null(const Cohort& cohort, const GroupRef& group, ClassSelection cls) {
    try {
        return summary_json(score_stats(cohort, group, cls));
    } catch (const EmptyGroupError&) {
        return nullptr;
    }
}

std::vector<double> thresholds_for(const Cohort& cohort, const std::vector<double>& levels, const std::string& where) {
    std::vector<double> out;
    const auto scores = scores_of(cohort);
    const auto pos = positives_of(cohort);
    for (double level : levels) {
        try {
            out.push_back(shared_threshold(scores, pos, level));
        } catch (const EmptyGroupError&) {
            throw MetricError(where + ": cohort contains no positives");
        }
    }
    return out;
}

std::size_t count_class(const Cohort& cohort, const GroupRef& g, bool positive) {
    std::size_t n = 0;
    for (const auto& r : cohort.records) n += matches(g, r) && r.positive() == positive;
    return n;
}

std::string tsv_row(std::initializer_list<std::string> fields) {
    std::string out;
    for (const auto& f : fields) {
        if (!out.empty()) out += '\t';
        out += f;
    }
    return out + '\n';
}

}  // namespace

// ---- composition axis --------------------------------------------------------

std::vector<std::pair<std::string, double>> CompositionAxis::shares(double rho) const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("composition ratio outside [0, 1]");
    if (std::find(categories.begin(), categories.end(), category) == categories.end()) {
        throw InputError("swept category '" + category + "' not found for attribute '" + attribute + "'");
    }
    std::vector<std::pair<std::string, double>> out;
    const double others = categories.size() > 1 ? (1.0 - rho) / static_cast<double>(categories.size() - 1) : 0.0;
    for (const auto& cat : categories) out.emplace_back(cat, cat == category ? rho : others);
    return out;
}

std::pair<double, double> CompositionAxis::own_ratio_affine(const GroupRef& group) const {
    const auto* key = std::get_if<SubgroupKey>(&group);
    const std::string* cat = key ? key->category_of(attribute) : nullptr;
    if (!cat || *cat == category) return {0.0, 1.0};
    if (std::find(categories.begin(), categories.end(), *cat) == categories.end()) {
        throw InputError("group '" + to_string(group) + "' uses unknown category of '" + attribute + "'");
    }
    const double k = static_cast<double>(categories.size() - 1);
    return {1.0 / k, -1.0 / k};
}

double CompositionAxis::own_ratio(const GroupRef& group, double rho) const {
    const auto [offset, scale] = own_ratio_affine(group);
    return std::clamp(offset + scale * rho, 0.0, 1.0);
}

FairnessLaw CompositionAxis::on_axis(const FairnessLaw& law) const {
    const auto [offset, scale] = own_ratio_affine(law.subgroup);
    FairnessLaw out = law;
    out.intercept = law.intercept + law.slope * offset;
    out.slope = law.slope * scale;
    return out;
}

std::string expand_pattern(const std::string& pattern, double ratio, int seed) {
    std::string out = pattern;
    const auto replace = [&out](const std::string& token, const std::string& value) {
        for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + value.size())) {
            out.replace(pos, token.size(), value);
        }
    };
    replace("{ratio}", io::format_real(ratio));
    replace("{seed}", std::to_string(seed));
    return out;
}

// ---- evaluate ---------------------------------------------------------------

json evaluate(const std::vector<Replicate>& replicates, const EvaluateSettings& settings) {
    if (replicates.empty()) throw InputError("evaluate: no score replicates");
    if (settings.groups.empty()) throw InputError("evaluate: no subgroups configured");
    for (double level : settings.fpr_levels) {
        if (!(level > 0.0 && level <= 1.0)) throw InputError("fpr_at_tpr level outside (0, 1]");
    }

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["kind"] = "evaluate";
    json seeds = json::array();
    for (const auto& r : replicates) seeds.push_back(r.seed);
    report["seeds"] = seeds;
    report["settings"] = {{"fpr_at_tpr", settings.fpr_levels}, {"ci_level", settings.ci_level}};

    std::vector<std::vector<double>> thresholds;
    json operating = json::array();
    for (const auto& rep : replicates) {
        thresholds.push_back(thresholds_for(rep.cohort, settings.fpr_levels, "seed " + std::to_string(rep.seed)));
        for (std::size_t l = 0; l < settings.fpr_levels.size(); ++l) {
            const auto c = confusion_at(rep.cohort, thresholds.back()[l], Population{}, Scope::positives);
            operating.push_back({{"seed", rep.seed},
                                 {"min_tpr", settings.fpr_levels[l]},
                                 {"threshold", thresholds.back()[l]},
                                 {"population_tpr", static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)}});
        }
    }
    report["operating_points"] = operating;

    std::map<std::string, std::vector<double>> sauroc_by_group;
    json entries = json::array();
    for (const auto& group : settings.groups) {
        const std::string name = to_string(group);
        json entry{{"subgroup", name}};
        json per_seed = json::array();
        Series sa;
        Series na;
        std::vector<Series> fpr(settings.fpr_levels.size());
        for (std::size_t k = 0; k < replicates.size(); ++k) {
            const Cohort& cohort = replicates[k].cohort;
            json s{{"seed", replicates[k].seed},
                   {"n_pos", count_class(cohort, group, true)},
                   {"n_neg", count_class(cohort, group, false)}};
            s["sauroc"] = sa.attempt([&] { return sauroc(cohort, group); });
            s["auroc_naive"] = na.attempt([&] { return auroc_naive(cohort, group); });
            json f = json::object();
            for (std::size_t l = 0; l < settings.fpr_levels.size(); ++l) {
                f[level_key(settings.fpr_levels[l])] = fpr[l].attempt([&] { return fpr_at(cohort, group, thresholds[k][l]); });
            }
            s["fpr_at_tpr"] = f;
            s["scores"] = {{"normal", summary_or_null(cohort, group, ClassSelection::normal)},
                           {"diseased", summary_or_null(cohort, group, ClassSelection::diseased)}};
            per_seed.push_back(s);
        }
        if (sa.error) {
            entry["error"] = *sa.error;
        } else {
            entry["n_pos"] = per_seed.front()["n_pos"];
            entry["n_neg"] = per_seed.front()["n_neg"];
            json agg{{"sauroc", sa.aggregate(settings.ci_level)}, {"auroc_naive", na.aggregate(settings.ci_level)}};
            json fagg = json::object();
            for (std::size_t l = 0; l < settings.fpr_levels.size(); ++l) {
                fagg[level_key(settings.fpr_levels[l])] = fpr[l].aggregate(settings.ci_level);
            }
            agg["fpr_at_tpr"] = fagg;
            entry["aggregate"] = agg;
            entry["per_seed"] = per_seed;
            sauroc_by_group[name] = sa.values;
        }
        entries.push_back(entry);
    }
    report["subgroups"] = entries;

    json pairs = json::array();
    for (const auto& [a, b] : settings.pairs) {
        const std::string na = to_string(a);
        const std::string nb = to_string(b);
        json p{{"a", na}, {"b", nb}, {"metric", "sauroc"}};
        const auto ia = sauroc_by_group.find(na);
        const auto ib = sauroc_by_group.find(nb);
        if (ia == sauroc_by_group.end() || ib == sauroc_by_group.end()) {
            p["error"] = "pair member missing or failed";
        } else {
            const SampleSet<double> sa(ia->second);
            const SampleSet<double> sb(ib->second);
            p["delta"] = sa.mean() - sb.mean();
            if (sa.size() < 2 || sb.size() < 2) {
                p["error"] = "significance test needs at least two replicates";
            } else {
                p["welch"] = welch_json(ia->second, ib->second);
            }
        }
        pairs.push_back(p);
    }
    report["pairs"] = pairs;
    return report;
}

namespace {

void write_evaluate_tables(const json& report, const fs::path& dir) {
    std::string metrics = tsv_row({"seed", "subgroup", "metric", "value"});
    std::string scores = tsv_row({"seed", "subgroup", "class", "n", "mean", "std", "min", "q1", "median", "q3", "max"});
    std::string groups = tsv_row({"subgroup", "metric", "mean", "std", "ci_lo", "ci_hi"});
    const auto num = [](const json& v) { return v.is_null() ? std::string("NA") : io::format_real(v.get<double>()); };
    for (const auto& e : report.at("subgroups")) {
        if (e.contains("error")) continue;
        const std::string name = e.at("subgroup").get<std::string>();
        for (const auto& s : e.at("per_seed")) {
            const std::string seed = std::to_string(s.at("seed").get<int>());
            metrics += tsv_row({seed, name, "sauroc", num(s.at("sauroc"))});
            metrics += tsv_row({seed, name, "auroc_naive", num(s.at("auroc_naive"))});
            for (const auto& [level, v] : s.at("fpr_at_tpr").items()) {
                metrics += tsv_row({seed, name, "fpr@" + level + "tpr", num(v)});
            }
            for (const char* cls : {"normal", "diseased"}) {
                const auto& x = s.at("scores").at(cls);
                if (x.is_null()) continue;
                scores += tsv_row({seed, name, cls, std::to_string(x.at("n").get<std::size_t>()), num(x.at("mean")),
                                   num(x.at("std")), num(x.at("min")), num(x.at("q1")), num(x.at("median")),
                                   num(x.at("q3")), num(x.at("max"))});
            }
        }
        const auto add = [&](const std::string& metric, const json& a) {
            if (a.contains("error")) return;
            const json& ci = a.at("ci");
            groups += tsv_row({name, metric, num(a.at("mean")), num(a.at("std")), ci.is_null() ? "NA" : num(ci[0]),
                               ci.is_null() ? "NA" : num(ci[1])});
        };
        add("sauroc", e.at("aggregate").at("sauroc"));
        add("auroc_naive", e.at("aggregate").at("auroc_naive"));
        for (const auto& [level, a] : e.at("aggregate").at("fpr_at_tpr").items()) add("fpr@" + level + "tpr", a);
    }
    io::write_text(dir / "evaluate_metrics.tsv", metrics);
    io::write_text(dir / "evaluate_scores.tsv", scores);
    io::write_text(dir / "evaluate_groups.tsv", groups);
}

}  // namespace

json run_evaluate(const fs::path& config_path, const RunOptions& options) {
    const Config c = load_config(config_path, options);
    const auto columns = cohort_columns(c, options);
    const io::IngestOptions ingest_opts{get_or<std::size_t>(c.doc, "max_unmatched", 0)};
    const io::Table metadata = io::read_table(c.path("metadata"), columns.delimiter);

    std::vector<Replicate> replicates;
    const auto load = [&](int seed, const std::string& scores) {
        const fs::path p = c.resolve(scores);
        replicates.push_back({seed, io::ingest(metadata, io::read_scores(p), scores, columns, ingest_opts)});
    };
    if (c.doc.contains("replicates")) {
        for (const auto& r : c.doc.at("replicates")) load(get<int>(r, "seed"), get<std::string>(r, "scores"));
    } else {
        load(get_or<int>(c.doc, "seed", 0), get<std::string>(c.doc, "scores"));
    }

    EvaluateSettings settings;
    settings.groups = groups_from(c.doc, "subgroups");
    settings.fpr_levels = get_or<std::vector<double>>(c.doc, "fpr_at_tpr", {0.95});
    settings.pairs = pairs_from(c.doc, "pairs");
    settings.ci_level = get_or<double>(c.doc, "ci_level", 0.95);

    const json report = with_run(evaluate(replicates, settings), run_block(c, options));
    if (options.out_dir || c.doc.contains("out_dir")) {
        const fs::path dir = out_dir(c, options);
        io::write_text(dir / "evaluate_report.json", report.dump(2) + "\n");
        write_evaluate_tables(report, dir);
    }
    return report;
}

// ---- sweep ------------------------------------------------------------------

SweepResult sweep(const std::vector<SweepPoint>& points, const SweepSettings& settings) {
    if (points.empty()) throw InputError("sweep: no (ratio, seed) inputs");
    std::set<double> ratio_set;
    std::set<int> seed_set;
    for (const auto& p : points) {
        ratio_set.insert(p.ratio);
        seed_set.insert(p.seed);
    }
    std::vector<const SweepPoint*> ordered;
    for (const auto& p : points) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const SweepPoint* a, const SweepPoint* b) {
        return std::pair(a->ratio, a->seed) < std::pair(b->ratio, b->seed);
    });

    std::vector<std::vector<double>> thresholds;
    for (const auto* p : ordered) {
        thresholds.push_back(thresholds_for(p->cohort, settings.fpr_levels,
                                            "ratio " + io::format_real(p->ratio) + " seed " + std::to_string(p->seed)));
    }

    SweepResult out;
    std::string& plot = out.plot_table;
    plot = tsv_row({"ratio", "own_ratio", "seed", "subgroup", "metric", "value"});
    std::string law_rows = tsv_row({"subgroup", "fit", "intercept", "slope"});

    json& report = out.report;
    report["schema_version"] = kReportSchemaVersion;
    report["kind"] = "sweep";
    report["ratios"] = std::vector<double>(ratio_set.begin(), ratio_set.end());
    report["seeds"] = std::vector<int>(seed_set.begin(), seed_set.end());
    report["axis"] = {{"attribute", settings.axis.attribute},
                      {"category", settings.axis.category},
                      {"categories", settings.axis.categories}};
    report["settings"] = {{"fpr_at_tpr", settings.fpr_levels},
                          {"mae_mode", settings.mae_mode == MaeMode::per_seed ? "per_seed" : "seed_averaged"}};

    std::map<std::string, FairnessLaw> regression_laws;
    std::map<std::string, FairnessLaw> endpoint_laws;
    std::map<std::string, std::map<double, std::vector<double>>> sauroc_by_ratio;

    json entries = json::array();
    for (const auto& group : settings.groups) {
        const std::string name = to_string(group);
        json entry{{"subgroup", name}};
        try {
            const auto [offset, scale] = settings.axis.own_ratio_affine(group);
            entry["own_ratio"] = {{"offset", offset}, {"scale", scale}};
            std::vector<CompositionMeasurement> measurements;
            std::string rows;
            for (std::size_t k = 0; k < ordered.size(); ++k) {
                const SweepPoint& p = *ordered[k];
                const double own = settings.axis.own_ratio(group, p.ratio);
                const double sa = sauroc(p.cohort, group);
                measurements.push_back({own, sa, p.seed});
                sauroc_by_ratio[name][p.ratio].push_back(sa);
                const std::string r = io::format_real(p.ratio);
                const std::string o = io::format_real(own);
                const std::string s = std::to_string(p.seed);
                // secondary metrics may be undefined for a group (e.g. no own positives)
                const auto add = [&](const std::string& metric, auto&& compute) {
                    try {
                        rows += tsv_row({r, o, s, name, metric, io::format_real(compute())});
                    } catch (const EmptyGroupError&) {
                    }
                };
                rows += tsv_row({r, o, s, name, "sauroc", io::format_real(sa)});
                add("auroc_naive", [&] { return auroc_naive(p.cohort, group); });
                for (std::size_t l = 0; l < settings.fpr_levels.size(); ++l) {
                    add("fpr@" + level_key(settings.fpr_levels[l]) + "tpr",
                        [&] { return fpr_at(p.cohort, group, thresholds[k][l]); });
                }
                add("score_mean_normal", [&] { return score_stats(p.cohort, group, ClassSelection::normal).mean; });
                add("score_mean_diseased", [&] { return score_stats(p.cohort, group, ClassSelection::diseased).mean; });
            }
            plot += rows;

            json boxes = json::array();
            for (const auto& [ratio, values] : sauroc_by_ratio[name]) {
                json box = summary_json(summarize(
                    Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()))));
                box["values"] = values;
                boxes.push_back({{"ratio", ratio}, {"own_ratio", settings.axis.own_ratio(group, ratio)}, {"sauroc", box}});
            }
            entry["boxes"] = boxes;

            json laws;
            try {
                const FairnessLaw reg = fit_regression(measurements, group);
                regression_laws.emplace(name, reg);
                laws["regression"] = {{"intercept", reg.intercept},
                                      {"slope", reg.slope},
                                      {"residual_mae", *reg.residual_mae},
                                      {"slope_stderr", reg.slope_stderr ? json(*reg.slope_stderr) : json(nullptr)}};
                law_rows += tsv_row({name, "regression", io::format_real(reg.intercept), io::format_real(reg.slope)});
            } catch (const DegenerateFitError& e) {
                laws["regression"] = {{"error", e.what()}};
            }
            std::vector<double> at_zero;
            std::vector<double> at_one;
            for (const auto& m : measurements) {
                if (m.ratio == 0.0) at_zero.push_back(m.metric);
                if (m.ratio == 1.0) at_one.push_back(m.metric);
            }
            if (!at_zero.empty() && !at_one.empty()) {
                const FairnessLaw ep = fit_endpoints(SampleSet<double>(at_zero), SampleSet<double>(at_one), group);
                endpoint_laws.emplace(name, ep);
                laws["endpoints"] = {{"intercept", ep.intercept}, {"slope", ep.slope}};
                law_rows += tsv_row({name, "endpoints", io::format_real(ep.intercept), io::format_real(ep.slope)});
            } else {
                laws["endpoints"] = {{"error", "own training share never reaches both 0 and 1"}};
            }
            entry["laws"] = laws;

            try {
                const auto err = interpolation_error(measurements, settings.mae_mode);
                json per_seed = json::array();
                for (std::size_t i = 0; i < err.seeds.size(); ++i) {
                    per_seed.push_back({{"seed", err.seeds[i]}, {"mae", err.per_seed[i]}});
                }
                entry["interpolation_mae"] = {{"per_seed", per_seed}, {"mean", err.mean}};
            } catch (const InputError& e) {
                entry["interpolation_mae"] = {{"error", e.what()}};
            }

            std::vector<double> xs;
            std::vector<double> ys;
            std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_seed_xy;
            for (const auto& m : measurements) {
                xs.push_back(m.ratio);
                ys.push_back(m.metric);
                per_seed_xy[m.seed].first.push_back(m.ratio);
                per_seed_xy[m.seed].second.push_back(m.metric);
            }
            json pearson;
            try {
                pearson["pooled"] = pearson_r(xs, ys);
            } catch (const Error& e) {
                pearson["pooled"] = nullptr;
                pearson["error"] = e.what();
            }
            std::vector<double> rs;
            for (const auto& [seed, xy] : per_seed_xy) {
                try {
                    rs.push_back(pearson_r(xy.first, xy.second));
                } catch (const std::exception&) {
                    // seed curve without spread: no correlation to report
                }
            }
            if (!rs.empty()) {
                const SampleSet<double> r(rs);
                pearson["per_seed_mean"] = r.mean();
                pearson["per_seed_std"] = rs.size() > 1 ? json(r.stddev()) : json(nullptr);
            }
            entry["pearson_r"] = pearson;
        } catch (const MetricError& e) {
            entry = {{"subgroup", name}, {"error", e.what()}};
            sauroc_by_ratio.erase(name);
            regression_laws.erase(name);
            endpoint_laws.erase(name);
        } catch (const InputError& e) {
            entry = {{"subgroup", name}, {"error", e.what()}};
        }
        entries.push_back(entry);
    }
    report["subgroups"] = entries;

    json parity = json::array();
    for (const auto& [a, b] : settings.parity) {
        const std::string na = to_string(a);
        const std::string nb = to_string(b);
        json p{{"a", na}, {"b", nb}, {"axis", settings.axis.attribute + "=" + settings.axis.category + " share"}};
        const auto solve = [&](const std::map<std::string, FairnessLaw>& laws) -> json {
            const auto la = laws.find(na);
            const auto lb = laws.find(nb);
            if (la == laws.end() || lb == laws.end()) return {{"error", "law unavailable for a pair member"}};
            const auto par = parity_ratio(settings.axis.on_axis(la->second), settings.axis.on_axis(lb->second));
            return {{"ratio", par.ratio}, {"gap", par.gap}};
        };
        p["regression"] = solve(regression_laws);
        p["endpoints"] = solve(endpoint_laws);
        json by_ratio = json::array();
        if (sauroc_by_ratio.count(na) && sauroc_by_ratio.count(nb)) {
            for (const auto& [ratio, va] : sauroc_by_ratio[na]) {
                const auto& vb = sauroc_by_ratio[nb][ratio];
                json row{{"ratio", ratio}, {"delta", SampleSet<double>(va).mean() - SampleSet<double>(vb).mean()}};
                if (va.size() >= 2 && vb.size() >= 2) row["welch"] = welch_json(va, vb);
                by_ratio.push_back(row);
            }
        }
        p["by_ratio"] = by_ratio;
        parity.push_back(p);
    }
    report["parity"] = parity;
    report["law_table"] = law_rows;
    return out;
}

json run_sweep(const fs::path& config_path, const RunOptions& options) {
    const Config c = load_config(config_path, options);
    const auto columns = cohort_columns(c, options);
    const io::IngestOptions ingest_opts{get_or<std::size_t>(c.doc, "max_unmatched", 0)};
    const io::Table metadata = io::read_table(c.path("metadata"), columns.delimiter);

    const json comp = get<json>(c.doc, "composition");
    SweepSettings settings;
    settings.axis.attribute = get<std::string>(comp, "attribute");
    settings.axis.category = get<std::string>(comp, "category");
    settings.axis.categories = distinct_values(metadata, settings.axis.attribute);
    const auto ratios = get<std::vector<double>>(comp, "ratios");
    const auto seeds = get<std::vector<int>>(c.doc, "seeds");
    settings.groups = groups_from(c.doc, "subgroups");
    settings.fpr_levels = get_or<std::vector<double>>(c.doc, "fpr_at_tpr", {0.95});
    settings.parity = pairs_from(c.doc, "parity");
    const auto mode = get_or<std::string>(c.doc, "mae_mode", "per_seed");
    if (mode == "per_seed") settings.mae_mode = MaeMode::per_seed;
    else if (mode == "seed_averaged") settings.mae_mode = MaeMode::seed_averaged;
    else throw InputError("config 'mae_mode' must be per_seed or seed_averaged");

    const std::string pattern = get<std::string>(c.doc, "scores_pattern");
    std::vector<std::string> gaps;
    for (double r : ratios) {
        for (int s : seeds) {
            const std::string rel = expand_pattern(pattern, r, s);
            if (!fs::exists(c.resolve(rel))) gaps.push_back(rel);
        }
    }
    if (!gaps.empty()) {
        std::string msg = "sweep: missing score files:";
        for (const auto& g : gaps) msg += " " + g;
        throw InputError(msg);
    }
    std::vector<SweepPoint> points;
    for (double r : ratios) {
        for (int s : seeds) {
            const std::string rel = expand_pattern(pattern, r, s);
            points.push_back({r, s, io::ingest(metadata, io::read_scores(c.resolve(rel)), rel, columns, ingest_opts)});
        }
    }

    SweepResult result = sweep(points, settings);
    const std::string law_table = result.report["law_table"].get<std::string>();
    result.report.erase("law_table");
    const json report = with_run(result.report, run_block(c, options));
    if (options.out_dir || c.doc.contains("out_dir")) {
        const fs::path dir = out_dir(c, options);
        io::write_text(dir / "sweep_report.json", report.dump(2) + "\n");
        io::write_text(dir / "sweep_plot.tsv", result.plot_table);
        io::write_text(dir / "sweep_laws.tsv", law_table);
    }
    return report;
}

// ---- split ------------------------------------------------------------------

namespace {

FilterResult assign_attribute(std::vector<MetadataRow> rows, const std::string& attribute, const AgeStrategy& age) {
    if (attribute == "sex") return assign_sex_group(std::move(rows));
    if (attribute == "age") return assign_age_group(std::move(rows), age);
    if (attribute == "race") return assign_race_group(std::move(rows));
    throw InputError("unknown protected attribute '" + attribute + "' (expected sex, age or race)");
}

AgeStrategy age_strategy_from(const json& doc) {
    AgeStrategy s;
    if (!doc.contains("age_strategy")) return s;
    const json& a = doc.at("age_strategy");
    const auto kind = get_or<std::string>(a, "kind", "fixed");
    if (kind == "fixed") s.kind = AgeStrategy::Kind::fixed;
    else if (kind == "tertile_of_max") s.kind = AgeStrategy::Kind::tertile_of_max;
    else throw InputError("age_strategy.kind must be fixed or tertile_of_max");
    s.young_max = get_or<int>(a, "young_max", s.young_max);
    s.old_min = get_or<int>(a, "old_min", s.old_min);
    return s;
}

std::string file_token(const std::string& s) {
    std::string out;
    for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
    return out;
}

void check_disjoint(const SplitManifest& m, const PatientIndex& idx, const std::string& what) {
    const auto report = verify_disjoint(m, idx);
    if (!report.ok()) throw std::logic_error(what + ": generated manifest is not patient-disjoint");
}

std::map<std::string, std::size_t> category_counts(const std::vector<std::string>& ids,
                                                   const std::map<std::string, const MetadataRow*>& by_id,
                                                   const std::string& attribute) {
    std::map<std::string, std::size_t> counts;
    for (const auto& id : ids) {
        const MetadataRow& r = *by_id.at(id);
        const auto dx = r.diagnosis();
        counts[std::string(dx == Label::diseased ? "diseased" : "normal") + "&" + attribute + "=" +
               r.attributes.at(attribute)]++;
    }
    return counts;
}

}  // namespace

json run_split(const fs::path& config_path, const RunOptions& options) {
    const Config c = load_config(config_path, options);
    const fs::path dir = out_dir(c, options);
    const std::uint64_t seed = options.seed.value_or(get_or<std::uint64_t>(c.doc, "seed", 0));
    const fs::path column_map = options.column_map.value_or(c.path("column_map"));
    const auto columns = io::ManifestColumns::from_json(io::read_json(column_map));
    const fs::path manifest_path = c.path("metadata");
    const std::string source_hash = io::file_hash(manifest_path);

    auto rows = io::read_manifest(manifest_path, columns);
    json prov;
    prov["schema_version"] = kReportSchemaVersion;
    prov["kind"] = "split";
    prov["seed"] = seed;
    prov["config_hash"] = c.hash;
    prov["source_manifest_hash"] = source_hash;
    prov["rows_read"] = rows.size();

    std::map<std::string, std::string> base_prov{{"config_hash", c.hash}, {"source_manifest_hash", source_hash}};
    json filters = json::object();
    const auto record = [&](const FilterResult& f) {
        for (const auto& [reason, n] : f.removed) {
            filters[reason] = n;
            base_prov["removed." + reason] = std::to_string(n);
        }
    };
    auto included = filter_inclusion(std::move(rows));
    record(included);

    const std::string mode = get_or<std::string>(c.doc, "mode", "sweep");
    const AgeStrategy age = age_strategy_from(c.doc);
    std::vector<std::string> attributes;
    if (mode == "sweep") {
        attributes.push_back(get<std::string>(c.doc, "attribute"));
    } else if (mode == "intersectional") {
        for (const auto& p : get<std::vector<std::vector<std::string>>>(c.doc, "attribute_pairs")) {
            if (p.size() != 2) throw InputError("config 'attribute_pairs': each entry needs two attributes");
            for (const auto& a : p) {
                if (std::find(attributes.begin(), attributes.end(), a) == attributes.end()) attributes.push_back(a);
            }
        }
    } else {
        throw InputError("config 'mode' must be sweep or intersectional");
    }
    std::vector<MetadataRow> cohort_rows = std::move(included.rows);
    for (const auto& a : attributes) {
        auto assigned = assign_attribute(std::move(cohort_rows), a, age);
        record(assigned);
        cohort_rows = std::move(assigned.rows);
    }
    prov["filter_counts"] = filters;
    prov["rows_included"] = cohort_rows.size();
    prov["mode"] = mode;
    prov["attributes"] = attributes;

    io::write_cohort(dir / "cohort.csv", cohort_rows, attributes);
    const PatientIndex idx = patient_index(cohort_rows);
    std::map<std::string, const MetadataRow*> by_id;
    for (const auto& r : cohort_rows) by_id[r.image_id] = &r;

    if (mode == "sweep") {
        const std::string& attribute = attributes.front();
        const auto eval = build_eval_sets(cohort_rows, attribute, get<std::size_t>(c.doc, "n_val"),
                                          get<std::size_t>(c.doc, "n_test"), get_or<double>(c.doc, "prevalence", 0.5),
                                          seed);
        const json comp = get<json>(c.doc, "composition");
        CompositionAxis axis{attribute, get<std::string>(comp, "category"), eval.categories};
        const auto ratios = get<std::vector<double>>(comp, "ratios");
        const auto budget = get<std::size_t>(comp, "budget");
        std::vector<CompositionSpec> grid;
        for (double r : ratios) grid.push_back({attribute, axis.shares(r), budget});
        auto manifests = build_composition_sweep(eval.remaining_normal, grid, seed);

        prov["categories"] = eval.categories;
        prov["val"] = {{"n", eval.val.size()}, {"cells", category_counts(eval.val, by_id, attribute)}};
        prov["test"] = {{"n", eval.test.size()}, {"cells", category_counts(eval.test, by_id, attribute)}};
        prov["remaining_normal"] = eval.remaining_normal.size();
        io::write_list(dir / "lists" / "val.txt", eval.val);
        io::write_list(dir / "lists" / "test.txt", eval.test);
        json grid_json = json::array();
        for (std::size_t i = 0; i < manifests.size(); ++i) {
            SplitManifest& m = manifests[i];
            m.val = eval.val;
            m.test = eval.test;
            m.provenance = base_prov;
            m.provenance["mode"] = "sweep";
            m.provenance["ratio"] = io::format_real(ratios[i]);
            check_disjoint(m, idx, "ratio " + io::format_real(ratios[i]));
            const std::string tag = "r" + io::format_real(ratios[i]);
            io::write_text(dir / "manifests" / ("train_" + tag + ".json"), io::to_json(m).dump(2) + "\n");
            io::write_list(dir / "lists" / ("train_" + tag + ".txt"), m.train);
            std::map<std::string, std::size_t> counts;
            for (const auto& id : m.train) counts[by_id.at(id)->attributes.at(attribute)]++;
            grid_json.push_back({{"ratio", ratios[i]}, {"train", m.train.size()}, {"counts", counts}});
        }
        prov["grid"] = grid_json;
    } else {
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& p : get<std::vector<std::vector<std::string>>>(c.doc, "attribute_pairs")) pairs.emplace_back(p[0], p[1]);
        const auto sets = build_intersectional_sets(cohort_rows, pairs, get<std::size_t>(c.doc, "n_per_cell"), seed);
        io::write_list(dir / "lists" / "train.txt", sets.train);
        json tests = json::array();
        for (const auto& t : sets.tests) {
            SplitManifest m;
            m.seed = seed;
            m.train = sets.train;
            m.test = t.test;
            m.provenance = base_prov;
            m.provenance["mode"] = "intersectional";
            m.provenance["group"] = t.group.str();
            check_disjoint(m, idx, t.group.str());
            const std::string tag = file_token(t.group.str());
            io::write_text(dir / "manifests" / ("intersect_" + tag + ".json"), io::to_json(m).dump(2) + "\n");
            io::write_list(dir / "lists" / ("test_" + tag + ".txt"), t.test);
            tests.push_back({{"group", t.group.str()}, {"test", t.test.size()}});
        }
        prov["train"] = sets.train.size();
        prov["intersections"] = tests;
    }
    io::write_text(dir / "provenance.json", prov.dump(2) + "\n");
    return prov;
}

// ---- simulate ---------------------------------------------------------------

namespace {

std::string cohort_csv(const Cohort& cohort) {
    std::string out = "image_id,patient_id,label";
    for (const auto& a : cohort.schema) out += "," + io::quote_field(a, ',');
    out += '\n';
    for (const auto& r : cohort.records) {
        out += io::quote_field(r.image_id, ',') + "," + io::quote_field(r.patient_id, ',') + "," +
               (r.positive() ? "1" : "0");
        for (const auto& a : cohort.schema) out += "," + io::quote_field(r.attributes.at(a), ',');
        out += '\n';
    }
    return out;
}

Gaussian gaussian_from(const json& j) { return {get<double>(j, "mean"), get<double>(j, "std")}; }

}  // namespace

json run_simulate(const fs::path& config_path, const RunOptions& options) {
    const Config c = load_config(config_path, options);
    const fs::path dir = out_dir(c, options);
    const std::uint64_t seed = options.seed.value_or(get_or<std::uint64_t>(c.doc, "seed", 0));
    json summary{{"schema_version", kReportSchemaVersion}, {"kind", "simulate"}, {"seed", seed}, {"config_hash", c.hash}};

    if (c.doc.contains("groups")) {
        std::vector<GroupScoreSpec> specs;
        for (const auto& g : c.doc.at("groups")) {
            const auto label = get<std::string>(g, "label");
            if (label != "normal" && label != "diseased") throw InputError("group label must be normal or diseased");
            specs.push_back({SubgroupKey::parse(get<std::string>(g, "subgroup")),
                             label == "diseased" ? Label::diseased : Label::normal, get<double>(g, "mean"),
                             get<double>(g, "std"), get<std::size_t>(g, "count")});
        }
        const Cohort cohort = sample_cohort(specs, seed);
        io::write_text(dir / "cohort.csv", cohort_csv(cohort));
        std::vector<std::pair<std::string, double>> scores;
        for (const auto& r : cohort.records) scores.emplace_back(r.image_id, r.score);
        io::write_scores(dir / "scores.csv", scores);
        summary["mode"] = "cohort";
        summary["records"] = cohort.size();
        return summary;
    }

    // Sweep mode: scores for an existing cohort whose group-wise negatives
    // follow configured laws of each group's training share.
    const auto columns = cohort_columns(c, options);
    const io::Table metadata = io::read_table(c.path("metadata"), columns.delimiter);
    io::ScoreFile placeholder;
    if (c.doc.contains("ids")) {
        for (const auto& id : io::read_list(c.path("ids"))) placeholder.scores.emplace_back(id, 0.0);
    } else {
        for (const auto& row : metadata.rows) placeholder.scores.emplace_back(row[metadata.column(columns.image_id)], 0.0);
    }
    std::sort(placeholder.scores.begin(), placeholder.scores.end());
    const Cohort base = io::ingest(metadata, placeholder, "simulation ids", columns);

    const json comp = get<json>(c.doc, "composition");
    CompositionAxis axis{get<std::string>(comp, "attribute"), get<std::string>(comp, "category"),
                         distinct_values(metadata, get<std::string>(comp, "attribute"))};
    const auto ratios = get<std::vector<double>>(comp, "ratios");
    const auto seeds = get<std::vector<int>>(c.doc, "seeds");
    const Gaussian pos = gaussian_from(get<json>(c.doc, "positive"));
    const double neg_std = get_or<double>(c.doc, "negative_std", 1.0);
    const double noise = get_or<double>(c.doc, "noise", 0.0);
    const double default_target = get_or<double>(c.doc, "default_target", 0.5);
    struct LawSpec {
        SubgroupKey group;
        double intercept;
        double slope;
    };
    std::vector<LawSpec> laws;
    for (const auto& l : get<json>(c.doc, "laws")) {
        laws.push_back({SubgroupKey::parse(get<std::string>(l, "subgroup")), get<double>(l, "intercept"),
                        get<double>(l, "slope")});
    }
    const std::string pattern = get<std::string>(c.doc, "scores_pattern");

    json files = json::array();
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        for (int run_seed : seeds) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(ri), static_cast<std::uint32_t>(run_seed)};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> unit(0.0, 1.0);
            std::vector<double> target(laws.size());
            for (std::size_t li = 0; li < laws.size(); ++li) {
                const double own = axis.own_ratio(laws[li].group, ratios[ri]);
                const double jitter = noise > 0.0 ? noise * unit(rng) : 0.0;
                target[li] = std::clamp(laws[li].intercept + laws[li].slope * own + jitter, 0.001, 0.999);
            }
            std::vector<std::pair<std::string, double>> scores;
            for (const auto& r : base.records) {
                double mean = pos.mean;
                double sd = pos.std;
                if (!r.positive()) {
                    double t = default_target;
                    for (std::size_t li = 0; li < laws.size(); ++li) {
                        if (laws[li].group.matches(r)) {
                            t = target[li];
                            break;
                        }
                    }
                    mean = negative_mean_for(t, pos, neg_std);
                    sd = neg_std;
                }
                scores.emplace_back(r.image_id, mean + sd * unit(rng));
            }
            const std::string rel = expand_pattern(pattern, ratios[ri], run_seed);
            io::write_scores(dir / rel, scores);
            files.push_back(rel);
        }
    }
    summary["mode"] = "sweep";
    summary["records"] = base.size();
    summary["files"] = files;
    return summary;
}

}  // namespace subfair::pipeline
