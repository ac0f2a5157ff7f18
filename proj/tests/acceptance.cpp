// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "subfair/cohort.hpp"
#include "subfair/io.hpp"
#include "subfair/laws.hpp"
#include "subfair/metrics.hpp"
#include "subfair/pipeline.hpp"
#include "subfair/stats.hpp"
#include "subfair/synth.hpp"

using namespace subfair;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

// Collects failures; only the first few are kept for the report line.
struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ok = false;
        if (notes.size() < 3) notes.push_back(what);
    }
    std::string failures() const {
        std::string s;
        for (const auto& n : notes) s += (s.empty() ? "" : "; ") + n;
        return s;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Groups of a cohort on which a metric is defined.
std::vector<GroupRef> with_negatives(const Cohort& c) {
    std::vector<GroupRef> out;
    for (const auto& g : oracle::groups_of(c)) {
        if (!oracle::select(c, g, false, true).empty()) out.push_back(g);
    }
    return out;
}

std::vector<Cohort> random_corpus(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Cohort> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_cohort(rng, 200));
    return out;
}

// 1: library metrics against direct pair counting.
Outcome oracle_equivalence(const std::vector<Cohort>& corpus) {
    Check chk;
    double worst = 0;
    std::size_t evaluated = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        for (const auto& g : with_negatives(c)) {
            const double s = sauroc(c, g);
            const double ref = static_cast<double>(oracle::sauroc(c, g));
            const double synth_ref = pairwise_oracle(c, g);
            worst = std::max({worst, std::fabs(s - ref), std::fabs(s - synth_ref)});
            chk.expect(std::fabs(s - ref) <= 1e-12 && std::fabs(s - synth_ref) <= 1e-12,
                       "cohort " + std::to_string(i) + " " + subfair::to_string(g) + " sauroc");
            if (!oracle::select(c, g, true, true).empty()) {
                const double nv = auroc_naive(c, g);
                const double nref = static_cast<double>(oracle::naive(c, g));
                worst = std::max(worst, std::fabs(nv - nref));
                chk.expect(std::fabs(nv - nref) <= 1e-12, "cohort " + std::to_string(i) + " " + subfair::to_string(g) + " naive");
            }
            ++evaluated;
        }
    }
    return {chk.ok, std::to_string(corpus.size()) + " cohorts, " + std::to_string(evaluated) + " groups, max err " +
                        fmt("%.1e", worst) + (chk.ok ? "" : ": " + chk.failures())};
}

// 2: population sAUROC reduces to the ordinary AUROC.
Outcome population_reduction(const std::vector<Cohort>& corpus) {
    Check chk;
    double worst = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const double d = std::fabs(sauroc(corpus[i], Population{}) - auroc_naive(corpus[i], Population{}));
        worst = std::max(worst, d);
        chk.expect(d <= 1e-12, "cohort " + std::to_string(i));
    }
    return {chk.ok, "max |sauroc - auroc| " + fmt("%.1e", worst) + (chk.ok ? "" : ": " + chk.failures())};
}

// 3: large Gaussian cohort against Phi(1/sqrt 2).
Outcome gaussian_closed_form() {
    const std::size_t n = 100000;
    const SubgroupKey f("sex", "F"), m("sex", "M");
    const std::vector<GroupScoreSpec> specs{{f, Label::diseased, 1, 1, n},
                                            {m, Label::diseased, 1, 1, n},
                                            {f, Label::normal, 0, 1, n},
                                            {m, Label::normal, 0, 1, n}};
    const Cohort c = sample_cohort(specs, 2024);
    const double expected = boost::math::cdf(boost::math::normal(), 1.0 / std::sqrt(2.0));
    Check chk;
    chk.expect(std::fabs(expected - 0.7602) < 1e-4, "Phi(1/sqrt2) = " + fmt("%.6f", expected));
    chk.expect(std::fabs(closed_form_sauroc({1, 1}, {0, 1}) - expected) < 1e-12, "closed form");
    std::string detail;
    for (const auto& g : {f, m}) {
        const double s = sauroc(c, g);
        chk.expect(std::fabs(s - expected) <= 0.01, subfair::to_string(g) + " sauroc " + fmt("%.4f", s));
        detail += subfair::to_string(g) + " " + fmt("%.4f", s) + ", ";
    }
    return {chk.ok, detail + "expected " + fmt("%.4f", expected) + (chk.ok ? "" : ": " + chk.failures())};
}

// 4: law recovery, both on generated metric values and end to end through
// sampled cohorts whose expected sAUROC follows the law.
Outcome law_recovery() {
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    const int n_seeds = 10;
    const double a = 0.55, b = 0.20, sigma = 0.005;
    Check chk;
    std::string detail;

    const auto judge = [&](const std::string& label, const std::vector<CompositionMeasurement>& m) {
        const auto err = interpolation_error(m, MaeMode::per_seed);
        std::vector<double> x, y;
        for (const auto& p : m) {
            x.push_back(p.ratio);
            y.push_back(p.metric);
        }
        const double r = pearson_r(x, y);
        chk.expect(err.mean <= 0.01, label + " mae " + fmt("%.4f", err.mean));
        chk.expect(r >= 0.99, label + " r " + fmt("%.4f", r));
        detail += label + " mae " + fmt("%.4f", err.mean) + " r " + fmt("%.4f", r) + ", ";
    };

    {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> noise(0.0, sigma);
        std::vector<CompositionMeasurement> m;
        for (double rho : grid) {
            for (int s = 0; s < n_seeds; ++s) m.push_back({rho, a + b * rho + noise(rng), s});
        }
        judge("direct", m);
    }

    const SubgroupKey f("sex", "F"), male("sex", "M");
    const Gaussian pos{1.0, 1.0};
    const std::size_t n = 4000;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<CompositionMeasurement> mf, mm;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int s = 0; s < n_seeds; ++s) {
            const double rho = grid[i];
            const double tf = a + b * rho + noise(rng);
            const double tm = a + b * (1 - rho) + noise(rng);
            const std::vector<GroupScoreSpec> specs{{f, Label::diseased, pos.mean, pos.std, n},
                                                    {male, Label::diseased, pos.mean, pos.std, n},
                                                    {f, Label::normal, negative_mean_for(tf, pos, 1.0), 1.0, n},
                                                    {male, Label::normal, negative_mean_for(tm, pos, 1.0), 1.0, n}};
            const Cohort c = sample_cohort(specs, 1000 * i + s);
            mf.push_back({rho, sauroc(c, f), s});
            mm.push_back({1 - rho, sauroc(c, male), s});
        }
    }
    judge("cohort F", mf);
    judge("cohort M", mm);
    detail.resize(detail.size() - 2);
    return {chk.ok, detail + (chk.ok ? "" : ": " + chk.failures())};
}

// 5: one threshold for every group, matching an exhaustive search.
Outcome shared_threshold_contract(const std::vector<Cohort>& corpus) {
    Check chk;
    std::size_t ops = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        const auto groups = with_negatives(c);
        const auto pos = oracle::select(c, Population{}, true, false);
        for (double level : {0.5, 0.8, 0.9, 0.95, 1.0}) {
            const auto op = fpr_at_tpr(c, groups, level);
            ++ops;
            const auto hit = std::count_if(pos.begin(), pos.end(), [&](double s) { return s >= op.threshold; });
            const double tpr = static_cast<double>(hit) / static_cast<double>(pos.size());
            const std::string where = "cohort " + std::to_string(i) + " level " + fmt("%g", level);
            chk.expect(op.threshold == oracle::shared_threshold(c, level), where + " threshold");
            chk.expect(op.population_tpr == tpr && tpr >= level, where + " population tpr");
            chk.expect(op.fpr.size() == groups.size(), where + " group count");
            for (const auto& [g, v] : op.fpr) {
                chk.expect(v == oracle::fpr(c, g, op.threshold), where + " " + subfair::to_string(g) + " fpr");
            }
        }
    }

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> hi(1, 2), lo(-2, 0);
    for (int k = 0; k < 100; ++k) {
        Cohort c = oracle::random_cohort(rng, 200);
        for (auto& r : c.records) r.score = r.positive() ? hi(rng) : lo(rng);
        const auto op = fpr_at_tpr(c, with_negatives(c), 0.95);
        for (const auto& [g, v] : op.fpr) chk.expect(v == 0.0, "separable cohort " + std::to_string(k) + " " + subfair::to_string(g));
    }
    return {chk.ok, std::to_string(ops) + " operating points, 100 separable cohorts" + (chk.ok ? "" : ": " + chk.failures())};
}

// 6: randomized toy splits.
Outcome split_correctness() {
    Check chk;
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> patients_d(250, 600), val_d(0, 10), test_d(5, 20);
    std::uniform_real_distribution<double> share_d(0.0, 1.0);
    std::size_t manifests = 0;
    for (int k = 0; k < 100; ++k) {
        const auto rows = oracle::toy_rows(rng, patients_d(rng));
        const std::size_t n_val = 2 * val_d(rng), n_test = 2 * test_d(rng);
        const std::uint64_t seed = rng();
        const std::string where = "split " + std::to_string(k);

        const auto eval = build_eval_sets(rows, "sex", n_val, n_test, 0.5, seed);
        std::map<std::string, std::size_t> avail;
        for (const auto& r : eval.remaining_normal) avail[r.attributes.at("sex")]++;
        const std::size_t budget = std::min(avail["F"], avail["M"]);
        std::vector<CompositionSpec> grid;
        for (double rho : {0.0, share_d(rng), 0.5, share_d(rng), 1.0}) grid.push_back({"sex", {{"F", rho}, {"M", 1 - rho}}, budget});
        const auto sweep = build_composition_sweep(eval.remaining_normal, grid, seed);

        std::map<std::string, const MetadataRow*> by_id;
        for (const auto& r : rows) by_id[r.image_id] = &r;
        const auto idx = patient_index(rows);
        std::size_t sick = 0;
        for (const auto& id : eval.test) sick += by_id.at(id)->no_finding ? 0 : 1;
        chk.expect(eval.test.size() == n_test && 2 * sick == n_test, where + " test prevalence");

        const auto again = build_composition_sweep(eval.remaining_normal, grid, seed);
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            SplitManifest m = sweep[i];
            m.val = eval.val;
            m.test = eval.test;
            ++manifests;
            chk.expect(verify_disjoint(m, idx).ok(), where + " manifest " + std::to_string(i) + " disjoint");
            std::size_t f = 0;
            for (const auto& id : m.train) f += by_id.at(id)->sex == "F" ? 1 : 0;
            const double want = static_cast<double>(budget) * grid[i].ratios[0].second;
            chk.expect(m.train.size() == budget && std::fabs(static_cast<double>(f) - want) < 1.0,
                       where + " manifest " + std::to_string(i) + " composition");
            chk.expect(io::to_json(sweep[i]).dump() == io::to_json(again[i]).dump(), where + " reproducible");
        }
        const auto eval2 = build_eval_sets(rows, "sex", n_val, n_test, 0.5, seed);
        chk.expect(eval2.val == eval.val && eval2.test == eval.test, where + " eval sets reproducible");
    }
    return {chk.ok, "100 toy splits, " + std::to_string(manifests) + " manifests" + (chk.ok ? "" : ": " + chk.failures())};
}

// 7: Welch and Pearson against reference formulas.
Outcome stats_reference() {
    Check chk;
    const auto hand = welch_t_test(SampleSet<double>{1, 2, 3, 4, 5}, SampleSet<double>{2, 3, 4, 5, 6});
    const double hand_p = 2 * boost::math::cdf(boost::math::students_t(8.0), -1.0);
    chk.expect(std::fabs(hand.t + 1) < 1e-6 && std::fabs(hand.dof - 8) < 1e-6 && std::fabs(hand.p - hand_p) < 1e-6, "hand case");

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> n_d(2, 40);
    std::uniform_real_distribution<double> mu_d(-1, 1), sd_d(0.05, 2);
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
        std::vector<double> a(n_d(rng)), b(n_d(rng));
        std::normal_distribution<double> da(mu_d(rng), sd_d(rng)), db(mu_d(rng), sd_d(rng));
        for (auto& x : a) x = da(rng);
        for (auto& x : b) x = db(rng);
        long double ma = 0, mb = 0, va = 0, vb = 0;
        for (double x : a) ma += x;
        for (double x : b) mb += x;
        ma /= a.size();
        mb /= b.size();
        for (double x : a) va += (x - ma) * (x - ma);
        for (double x : b) vb += (x - mb) * (x - mb);
        const double sa = static_cast<double>(va / (a.size() - 1) / a.size());
        const double sb = static_cast<double>(vb / (b.size() - 1) / b.size());
        const double t = static_cast<double>(ma - mb) / std::sqrt(sa + sb);
        const double dof = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
        const double p = 2 * boost::math::cdf(boost::math::complement(boost::math::students_t(dof), std::fabs(t)));
        const auto r = welch_t_test(SampleSet<double>(a), SampleSet<double>(b));
        const double err = std::max({std::fabs(r.t - t), std::fabs(r.dof - dof), std::fabs(r.p - p)});
        worst = std::max(worst, err);
        chk.expect(err <= 1e-6, "welch case " + std::to_string(k));
    }

    double worst_r = 0;
    std::normal_distribution<double> d;
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x(25), y(25);
        for (int i = 0; i < 25; ++i) {
            x[i] = d(rng);
            y[i] = 0.3 * x[i] + d(rng);
        }
        long double mx = 0, my = 0;
        for (int i = 0; i < 25; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= 25;
        my /= 25;
        long double sxy = 0, sxx = 0, syy = 0;
        for (int i = 0; i < 25; ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        const double ref = static_cast<double>(sxy / std::sqrt(sxx * syy));
        const double e = std::fabs(pearson_r(x, y) - ref);
        worst_r = std::max(worst_r, e);
        chk.expect(e <= 1e-12, "pearson case " + std::to_string(k));
    }
    return {chk.ok, "welch max err " + fmt("%.1e", worst) + ", pearson max err " + fmt("%.1e", worst_r) +
                        (chk.ok ? "" : ": " + chk.failures())};
}

// 8: metrics depend only on score order.
Outcome monotone_invariance(const std::vector<Cohort>& corpus) {
    Check chk;
    double worst = 0;
    const auto cmp = [&](double u, double v, const std::string& what) {
        worst = std::max(worst, std::fabs(u - v));
        chk.expect(std::fabs(u - v) <= 1e-12, what);
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        Cohort e = c;
        for (auto& r : e.records) r.score = std::exp(r.score);
        const auto groups = with_negatives(c);
        const std::string where = "cohort " + std::to_string(i);
        for (const auto& g : groups) {
            cmp(sauroc(c, g), sauroc(e, g), where + " sauroc");
            if (!oracle::select(c, g, true, true).empty()) cmp(auroc_naive(c, g), auroc_naive(e, g), where + " naive");
        }
        for (double level : {0.8, 0.95}) {
            const auto a = fpr_at_tpr(c, groups, level), b = fpr_at_tpr(e, groups, level);
            cmp(a.population_tpr, b.population_tpr, where + " tpr");
            for (std::size_t k = 0; k < a.fpr.size(); ++k) cmp(a.fpr[k].second, b.fpr[k].second, where + " fpr");
        }
    }
    return {chk.ok, "exp transform, max change " + fmt("%.1e", worst) + (chk.ok ? "" : ": " + chk.failures())};
}

// Numbers compared with a relative tolerance; everything else exactly.
bool same_json(const io::json& a, const io::json& b, const std::string& path, std::string& where) {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        if (std::fabs(x - y) <= 1e-12 * std::max(1.0, std::fabs(y))) return true;
        where = path;
        return false;
    }
    if (a.type() != b.type() || a.size() != b.size()) {
        where = path;
        return false;
    }
    if (a.is_object()) {
        for (auto it = a.begin(), jt = b.begin(); it != a.end(); ++it, ++jt) {
            if (it.key() != jt.key()) {
                where = path + "/" + it.key();
                return false;
            }
            if (!same_json(it.value(), jt.value(), path + "/" + it.key(), where)) return false;
        }
        return true;
    }
    if (a.is_array()) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!same_json(a[i], b[i], path + "/" + std::to_string(i), where)) return false;
        }
        return true;
    }
    if (a != b) where = path;
    return a == b;
}

// 9: the toy pipeline reproduces the checked-in report.
Outcome golden_run() {
    const fs::path toy = SUBFAIR_TOY_DIR;
    const fs::path work = fs::temp_directory_path() / ("subfair_golden_" + std::to_string(std::random_device{}()));
    fs::create_directories(work);
    for (const auto& entry : fs::directory_iterator(toy)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".json" || ext == ".csv")) fs::copy_file(entry.path(), work / entry.path().filename());
    }
    pipeline::RunOptions opts;
    opts.timestamps = false;
    Outcome out;
    try {
        pipeline::run_split(work / "split.json", opts);
        pipeline::run_simulate(work / "simulate.json", opts);
        pipeline::run_sweep(work / "sweep.json", opts);
        auto got = io::read_json(work / "out" / "sweep" / "sweep_report.json");
        auto want = io::read_json(toy / "golden" / "sweep_report.json");
        got["run"].erase("generated_at");
        want["run"].erase("generated_at");
        std::string where;
        out.ok = same_json(got, want, "", where);
        out.detail = out.ok ? "sweep_report.json matches golden" : "differs at " + where;
    } catch (const std::exception& e) {
        out = {false, e.what()};
    }
    fs::remove_all(work);
    return out;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const auto corpus = random_corpus(1000, 20240601);

    struct Criterion {
        int id;
        std::string name;
        double limit_s;  // 0 = no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "sAUROC and naive AUROC equal pair-count oracles", 60, [&] { return oracle_equivalence(corpus); }},
        {2, "population sAUROC equals AUROC", 0, [&] { return population_reduction(corpus); }},
        {3, "Gaussian cohort matches closed form", 60, gaussian_closed_form},
        {4, "fairness law recovery", 10, law_recovery},
        {5, "shared threshold contract", 0, [&] { return shared_threshold_contract(corpus); }},
        {6, "split correctness", 30, split_correctness},
        {7, "Welch and Pearson match references", 0, stats_reference},
        {8, "monotone transform invariance", 0, [&] { return monotone_invariance(corpus); }},
        {9, "golden toy sweep", 60, golden_run},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            o.ok = false;
            o.detail += "; exceeded " + fmt("%.0f", c.limit_s) + " s";
        }
        std::printf("%s AC%d %s (%s; %.2f s)\n", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.ok) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
