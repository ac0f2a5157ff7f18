// subfair: split, evaluate, sweep and simulate from a JSON config.
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "subfair/pipeline.hpp"

namespace {

enum Exit { ok = 0, usage = 1, input_error = 2, metric_error = 3 };

}  // namespace

int main(int argc, char** argv) {
    using namespace subfair;
    CLI::App app{"Subgroup fairness evaluation of anomaly scores"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string column_map;
    bool no_timestamps = false;
    bool quiet = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out-dir", out_dir, "Output directory");
        sub->add_option("--column-map", column_map, "Column map JSON")->check(CLI::ExistingFile);
        sub->add_flag("--no-timestamps", no_timestamps, "Leave generated_at empty");
        sub->add_flag("-q,--quiet", quiet, "Do not print the report to stdout");
        return sub;
    };
    auto* split = add_common(app.add_subcommand("split", "Build patient-disjoint split manifests"));
    auto* evaluate = add_common(app.add_subcommand("evaluate", "Subgroup metric report for score files"));
    auto* sweep = add_common(app.add_subcommand("sweep", "Composition sweep report and fairness laws"));
    auto* simulate = add_common(app.add_subcommand("simulate", "Generate synthetic score files"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::usage;
    }

    pipeline::RunOptions options;
    options.seed = seed;
    if (!out_dir.empty()) options.out_dir = out_dir;
    if (!column_map.empty()) options.column_map = column_map;
    options.timestamps = !no_timestamps;

    try {
        pipeline::json result;
        if (*split) result = pipeline::run_split(config, options);
        else if (*evaluate) result = pipeline::run_evaluate(config, options);
        else if (*sweep) result = pipeline::run_sweep(config, options);
        else if (*simulate) result = pipeline::run_simulate(config, options);
        if (!quiet) std::cout << result.dump(2) << "\n";
        return Exit::ok;
    } catch (const InputError& e) {
        std::fprintf(stderr, "subfair: input error: %s\n", e.what());
        return Exit::input_error;
    } catch (const MetricError& e) {
        std::fprintf(stderr, "subfair: metric error: %s\n", e.what());
        return Exit::metric_error;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "subfair: input error: %s\n", e.what());
        return Exit::input_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "subfair: error: %s\n", e.what());
        return 4;
    }
}
