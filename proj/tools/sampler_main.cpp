#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sampling/errors.hpp"
#include "sampling/experiment.hpp"
#include "sampling/synth.hpp"

namespace {

// Exit codes: 0 ok, 1 unexpected, 2 usage, 3 data, 4 dimension, 5 numeric.
constexpr int kExitUnexpected = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDimension = 4;
constexpr int kExitNumeric = 5;

void apply_override(sampling::ExperimentConfig& cfg, const std::string& kv) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw sampling::UsageError("--set expects key=value, got '" + kv + "'");
    sampling::set_config_field(cfg, kv.substr(0, eq), kv.substr(eq + 1));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"budget-constrained sensing simulator: forecast, schedule, reconstruct"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir;
    uint64_t seed = 0;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "train the configured pipeline, evaluate on the test split");
    run->add_option("--config", config_path, "key=value config file")->required();
    CLI::Option* preset_opt = run->add_option("--preset", preset, "desk or full scale preset");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "master seed override");
    CLI::Option* out_opt = run->add_option("--out", out_dir, "output directory override");
    run->add_option("--set", overrides, "extra key=value overrides (repeatable)");

    std::vector<std::string> dirs;
    CLI::App* cmp = app.add_subcommand("compare", "tabulate metrics across finished runs");
    cmp->add_option("dirs", dirs, "run directories")->required()->expected(-1);

    std::string plot_run;
    int episode = 0;
    CLI::App* plot = app.add_subcommand("plot", "write one episode's per-step series as CSV");
    plot->add_option("--run", plot_run, "run directory")->required();
    plot->add_option("--episode", episode, "test episode index")->required();

    std::string synth_out;
    sampling::SynthConfig synth_cfg;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic hourly occupancy CSV");
    synth->add_option("--out", synth_out, "output CSV path")->required();
    synth->add_option("--locations", synth_cfg.locations, "number of detector columns");
    synth->add_option("--hours", synth_cfg.hours, "number of hourly rows");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (run->parsed()) {
            sampling::ExperimentConfig cfg = sampling::parse_config_file(config_path);
            if (*preset_opt) sampling::apply_preset(cfg, preset);
            for (const std::string& kv : overrides) apply_override(cfg, kv);
            if (*seed_opt) cfg.seed = seed;
            if (*out_opt) cfg.out_dir = out_dir;
            sampling::RunResult res = sampling::run_experiment(cfg);
            std::printf("run complete: %s\n", res.out_dir.c_str());
            std::fputs(res.report.to_kv().c_str(), stdout);
            std::printf("mean_return=%.10g\n", res.mean_return);
        } else if (cmp->parsed()) {
            std::fputs(sampling::compare_runs(dirs).c_str(), stdout);
        } else if (plot->parsed()) {
            std::printf("%s\n", sampling::plot_episode(plot_run, episode).c_str());
        } else if (synth->parsed()) {
            sampling::write_synthetic_csv(synth_out, synth_cfg);
            std::printf("wrote %s (%d locations, %d hours)\n", synth_out.c_str(),
                        synth_cfg.locations, synth_cfg.hours);
        }
    } catch (const sampling::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const sampling::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const sampling::DimensionError& e) {
        std::fprintf(stderr, "dimension error: %s\n", e.what());
        return kExitDimension;
    } catch (const sampling::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUnexpected;
    }
    return 0;
}
