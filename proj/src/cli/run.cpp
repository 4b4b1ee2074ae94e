#include "dvoi/cli.h"
#include "dvoi/errors.h"

#include <CLI11.hpp>
#include <fmt/core.h>

namespace dvoi::cli {

namespace fs = std::filesystem;

namespace {

void add_config_flags(CLI::App *cmd, fs::path &config, Overrides &ov) {
    cmd->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", ov.seed, "Override the master seed");
    cmd->add_option("--jobs", ov.jobs, "Worker threads (0 = all cores)");
    cmd->add_option("--mask", ov.mask, "Parameters revealed by measurement")
        ->check(CLI::IsMember({"none", "type", "mean", "peak", "all"}));
    cmd->add_option("--out", ov.out, "Output directory");
    cmd->add_option("--set", ov.set, "Config override key.path=value (repeatable)");
}

} // namespace

int run(int argc, char **argv) {
    CLI::App app{"Value of information analysis for district energy system design"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    fs::path config;
    Overrides ov;

    auto *dataset = app.add_subcommand("dataset", "Dataset utilities");
    dataset->require_subcommand(1);
    auto *gen = dataset->add_subcommand("gen", "Write synthetic load, solar and tariff CSVs");
    std::size_t types = 3, years = 6, hours = 8760, solar_years = 10;
    double dt = 1.0;
    std::uint64_t seed = 7;
    fs::path out = "data";
    gen->add_option("--types", types, "Building types")->capture_default_str();
    gen->add_option("--years", years, "Load years")->capture_default_str();
    gen->add_option("--hours", hours, "Steps per profile (>= 24)")->capture_default_str();
    gen->add_option("--solar-years", solar_years, "Solar weather years")->capture_default_str();
    gen->add_option("--dt", dt, "Step length in hours")->capture_default_str();
    gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", out, "Output directory")->capture_default_str();

    auto *design = app.add_subcommand("design", "Optimise the prior design and estimate its cost");
    add_config_flags(design, config, ov);
    std::optional<fs::path> export_lp;
    design->add_option("--export-lp", export_lp, "Also write the design LP (.lp or .mps)");

    auto *simulate = app.add_subcommand("simulate", "Operate a design on one prior evaluation sample");
    add_config_flags(simulate, config, ov);
    fs::path design_path;
    std::size_t sample = 0;
    simulate->add_option("--design", design_path, "design.json to operate")->required()->check(CLI::ExistingFile);
    simulate->add_option("--sample", sample, "Evaluation sample index")->capture_default_str();

    auto *voi = app.add_subcommand("voi", "Value of information");
    voi->require_subcommand(1);
    auto *voi_run = voi->add_subcommand("run", "Expected value of imperfect information");
    add_config_flags(voi_run, config, ov);
    auto *voi_evpi = voi->add_subcommand("evpi", "Expected value of perfect information");
    add_config_flags(voi_evpi, config, ov);

    auto *report = app.add_subcommand("report", "Plot data from a completed voi run");
    fs::path run_dir;
    std::size_t bins = 20;
    report->add_option("run_dir", run_dir, "Run directory")->required();
    report->add_option("--bins", bins, "Histogram bins")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*gen) {
            return cmd_dataset_gen(types, years, hours, solar_years, dt, seed, out);
        }
        if (*report) {
            return cmd_report(run_dir, bins);
        }
        auto pc = read_config(config, ov);
        if (*design) {
            return cmd_design(pc, export_lp);
        }
        if (*simulate) {
            return cmd_simulate(pc, design_path, sample);
        }
        if (*voi_run) {
            return cmd_voi_run(pc);
        }
        if (*voi_evpi) {
            return cmd_voi_evpi(pc);
        }
    } catch (const SolverError &e) {
        fmt::print(stderr, "solver error: {}\n", e.what());
        return exit_solver;
    } catch (const SimulationError &e) {
        fmt::print(stderr, "simulation error at step {}: {}\n", e.step(), e.what());
        return exit_solver;
    } catch (const InferenceError &e) {
        fmt::print(stderr, "inference error: {}\n", e.what());
        return exit_solver;
    } catch (const std::exception &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_validation;
    }
    return exit_validation;
}

} // namespace dvoi::cli
