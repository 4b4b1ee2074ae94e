#include "dvoi/cli.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <limits>

namespace dvoi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Stopwatch {
  public:
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

  private:
    std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

json summary_to_json(const SampleSummary &s) {
    return {{"n", s.n},
            {"mean", s.mean},
            {"std", s.std},
            {"standard_error", s.standard_error ? json(*s.standard_error) : json(nullptr)},
            {"min", s.min},
            {"max", s.max},
            {"range", s.range()}};
}

json quantiles_to_json(const QuantileSummary &q) {
    return {{"min", q.min}, {"q25", q.q25}, {"median", q.median}, {"q75", q.q75}, {"max", q.max}};
}

CostBreakdown mean_breakdown(const std::vector<CostBreakdown> &all) {
    CostBreakdown m;
    if (all.empty()) {
        return m;
    }
    for (const auto &b : all) {
        m.electricity += b.electricity;
        m.carbon += b.carbon;
        m.grid_excess += b.grid_excess;
        m.grid_connection += b.grid_connection;
        m.battery_capex += b.battery_capex;
        m.solar_capex += b.solar_capex;
        m.total += b.total;
        m.lcoe += b.lcoe;
        m.peak_draw_kw += b.peak_draw_kw;
    }
    const double n = static_cast<double>(all.size());
    for (double *f : {&m.electricity, &m.carbon, &m.grid_excess, &m.grid_connection, &m.battery_capex, &m.solar_capex,
                      &m.total, &m.lcoe, &m.peak_draw_kw}) {
        *f /= n;
    }
    return m;
}

void write_breakdown_csv(const fs::path &path, const CostBreakdown &sp, const CostBreakdown &simulated) {
    csv::Writer w(path);
    w.row({"component", "sp_gbp", "simulated_mean_gbp"});
    auto row = [&](std::string_view name, double a, double b) {
        w.field(name).field(a).field(b);
        w.end_row();
    };
    row("Electricity", sp.electricity, simulated.electricity);
    row("Carbon", sp.carbon, simulated.carbon);
    row("Grid excess", sp.grid_excess, simulated.grid_excess);
    row("Grid connection", sp.grid_connection, simulated.grid_connection);
    row("Battery", sp.battery_capex, simulated.battery_capex);
    row("Solar", sp.solar_capex, simulated.solar_capex);
    row("Total", sp.total, simulated.total);
    row("LCOE (GBP/kWh)", sp.lcoe, simulated.lcoe);
}

void write_cost_samples_csv(const fs::path &path, const CostDistribution &d) {
    csv::Writer w(path);
    w.row({"sample", "total_gbp", "electricity_gbp", "carbon_gbp", "grid_excess_gbp", "grid_connection_gbp",
           "battery_capex_gbp", "solar_capex_gbp", "lcoe_gbp_per_kwh", "peak_draw_kw"});
    for (std::size_t j = 0; j < d.breakdowns.size(); ++j) {
        const auto &b = d.breakdowns[j];
        w.field(j).field(b.total).field(b.electricity).field(b.carbon).field(b.grid_excess).field(b.grid_connection);
        w.field(b.battery_capex).field(b.solar_capex).field(b.lcoe).field(b.peak_draw_kw);
        w.end_row();
    }
}

json prior_leg_json(const PipelineConfig &pc, const PriorLegResult &prior) {
    const auto &c = pc.voi;
    const double baseline = prior.baseline.summary.mean;
    return {{"design", design_to_json(prior.solution.design)},
            {"sp_objective_gbp", prior.solution.objective_gbp},
            {"solver",
             {{"status", prior.solution.solver_status},
              {"iterations", prior.solution.iterations},
              {"feasibility_tolerance", prior.solution.feasibility_tolerance},
              {"simultaneous_flow_cells", prior.solution.simultaneous_flow_cells},
              {"reduced_scenarios", prior.reduced.size()}}},
            {"sp_breakdown", breakdown_to_json(prior.sp_breakdown)},
            {"expected_cost", summary_to_json(prior.costs.summary)},
            {"simulated_breakdown_mean", breakdown_to_json(mean_breakdown(prior.costs.breakdowns))},
            {"no_asset_baseline", summary_to_json(prior.baseline.summary)},
            {"savings_fraction", baseline > 0.0 ? 1.0 - prior.costs.summary.mean / baseline : 0.0},
            {"n_eval", c.n_eval}};
}

json run_metadata(const PipelineConfig &pc) {
    const auto &c = pc.voi;
    return {{"config_hash", pc.hash},
            {"seed", c.seed},
            {"eta", c.system.eta},
            {"operating_scale", c.system.operating_scale},
            {"mpc", {{"horizon_steps", c.mpc.horizon_steps}, {"execute_steps", c.mpc.execute_steps}, {"fos_op", c.mpc.fos_op}}},
            {"sampling",
             {{"n_buildings", c.n_buildings},
              {"n_prior", c.n_prior},
              {"n_posterior", c.n_posterior},
              {"n_eval", c.n_eval},
              {"n_measurements", c.n_measurements},
              {"k_reduced", c.k_reduced}}},
            {"common_random_numbers",
             {{"enabled", true},
              {"description", "evaluation sample j uses the same random stream in the prior leg and in every "
                              "measurement's posterior evaluation"}}}};
}

void prepare_run_dir(const PipelineConfig &pc) {
    fs::create_directories(pc.output_dir);
    write_json(pc.output_dir / "config.json", pc.effective);
}

} // namespace

int cmd_dataset_gen(std::size_t types, std::size_t years, std::size_t hours, std::size_t solar_years, double dt,
                    std::uint64_t seed, const fs::path &out) {
    if (types == 0 || years == 0 || solar_years == 0) {
        throw ArgumentError("--types, --years and --solar-years must be at least 1");
    }
    if (hours < 24) {
        throw ArgumentError(fmt::format("--hours must be at least 24, got {}", hours));
    }
    if (!(dt > 0.0)) {
        throw ArgumentError("--dt must be positive");
    }
    auto loads = generate_synthetic_dataset(types, years, hours, seed);
    loads.timestep_hours = dt;
    auto solar = generate_synthetic_solar(solar_years, hours, seed);
    auto tariffs = generate_synthetic_tariffs(hours, dt, seed);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create '{}': {}", out.string(), ec.message()));
    }
    write_dataset(loads, out / "loads.csv");
    write_solar(solar, out / "solar.csv");
    write_tariffs(tariffs, out / "tariffs.csv");

    fmt::print("wrote {} load profiles ({} types x {} years, {} steps), {} solar years, tariffs to {}\n",
               loads.profiles.size(), types, years, hours, solar_years, out.string());
    for (std::size_t ti = 0; ti < loads.type_ids.size(); ++ti) {
        for (std::size_t yi = 0; yi < loads.year_ids.size(); ++yi) {
            const auto &p = loads.profiles[ti * loads.year_ids.size() + yi];
            auto s = summarize(p);
            fmt::print("  {} {}: mean {:.3f} kWh, max {:.3f} kWh\n", loads.type_ids[ti], loads.year_ids[yi], s.mean,
                       s.max);
        }
    }
    for (std::size_t y = 0; y < solar.year_ids.size(); ++y) {
        fmt::print("  solar {}: capacity factor {:.4f}\n", solar.year_ids[y], mean_of(solar.series[y]));
    }
    return exit_ok;
}

int cmd_design(const PipelineConfig &pc, const std::optional<fs::path> &export_lp) {
    if (pc.instance) {
        throw ArgumentError("design needs a sampling config, not a discrete instance");
    }
    prepare_run_dir(pc);
    RunManifest manifest(pc.output_dir, "design", pc);
    Stopwatch sw;
    auto prior = prior_leg(pc.voi);
    manifest.stage("prior_leg", sw.lap());

    json doc = prior_leg_json(pc, prior);
    doc["schema_version"] = 1;
    doc["run"] = run_metadata(pc);
    write_json(pc.output_dir / "design.json", doc);
    write_breakdown_csv(pc.output_dir / "breakdown.csv", prior.sp_breakdown, mean_breakdown(prior.costs.breakdowns));
    write_cost_samples_csv(pc.output_dir / "prior_costs.csv", prior.costs);
    write_scenario_set(prior.reduced, pc.output_dir / "reduced_scenarios");
    if (export_lp) {
        write_lp(design_lp(prior.reduced, pc.voi.system), *export_lp);
    }
    manifest.stage("write_outputs", sw.lap());
    manifest.finish("ok");

    const auto &d = prior.solution.design;
    fmt::print("prior design: battery {:.1f} kWh, solar {:.1f} kWp, grid {:.1f} kW\n", d.total_battery(),
               d.total_solar(), d.grid_kw);
    fmt::print("expected lifetime cost {:.0f} GBP (SE {:.0f}), no-asset baseline {:.0f} GBP\n",
               prior.costs.summary.mean, prior.costs.summary.standard_error.value_or(0.0),
               prior.baseline.summary.mean);
    return exit_ok;
}

int cmd_simulate(const PipelineConfig &pc, const fs::path &design_path, std::size_t sample) {
    if (pc.instance) {
        throw ArgumentError("simulate needs a sampling config, not a discrete instance");
    }
    auto doc = read_json(design_path);
    auto design = design_from_json(doc.contains("design") ? doc.at("design") : doc);
    if (design.buildings() != pc.voi.n_buildings) {
        throw ArgumentError(fmt::format("design has {} buildings, config expects {}", design.buildings(),
                                        pc.voi.n_buildings));
    }
    prepare_run_dir(pc);
    RunManifest manifest(pc.output_dir, "simulate", pc);
    Stopwatch sw;
    auto scenario = prior_evaluation_source(pc.voi)(sample);
    auto result = simulate(design, scenario, pc.voi.system, pc.voi.mpc);
    manifest.stage("simulate", sw.lap());
    write_simulation_csv(result, pc.output_dir / "timeseries.csv");
    json summary = simulation_summary_json(result);
    summary["schema_version"] = 1;
    summary["sample"] = sample;
    summary["design"] = design_to_json(design);
    summary["run"] = run_metadata(pc);
    write_json(pc.output_dir / "simulation.json", summary);
    manifest.finish("ok");
    fmt::print("sample {}: total {:.0f} GBP, LCOE {:.4f} GBP/kWh, peak {:.1f} kW, {} excess steps\n", sample,
               result.costs.total, result.costs.lcoe, result.costs.peak_draw_kw, result.excess_events);
    return exit_ok;
}

namespace {

void write_records_csv(const fs::path &path, const std::vector<MeasurementRecord> &records, std::size_t B,
                       const SpErrorReport &sp) {
    csv::Writer w(path);
    std::vector<std::string> header = {"index",
                                       "status",
                                       "error",
                                       "total_battery_kwh",
                                       "total_solar_kwp",
                                       "grid_kw",
                                       "posterior_expected_cost_gbp",
                                       "posterior_cost_std_gbp",
                                       "posterior_cost_se_gbp",
                                       "posterior_cost_range_gbp",
                                       "sp_objective_gbp",
                                       "capital_cost_gbp",
                                       "sp_error_pct",
                                       "posterior_mean_load_kw"};
    for (std::size_t i = 0; i < B; ++i) {
        for (const char *f : {"type", "true_mean_kw", "true_peak_kw", "z_mean_kw", "z_peak_kw", "battery_kwh", "solar_kwp"}) {
            header.push_back(fmt::format("b{}_{}", i, f));
        }
    }
    w.row(header);
    std::size_t ok_index = 0;
    for (const auto &r : records) {
        w.field(r.index).field(std::string_view{r.ok ? "ok" : "failed"}).field(std::string_view{r.error});
        if (r.ok) {
            w.field(r.posterior_design.total_battery()).field(r.posterior_design.total_solar());
            w.field(r.posterior_design.grid_kw).field(r.posterior_expected_cost).field(r.posterior_cost_std);
            w.field(r.posterior_cost_se).field(r.posterior_cost_range).field(r.sp_objective).field(r.capital_cost);
            w.field(sp.per_record_pct[ok_index++]).field(r.posterior_mean_load_kw);
        } else {
            for (int k = 0; k < 11; ++k) {
                w.field(std::string_view{});
            }
        }
        for (std::size_t i = 0; i < B; ++i) {
            if (i < r.truth.size() && i < r.measurement.size()) {
                w.field(std::string_view{r.truth[i].type_id}).field(r.truth[i].mean_kw).field(r.truth[i].peak_kw);
                w.field(r.measurement[i].z_mean).field(r.measurement[i].z_peak);
            } else {
                for (int k = 0; k < 5; ++k) {
                    w.field(std::string_view{});
                }
            }
            if (r.ok) {
                w.field(r.posterior_design.battery_kwh[i]).field(r.posterior_design.solar_kwp[i]);
            } else {
                w.field(std::string_view{}).field(std::string_view{});
            }
        }
        w.end_row();
    }
}

void write_convergence_csv(const fs::path &path, const std::vector<std::pair<std::string, ConvergenceTrace>> &traces) {
    csv::Writer w(path);
    w.row({"series", "n", "running_mean", "ci95_low", "ci95_high"});
    for (const auto &[name, tr] : traces) {
        for (std::size_t i = 0; i < tr.running_mean.size(); ++i) {
            w.field(std::string_view{name}).field(i + 1).field(tr.running_mean[i]);
            if (std::isnan(tr.ci_low[i])) {
                w.field(std::string_view{}).field(std::string_view{});
            } else {
                w.field(tr.ci_low[i]).field(tr.ci_high[i]);
            }
            w.end_row();
        }
    }
}

// Aggregate district load (kW) of every evaluation sample, for the prior and
// for the first few successful measurements.
void write_aggregate_loads(const fs::path &path, const PipelineConfig &pc, const std::vector<MeasurementRecord> &records,
                           std::size_t max_posteriors) {
    const auto &c = pc.voi;
    const auto T = c.loads->hours();
    csv::Writer w(path);
    w.field("source").field("sample");
    for (std::size_t t = 0; t < T; ++t) {
        w.field(std::string_view{fmt::format("t{}", t)});
    }
    w.end_row();
    auto emit = [&](const std::string &name, const ScenarioSource &source) {
        for (std::size_t j = 0; j < c.n_eval; ++j) {
            auto agg = source(j).aggregate_kw();
            w.field(std::string_view{name}).field(j);
            for (double v : agg) {
                w.field(v);
            }
            w.end_row();
        }
    };
    emit("prior", prior_evaluation_source(c));
    std::size_t used = 0;
    for (const auto &r : records) {
        if (!r.ok || used >= max_posteriors) {
            continue;
        }
        emit(fmt::format("posterior_{}", r.index), evaluation_source(c, record_posteriors(c, r)));
        ++used;
    }
}

json record_to_json(const MeasurementRecord &r) {
    json j = {{"index", r.index}, {"ok", r.ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    json meas = json::array();
    for (const auto &m : r.measurement) {
        meas.push_back({{"observed_type", m.observed_type}, {"z_mean_kw", m.z_mean}, {"z_peak_kw", m.z_peak}});
    }
    j["measurement"] = meas;
    j["posterior_design"] = design_to_json(r.posterior_design);
    j["posterior_expected_cost_gbp"] = r.posterior_expected_cost;
    j["posterior_cost_std_gbp"] = r.posterior_cost_std;
    j["posterior_cost_range_gbp"] = r.posterior_cost_range;
    j["sp_objective_gbp"] = r.sp_objective;
    return j;
}

} // namespace

int cmd_voi_run(const PipelineConfig &pc) {
    if (pc.instance) {
        throw ArgumentError("voi run needs a sampling config; use voi evpi for discrete instances");
    }
    const auto &c = pc.voi;
    prepare_run_dir(pc);
    RunManifest manifest(pc.output_dir, "voi run", pc);
    Stopwatch sw;
    auto prior = prior_leg(c);
    manifest.stage("prior_leg", sw.lap());
    auto pre = preposterior_leg(c);
    manifest.stage("preposterior_leg", sw.lap());

    auto evii = compute_evii(prior.costs.summary.mean, pre.expected_cost);
    const double se_prior = prior.costs.summary.standard_error.value_or(0.0);
    const double combined_se = std::sqrt(se_prior * se_prior + pre.standard_error * pre.standard_error);
    auto sp = sp_error_report(pre.records);
    auto risk = risk_report(prior.costs.summary, pre.records);

    std::vector<double> measurement_costs;
    std::vector<double> voi_samples;
    json records = json::array();
    for (const auto &r : pre.records) {
        records.push_back(record_to_json(r));
        if (r.ok) {
            measurement_costs.push_back(r.posterior_expected_cost);
            voi_samples.push_back(prior.costs.summary.mean - r.posterior_expected_cost);
        }
    }
    const double failure_fraction = static_cast<double>(pre.failures) / static_cast<double>(c.n_measurements);
    const bool too_many_failures = failure_fraction > pc.failure_threshold;

    json doc = {{"schema_version", 1},
                {"mask", c.mask.name()},
                {"run", run_metadata(pc)},
                {"prior", prior_leg_json(pc, prior)},
                {"preposterior",
                 {{"expected_cost_gbp", pre.expected_cost},
                  {"standard_error_gbp", pre.standard_error},
                  {"n_measurements", c.n_measurements},
                  {"failures", pre.failures},
                  {"failure_fraction", failure_fraction},
                  {"failure_threshold", pc.failure_threshold}}},
                {"prior_expected_cost_gbp", evii.prior_cost},
                {"preposterior_expected_cost_gbp", evii.preposterior_cost},
                {"evii_gbp", evii.evii},
                {"evii_raw_gbp", evii.evii_raw},
                {"evii_pct", evii.evii_pct},
                {"combined_standard_error_gbp", combined_se},
                {"evii_raw_over_se", combined_se > 0.0 ? evii.evii_raw / combined_se : 0.0},
                {"sp_error", {{"mean_error_pct", sp.mean_error_pct}, {"mean_abs_error_pct", sp.mean_abs_error_pct}}},
                {"risk",
                 {{"std_ratio", quantiles_to_json(risk.std_ratio_summary)},
                  {"range_ratio", quantiles_to_json(risk.range_ratio_summary)}}},
                {"records", records}};
    write_json(pc.output_dir / "voi_result.json", doc);
    write_json(pc.output_dir / "prior_design.json",
               {{"schema_version", 1}, {"design", design_to_json(prior.solution.design)}});
    write_records_csv(pc.output_dir / "records.csv", pre.records, c.n_buildings, sp);
    write_cost_samples_csv(pc.output_dir / "prior_costs.csv", prior.costs);
    write_convergence_csv(pc.output_dir / "convergence.csv",
                          {{"prior", convergence_trace(prior.costs.totals)},
                           {"preposterior", convergence_trace(measurement_costs)},
                           {"voi", convergence_trace(voi_samples)}});
    write_aggregate_loads(pc.output_dir / "aggregate_loads.csv", pc, pre.records, 3);
    manifest.stage("write_outputs", sw.lap());
    manifest.finish(too_many_failures ? "partial_failure" : "ok");

    fmt::print("prior {:.0f} GBP, preposterior {:.0f} GBP, EVII {:.0f} GBP ({:.3f}%), raw {:.0f} GBP, SE {:.0f} GBP\n",
               evii.prior_cost, evii.preposterior_cost, evii.evii, evii.evii_pct, evii.evii_raw, combined_se);
    if (pre.failures > 0) {
        fmt::print(stderr, "{} of {} measurements failed\n", pre.failures, c.n_measurements);
    }
    return too_many_failures ? exit_partial_failure : exit_ok;
}

int cmd_voi_evpi(const PipelineConfig &pc) {
    fs::create_directories(pc.output_dir);
    write_json(pc.output_dir / "config.json", pc.effective);
    RunManifest manifest(pc.output_dir, "voi evpi", pc);
    Stopwatch sw;
    json doc = {{"schema_version", 1}, {"config_hash", pc.hash}};
    if (pc.instance) {
        auto r = exact_discrete_voi(*pc.instance);
        json perfect = json::array();
        for (const auto &d : r.perfect_designs) {
            perfect.push_back(design_to_json(d));
        }
        doc.update({{"mode", "exact_discrete"},
                    {"prior_cost_gbp", r.prior_cost},
                    {"perfect_info_cost_gbp", r.perfect_info_cost},
                    {"signal_cost_gbp", r.signal_cost},
                    {"evpi_gbp", r.evpi},
                    {"evii_gbp", r.evii},
                    {"prior_design", design_to_json(r.prior_design)},
                    {"perfect_designs", perfect}});
        fmt::print("EVPI {:.6f} GBP, EVII {:.6f} GBP (prior {:.6f} GBP)\n", r.evpi, r.evii, r.prior_cost);
    } else {
        auto prior = prior_leg(pc.voi);
        manifest.stage("prior_leg", sw.lap());
        auto r = compute_evpi(pc.voi, prior.costs.summary);
        doc.update({{"mode", pc.voi.evpi_mode == EvpiMode::exclude_year ? "exclude_year" : "include_year"},
                    {"run", run_metadata(pc)},
                    {"prior_cost_gbp", r.prior_cost},
                    {"perfect_info_cost_gbp", r.perfect_info_cost},
                    {"evpi_gbp", r.evpi},
                    {"evpi_raw_gbp", r.evpi_raw},
                    {"standard_error_gbp", r.standard_error},
                    {"per_sample_cost_gbp", r.per_sample_cost}});
        fmt::print("EVPI {:.0f} GBP (raw {:.0f}, SE {:.0f})\n", r.evpi, r.evpi_raw, r.standard_error);
    }
    manifest.stage("evpi", sw.lap());
    write_json(pc.output_dir / "evpi.json", doc);
    manifest.finish("ok");
    return exit_ok;
}

} // namespace dvoi::cli
