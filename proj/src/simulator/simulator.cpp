#include "dvoi/simulator.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"
#include "dvoi/parallel.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace dvoi {

using json = nlohmann::json;

void MpcParams::validate() const {
    if (horizon_steps < 1 || execute_steps < 1 || execute_steps > horizon_steps) {
        throw ArgumentError(fmt::format("controller needs 1 <= execute_steps ({}) <= horizon_steps ({})", execute_steps,
                                        horizon_steps));
    }
    if (!(fos_op >= 1.0)) {
        throw ArgumentError(fmt::format("fos_op must be >= 1, got {}", fos_op));
    }
}

namespace {

// Solver output is feasible to ~1e-7; pull values that sit just outside their
// bounds back in so the recomputed state never drifts.
double snap(double v, double lo, double hi) {
    constexpr double slack = 1e-6;
    if (v < lo && v > lo - slack) {
        return lo;
    }
    if (v > hi && v < hi + slack) {
        return hi;
    }
    return v;
}

} // namespace

SimulationResult simulate(const SystemDesign &design, const Scenario &scenario, const SystemParams &params,
                          const MpcParams &mpc) {
    mpc.validate();
    design.validate(params.pv_cap_per_building);
    const auto B = scenario.buildings();
    const auto T = scenario.hours();
    if (design.buildings() != B) {
        throw ArgumentError(fmt::format("design has {} buildings, scenario {}", design.buildings(), B));
    }
    if (params.hours() < T) {
        throw ArgumentError(fmt::format("tariff series cover {} steps, scenario needs {}", params.hours(), T));
    }

    const double sqrt_eta = std::sqrt(params.eta);
    SimulationResult r;
    r.flows.charge.assign(B, std::vector<double>(T, 0.0));
    r.flows.discharge.assign(B, std::vector<double>(T, 0.0));
    r.flows.soc.assign(B, std::vector<double>(T + 1, 0.0));
    std::vector<double> state(B);
    for (std::size_t i = 0; i < B; ++i) {
        state[i] = params.soc0_frac * design.battery_kwh[i];
        r.flows.soc[i][0] = state[i];
    }

    for (std::size_t t = 0; t < T; t += mpc.execute_steps) {
        const auto t1 = std::min(t + mpc.horizon_steps, T);
        Dispatch plan;
        try {
            plan = solve_dispatch_window(scenario, params, design, t, t1, state, mpc.fos_op);
        } catch (const SolverError &e) {
            throw SimulationError(fmt::format("step {}: {}", t, e.what()), t);
        }
        ++r.windows_solved;
        const auto commit = std::min(mpc.execute_steps, T - t);
        for (std::size_t i = 0; i < B; ++i) {
            const double cap = design.battery_kwh[i];
            const double flow_cap = params.delta * cap * params.dt;
            for (std::size_t k = 0; k < commit; ++k) {
                double ch = snap(plan.charge[i][k], 0.0, flow_cap);
                double dis = snap(plan.discharge[i][k], 0.0, flow_cap);
                double next = snap(state[i] + sqrt_eta * ch - dis / sqrt_eta, 0.0, cap);
                r.flows.charge[i][t + k] = ch;
                r.flows.discharge[i][t + k] = dis;
                r.flows.soc[i][t + k + 1] = next;
                state[i] = next;
                if (std::min(ch, dis) > 1e-6) {
                    ++r.simultaneous_flow_cells;
                }
            }
        }
    }

    r.costs = bill_operation(scenario, params, design, r.flows, 1.0);
    r.building_net.assign(B, std::vector<double>(T));
    r.grid_flow_kw.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double total = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            double net = scenario.loads[i][t] - design.solar_kwp[i] * scenario.solar[t] * params.dt +
                         r.flows.charge[i][t] - r.flows.discharge[i][t];
            r.building_net[i][t] = net;
            total += net;
        }
        r.grid_flow_kw[t] = total / params.dt;
        if (std::abs(r.grid_flow_kw[t]) > design.grid_kw * (1.0 + 1e-9) + 1e-9) {
            ++r.excess_events;
        }
    }
    return r;
}

CostDistribution summarize_costs(std::vector<CostBreakdown> breakdowns) {
    CostDistribution out;
    out.totals.reserve(breakdowns.size());
    for (const auto &b : breakdowns) {
        out.totals.push_back(b.total);
    }
    out.summary = summarize(out.totals);
    out.breakdowns = std::move(breakdowns);
    return out;
}

namespace {

CostDistribution evaluate_samples(const ScenarioSource &source, std::size_t n, std::size_t jobs,
                                  const std::function<CostBreakdown(const Scenario &)> &cost_of) {
    if (n < 1) {
        throw ArgumentError("need at least one evaluation sample");
    }
    std::vector<CostBreakdown> costs(n);
    std::vector<std::optional<std::string>> failures(n);
    std::vector<std::size_t> failed_step(n, 0);
    parallel_for(n, jobs, [&](std::size_t j) {
        try {
            costs[j] = cost_of(source(j));
        } catch (const SimulationError &e) {
            failures[j] = e.what();
            failed_step[j] = e.step();
        } catch (const Error &e) {
            failures[j] = e.what();
        }
    });
    std::size_t failed = 0;
    std::size_t first = n;
    for (std::size_t j = 0; j < n; ++j) {
        if (failures[j]) {
            ++failed;
            first = std::min(first, j);
        }
    }
    if (failed > 0) {
        throw SimulationError(fmt::format("{} of {} evaluation samples failed ({} completed); first failure, sample {}: {}",
                                          failed, n, n - failed, first, *failures[first]),
                              failed_step[first]);
    }
    return summarize_costs(std::move(costs));
}

} // namespace

CostDistribution evaluate_expected_cost(const SystemDesign &design, const ScenarioSource &source, std::size_t n,
                                        const SystemParams &params, const MpcParams &mpc, std::size_t jobs) {
    return evaluate_samples(source, n, jobs,
                            [&](const Scenario &s) { return simulate(design, s, params, mpc).costs; });
}

CostDistribution no_asset_baseline(const ScenarioSource &source, std::size_t n, const SystemParams &params,
                                   std::size_t jobs) {
    return evaluate_samples(source, n, jobs, [&](const Scenario &s) {
        const auto B = s.buildings();
        const auto T = s.hours();
        auto design = SystemDesign::zero(B);
        Dispatch idle;
        idle.charge.assign(B, std::vector<double>(T, 0.0));
        idle.discharge = idle.charge;
        idle.soc.assign(B, std::vector<double>(T + 1, 0.0));
        for (std::size_t t = 0; t < T; ++t) {
            double total = 0.0;
            for (std::size_t i = 0; i < B; ++i) {
                total += s.loads[i][t];
            }
            design.grid_kw = std::max(design.grid_kw, total / params.dt);
        }
        return bill_operation(s, params, design, idle, 1.0);
    });
}

void write_simulation_csv(const SimulationResult &result, const std::filesystem::path &path) {
    const auto B = result.building_net.size();
    const auto T = result.grid_flow_kw.size();
    csv::Writer w(path);
    w.field("t");
    for (std::size_t i = 0; i < B; ++i) {
        w.field(std::string_view{fmt::format("net_{}_kwh", i)});
    }
    for (std::size_t i = 0; i < B; ++i) {
        w.field(std::string_view{fmt::format("soc_{}_kwh", i)});
    }
    w.field("grid_flow_kw");
    w.end_row();
    for (std::size_t t = 0; t < T; ++t) {
        w.field(t);
        for (std::size_t i = 0; i < B; ++i) {
            w.field(result.building_net[i][t]);
        }
        for (std::size_t i = 0; i < B; ++i) {
            w.field(result.flows.soc[i][t + 1]);
        }
        w.field(result.grid_flow_kw[t]);
        w.end_row();
    }
}

json simulation_summary_json(const SimulationResult &result) {
    return {{"costs", breakdown_to_json(result.costs)},
            {"excess_events", result.excess_events},
            {"windows_solved", result.windows_solved},
            {"simultaneous_flow_cells", result.simultaneous_flow_cells}};
}

} // namespace dvoi
