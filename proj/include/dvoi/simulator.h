#pragma once

#include "dvoi/designopt.h"
#include "dvoi/stats.h"

#include <functional>
#include <json.hpp>

namespace dvoi {

/// Receding-horizon controller settings.
struct MpcParams {
    std::size_t horizon_steps{48};
    std::size_t execute_steps{24};
    double fos_op{1.01};

    void validate() const;
};

struct SimulationResult {
    CostBreakdown costs;
    Dispatch flows;                              ///< committed charge/discharge and SoC trajectories
    std::vector<std::vector<double>> building_net; ///< B x T kWh drawn from the grid (negative = export)
    std::vector<double> grid_flow_kw;            ///< aggregate grid flow per step
    std::size_t excess_events{0};                ///< steps with |flow| above grid_kw
    std::size_t windows_solved{0};
    std::size_t simultaneous_flow_cells{0};
};

/// Operates `design` on `scenario` by repeatedly optimising a window of
/// horizon_steps and committing the first execute_steps, then bills the
/// committed flows.
SimulationResult simulate(const SystemDesign &design, const Scenario &scenario, const SystemParams &params,
                          const MpcParams &mpc);

/// Produces scenario j on demand; must be deterministic in j.
using ScenarioSource = std::function<Scenario(std::size_t)>;

struct CostDistribution {
    SampleSummary summary;
    std::vector<double> totals;
    std::vector<CostBreakdown> breakdowns;
};

CostDistribution summarize_costs(std::vector<CostBreakdown> breakdowns);

/// Simulates the design on samples 0..n-1 of `source` using up to `jobs` workers.
CostDistribution evaluate_expected_cost(const SystemDesign &design, const ScenarioSource &source, std::size_t n,
                                        const SystemParams &params, const MpcParams &mpc, std::size_t jobs = 1);

/// Cost with no battery or solar and a grid connection sized to each sample's peak.
CostDistribution no_asset_baseline(const ScenarioSource &source, std::size_t n, const SystemParams &params,
                                   std::size_t jobs = 1);

/// Per-step time series: t, per-building net draw and SoC, aggregate grid flow.
void write_simulation_csv(const SimulationResult &result, const std::filesystem::path &path);
nlohmann::json simulation_summary_json(const SimulationResult &result);

} // namespace dvoi
