#pragma once

#include "dvoi/lp.h"
#include "dvoi/scenario.h"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dvoi {

/// Prices, technology parameters and tariff series for the district model.
/// Grid prices are quoted per kW per day and annualised by 365.
struct SystemParams {
    double gamma{20.0};         ///< lifetime, years
    double dt{1.0};             ///< hours per step
    double p_c{1.0};            ///< GBP per kgCO2
    double p_s{750.0};          ///< GBP per kWh of battery
    double p_pv{1500.0};        ///< GBP per kWp of solar
    double p_grid_day{0.263};   ///< GBP per kW per day of contracted capacity
    double p_excess_day{1.053}; ///< GBP per kW per day of peak above capacity
    double fos_design{1.25};
    double delta{0.4};          ///< battery power per unit energy capacity, 1/h
    double soc0_frac{0.0};
    double eta{0.9};            ///< round-trip efficiency
    std::optional<double> pv_cap_per_building;
    /// Multiplier turning operating cost over the modelled horizon into an
    /// annual figure; 1 treats the horizon as one year.
    double operating_scale{1.0};
    std::vector<double> price;  ///< GBP per kWh, length T
    std::vector<double> carbon; ///< kgCO2 per kWh, length T

    double p_grid_annual() const { return p_grid_day * 365.0; }
    double p_excess_annual() const { return p_excess_day * 365.0; }
    std::size_t hours() const { return price.size(); }
    void validate() const;
};

struct SystemDesign {
    std::vector<double> battery_kwh;
    std::vector<double> solar_kwp;
    double grid_kw{0.0};

    static SystemDesign zero(std::size_t buildings);
    std::size_t buildings() const { return battery_kwh.size(); }
    double total_battery() const;
    double total_solar() const;
    void validate(const std::optional<double> &pv_cap = std::nullopt) const;
};

/// Committed battery flows for one scenario, all B x T kWh; soc is B x (T+1).
struct Dispatch {
    std::vector<std::vector<double>> charge;
    std::vector<std::vector<double>> discharge;
    std::vector<std::vector<double>> soc;
};

struct DesignSolution {
    SystemDesign design;
    double objective_gbp{0.0};
    std::vector<double> per_scenario_op_cost; ///< lifetime operating cost per scenario
    std::string solver_status;
    long long iterations{0};
    double feasibility_tolerance{1e-7};
    std::vector<Dispatch> dispatch;
    /// (i, m, t) cells where charge and discharge are both above 1e-6.
    std::size_t simultaneous_flow_cells{0};
};

struct CostBreakdown {
    double electricity{0.0};
    double carbon{0.0};
    double grid_excess{0.0};
    double grid_connection{0.0};
    double battery_capex{0.0};
    double solar_capex{0.0};
    double total{0.0};
    double lcoe{0.0};
    double peak_draw_kw{0.0};

    double component_sum() const {
        return electricity + carbon + grid_excess + grid_connection + battery_capex + solar_capex;
    }
};

/// Optimal sizing and dispatch over a scenario set.
DesignSolution build_and_solve(const ScenarioSet &scenarios, const SystemParams &params, const LpOptions &options = {});

/// Same model with every capacity pinned to `design` by equal column bounds;
/// `fos` replaces the design factor of safety.
DesignSolution solve_pinned(const ScenarioSet &scenarios, const SystemParams &params, const SystemDesign &design,
                            double fos, const LpOptions &options = {});

/// The sizing LP for export.
LpProblem design_lp(const ScenarioSet &scenarios, const SystemParams &params);

/// Recomputes each objective term from the primal solution, billing grid
/// excess against capacity/fos_design as the model does.
CostBreakdown objective_breakdown(const DesignSolution &sol, const ScenarioSet &scenarios, const SystemParams &params);

/// Lifetime cost of operating `design` with the committed flows `d` on one
/// scenario. Grid excess is billed above grid_kw / fos.
CostBreakdown bill_operation(const Scenario &scenario, const SystemParams &params, const SystemDesign &design,
                             const Dispatch &d, double fos = 1.0);

/// Capital and connection terms only.
CostBreakdown capital_costs(const SystemDesign &design, const SystemParams &params);

/// Optimal dispatch of a fixed design over steps [t0, t1) of one scenario,
/// starting from `initial_soc`; rows are indexed from 0 = t0. Used by the
/// receding-horizon controller.
Dispatch solve_dispatch_window(const Scenario &scenario, const SystemParams &params, const SystemDesign &design,
                               std::size_t t0, std::size_t t1, const std::vector<double> &initial_soc, double fos,
                               const LpOptions &options = {});

/// Time-of-use electricity price and grid carbon intensity series.
struct TariffSeries {
    std::vector<double> price;
    std::vector<double> carbon;
};

TariffSeries generate_synthetic_tariffs(std::size_t hours, double dt, std::uint64_t seed);
/// Reads `t,price_gbp_per_kwh,carbon_kg_per_kwh` rows.
TariffSeries load_tariffs(const std::filesystem::path &path);
void write_tariffs(const TariffSeries &tariffs, const std::filesystem::path &path);

nlohmann::json design_to_json(const SystemDesign &design);
SystemDesign design_from_json(const nlohmann::json &j);
nlohmann::json breakdown_to_json(const CostBreakdown &c);

/// Reads scalar parameters (and optional price/carbon arrays) onto `base`;
/// unknown keys are a schema error.
SystemParams system_params_from_json(const nlohmann::json &j, SystemParams base = {});
nlohmann::json system_params_to_json(const SystemParams &p, bool include_series = false);

} // namespace dvoi
