#include "dvoi/designopt.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"
#include "dvoi/random.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace dvoi {

using json = nlohmann::json;

void SystemParams::validate() const {
    auto nonneg = [](double v, const char *name) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ArgumentError(fmt::format("{} must be a finite non-negative number, got {}", name, v));
        }
    };
    nonneg(p_c, "p_c");
    nonneg(p_s, "p_s");
    nonneg(p_pv, "p_pv");
    nonneg(p_grid_day, "p_grid_day");
    nonneg(p_excess_day, "p_excess_day");
    nonneg(delta, "delta");
    nonneg(soc0_frac, "soc0_frac");
    if (!(gamma > 0.0)) {
        throw ArgumentError(fmt::format("gamma must be positive, got {}", gamma));
    }
    if (!(dt > 0.0)) {
        throw ArgumentError(fmt::format("dt must be positive, got {}", dt));
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw ArgumentError(fmt::format("eta must be in (0, 1], got {}", eta));
    }
    if (!(fos_design >= 1.0)) {
        throw ArgumentError(fmt::format("fos_design must be >= 1, got {}", fos_design));
    }
    if (soc0_frac > 1.0) {
        throw ArgumentError(fmt::format("soc0_frac must be <= 1, got {}", soc0_frac));
    }
    if (!(operating_scale > 0.0)) {
        throw ArgumentError(fmt::format("operating_scale must be positive, got {}", operating_scale));
    }
    if (pv_cap_per_building && !(*pv_cap_per_building >= 0.0)) {
        throw ArgumentError("pv_cap_per_building must be non-negative");
    }
    if (price.empty() || price.size() != carbon.size()) {
        throw ArgumentError(fmt::format("price ({}) and carbon ({}) series must be non-empty and of equal length",
                                        price.size(), carbon.size()));
    }
    for (std::size_t t = 0; t < price.size(); ++t) {
        if (!(price[t] >= 0.0) || !(carbon[t] >= 0.0)) {
            throw ArgumentError(fmt::format("tariff entries must be non-negative (t={})", t));
        }
    }
}

SystemDesign SystemDesign::zero(std::size_t buildings) {
    return {std::vector<double>(buildings, 0.0), std::vector<double>(buildings, 0.0), 0.0};
}

double SystemDesign::total_battery() const { return std::accumulate(battery_kwh.begin(), battery_kwh.end(), 0.0); }
double SystemDesign::total_solar() const { return std::accumulate(solar_kwp.begin(), solar_kwp.end(), 0.0); }

void SystemDesign::validate(const std::optional<double> &pv_cap) const {
    if (battery_kwh.size() != solar_kwp.size()) {
        throw ValidationError("design needs one battery and one solar capacity per building");
    }
    for (std::size_t i = 0; i < buildings(); ++i) {
        if (!(battery_kwh[i] >= 0.0) || !(solar_kwp[i] >= 0.0)) {
            throw ValidationError(fmt::format("negative capacity for building {}", i));
        }
        if (pv_cap && solar_kwp[i] > *pv_cap * (1.0 + 1e-9) + 1e-9) {
            throw ValidationError(fmt::format("solar capacity {} of building {} exceeds cap {}", solar_kwp[i], i, *pv_cap));
        }
    }
    if (!(grid_kw >= 0.0)) {
        throw ValidationError("negative grid capacity");
    }
}

namespace {

constexpr std::size_t none = static_cast<std::size_t>(-1);

enum class CapacityMode {
    free,   // capacities are decision variables
    pinned, // capacity columns with lower == upper
    fixed,  // capacities folded into bounds and constants
};

struct ModelSpec {
    std::size_t t0{0};
    std::size_t t1{0};
    double fos{1.0};
    CapacityMode mode{CapacityMode::free};
    const SystemDesign *design{nullptr};
    const std::vector<double> *initial_soc{nullptr};
};

struct Layout {
    std::size_t B{0}, M{0}, n{0};
    std::vector<std::size_t> cs, cpv;
    std::size_t cgrid{none};
    std::vector<std::size_t> ch, dis, soc; // [(m * B + i) * n + k]
    std::size_t at(std::size_t m, std::size_t i, std::size_t k) const { return (m * B + i) * n + k; }
};

void check_dimensions(const ScenarioSet &set, const SystemParams &params) {
    set.validate();
    const auto T = set.scenarios.front().hours();
    if (params.hours() < T) {
        throw ArgumentError(fmt::format("tariff series cover {} steps, scenarios need {}", params.hours(), T));
    }
    for (const auto &s : set.scenarios) {
        if (std::abs(s.timestep_hours - params.dt) > 1e-12) {
            throw ArgumentError(fmt::format("scenario timestep {} h differs from dt {} h", s.timestep_hours, params.dt));
        }
    }
}

LpProblem build_model(const std::vector<const Scenario *> &scen, const std::vector<double> &rho,
                      const SystemParams &p, const ModelSpec &spec, Layout &lay) {
    LpProblem lp;
    lay.B = scen.front()->buildings();
    lay.M = scen.size();
    lay.n = spec.t1 - spec.t0;
    const auto B = lay.B;
    const auto n = lay.n;
    const bool variable_caps = spec.mode != CapacityMode::fixed;
    const double sqrt_eta = std::sqrt(p.eta);
    const double p_excess = p.p_excess_annual();

    lay.cs.assign(B, none);
    lay.cpv.assign(B, none);
    if (variable_caps) {
        for (std::size_t i = 0; i < B; ++i) {
            double lo = 0.0, hi = lp_inf;
            if (spec.mode == CapacityMode::pinned) {
                lo = hi = spec.design->battery_kwh[i];
            }
            lay.cs[i] = lp.add_column(p.p_s, lo, hi);
            lo = 0.0;
            hi = p.pv_cap_per_building.value_or(lp_inf);
            if (spec.mode == CapacityMode::pinned) {
                lo = hi = spec.design->solar_kwp[i];
            }
            lay.cpv[i] = lp.add_column(p.p_pv, lo, hi);
        }
        double lo = 0.0, hi = lp_inf;
        if (spec.mode == CapacityMode::pinned) {
            lo = hi = spec.design->grid_kw;
        }
        lay.cgrid = lp.add_column(p.gamma * p.p_grid_annual(), lo, hi);
    } else {
        auto cap = capital_costs(*spec.design, p);
        lp.set_offset(cap.battery_capex + cap.solar_capex + cap.grid_connection);
    }

    auto cs_value = [&](std::size_t i) { return spec.design->battery_kwh[i]; };
    auto pv_value = [&](std::size_t i) { return spec.design->solar_kwp[i]; };

    lay.ch.assign(lay.M * B * n, none);
    lay.dis.assign(lay.M * B * n, none);
    lay.soc.assign(lay.M * B * n, none);
    for (std::size_t m = 0; m < lay.M; ++m) {
        for (std::size_t i = 0; i < B; ++i) {
            const double flow_ub = variable_caps ? lp_inf : p.delta * cs_value(i) * p.dt;
            const double soc_ub = variable_caps ? lp_inf : cs_value(i);
            for (std::size_t k = 0; k < n; ++k) {
                lay.ch[lay.at(m, i, k)] = lp.add_column(0.0, 0.0, flow_ub);
                lay.dis[lay.at(m, i, k)] = lp.add_column(0.0, 0.0, flow_ub);
                lay.soc[lay.at(m, i, k)] = lp.add_column(0.0, 0.0, soc_ub); // SoC after step k
            }
        }
    }

    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t m = 0; m < lay.M; ++m) {
        const auto &s = *scen[m];
        const double weight = p.gamma * rho[m];
        const double op_weight = weight * p.operating_scale;
        for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const auto t = spec.t0 + k;
                const auto c = lay.ch[lay.at(m, i, k)];
                const auto d = lay.dis[lay.at(m, i, k)];
                const auto e = lay.soc[lay.at(m, i, k)];
                // State of charge dynamics.
                terms = {{e, 1.0}, {c, -sqrt_eta}, {d, 1.0 / sqrt_eta}};
                double rhs = 0.0;
                if (k > 0) {
                    terms.emplace_back(lay.soc[lay.at(m, i, k - 1)], -1.0);
                } else if (spec.initial_soc != nullptr) {
                    rhs = (*spec.initial_soc)[i];
                } else if (variable_caps) {
                    terms.emplace_back(lay.cs[i], -p.soc0_frac);
                } else {
                    rhs = p.soc0_frac * cs_value(i);
                }
                lp.add_row(rhs, rhs, terms);
                if (variable_caps) {
                    lp.add_row(-lp_inf, 0.0, {{e, 1.0}, {lay.cs[i], -1.0}});
                    lp.add_row(-lp_inf, 0.0, {{c, 1.0}, {lay.cs[i], -p.delta * p.dt}});
                    lp.add_row(-lp_inf, 0.0, {{d, 1.0}, {lay.cs[i], -p.delta * p.dt}});
                }
                // Import epigraph: u >= L - Cpv g dt + ch - dis.
                const double price = p.price[t];
                if (price > 0.0) {
                    auto u = lp.add_column(op_weight * price, 0.0, lp_inf);
                    terms = {{u, 1.0}, {c, -1.0}, {d, 1.0}};
                    double lo = s.loads[i][t];
                    if (variable_caps) {
                        terms.emplace_back(lay.cpv[i], s.solar[t] * p.dt);
                    } else {
                        lo -= pv_value(i) * s.solar[t] * p.dt;
                    }
                    lp.add_row(lo, lp_inf, terms);
                }
            }
        }

        // Aggregate terms: carbon epigraph and the two-sided peak epigraph.
        const auto w = p_excess > 0.0 ? lp.add_column(weight * p_excess, 0.0, lp_inf) : none;
        for (std::size_t k = 0; k < n; ++k) {
            const auto t = spec.t0 + k;
            double load = 0.0;
            double pv_const = 0.0;
            std::vector<std::pair<std::size_t, double>> net; // sum_i E^b minus the load constant
            for (std::size_t i = 0; i < B; ++i) {
                load += s.loads[i][t];
                net.emplace_back(lay.ch[lay.at(m, i, k)], 1.0);
                net.emplace_back(lay.dis[lay.at(m, i, k)], -1.0);
                if (variable_caps) {
                    net.emplace_back(lay.cpv[i], -s.solar[t] * p.dt);
                } else {
                    pv_const += pv_value(i) * s.solar[t] * p.dt;
                }
            }
            const double net_const = load - pv_const;
            const double carbon = p.p_c * p.carbon[t];
            if (carbon > 0.0) {
                auto v = lp.add_column(op_weight * carbon, 0.0, lp_inf);
                terms = {{v, 1.0}};
                for (auto [col, coef] : net) {
                    terms.emplace_back(col, -coef);
                }
                lp.add_row(net_const, lp_inf, terms);
            }
            if (w != none) {
                // w >= +-(sum E^b)/dt - Cgrid/fos
                for (double sign : {1.0, -1.0}) {
                    terms = {{w, 1.0}};
                    for (auto [col, coef] : net) {
                        terms.emplace_back(col, -sign * coef / p.dt);
                    }
                    double lo = sign * net_const / p.dt;
                    if (variable_caps) {
                        terms.emplace_back(lay.cgrid, 1.0 / spec.fos);
                    } else {
                        lo -= spec.design->grid_kw / spec.fos;
                    }
                    lp.add_row(lo, lp_inf, terms);
                }
            }
        }
    }
    return lp;
}

Dispatch extract_dispatch(const Layout &lay, const std::vector<double> &x, std::size_t m,
                          const std::vector<double> &initial_soc) {
    Dispatch d;
    d.charge.assign(lay.B, std::vector<double>(lay.n));
    d.discharge.assign(lay.B, std::vector<double>(lay.n));
    d.soc.assign(lay.B, std::vector<double>(lay.n + 1));
    for (std::size_t i = 0; i < lay.B; ++i) {
        d.soc[i][0] = initial_soc[i];
        for (std::size_t k = 0; k < lay.n; ++k) {
            d.charge[i][k] = std::max(0.0, x[lay.ch[lay.at(m, i, k)]]);
            d.discharge[i][k] = std::max(0.0, x[lay.dis[lay.at(m, i, k)]]);
            d.soc[i][k + 1] = x[lay.soc[lay.at(m, i, k)]];
        }
    }
    return d;
}

std::size_t count_simultaneous(const Dispatch &d) {
    std::size_t cells = 0;
    for (std::size_t i = 0; i < d.charge.size(); ++i) {
        for (std::size_t k = 0; k < d.charge[i].size(); ++k) {
            if (std::min(d.charge[i][k], d.discharge[i][k]) > 1e-6) {
                ++cells;
            }
        }
    }
    return cells;
}

struct OperatingTerms {
    double electricity{0.0};
    double carbon{0.0};
    double excess{0.0};
    double peak_kw{0.0};
};

// Per-horizon operating terms (before lifetime scaling) of committed flows.
OperatingTerms operating_terms(const Scenario &s, const SystemParams &p, const SystemDesign &design, const Dispatch &d,
                               double fos) {
    OperatingTerms out;
    const auto B = s.buildings();
    for (std::size_t t = 0; t < s.hours(); ++t) {
        double net_total = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            double net = s.loads[i][t] - design.solar_kwp[i] * s.solar[t] * p.dt + d.charge[i][t] - d.discharge[i][t];
            out.electricity += p.price[t] * std::max(0.0, net);
            net_total += net;
        }
        out.carbon += p.p_c * p.carbon[t] * std::max(0.0, net_total);
        out.peak_kw = std::max(out.peak_kw, std::abs(net_total) / p.dt);
    }
    out.electricity *= p.operating_scale;
    out.carbon *= p.operating_scale;
    out.excess = p.p_excess_annual() * std::max(0.0, out.peak_kw - design.grid_kw / fos);
    return out;
}

DesignSolution solve_model(const ScenarioSet &set, const SystemParams &params, ModelSpec spec,
                           const LpOptions &options) {
    check_dimensions(set, params);
    params.validate();
    std::vector<const Scenario *> scen;
    std::vector<double> rho;
    for (const auto &s : set.scenarios) {
        scen.push_back(&s);
        rho.push_back(s.probability);
    }
    spec.t0 = 0;
    spec.t1 = set.scenarios.front().hours();
    Layout lay;
    auto lp = build_model(scen, rho, params, spec, lay);
    auto res = solve_lp(lp, options);
    if (!res.optimal) {
        throw SolverError(fmt::format("design LP not solved: status '{}' after {} iterations ({} columns, {} rows)",
                                      res.status, res.iterations, lp.num_columns(), lp.num_rows()));
    }

    DesignSolution sol;
    sol.solver_status = res.status;
    sol.iterations = res.iterations;
    sol.feasibility_tolerance = options.feasibility_tolerance;
    sol.objective_gbp = res.objective;
    const auto B = lay.B;
    sol.design = SystemDesign::zero(B);
    for (std::size_t i = 0; i < B; ++i) {
        sol.design.battery_kwh[i] = std::max(0.0, res.x[lay.cs[i]]);
        sol.design.solar_kwp[i] = std::max(0.0, res.x[lay.cpv[i]]);
    }
    sol.design.grid_kw = std::max(0.0, res.x[lay.cgrid]);
    for (std::size_t m = 0; m < lay.M; ++m) {
        std::vector<double> soc0(B);
        for (std::size_t i = 0; i < B; ++i) {
            soc0[i] = params.soc0_frac * sol.design.battery_kwh[i];
        }
        sol.dispatch.push_back(extract_dispatch(lay, res.x, m, soc0));
        sol.simultaneous_flow_cells += count_simultaneous(sol.dispatch.back());
        auto op = operating_terms(*scen[m], params, sol.design, sol.dispatch.back(), spec.fos);
        sol.per_scenario_op_cost.push_back(params.gamma * (op.electricity + op.carbon + op.excess));
    }
    return sol;
}

} // namespace

DesignSolution build_and_solve(const ScenarioSet &scenarios, const SystemParams &params, const LpOptions &options) {
    ModelSpec spec;
    spec.fos = params.fos_design;
    spec.mode = CapacityMode::free;
    return solve_model(scenarios, params, spec, options);
}

DesignSolution solve_pinned(const ScenarioSet &scenarios, const SystemParams &params, const SystemDesign &design,
                            double fos, const LpOptions &options) {
    design.validate(params.pv_cap_per_building);
    if (design.buildings() != scenarios.scenarios.front().buildings()) {
        throw ArgumentError("design and scenarios disagree on the number of buildings");
    }
    if (!(fos >= 1.0)) {
        throw ArgumentError(fmt::format("fos must be >= 1, got {}", fos));
    }
    ModelSpec spec;
    spec.fos = fos;
    spec.mode = CapacityMode::pinned;
    spec.design = &design;
    auto sol = solve_model(scenarios, params, spec, options);
    sol.design = design; // exact, not the solver's copy
    return sol;
}

LpProblem design_lp(const ScenarioSet &scenarios, const SystemParams &params) {
    check_dimensions(scenarios, params);
    params.validate();
    std::vector<const Scenario *> scen;
    std::vector<double> rho;
    for (const auto &s : scenarios.scenarios) {
        scen.push_back(&s);
        rho.push_back(s.probability);
    }
    ModelSpec spec;
    spec.t1 = scenarios.scenarios.front().hours();
    spec.fos = params.fos_design;
    Layout lay;
    return build_model(scen, rho, params, spec, lay);
}

CostBreakdown capital_costs(const SystemDesign &design, const SystemParams &params) {
    CostBreakdown c;
    c.battery_capex = params.p_s * design.total_battery();
    c.solar_capex = params.p_pv * design.total_solar();
    c.grid_connection = params.gamma * params.p_grid_annual() * design.grid_kw;
    c.total = c.component_sum();
    return c;
}

CostBreakdown objective_breakdown(const DesignSolution &sol, const ScenarioSet &scenarios, const SystemParams &params) {
    if (sol.dispatch.size() != scenarios.size()) {
        throw ArgumentError("solution and scenario set sizes differ");
    }
    auto c = capital_costs(sol.design, params);
    double energy = 0.0;
    for (std::size_t m = 0; m < scenarios.size(); ++m) {
        const auto &s = scenarios.scenarios[m];
        const double w = s.probability * params.gamma;
        auto op = operating_terms(s, params, sol.design, sol.dispatch[m], params.fos_design);
        c.electricity += w * op.electricity;
        c.carbon += w * op.carbon;
        c.grid_excess += w * op.excess;
        c.peak_draw_kw += s.probability * op.peak_kw;
        for (const auto &row : s.loads) {
            energy += s.probability * std::accumulate(row.begin(), row.end(), 0.0);
        }
    }
    c.total = c.component_sum();
    const double lifetime_energy = params.gamma * params.operating_scale * energy;
    c.lcoe = lifetime_energy > 0.0 ? c.total / lifetime_energy : 0.0;
    return c;
}

CostBreakdown bill_operation(const Scenario &scenario, const SystemParams &params, const SystemDesign &design,
                             const Dispatch &d, double fos) {
    auto c = capital_costs(design, params);
    auto op = operating_terms(scenario, params, design, d, fos);
    c.electricity = params.gamma * op.electricity;
    c.carbon = params.gamma * op.carbon;
    c.grid_excess = params.gamma * op.excess;
    c.peak_draw_kw = op.peak_kw;
    c.total = c.component_sum();
    double energy = 0.0;
    for (const auto &row : scenario.loads) {
        energy += std::accumulate(row.begin(), row.end(), 0.0);
    }
    const double lifetime_energy = params.gamma * params.operating_scale * energy;
    c.lcoe = lifetime_energy > 0.0 ? c.total / lifetime_energy : 0.0;
    return c;
}

Dispatch solve_dispatch_window(const Scenario &scenario, const SystemParams &params, const SystemDesign &design,
                               std::size_t t0, std::size_t t1, const std::vector<double> &initial_soc, double fos,
                               const LpOptions &options) {
    if (!(t0 < t1 && t1 <= scenario.hours())) {
        throw ArgumentError(fmt::format("invalid dispatch window [{}, {})", t0, t1));
    }
    if (initial_soc.size() != scenario.buildings() || design.buildings() != scenario.buildings()) {
        throw ArgumentError("design, state and scenario disagree on the number of buildings");
    }
    ModelSpec spec;
    spec.t0 = t0;
    spec.t1 = t1;
    spec.fos = fos;
    spec.mode = CapacityMode::fixed;
    spec.design = &design;
    spec.initial_soc = &initial_soc;
    Layout lay;
    auto lp = build_model({&scenario}, {1.0}, params, spec, lay);
    auto res = solve_lp(lp, options);
    if (!res.optimal) {
        throw SolverError(fmt::format("dispatch LP for steps [{}, {}) not solved: status '{}' after {} iterations", t0,
                                      t1, res.status, res.iterations));
    }
    return extract_dispatch(lay, res.x, 0, initial_soc);
}

// ---------------------------------------------------------------------------
// Tariffs

TariffSeries generate_synthetic_tariffs(std::size_t hours, double dt, std::uint64_t seed) {
    if (hours < 1 || !(dt > 0.0)) {
        throw ArgumentError("tariff series need at least one step and a positive dt");
    }
    auto rng = make_rng(seed, {stream::tariff});
    std::normal_distribution<double> noise{0.0, 1.0};
    TariffSeries out;
    out.price.resize(hours);
    out.carbon.resize(hours);
    double ar = 0.0;
    for (std::size_t t = 0; t < hours; ++t) {
        const double hour = std::fmod(static_cast<double>(t) * dt, 24.0);
        const auto day = static_cast<std::size_t>(static_cast<double>(t) * dt / 24.0);
        const bool weekend = day % 7 >= 5;
        double price = 0.24;
        if (hour < 7.0) {
            price = 0.14;
        } else if (hour >= 16.0 && hour < 20.0 && !weekend) {
            price = 0.38;
        }
        out.price[t] = price;

        const double season = std::cos(2.0 * std::numbers::pi * static_cast<double>(day % 365) / 365.0);
        const double midday = std::exp(-0.5 * std::pow((hour - 13.0) / 3.0, 2.0));
        const double evening = std::exp(-0.5 * std::pow((hour - 18.0) / 2.0, 2.0));
        ar = 0.8 * ar + 0.02 * noise(rng);
        out.carbon[t] = std::max(0.02, 0.2 + 0.05 * season - 0.04 * midday + 0.04 * evening + ar);
    }
    return out;
}

TariffSeries load_tariffs(const std::filesystem::path &path) {
    auto table = csv::read(path);
    const auto c_t = table.column("t");
    const auto c_p = table.column("price_gbp_per_kwh");
    const auto c_c = table.column("carbon_kg_per_kwh");
    TariffSeries out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (csv::to_integer(table.rows[r][c_t], r, "t") != static_cast<long long>(r)) {
            throw SchemaError(fmt::format("{}: tariff rows must run t = 0, 1, ... (row {})", path.string(), r));
        }
        double price = csv::to_double(table.rows[r][c_p], r, "price_gbp_per_kwh");
        double carbon = csv::to_double(table.rows[r][c_c], r, "carbon_kg_per_kwh");
        if (price < 0.0 || carbon < 0.0) {
            throw ValidationError(fmt::format("{}: negative tariff at row {}", path.string(), r));
        }
        out.price.push_back(price);
        out.carbon.push_back(carbon);
    }
    if (out.price.empty()) {
        throw SchemaError(fmt::format("{}: no tariff rows", path.string()));
    }
    return out;
}

void write_tariffs(const TariffSeries &tariffs, const std::filesystem::path &path) {
    csv::Writer w(path);
    w.row({"t", "price_gbp_per_kwh", "carbon_kg_per_kwh"});
    for (std::size_t t = 0; t < tariffs.price.size(); ++t) {
        w.field(t).field(tariffs.price[t]).field(tariffs.carbon[t]);
        w.end_row();
    }
}

// ---------------------------------------------------------------------------
// JSON

json design_to_json(const SystemDesign &design) {
    return {{"battery_kwh", design.battery_kwh},
            {"solar_kwp", design.solar_kwp},
            {"grid_kw", design.grid_kw},
            {"total_battery_kwh", design.total_battery()},
            {"total_solar_kwp", design.total_solar()}};
}

SystemDesign design_from_json(const json &j) {
    SystemDesign d;
    try {
        d.battery_kwh = j.at("battery_kwh").get<std::vector<double>>();
        d.solar_kwp = j.at("solar_kwp").get<std::vector<double>>();
        d.grid_kw = j.at("grid_kw").get<double>();
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("design JSON: {}", e.what()));
    }
    d.validate();
    return d;
}

json breakdown_to_json(const CostBreakdown &c) {
    return {{"electricity_gbp", c.electricity},
            {"carbon_gbp", c.carbon},
            {"grid_excess_gbp", c.grid_excess},
            {"grid_connection_gbp", c.grid_connection},
            {"battery_capex_gbp", c.battery_capex},
            {"solar_capex_gbp", c.solar_capex},
            {"total_gbp", c.total},
            {"lcoe_gbp_per_kwh", c.lcoe},
            {"peak_draw_kw", c.peak_draw_kw}};
}

SystemParams system_params_from_json(const json &j, SystemParams p) {
    if (!j.is_object()) {
        throw SchemaError("system parameters must be a JSON object");
    }
    try {
        for (const auto &[key, value] : j.items()) {
            if (key == "gamma") {
                p.gamma = value.get<double>();
            } else if (key == "dt") {
                p.dt = value.get<double>();
            } else if (key == "p_c") {
                p.p_c = value.get<double>();
            } else if (key == "p_s") {
                p.p_s = value.get<double>();
            } else if (key == "p_pv") {
                p.p_pv = value.get<double>();
            } else if (key == "p_grid_day") {
                p.p_grid_day = value.get<double>();
            } else if (key == "p_excess_day") {
                p.p_excess_day = value.get<double>();
            } else if (key == "fos_design") {
                p.fos_design = value.get<double>();
            } else if (key == "delta") {
                p.delta = value.get<double>();
            } else if (key == "soc0_frac") {
                p.soc0_frac = value.get<double>();
            } else if (key == "eta") {
                p.eta = value.get<double>();
            } else if (key == "operating_scale") {
                p.operating_scale = value.get<double>();
            } else if (key == "pv_cap_per_building") {
                p.pv_cap_per_building = value.is_null() ? std::nullopt : std::optional<double>{value.get<double>()};
            } else if (key == "price") {
                p.price = value.get<std::vector<double>>();
            } else if (key == "carbon") {
                p.carbon = value.get<std::vector<double>>();
            } else {
                throw SchemaError(fmt::format("unknown system parameter '{}'", key));
            }
        }
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("system parameters: {}", e.what()));
    }
    return p;
}

json system_params_to_json(const SystemParams &p, bool include_series) {
    json j = {{"gamma", p.gamma},
              {"dt", p.dt},
              {"p_c", p.p_c},
              {"p_s", p.p_s},
              {"p_pv", p.p_pv},
              {"p_grid_day", p.p_grid_day},
              {"p_excess_day", p.p_excess_day},
              {"fos_design", p.fos_design},
              {"delta", p.delta},
              {"soc0_frac", p.soc0_frac},
              {"eta", p.eta},
              {"operating_scale", p.operating_scale},
              {"pv_cap_per_building", p.pv_cap_per_building ? json(*p.pv_cap_per_building) : json(nullptr)}};
    if (include_series) {
        j["price"] = p.price;
        j["carbon"] = p.carbon;
    }
    return j;
}

} // namespace dvoi
