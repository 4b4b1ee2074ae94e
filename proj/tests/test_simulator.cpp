#include "dvoi/errors.h"
#include "dvoi/simulator.h"
#include "test_util.h"

#include <doctest.h>

#include <cmath>

using namespace dvoi;

namespace {

struct Case {
    Scenario scenario;
    SystemParams params;
    SystemDesign design;
};

Case random_case(Rng &rng, std::size_t B, std::size_t T) {
    Case c;
    c.params = testutil::flat_params(T, 0.0, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        c.params.price[t] = 0.05 + 0.4 * uniform01(rng);
        c.params.carbon[t] = 0.3 * uniform01(rng);
    }
    c.params.gamma = 3.0;
    c.params.p_grid_day = 0.01;
    c.params.p_excess_day = 0.05;
    std::vector<std::vector<double>> loads(B, std::vector<double>(T));
    for (auto &row : loads) {
        for (auto &v : row) {
            v = 0.5 + 4.0 * uniform01(rng);
        }
    }
    std::vector<double> solar(T);
    for (auto &g : solar) {
        g = uniform01(rng);
    }
    c.scenario = testutil::make_scenario(loads, solar);
    c.design = SystemDesign::zero(B);
    for (std::size_t i = 0; i < B; ++i) {
        c.design.battery_kwh[i] = 6.0 * uniform01(rng);
        c.design.solar_kwp[i] = 3.0 * uniform01(rng);
    }
    c.design.grid_kw = 4.0 * static_cast<double>(B) * uniform01(rng);
    return c;
}

void check_battery_physics(const SimulationResult &r, const SystemDesign &d, const SystemParams &p) {
    const double se = std::sqrt(p.eta);
    for (std::size_t i = 0; i < d.buildings(); ++i) {
        const auto &ch = r.flows.charge[i];
        const auto &dis = r.flows.discharge[i];
        const auto &soc = r.flows.soc[i];
        CHECK(soc.front() == doctest::Approx(p.soc0_frac * d.battery_kwh[i]));
        double charged = 0.0, delivered = 0.0;
        for (std::size_t t = 0; t < ch.size(); ++t) {
            CHECK(std::abs(soc[t + 1] - soc[t] - se * ch[t] + dis[t] / se) <= 1e-6);
            CHECK(soc[t + 1] >= -1e-6);
            CHECK(soc[t + 1] <= d.battery_kwh[i] + 1e-6);
            CHECK(ch[t] >= 0.0);
            CHECK(dis[t] >= 0.0);
            CHECK(ch[t] <= p.delta * d.battery_kwh[i] * p.dt + 1e-6);
            CHECK(dis[t] <= p.delta * d.battery_kwh[i] * p.dt + 1e-6);
            charged += ch[t];
            delivered += dis[t];
        }
        // stored energy change accounts for all losses: delivered = eta * charged when start and end agree
        CHECK(std::abs(delivered - p.eta * charged - se * (soc.front() - soc.back())) <= 1e-6 * (1.0 + charged));
    }
}

} // namespace

TEST_CASE("nothing installed and nothing used costs nothing") {
    auto p = testutil::flat_params(30, 0.2, 0.1);
    auto s = testutil::make_scenario({std::vector<double>(30, 0.0)}, std::vector<double>(30, 0.5));
    MpcParams mpc{12, 6, 1.01};
    auto r = simulate(SystemDesign::zero(1), s, p, mpc);
    CHECK(r.costs.total == 0.0);
    CHECK(r.costs.electricity == 0.0);
    CHECK(r.costs.carbon == 0.0);
    CHECK(r.costs.grid_excess == 0.0);
    CHECK(r.excess_events == 0);
    CHECK(r.windows_solved == 5);
}

TEST_CASE("full-horizon simulation equals the pinned design LP") {
    auto rng = make_rng(31, {});
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t T = 6 + uniform_index(rng, 20);
        auto c = random_case(rng, 1 + uniform_index(rng, 3), T);
        c.params.fos_design = 1.0;
        MpcParams mpc{T, T, 1.0};
        auto sim = simulate(c.design, c.scenario, c.params, mpc);
        auto lp = solve_pinned(testutil::single(c.scenario), c.params, c.design, 1.0);
        CHECK(std::abs(sim.costs.total / lp.objective_gbp - 1.0) <= 1e-5);
        check_battery_physics(sim, c.design, c.params);
    }
}

TEST_CASE("receding horizon never beats perfect foresight") {
    auto rng = make_rng(32, {});
    for (int rep = 0; rep < 8; ++rep) {
        const std::size_t T = 48;
        auto c = random_case(rng, 2, T);
        auto rh = simulate(c.design, c.scenario, c.params, MpcParams{12, 1 + uniform_index(rng, 12), 1.01});
        auto full = simulate(c.design, c.scenario, c.params, MpcParams{T, T, 1.0});
        CHECK(rh.costs.total >= full.costs.total * (1.0 - 1e-5));
        check_battery_physics(rh, c.design, c.params);
        CHECK(rh.costs.total == doctest::Approx(rh.costs.component_sum()).epsilon(1e-12));
    }
}

TEST_CASE("a battery that covers the peak above capacity avoids excess charges") {
    const std::size_t T = 48;
    auto rng = make_rng(33, {});
    auto c = random_case(rng, 1, T);
    double peak = 0.0;
    for (double v : c.scenario.loads[0]) {
        peak = std::max(peak, v);
    }
    c.design.solar_kwp[0] = 0.0;
    c.design.grid_kw = 0.6 * peak;
    // power delta*Cs exceeds peak - grid, energy covers the whole horizon
    c.design.battery_kwh[0] = 200.0;
    c.params.soc0_frac = 1.0;
    c.params.p_excess_day = 10.0;
    auto r = simulate(c.design, c.scenario, c.params, MpcParams{});
    CHECK(r.costs.grid_excess == doctest::Approx(0.0));
    CHECK(r.excess_events == 0);
    check_battery_physics(r, c.design, c.params);
}

TEST_CASE("expected cost summaries") {
    auto rng = make_rng(34, {});
    auto c = random_case(rng, 1, 24);
    ScenarioSource same = [&](std::size_t) { return c.scenario; };
    MpcParams mpc{12, 6, 1.01};

    auto one = evaluate_expected_cost(c.design, same, 1, c.params, mpc);
    auto direct = simulate(c.design, c.scenario, c.params, mpc);
    CHECK(one.summary.n == 1);
    CHECK(one.summary.mean == direct.costs.total);
    CHECK_FALSE(one.summary.standard_error.has_value());

    auto flat = evaluate_expected_cost(c.design, same, 4, c.params, mpc, 2);
    CHECK(flat.summary.std == 0.0);
    CHECK(*flat.summary.standard_error == 0.0);

    ScenarioSource varied = [&](std::size_t j) {
        auto s = c.scenario;
        for (auto &v : s.loads[0]) {
            v *= 1.0 + 0.1 * static_cast<double>(j);
        }
        return s;
    };
    auto many = evaluate_expected_cost(c.design, varied, 6, c.params, mpc, 3);
    REQUIRE(many.totals.size() == 6);
    double m = 0.0;
    for (double x : many.totals) {
        m += x;
    }
    m /= 6.0;
    double v = 0.0;
    for (double x : many.totals) {
        v += (x - m) * (x - m);
    }
    const double sd = std::sqrt(v / 5.0);
    CHECK(many.summary.mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(many.summary.std == doctest::Approx(sd).epsilon(1e-9));
    CHECK(*many.summary.standard_error == doctest::Approx(sd / std::sqrt(6.0)).epsilon(1e-9));

    auto serial = evaluate_expected_cost(c.design, varied, 6, c.params, mpc, 1);
    CHECK(serial.totals == many.totals);
}

TEST_CASE("no-asset baseline") {
    auto p = testutil::flat_params(24, 0.2, 0.1);
    ScenarioSource empty = [](std::size_t) {
        return testutil::make_scenario({std::vector<double>(24, 0.0)}, std::vector<double>(24, 0.3));
    };
    auto zero = no_asset_baseline(empty, 3, p);
    CHECK(zero.summary.mean == 0.0);

    auto rng = make_rng(35, {});
    auto c = random_case(rng, 2, 24);
    ScenarioSource one = [&](std::size_t) { return c.scenario; };
    auto base = no_asset_baseline(one, 1, c.params);
    CHECK(base.breakdowns[0].grid_excess == 0.0);
    CHECK(base.breakdowns[0].battery_capex == 0.0);
    CHECK(base.breakdowns[0].solar_capex == 0.0);
    const double peak = base.breakdowns[0].peak_draw_kw;
    CHECK(base.breakdowns[0].grid_connection ==
          doctest::Approx(c.params.gamma * c.params.p_grid_annual() * peak).epsilon(1e-12));

    // the optimal full-foresight design cannot cost more than buying nothing
    c.params.fos_design = 1.0;
    auto sol = build_and_solve(testutil::single(c.scenario), c.params);
    auto designed = simulate(sol.design, c.scenario, c.params, MpcParams{24, 24, 1.0});
    CHECK(designed.costs.total <= base.summary.mean * (1.0 + 1e-6));
}

TEST_CASE("simulation inputs are validated") {
    auto p = testutil::flat_params(24, 0.2, 0.1);
    auto s = testutil::make_scenario({std::vector<double>(24, 1.0)}, std::vector<double>(24, 0.3));
    CHECK_THROWS_AS(simulate(SystemDesign::zero(2), s, p, MpcParams{}), ArgumentError);
    CHECK_THROWS_AS(simulate(SystemDesign::zero(1), s, p, MpcParams{4, 6, 1.01}), ArgumentError);
    CHECK_THROWS_AS(simulate(SystemDesign::zero(1), s, p, MpcParams{4, 2, 0.5}), ArgumentError);
}

TEST_CASE("time series export") {
    auto rng = make_rng(36, {});
    auto c = random_case(rng, 2, 24);
    auto r = simulate(c.design, c.scenario, c.params, MpcParams{12, 6, 1.01});
    testutil::TempDir dir("sim");
    write_simulation_csv(r, dir / "ts.csv");
    auto text = testutil::read_text(dir / "ts.csv");
    std::size_t lines = 0;
    for (char ch : text) {
        lines += ch == '\n';
    }
    CHECK(lines == 25);
    auto j = simulation_summary_json(r);
    CHECK(j.at("costs").at("total_gbp").get<double>() == r.costs.total);
}
