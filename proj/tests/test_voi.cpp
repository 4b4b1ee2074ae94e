#include "dvoi/errors.h"
#include "dvoi/voi.h"
#include "oracles.h"
#include "test_util.h"

#include <doctest.h>

#include <cmath>

using namespace dvoi;

namespace {

VoiConfig small_config(std::size_t types = 2, std::size_t years = 2, std::size_t solar_years = 3) {
    VoiConfig c;
    const std::size_t T = 48;
    c.loads = std::make_shared<LoadDataset>(generate_synthetic_dataset(types, years, T, 3));
    c.solar = std::make_shared<SolarDataset>(generate_synthetic_solar(solar_years, T, 3));
    c.prior = PriorSpec::for_dataset(*c.loads);
    auto tariffs = generate_synthetic_tariffs(T, 1.0, 3);
    c.system.price = tariffs.price;
    c.system.carbon = tariffs.carbon;
    c.system.operating_scale = 8760.0 / static_cast<double>(T);
    c.mpc = MpcParams{24, 12, 1.01};
    c.n_buildings = 2;
    c.n_prior = 16;
    c.n_posterior = 8;
    c.n_eval = 6;
    c.n_measurements = 4;
    c.k_reduced = 3;
    c.seed = 5;
    c.jobs = 1;
    return c;
}

MeasurementRecord record(double simulated, double sp, double capital = 0.0) {
    MeasurementRecord r;
    r.ok = true;
    r.posterior_expected_cost = simulated;
    r.sp_objective = sp;
    r.capital_cost = capital;
    return r;
}

// Two equiprobable one-building scenarios where only the grid connection matters.
DiscreteInstance two_scenario_instance(bool informative) {
    DiscreteInstance inst;
    inst.system = testutil::flat_params(2, 0.1, 0.0);
    inst.system.gamma = 1.0;
    inst.system.p_grid_day = 1.0 / 365.0;
    inst.system.p_excess_day = 3.0 / 365.0;
    inst.system.p_s = 1e6;
    inst.system.p_pv = 1e6;
    inst.scenarios.scenarios = {testutil::make_scenario({{1.0, 0.5}}, {0.0, 0.0}, 0.5),
                                testutil::make_scenario({{3.0, 1.0}}, {0.0, 0.0}, 0.5)};
    inst.signal = informative ? std::vector<std::string>{"low", "high"} : std::vector<std::string>{"x", "x"};
    return inst;
}

} // namespace

TEST_CASE("imperfect information value arithmetic") {
    auto r = compute_evii(22.432e6, 22.147e6);
    CHECK(r.evii == doctest::Approx(285000.0).epsilon(1e-9));
    CHECK(r.evii_raw == r.evii);
    CHECK(std::abs(r.evii_pct - 1.27) < 0.005);

    auto neg = compute_evii(22.432e6, 22.573e6);
    CHECK(neg.evii == 0.0);
    CHECK(neg.evii_raw == doctest::Approx(-141000.0).epsilon(1e-9));
    CHECK(neg.evii_pct == 0.0);

    auto same = compute_evii(1e6, 1e6);
    CHECK(same.evii == 0.0);
    CHECK(same.evii_raw == 0.0);
}

TEST_CASE("convergence traces") {
    std::vector<double> flat(10, 4.2);
    auto t = convergence_trace(flat);
    REQUIRE(t.running_mean.size() == 10);
    CHECK(std::isnan(t.ci_low[0]));
    for (std::size_t i = 1; i < 10; ++i) {
        CHECK(t.ci_high[i] - t.ci_low[i] == doctest::Approx(0.0));
        CHECK(t.running_mean[i] == doctest::Approx(4.2));
    }

    auto rng = make_rng(41, {});
    std::normal_distribution<double> noise{0.0, 1.0};
    std::vector<double> x(100);
    for (auto &v : x) {
        v = noise(rng);
    }
    auto tr = convergence_trace(x);
    auto s = summarize(x);
    CHECK(tr.running_mean.back() == doctest::Approx(s.mean).epsilon(1e-12));
    const double half = 0.5 * (tr.ci_high.back() - tr.ci_low.back());
    CHECK(half == doctest::Approx(1.96 * s.std / 10.0).epsilon(1e-9));
    CHECK(std::abs(half - 0.196) < 0.03);
}

TEST_CASE("SP error report") {
    std::vector<MeasurementRecord> exact = {record(100.0, 100.0), record(50.0, 50.0)};
    auto e = sp_error_report(exact);
    CHECK(e.mean_error_pct == 0.0);
    CHECK(e.mean_abs_error_pct == 0.0);

    std::vector<MeasurementRecord> pm = {record(100.0, 98.0), record(100.0, 102.0)};
    auto r = sp_error_report(pm);
    CHECK(r.mean_error_pct == doctest::Approx(0.0));
    CHECK(r.mean_abs_error_pct == doctest::Approx(2.0));
    CHECK(r.per_record_pct[0] == doctest::Approx(2.0));

    // capital cost is common to both estimates and excluded
    std::vector<MeasurementRecord> cap = {record(1100.0, 1098.0, 1000.0)};
    CHECK(sp_error_report(cap).mean_error_pct == doctest::Approx(2.0));
}

TEST_CASE("risk ratios") {
    SampleSummary prior;
    prior.n = 10;
    prior.std = 5.0;
    prior.min = 10.0;
    prior.max = 30.0;
    auto same = record(20.0, 20.0);
    same.posterior_cost_std = 5.0;
    same.posterior_cost_range = 20.0;
    std::vector<MeasurementRecord> identical(3, same);
    auto r = risk_report(prior, identical);
    for (double v : r.std_ratio) {
        CHECK(v == 1.0);
    }
    CHECK(r.range_ratio_summary.median == 1.0);

    auto point = record(20.0, 20.0);
    std::vector<MeasurementRecord> points(2, point);
    auto z = risk_report(prior, points);
    CHECK(z.std_ratio_summary.max == 0.0);
}

TEST_CASE("mask names") {
    for (const char *name : {"none", "type", "mean", "peak", "all"}) {
        CHECK(UncertaintyMask::parse(name).name() == name);
    }
    CHECK_THROWS_AS(UncertaintyMask::parse("year"), ArgumentError);
}

TEST_CASE("two-scenario grid instance by hand") {
    // prior: capacity 3 costs 3 plus the 0.275 energy bill; perfect info: 0.5 * 1 + 0.5 * 3 + 0.275
    auto inf = exact_discrete_voi(two_scenario_instance(true));
    CHECK(inf.prior_cost == doctest::Approx(3.275).epsilon(1e-7));
    CHECK(inf.perfect_info_cost == doctest::Approx(2.275).epsilon(1e-7));
    CHECK(inf.evpi == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(inf.evii == doctest::Approx(1.0).epsilon(1e-7));

    auto uninf = exact_discrete_voi(two_scenario_instance(false));
    CHECK(uninf.evpi == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(uninf.evii == doctest::Approx(0.0).epsilon(1e-7));

    std::vector<oracle::GridScenario> g = {{{1.0, 0.5}, 0.5, "low"}, {{3.0, 1.0}, 0.5, "high"}};
    auto ref = oracle::grid_voi(g, two_scenario_instance(true).system);
    CHECK(inf.evpi == doctest::Approx(ref.evpi()).epsilon(1e-7));
}

TEST_CASE("perfect information dominates a signal under exact policies") {
    auto rng = make_rng(42, {});
    for (int rep = 0; rep < 3; ++rep) {
        DiscreteInstance inst;
        const std::size_t T = 4;
        inst.system = testutil::flat_params(T, 0.0, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            inst.system.price[t] = 0.05 + 0.4 * uniform01(rng);
            inst.system.carbon[t] = 0.2 * uniform01(rng);
        }
        inst.system.gamma = 4.0;
        inst.system.p_s = 0.3;
        inst.system.p_pv = 1.0;
        inst.system.p_grid_day = 0.003;
        inst.system.p_excess_day = 0.01;
        const std::size_t M = 4;
        for (std::size_t m = 0; m < M; ++m) {
            std::vector<double> load(T), sun(T);
            for (std::size_t t = 0; t < T; ++t) {
                load[t] = 0.5 + 4.0 * uniform01(rng);
                sun[t] = uniform01(rng);
            }
            inst.scenarios.scenarios.push_back(testutil::make_scenario({load}, sun, 1.0 / M));
            inst.signal.push_back(m % 2 == 0 ? "even" : "odd");
        }
        auto r = exact_discrete_voi(inst);
        CHECK(r.evpi >= r.evii - 1e-6 * std::abs(r.prior_cost));
        CHECK(r.evii >= -1e-6 * std::abs(r.prior_cost));
    }
}

TEST_CASE("discrete instances parse from JSON") {
    auto j = nlohmann::json::parse(R"({
        "system": {"gamma": 1, "p_grid_day": 0.00273972602739726, "p_excess_day": 0.00821917808219178,
                   "p_s": 1e6, "p_pv": 1e6, "price": [0.1, 0.1], "carbon": [0, 0]},
        "scenarios": [
            {"loads": [[1, 0.5]], "solar": [0, 0], "probability": 0.5, "signal": "low"},
            {"loads": [[3, 1]], "solar": [0, 0], "probability": 0.5, "signal": "high"}
        ]})");
    auto inst = discrete_instance_from_json(j);
    CHECK(inst.scenarios.size() == 2);
    CHECK(inst.signal[1] == "high");
    auto r = exact_discrete_voi(inst);
    CHECK(r.evpi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pipeline on a small synthetic district") {
    auto c = small_config();
    auto prior = prior_leg(c);
    CHECK(prior.reduced.size() == c.k_reduced);
    CHECK(prior.costs.totals.size() == c.n_eval);
    CHECK(prior.costs.summary.mean > 0.0);
    CHECK(prior.baseline.totals.size() == c.n_eval);

    auto pre = preposterior_leg(c);
    CHECK(pre.records.size() == c.n_measurements);
    CHECK(pre.failures == 0);
    for (const auto &r : pre.records) {
        CHECK(r.ok);
        CHECK(r.posterior_expected_cost > 0.0);
        CHECK(r.eval_costs.size() == c.n_eval);
        CHECK(r.truth.size() == c.n_buildings);
    }
    auto again = preposterior_leg(c);
    CHECK(again.expected_cost == pre.expected_cost);
    for (std::size_t i = 0; i < pre.records.size(); ++i) {
        CHECK(again.records[i].eval_costs == pre.records[i].eval_costs);
    }

    auto jobs = c;
    jobs.jobs = 3;
    auto parallel = preposterior_leg(jobs);
    CHECK(parallel.expected_cost == pre.expected_cost);
}

TEST_CASE("masked measurements leave unmeasured parameters at their prior") {
    auto c = small_config();
    c.mask = UncertaintyMask::parse("none");
    auto m = masked_measurement_model(c);
    CHECK_FALSE(m.type_observed);
    CHECK_FALSE(m.mean_observed);
    CHECK_FALSE(m.peak_observed);
    c.n_measurements = 2;
    auto pre = preposterior_leg(c);
    const auto prior_form = prior_as_posterior(c.prior);
    for (const auto &r : pre.records) {
        for (const auto &post : record_posteriors(c, r)) {
            CHECK(post.type_support == prior_form.type_support);
            CHECK(post.mean_pdf.mean() == doctest::Approx(prior_form.mean_pdf.mean()));
            CHECK(post.peak_pdf.mean() == doctest::Approx(prior_form.peak_pdf.mean()));
        }
    }

    c.mask = UncertaintyMask::parse("peak");
    auto peak_only = masked_measurement_model(c);
    CHECK_FALSE(peak_only.mean_observed);
    CHECK(peak_only.peak_observed);
}

TEST_CASE("degenerate prior has no uncertainty to resolve") {
    auto c = small_config(1, 1, 1);
    c.prior.mean_sigma = 1e-12;
    c.prior.mean_mu = 60.0;
    c.prior.peak_min = c.prior.peak_max = 150.0;
    auto prior = prior_leg(c);
    const double scale = prior.costs.summary.mean;
    CHECK(prior.costs.summary.std <= 1e-9 * scale);
    auto evpi = compute_evpi(c, prior.costs.summary);
    CHECK(std::abs(evpi.evpi_raw) <= 1e-6 * scale);
    c.evpi_mode = EvpiMode::include_year;
    c.n_eval = 2;
    auto with_year = compute_evpi(c);
    CHECK(with_year.evpi <= 1e-6 * scale);
}

TEST_CASE("exact measurements of a fixed-type district give point-mass posteriors") {
    auto c = small_config(1, 1, 1);
    c.measurement.eps_mean = 0.0;
    c.measurement.eps_peak = 0.0;
    c.n_measurements = 3;
    auto prior = prior_leg(c);
    auto pre = preposterior_leg(c);
    for (const auto &r : pre.records) {
        REQUIRE(r.ok);
        CHECK(r.posterior_cost_std <= 1e-9 * r.posterior_expected_cost);
    }
    auto risk = risk_report(prior.costs.summary, pre.records);
    CHECK(risk.std_ratio_summary.max <= 1e-9);
}

TEST_CASE("configuration is validated") {
    auto c = small_config();
    c.n_eval = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = small_config();
    c.system.price.resize(10);
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = small_config();
    c.prior.type_ids = {"missing"};
    CHECK_THROWS_AS(c.validate(), LookupError);
}
