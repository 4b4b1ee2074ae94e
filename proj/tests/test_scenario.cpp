#include "dvoi/errors.h"
#include "dvoi/scenario.h"
#include "dvoi/stats.h"
#include "oracles.h"
#include "test_util.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace dvoi;

namespace {

Scenario constant_scenario(std::vector<double> per_building, std::size_t T = 4, double probability = 1.0) {
    std::vector<std::vector<double>> loads;
    for (double v : per_building) {
        loads.emplace_back(T, v);
    }
    return testutil::make_scenario(loads, std::vector<double>(T, 0.0), probability);
}

ScenarioSet random_set(Rng &rng, std::size_t n) {
    ScenarioSet set;
    for (std::size_t m = 0; m < n; ++m) {
        std::vector<std::vector<double>> loads(2, std::vector<double>(6));
        for (auto &row : loads) {
            for (auto &v : row) {
                v = 10.0 * uniform01(rng);
            }
        }
        set.scenarios.push_back(testutil::make_scenario(loads, std::vector<double>(6, 0.5), 0.0));
    }
    double total = 0.0;
    std::vector<double> w(n);
    for (auto &x : w) {
        x = 0.1 + uniform01(rng);
        total += x;
    }
    for (std::size_t m = 0; m < n; ++m) {
        set.scenarios[m].probability = w[m] / total;
    }
    return set;
}

} // namespace

TEST_CASE("assembled scenarios are equiprobable") {
    auto loads = generate_synthetic_dataset(2, 2, 24, 1);
    auto solar = generate_synthetic_solar(3, 24, 1);
    auto prior = PriorSpec::for_dataset(loads);
    auto rng = make_rng(1, {});
    std::vector<std::vector<BuildingLoadParams>> draws;
    for (int i = 0; i < 4; ++i) {
        draws.push_back(sample_district_params(prior, 2, rng));
    }
    auto set = assemble_scenarios(draws, loads, solar, rng);
    REQUIRE(set.size() == 4);
    for (const auto &s : set.scenarios) {
        CHECK(s.probability == 0.25);
        CHECK(s.buildings() == 2);
        CHECK(s.hours() == 24);
        CHECK(std::find(solar.year_ids.begin(), solar.year_ids.end(), s.solar_year) != solar.year_ids.end());
    }

    draws.clear();
    for (int i = 0; i < 1000; ++i) {
        draws.push_back(sample_district_params(prior, 5, rng));
    }
    auto big = assemble_scenarios(draws, loads, solar, rng);
    CHECK(big.size() == 1000);
    CHECK(std::abs(big.total_probability() - 1.0) <= 1e-9);
    CHECK_NOTHROW(big.validate());

    std::vector<std::vector<BuildingLoadParams>> bad = {{{"nope", "2010", 50.0, 100.0}}};
    CHECK_THROWS_AS(assemble_scenarios(bad, loads, solar, rng), LookupError);
}

TEST_CASE("aggregate features") {
    auto f = features(constant_scenario({1.0, 1.0}));
    CHECK(f.agg_mean == 2.0);
    CHECK(f.agg_max == 2.0);
    CHECK(f.agg_std == 0.0);

    auto one = features(testutil::make_scenario({{0.0, 2.0}}, {0.0, 0.0}));
    CHECK(one.agg_mean == 1.0);
    CHECK(one.agg_max == 2.0);
    CHECK(one.agg_std == 1.0);

    auto unit = features(constant_scenario({1.0}, 24));
    CHECK(unit.agg_mean == unit.agg_max);
    CHECK(unit.agg_std == 0.0);

    // half-hour steps: kWh per step over 0.5 h is kW
    auto half = features(testutil::make_scenario({{1.0, 3.0}}, {0.0, 0.0}, 1.0, 0.5));
    CHECK(half.agg_mean == 4.0);
    CHECK(half.agg_max == 6.0);

    auto rng = make_rng(2, {});
    auto s = random_set(rng, 1).scenarios.front();
    auto swapped = s;
    std::swap(swapped.loads[0], swapped.loads[1]);
    auto a = features(s);
    auto b = features(swapped);
    CHECK(a.agg_mean == doctest::Approx(b.agg_mean).epsilon(1e-14));
    CHECK(a.agg_max == doctest::Approx(b.agg_max).epsilon(1e-14));
    CHECK(a.agg_std == doctest::Approx(b.agg_std).epsilon(1e-14));
}

TEST_CASE("reduction with k equal to N is vacuous") {
    auto rng = make_rng(3, {});
    auto set = random_set(rng, 5);
    auto out = reduce_fast_forward(set, 5);
    REQUIRE(out.size() == 5);
    for (std::size_t m = 0; m < 5; ++m) {
        CHECK(out.scenarios[m].probability == set.scenarios[m].probability);
        CHECK(out.scenarios[m].loads == set.scenarios[m].loads);
    }
    CHECK_THROWS_AS(reduce_fast_forward(set, 6), ArgumentError);
    CHECK_THROWS_AS(reduce_fast_forward(set, 0), ArgumentError);
}

TEST_CASE("single representative of {0, 1, 10} is the middle point") {
    std::vector<std::vector<double>> pts = {{0.0}, {1.0}, {10.0}};
    std::vector<double> p(3, 1.0 / 3.0);
    auto sel = fast_forward_select(pts, p, 1);
    REQUIRE(sel.order.size() == 1);
    CHECK(sel.order[0] == 1);
    CHECK(sel.order[0] == oracle::best_single(pts, p));
    CHECK(sel.probability[1] == doctest::Approx(1.0));

    ScenarioSet set;
    for (double v : {0.0, 1.0, 10.0}) {
        set.scenarios.push_back(constant_scenario({v}, 4, 1.0 / 3.0));
    }
    auto reduced = reduce_fast_forward(set, 1);
    REQUIRE(reduced.size() == 1);
    CHECK(reduced.scenarios[0].loads[0][0] == 1.0);
    CHECK(reduced.scenarios[0].probability == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("k=2 on five collinear points follows the greedy trace") {
    std::vector<std::vector<double>> pts = {{0.0}, {1.0}, {2.0}, {3.0}, {4.0}};
    std::vector<double> p(5, 0.2);
    auto sel = fast_forward_select(pts, p, 2);
    auto ref = oracle::greedy_fast_forward(pts, p, 2);
    CHECK(sel.order == ref.order);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(sel.probability[j] == doctest::Approx(ref.probability[j]).epsilon(1e-12));
    }
}

TEST_CASE("Fast-Forward agrees with the reference greedy on random inputs") {
    auto rng = make_rng(4, {});
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 2 + uniform_index(rng, 11);
        const std::size_t k = 1 + uniform_index(rng, std::min<std::size_t>(4, n));
        const std::size_t dim = 1 + uniform_index(rng, 3);
        std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
        std::vector<double> p(n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (auto &x : pts[j]) {
                x = uniform01(rng) * 10.0;
            }
            p[j] = 0.05 + uniform01(rng);
            total += p[j];
        }
        for (auto &x : p) {
            x /= total;
        }
        auto sel = fast_forward_select(pts, p, k);
        auto ref = oracle::greedy_fast_forward(pts, p, k);
        CHECK(sel.order == ref.order);
        const double mass = std::accumulate(sel.probability.begin(), sel.probability.end(), 0.0);
        CHECK(std::abs(mass - 1.0) <= 1e-9);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(sel.probability[j] == doctest::Approx(ref.probability[j]).epsilon(1e-12));
        }
        if (k == 1) {
            CHECK(sel.order[0] == oracle::best_single(pts, p));
        }
    }
}

TEST_CASE("reduction preserves mass, membership and the mean envelope") {
    auto rng = make_rng(5, {});
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 3 + uniform_index(rng, 10);
        auto set = random_set(rng, n);
        const std::size_t k = 1 + uniform_index(rng, n);
        auto out = reduce_fast_forward(set, k);
        CHECK(out.size() == k);
        CHECK(std::abs(out.total_probability() - 1.0) <= 1e-9);
        double lo = 1e300, hi = -1e300, weighted = 0.0;
        for (const auto &s : set.scenarios) {
            lo = std::min(lo, features(s).agg_mean);
            hi = std::max(hi, features(s).agg_mean);
        }
        for (const auto &s : out.scenarios) {
            auto it = std::find_if(set.scenarios.begin(), set.scenarios.end(),
                                   [&](const Scenario &x) { return x.loads == s.loads; });
            CHECK(it != set.scenarios.end());
            weighted += s.probability * features(s).agg_mean;
        }
        CHECK(weighted >= lo - 1e-9);
        CHECK(weighted <= hi + 1e-9);

        auto again = reduce_fast_forward(set, k);
        for (std::size_t m = 0; m < k; ++m) {
            CHECK(again.scenarios[m].loads == out.scenarios[m].loads);
            CHECK(again.scenarios[m].probability == out.scenarios[m].probability);
        }
    }
}

TEST_CASE("ties go to the lowest index") {
    std::vector<std::vector<double>> pts = {{1.0}, {1.0}, {1.0}};
    std::vector<double> p(3, 1.0 / 3.0);
    auto sel = fast_forward_select(pts, p, 1);
    CHECK(sel.order[0] == 0);
    CHECK(sel.probability[0] == doctest::Approx(1.0));
}

TEST_CASE("standardised features drop constant columns") {
    std::vector<FeatureVector> f = {{1.0, 5.0, 0.0}, {2.0, 5.0, 0.0}, {3.0, 5.0, 0.0}};
    auto z = standardized_features(f);
    REQUIRE(z.size() == 3);
    CHECK(z[0].size() == 1);
    CHECK(z[1][0] == doctest::Approx(0.0));
    CHECK(z[2][0] == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("solar dataset generation and CSV round trip") {
    auto a = generate_synthetic_solar(10, 48, 7);
    auto b = generate_synthetic_solar(10, 48, 7);
    CHECK(a.series == b.series);
    CHECK(a.year_ids.size() == 10);
    CHECK_NOTHROW(a.validate());
    for (const auto &s : a.series) {
        for (double v : s) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.2);
        }
    }
    testutil::TempDir dir("solar");
    write_solar(a, dir / "solar.csv");
    auto back = load_solar(dir / "solar.csv");
    CHECK(back.series == a.series);
    CHECK(back.year_ids == a.year_ids);

    testutil::write_text(dir / "bad.csv", "year_id,t,gen_kw_per_kwp\n2010,0,1.5\n");
    CHECK_THROWS_AS(load_solar(dir / "bad.csv"), ValidationError);
}

TEST_CASE("scenario sets round trip through a directory") {
    auto rng = make_rng(6, {});
    auto set = random_set(rng, 3);
    set.scenarios[1].params = {{"A", "2012", 50.0, 120.0}, {"B", "2012", 60.0, 130.0}};
    set.scenarios[1].solar_year = "2015";
    testutil::TempDir dir("set");
    write_scenario_set(set, dir / "set");
    auto back = read_scenario_set(dir / "set");
    REQUIRE(back.size() == 3);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(back.scenarios[m].loads == set.scenarios[m].loads);
        CHECK(back.scenarios[m].solar == set.scenarios[m].solar);
        CHECK(back.scenarios[m].probability == set.scenarios[m].probability);
    }
    CHECK(back.scenarios[1].params == set.scenarios[1].params);
    CHECK(back.scenarios[1].solar_year == "2015");
}
