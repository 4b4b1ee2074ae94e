#include "dvoi/errors.h"
#include "dvoi/loadmodel.h"
#include "dvoi/stats.h"
#include "oracles.h"
#include "test_util.h"

#include <doctest.h>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>

using namespace dvoi;

namespace {

PriorSpec default_prior() {
    PriorSpec p;
    p.type_ids = {"A", "B", "C"};
    p.year_ids = {"2012", "2013", "2014"};
    return p;
}

BuildingPosterior mean_only_posterior(const PriorSpec &prior, double z, double eps) {
    MeasurementModel m;
    m.eps_mean = eps;
    m.peak_observed = false;
    Measurement z_obs{"A", "", z, 300.0};
    return posterior_update(prior, z_obs, m);
}

LoadDataset tiny_dataset(std::vector<double> x, double dt = 1.0) {
    LoadDataset ds;
    ds.type_ids = {"T"};
    ds.year_ids = {"Y"};
    ds.timestep_hours = dt;
    ds.profiles = {std::move(x)};
    return ds;
}

} // namespace

TEST_CASE("synthetic dataset satisfies the dataset invariants") {
    auto one = generate_synthetic_dataset(1, 1, 24, 0);
    REQUIRE(one.profiles.size() == 1);
    CHECK(one.hours() == 24);
    CHECK_NOTHROW(one.validate());
    CHECK(*std::max_element(one.profiles[0].begin(), one.profiles[0].end()) > mean_of(one.profiles[0]));
    CHECK(std::all_of(one.profiles[0].begin(), one.profiles[0].end(), [](double v) { return v >= 0.0; }));

    auto again = generate_synthetic_dataset(1, 1, 24, 0);
    CHECK(again.profiles == one.profiles);

    auto full = generate_synthetic_dataset(3, 6, 8760, 7);
    CHECK(full.profiles.size() == 18);
    for (const auto &p : full.profiles) {
        CHECK(p.size() == 8760);
    }
    CHECK_NOTHROW(full.validate());

    CHECK_THROWS_AS(generate_synthetic_dataset(0, 1, 24, 0), ArgumentError);
    CHECK_THROWS_AS(generate_synthetic_dataset(1, 0, 24, 0), ArgumentError);
    CHECK_THROWS_AS(generate_synthetic_dataset(1, 1, 23, 0), ArgumentError);
}

TEST_CASE("dataset CSV loading and its errors") {
    testutil::TempDir dir("loads");
    std::string good = "type_id,year_id,t,load_kwh\n";
    for (const char *type : {"A", "B"}) {
        for (const char *year : {"2012", "2013"}) {
            for (int t = 0; t < 3; ++t) {
                good += fmt::format("{},{},{},{}\n", type, year, t, 1.0 + t);
            }
        }
    }
    testutil::write_text(dir / "good.csv", good);
    auto ds = load_dataset(dir / "good.csv");
    CHECK(ds.profiles.size() == 4);
    CHECK(ds.hours() == 3);
    CHECK(ds.profile("B", "2013") == std::vector<double>{1.0, 2.0, 3.0});

    std::string missing = "type_id,year_id,t,load_kwh\n";
    for (int t = 0; t < 3; ++t) {
        missing += fmt::format("A,2012,{},1\nA,2013,{},2\nB,2012,{},3\n", t, t, t);
    }
    testutil::write_text(dir / "missing.csv", missing);
    CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), SchemaError);

    testutil::write_text(dir / "negative.csv", "type_id,year_id,t,load_kwh\nA,2012,0,1\nA,2012,1,-1.0\n");
    CHECK_THROWS_AS(load_dataset(dir / "negative.csv"), ValidationError);

    write_dataset(ds, dir / "roundtrip.csv");
    auto back = load_dataset(dir / "roundtrip.csv");
    CHECK(back.profiles == ds.profiles);
    CHECK(back.type_ids == ds.type_ids);
}

TEST_CASE("district parameter draws share the year") {
    auto prior = default_prior();
    auto rng = make_rng(3, {1});
    for (int rep = 0; rep < 50; ++rep) {
        auto draw = sample_district_params(prior, 5, rng);
        REQUIRE(draw.size() == 5);
        for (const auto &b : draw) {
            CHECK(b.year_id == draw.front().year_id);
            CHECK(b.mean_kw > 0.0);
            CHECK(b.peak_kw > b.mean_kw);
            CHECK(b.peak_kw >= prior.peak_min);
            CHECK(b.peak_kw <= prior.peak_max);
        }
    }
}

TEST_CASE("degenerate prior gives fixed mean and peak") {
    auto prior = default_prior();
    prior.mean_sigma = 1e-12;
    prior.peak_min = prior.peak_max = 250.0;
    auto rng = make_rng(4, {});
    auto draw = sample_district_params(prior, 4, rng);
    for (const auto &b : draw) {
        CHECK(b.mean_kw == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(b.peak_kw == 250.0);
    }
}

TEST_CASE("mean-load sampler matches its normal prior") {
    auto prior = default_prior();
    auto rng = make_rng(5, {});
    std::vector<double> means;
    for (int i = 0; i < 10000; ++i) {
        means.push_back(sample_district_params(prior, 1, rng).front().mean_kw);
    }
    auto s = summarize(means);
    // 3 standard errors of 25/sqrt(10000) is 0.75 kW, inside the 1 kW band
    CHECK(std::abs(s.mean - 100.0) < 1.0);
    CHECK(std::abs(s.std - 25.0) < 1.0);
}

TEST_CASE("measurement sampling") {
    BuildingLoadParams truth{"B", "2013", 100.0, 300.0};
    MeasurementModel exact;
    exact.eps_mean = exact.eps_peak = 0.0;
    auto rng = make_rng(6, {});
    auto z = sample_measurement(truth, exact, rng);
    CHECK(z.z_mean == 100.0);
    CHECK(z.z_peak == 300.0);
    CHECK(z.observed_type == "B");

    MeasurementModel noisy;
    std::vector<double> zs;
    for (int i = 0; i < 10000; ++i) {
        auto m = sample_measurement(truth, noisy, rng);
        CHECK(m.observed_type == truth.type_id);
        CHECK(m.z_mean > 0.0);
        CHECK(m.z_peak > 0.0);
        zs.push_back(m.z_mean);
    }
    CHECK(std::abs(summarize(zs).std - 10.0) < 0.5);
}

TEST_CASE("vanishing noise collapses the mean posterior onto the measurement") {
    auto prior = default_prior();
    auto post = mean_only_posterior(prior, 110.0, 1e-6);
    const double cell = post.mean_pdf.is_point_mass() ? 0.0 : post.mean_pdf.cell_width();
    CHECK(std::abs(post.mean_pdf.mean() - 110.0) <= std::max(cell, 1e-9));

    auto exact = mean_only_posterior(prior, 110.0, 0.0);
    CHECK(exact.mean_pdf.is_point_mass());
    CHECK(exact.mean_pdf.mean() == 110.0);
}

TEST_CASE("peak measurement above the prior support puts the mode at the upper bound") {
    auto prior = default_prior();
    MeasurementModel m;
    Measurement z{"A", "", 100.0, 500.0};
    auto post = posterior_update(prior, z, m);
    const auto &d = post.peak_pdf.density();
    CHECK(post.peak_pdf.lower() >= prior.peak_min);
    CHECK(post.peak_pdf.upper() == doctest::Approx(prior.peak_max));
    for (std::size_t k = 1; k < d.size(); ++k) {
        CHECK(d[k] >= d[k - 1]);
    }
}

TEST_CASE("mean posterior agrees with fine quadrature") {
    auto prior = default_prior();
    auto post = mean_only_posterior(prior, 120.0, 0.1);
    auto ref = oracle::mean_posterior(prior, 120.0, 0.1);
    CHECK(post.mean_pdf.mean() > 100.0);
    CHECK(post.mean_pdf.mean() < 120.0);
    CHECK(std::abs(post.mean_pdf.mean() - ref.mean) < 0.1);
    CHECK(std::abs(post.mean_pdf.variance() / ref.variance - 1.0) < 0.01);
}

TEST_CASE("posterior type and year handling") {
    auto prior = default_prior();
    MeasurementModel m;
    Measurement z{"C", "", 90.0, 310.0};
    auto post = posterior_update(prior, z, m);
    CHECK(post.type_support == std::vector<std::string>{"C"});
    CHECK(post.year_support == prior.year_ids);

    m.type_observed = false;
    auto hidden = posterior_update(prior, z, m);
    CHECK(hidden.type_support == prior.type_ids);
}

TEST_CASE("measurement inconsistent with the prior is an inference error") {
    auto prior = default_prior();
    MeasurementModel m;
    m.eps_peak = 0.001;
    Measurement z{"A", "", 100.0, 5000.0};
    CHECK_THROWS_AS(posterior_update(prior, z, m), InferenceError);
}

TEST_CASE("posterior sampling") {
    auto prior = default_prior();
    prior.mean_sigma = 1e-12;
    prior.peak_min = prior.peak_max = 300.0;
    std::vector<BuildingPosterior> fixed(3, prior_as_posterior(prior));
    for (auto &p : fixed) {
        p.type_support = {"A"};
        p.year_support = {"2013"};
    }
    auto r1 = make_rng(7, {});
    auto r2 = make_rng(8, {});
    CHECK(sample_posterior_params(fixed, r1) == sample_posterior_params(fixed, r2));

    auto noisy_prior = default_prior();
    std::vector<BuildingPosterior> posts = {mean_only_posterior(noisy_prior, 120.0, 0.1),
                                            mean_only_posterior(noisy_prior, 80.0, 0.1)};
    auto rng = make_rng(9, {});
    std::vector<double> first;
    for (int i = 0; i < 10000; ++i) {
        auto d = sample_posterior_params(posts, rng);
        CHECK(d[0].year_id == d[1].year_id);
        first.push_back(d[0].mean_kw);
    }
    auto s = summarize(first);
    CHECK(std::abs(s.mean - posts[0].mean_pdf.mean()) < 3.0 * *s.standard_error);
}

TEST_CASE("affine profile rescaling") {
    auto ds = tiny_dataset({0.0, 2.0, 2.0, 4.0});
    auto out = build_profile({"T", "Y", 100.0, 400.0}, ds);
    // b = (400 - 100) / (4 - 2) = 150, a = 100 - 150 * 2 = -200
    CHECK(out.energy == std::vector<double>{0.0, 100.0, 100.0, 400.0});
    CHECK(out.clamped_steps == 1);

    auto own = tiny_dataset({1.0, 2.0, 3.0, 6.0});
    auto same = build_profile({"T", "Y", 3.0, 6.0}, own);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(same.energy[t] == doctest::Approx(own.profiles[0][t]).epsilon(1e-14));
    }

    auto positive = tiny_dataset({3.0, 4.0, 5.0, 4.0}, 0.5);
    auto y = build_profile({"T", "Y", 100.0, 200.0}, positive);
    CHECK(y.clamped_steps == 0);
    CHECK(mean_of(y.energy) / 0.5 == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(*std::max_element(y.energy.begin(), y.energy.end()) / 0.5 == doctest::Approx(200.0).epsilon(1e-12));

    auto doubled = build_profile({"T", "Y", 200.0, 400.0}, positive);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(doubled.energy[t] == doctest::Approx(2.0 * y.energy[t]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(build_profile({"T", "Y", 1.0, 2.0}, tiny_dataset({1.0, 1.0})), ValidationError);
    CHECK_THROWS_AS(build_profile({"X", "Y", 1.0, 2.0}, ds), LookupError);
}

TEST_CASE("posteriors contract on average") {
    auto prior = default_prior();
    MeasurementModel m;
    auto rng = make_rng(10, {});
    std::vector<double> vars;
    for (int i = 0; i < 300; ++i) {
        auto truth = sample_district_params(prior, 1, rng).front();
        auto z = sample_measurement(truth, m, rng);
        auto post = posterior_update(prior, z, m);
        vars.push_back(post.mean_pdf.variance());
    }
    auto s = summarize(vars);
    CHECK(s.mean <= prior.mean_sigma * prior.mean_sigma + 3.0 * *s.standard_error);
}

TEST_CASE("exact measurements collapse posteriors anywhere in the support") {
    auto prior = default_prior();
    MeasurementModel m;
    m.eps_mean = m.eps_peak = 0.0;
    auto rng = make_rng(11, {});
    for (int i = 0; i < 50; ++i) {
        const double zm = 20.0 + 160.0 * uniform01(rng);
        const double zp = prior.peak_min + (prior.peak_max - prior.peak_min) * uniform01(rng);
        auto post = posterior_update(prior, {"A", "", zm, zp}, m);
        CHECK(post.mean_pdf.mean() == doctest::Approx(zm));
        CHECK(post.peak_pdf.mean() == doctest::Approx(zp));
    }
}

TEST_CASE("tabulated posteriors integrate to one") {
    auto prior = default_prior();
    auto rng = make_rng(12, {});
    for (int i = 0; i < 100; ++i) {
        MeasurementModel m;
        m.eps_mean = 0.01 + 0.3 * uniform01(rng);
        m.eps_peak = 0.01 + 0.3 * uniform01(rng);
        Measurement z{"A", "", 40.0 + 120.0 * uniform01(rng), 150.0 + 300.0 * uniform01(rng)};
        auto post = posterior_update(prior, z, m);
        CHECK(std::abs(post.mean_pdf.integral() - 1.0) <= 1e-6);
        CHECK(std::abs(post.peak_pdf.integral() - 1.0) <= 1e-6);
        CHECK(post.peak_pdf.lower() >= prior.peak_min);
        CHECK(post.peak_pdf.upper() <= prior.peak_max);
    }
}

TEST_CASE("sampling is reproducible under a fixed seed") {
    auto prior = default_prior();
    auto a = make_rng(13, {2, 5});
    auto b = make_rng(13, {2, 5});
    for (int i = 0; i < 20; ++i) {
        CHECK(sample_district_params(prior, 3, a) == sample_district_params(prior, 3, b));
    }
    auto c = make_rng(13, {2, 6});
    auto d = make_rng(13, {2, 5});
    CHECK_FALSE(sample_district_params(prior, 3, c) == sample_district_params(prior, 3, d));
}
