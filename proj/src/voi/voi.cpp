#include "dvoi/voi.h"
#include "dvoi/errors.h"
#include "dvoi/parallel.h"
#include "dvoi/random.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace dvoi {

using json = nlohmann::json;

UncertaintyMask UncertaintyMask::parse(std::string_view name) {
    if (name == "none") {
        return {false, false, false};
    }
    if (name == "type") {
        return {true, false, false};
    }
    if (name == "mean") {
        return {false, true, false};
    }
    if (name == "peak") {
        return {false, false, true};
    }
    if (name == "all") {
        return {true, true, true};
    }
    throw ArgumentError(fmt::format("unknown mask '{}' (expected none, type, mean, peak or all)", name));
}

std::string UncertaintyMask::name() const {
    const int bits = (reduce_type ? 1 : 0) + (reduce_mean ? 2 : 0) + (reduce_peak ? 4 : 0);
    switch (bits) {
    case 0:
        return "none";
    case 1:
        return "type";
    case 2:
        return "mean";
    case 4:
        return "peak";
    case 7:
        return "all";
    default:
        return fmt::format("type={},mean={},peak={}", reduce_type, reduce_mean, reduce_peak);
    }
}

void VoiConfig::validate() const {
    if (!loads || !solar) {
        throw ArgumentError("load and solar datasets are required");
    }
    loads->validate();
    solar->validate();
    prior.validate();
    measurement.validate();
    system.validate();
    mpc.validate();
    for (const auto &id : prior.type_ids) {
        loads->type_index(id);
    }
    for (const auto &id : prior.year_ids) {
        loads->year_index(id);
    }
    const auto T = loads->hours();
    if (solar->hours() < T) {
        throw ArgumentError(fmt::format("solar data cover {} steps, loads need {}", solar->hours(), T));
    }
    if (system.hours() < T) {
        throw ArgumentError(fmt::format("tariff series cover {} steps, loads need {}", system.hours(), T));
    }
    if (std::abs(system.dt - loads->timestep_hours) > 1e-12) {
        throw ArgumentError(fmt::format("dt {} h differs from the dataset timestep {} h", system.dt, loads->timestep_hours));
    }
    for (auto [value, name] : {std::pair{n_buildings, "n_buildings"}, {n_prior, "n_prior"}, {n_posterior, "n_posterior"},
                               {n_eval, "n_eval"}, {n_measurements, "n_measurements"}, {k_reduced, "k_reduced"}}) {
        if (value < 1) {
            throw ArgumentError(fmt::format("{} must be >= 1", name));
        }
    }
}

namespace {

using ScenarioDraw = std::function<Scenario(std::size_t)>;

struct SpPolicy {
    ScenarioSet reduced;
    DesignSolution solution;
};

// Draws n scenarios one at a time (keeping only features), reduces them to k
// by Fast-Forward and re-draws the survivors before solving the design LP.
SpPolicy solve_sp(const VoiConfig &c, std::size_t n, const ScenarioDraw &draw) {
    const auto k = std::min(c.k_reduced, n);
    std::vector<FeatureVector> feats(n);
    std::vector<double> probs(n, 1.0 / static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        feats[j] = features(draw(j));
    }
    std::vector<std::size_t> keep;
    std::vector<double> keep_prob;
    if (k == n) {
        for (std::size_t j = 0; j < n; ++j) {
            keep.push_back(j);
            keep_prob.push_back(probs[j]);
        }
    } else {
        auto sel = fast_forward_select(standardized_features(feats), probs, k);
        for (std::size_t j = 0; j < n; ++j) {
            if (sel.assigned[j] == j) {
                keep.push_back(j);
                keep_prob.push_back(sel.probability[j]);
            }
        }
    }
    SpPolicy out;
    for (std::size_t q = 0; q < keep.size(); ++q) {
        auto s = draw(keep[q]);
        s.probability = keep_prob[q];
        out.reduced.scenarios.push_back(std::move(s));
    }
    out.solution = build_and_solve(out.reduced, c.system);
    return out;
}

Scenario posterior_scenario(const VoiConfig &c, std::span<const BuildingPosterior> posts, Rng &rng) {
    auto params = sample_posterior_params(posts, rng);
    return make_scenario(params, *c.loads, *c.solar, rng);
}

} // namespace

ScenarioSource evaluation_source(const VoiConfig &c, std::vector<BuildingPosterior> posts) {
    return [&c, posts = std::move(posts)](std::size_t j) {
        auto rng = make_rng(c.seed, {stream::evaluation, j});
        return posterior_scenario(c, posts, rng);
    };
}

ScenarioSource prior_evaluation_source(const VoiConfig &c) {
    return evaluation_source(c, std::vector<BuildingPosterior>(c.n_buildings, prior_as_posterior(c.prior)));
}

MeasurementModel masked_measurement_model(const VoiConfig &c) {
    MeasurementModel masked = c.measurement;
    masked.type_observed = c.measurement.type_observed && c.mask.reduce_type;
    masked.mean_observed = c.measurement.mean_observed && c.mask.reduce_mean;
    masked.peak_observed = c.measurement.peak_observed && c.mask.reduce_peak;
    return masked;
}

std::vector<BuildingPosterior> record_posteriors(const VoiConfig &c, const MeasurementRecord &rec) {
    const auto masked = masked_measurement_model(c);
    std::vector<BuildingPosterior> posts;
    for (const auto &m : rec.measurement) {
        posts.push_back(posterior_update(c.prior, m, masked));
    }
    return posts;
}

namespace {

double standard_error_of_mean(std::span<const double> values) {
    if (values.size() < 2) {
        return 0.0;
    }
    return summarize(values).standard_error.value_or(0.0);
}

struct PolicyOutcome {
    SystemDesign design;
    double sp_objective{0.0};
    double capital{0.0};
    CostDistribution costs;
};

PolicyOutcome run_posterior_policy(const VoiConfig &c, const std::vector<BuildingPosterior> &posts,
                                   std::uint64_t sp_stream, std::uint64_t index) {
    auto policy = solve_sp(c, c.n_posterior, [&](std::size_t j) {
        auto rng = make_rng(c.seed, {sp_stream, index, j});
        return posterior_scenario(c, posts, rng);
    });
    PolicyOutcome out;
    out.design = policy.solution.design;
    out.sp_objective = policy.solution.objective_gbp;
    out.capital = capital_costs(out.design, c.system).total;
    out.costs = evaluate_expected_cost(out.design, evaluation_source(c, posts), c.n_eval, c.system, c.mpc, 1);
    return out;
}

} // namespace

PriorLegResult prior_leg(const VoiConfig &c) {
    c.validate();
    auto policy = solve_sp(c, c.n_prior, [&](std::size_t j) {
        auto rng = make_rng(c.seed, {stream::prior_sp, j});
        auto params = sample_district_params(c.prior, c.n_buildings, rng);
        return make_scenario(params, *c.loads, *c.solar, rng);
    });
    PriorLegResult out;
    out.sp_breakdown = objective_breakdown(policy.solution, policy.reduced, c.system);
    out.reduced = std::move(policy.reduced);
    out.solution = std::move(policy.solution);
    auto source = prior_evaluation_source(c);
    out.costs = evaluate_expected_cost(out.solution.design, source, c.n_eval, c.system, c.mpc, c.jobs);
    out.baseline = no_asset_baseline(source, c.n_eval, c.system, c.jobs);
    return out;
}

PreposteriorResult preposterior_leg(const VoiConfig &c) {
    c.validate();
    const auto masked = masked_measurement_model(c);

    PreposteriorResult out;
    out.records.resize(c.n_measurements);
    parallel_for(c.n_measurements, c.jobs, [&](std::size_t r) {
        auto &rec = out.records[r];
        rec.index = r;
        try {
            auto rng = make_rng(c.seed, {stream::measurement, r});
            rec.truth = sample_district_params(c.prior, c.n_buildings, rng);
            std::vector<BuildingPosterior> posts;
            for (const auto &truth : rec.truth) {
                rec.measurement.push_back(sample_measurement(truth, c.measurement, rng));
                posts.push_back(posterior_update(c.prior, rec.measurement.back(), masked));
                rec.posterior_mean_load_kw += posts.back().mean_pdf.mean();
            }
            auto outcome = run_posterior_policy(c, posts, stream::posterior_sp, r);
            rec.posterior_design = outcome.design;
            rec.sp_objective = outcome.sp_objective;
            rec.capital_cost = outcome.capital;
            rec.posterior_expected_cost = outcome.costs.summary.mean;
            rec.posterior_cost_std = outcome.costs.summary.std;
            rec.posterior_cost_se = outcome.costs.summary.standard_error.value_or(0.0);
            rec.posterior_cost_range = outcome.costs.summary.range();
            rec.eval_costs = std::move(outcome.costs.totals);
            rec.ok = true;
        } catch (const Error &e) {
            rec.ok = false;
            rec.error = e.what();
        }
    });

    std::vector<double> means;
    for (const auto &rec : out.records) {
        if (rec.ok) {
            means.push_back(rec.posterior_expected_cost);
        } else {
            ++out.failures;
        }
    }
    if (means.empty()) {
        throw SimulationError(fmt::format("all {} measurements failed; first: {}", c.n_measurements,
                                          out.records.front().error),
                              0);
    }
    out.expected_cost = mean_of(means);
    out.standard_error = standard_error_of_mean(means);
    return out;
}

EviiResult compute_evii(double prior_cost, double preposterior_cost) {
    if (!std::isfinite(prior_cost) || !std::isfinite(preposterior_cost)) {
        throw ArgumentError("expected costs must be finite");
    }
    EviiResult r;
    r.prior_cost = prior_cost;
    r.preposterior_cost = preposterior_cost;
    r.evii_raw = prior_cost - preposterior_cost;
    r.evii = std::max(0.0, r.evii_raw);
    r.evii_pct = prior_cost != 0.0 ? r.evii / prior_cost * 100.0 : 0.0;
    return r;
}

EvpiResult compute_evpi(const VoiConfig &c, const std::optional<SampleSummary> &prior) {
    c.validate();
    SampleSummary prior_summary = prior ? *prior : prior_leg(c).costs.summary;
    const auto n = c.n_measurements;
    std::vector<double> costs(n, 0.0);
    parallel_for(n, c.jobs, [&](std::size_t s) {
        auto rng = make_rng(c.seed, {stream::evpi, s});
        auto truth = sample_district_params(c.prior, c.n_buildings, rng);
        if (c.evpi_mode == EvpiMode::include_year) {
            ScenarioSet single;
            single.scenarios.push_back(make_scenario(truth, *c.loads, *c.solar, rng));
            single.scenarios.front().probability = 1.0;
            auto sol = build_and_solve(single, c.system);
            costs[s] = simulate(sol.design, single.scenarios.front(), c.system, c.mpc).costs.total;
        } else {
            std::vector<BuildingPosterior> posts;
            for (const auto &t : truth) {
                BuildingPosterior p;
                p.type_support = {t.type_id};
                p.year_support = c.prior.year_ids;
                p.mean_pdf = TabulatedPdf::point_mass(t.mean_kw);
                p.peak_pdf = TabulatedPdf::point_mass(t.peak_kw);
                posts.push_back(std::move(p));
            }
            costs[s] = run_posterior_policy(c, posts, stream::evpi_eval, s).costs.summary.mean;
        }
    });
    EvpiResult r;
    r.prior_cost = prior_summary.mean;
    r.perfect_info_cost = mean_of(costs);
    r.evpi_raw = r.prior_cost - r.perfect_info_cost;
    r.evpi = std::max(0.0, r.evpi_raw);
    const double se_prior = prior_summary.standard_error.value_or(0.0);
    const double se_perfect = standard_error_of_mean(costs);
    r.standard_error = std::sqrt(se_prior * se_prior + se_perfect * se_perfect);
    r.per_sample_cost = std::move(costs);
    return r;
}

ConvergenceTrace convergence_trace(std::span<const double> samples) {
    ConvergenceTrace tr;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    double sum_sq_dev = 0.0; // Welford
    double mean = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = samples[i];
        sum += x;
        const double n = static_cast<double>(i + 1);
        const double delta = x - mean;
        mean += delta / n;
        sum_sq_dev += delta * (x - mean);
        const double running = sum / n;
        tr.running_mean.push_back(running);
        if (i == 0) {
            tr.ci_low.push_back(nan);
            tr.ci_high.push_back(nan);
        } else {
            const double half = 1.96 * std::sqrt(std::max(0.0, sum_sq_dev / (n - 1.0))) / std::sqrt(n);
            tr.ci_low.push_back(running - half);
            tr.ci_high.push_back(running + half);
        }
    }
    return tr;
}

SpErrorReport sp_error_report(std::span<const MeasurementRecord> records) {
    SpErrorReport r;
    double abs_sum = 0.0;
    double sum = 0.0;
    for (const auto &rec : records) {
        if (!rec.ok) {
            continue;
        }
        const double simulated = rec.posterior_expected_cost - rec.capital_cost;
        const double sp = rec.sp_objective - rec.capital_cost;
        const double err = simulated != 0.0 ? (simulated - sp) / simulated * 100.0 : 0.0;
        r.per_record_pct.push_back(err);
        sum += err;
        abs_sum += std::abs(err);
    }
    if (!r.per_record_pct.empty()) {
        const auto n = static_cast<double>(r.per_record_pct.size());
        r.mean_error_pct = sum / n;
        r.mean_abs_error_pct = abs_sum / n;
    }
    return r;
}

QuantileSummary quantile_summary(std::vector<double> values) {
    QuantileSummary q;
    if (values.empty()) {
        return q;
    }
    q.min = *std::min_element(values.begin(), values.end());
    q.max = *std::max_element(values.begin(), values.end());
    q.q25 = quantile(values, 0.25);
    q.median = quantile(values, 0.5);
    q.q75 = quantile(values, 0.75);
    return q;
}

RiskReport risk_report(const SampleSummary &prior, std::span<const MeasurementRecord> records) {
    auto ratio = [](double post, double base) {
        if (base > 0.0) {
            return post / base;
        }
        return post > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    RiskReport r;
    for (const auto &rec : records) {
        if (!rec.ok) {
            continue;
        }
        r.std_ratio.push_back(ratio(rec.posterior_cost_std, prior.std));
        r.range_ratio.push_back(ratio(rec.posterior_cost_range, prior.range()));
    }
    r.std_ratio_summary = quantile_summary(r.std_ratio);
    r.range_ratio_summary = quantile_summary(r.range_ratio);
    return r;
}

// ---------------------------------------------------------------------------
// Exact discrete engine

double exact_cost(const SystemDesign &design, const Scenario &scenario, const SystemParams &params) {
    MpcParams full;
    full.horizon_steps = scenario.hours();
    full.execute_steps = scenario.hours();
    full.fos_op = 1.0;
    return simulate(design, scenario, params, full).costs.total;
}

DiscreteVoi exact_discrete_voi(const DiscreteInstance &inst) {
    inst.scenarios.validate();
    if (inst.signal.size() != inst.scenarios.size()) {
        throw ArgumentError("one signal label per scenario required");
    }
    SystemParams p = inst.system;
    p.fos_design = 1.0;
    const auto &all = inst.scenarios.scenarios;

    // Optimal design for a subset, with probabilities renormalised.
    auto design_for = [&](const std::vector<std::size_t> &members) {
        ScenarioSet sub;
        double mass = 0.0;
        for (auto m : members) {
            mass += all[m].probability;
        }
        for (auto m : members) {
            sub.scenarios.push_back(all[m]);
            sub.scenarios.back().probability = mass > 0.0 ? all[m].probability / mass : 1.0 / members.size();
        }
        if (mass <= 0.0) {
            // zero-probability group: any design works, it carries no weight
            return SystemDesign::zero(all.front().buildings());
        }
        return build_and_solve(sub, p).design;
    };

    DiscreteVoi out;
    std::vector<std::size_t> every(all.size());
    for (std::size_t m = 0; m < all.size(); ++m) {
        every[m] = m;
    }
    out.prior_design = design_for(every);
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t m = 0; m < all.size(); ++m) {
        out.prior_cost += all[m].probability * exact_cost(out.prior_design, all[m], p);
        out.perfect_designs.push_back(design_for({m}));
        out.perfect_info_cost += all[m].probability * exact_cost(out.perfect_designs.back(), all[m], p);
        groups[inst.signal[m]].push_back(m);
    }
    for (const auto &[label, members] : groups) {
        auto d = design_for(members);
        for (auto m : members) {
            out.signal_cost += all[m].probability * exact_cost(d, all[m], p);
        }
    }
    out.evpi = out.prior_cost - out.perfect_info_cost;
    out.evii = out.prior_cost - out.signal_cost;
    return out;
}

DiscreteInstance discrete_instance_from_json(const json &j) {
    DiscreteInstance inst;
    try {
        inst.system = system_params_from_json(j.at("system"));
        for (const auto &s : j.at("scenarios")) {
            Scenario sc;
            sc.loads = s.at("loads").get<std::vector<std::vector<double>>>();
            sc.solar = s.at("solar").get<std::vector<double>>();
            sc.probability = s.at("probability").get<double>();
            sc.timestep_hours = inst.system.dt;
            inst.signal.push_back(s.value("signal", std::string{}));
            inst.scenarios.scenarios.push_back(std::move(sc));
        }
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("discrete instance: {}", e.what()));
    }
    inst.scenarios.validate();
    inst.system.validate();
    return inst;
}

} // namespace dvoi
