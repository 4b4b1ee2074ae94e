#include "dvoi/loadmodel.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace dvoi {

namespace {

constexpr std::size_t max_rejection_draws = 10000;
constexpr std::size_t max_posterior_redraws = 1000;
/// Likelihood window half-width in likelihood standard deviations.
constexpr double likelihood_window_sds = 10.0;
/// log(1e-300): smallest accepted posterior normalising constant.
const double min_log_evidence = std::log(1e-300);

double mean_of(const std::vector<double> &x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double smooth_step(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t index_of(const std::vector<std::string> &ids, std::string_view id, const char *what) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) {
        throw LookupError(fmt::format("unknown {} '{}'", what, id));
    }
    return static_cast<std::size_t>(it - ids.begin());
}

/// Range of theta where N(z; theta, eps*theta) is within `likelihood_window_sds`
/// standard deviations of its peak. Upper bound is +inf for wide likelihoods.
std::pair<double, double> likelihood_window(double z, double eps) {
    double k = likelihood_window_sds * eps;
    double lo = z / (1.0 + k);
    double hi = k < 1.0 ? z / (1.0 - k) : std::numeric_limits<double>::infinity();
    return {lo, hi};
}

double log_likelihood(double z, double theta, double eps) {
    double sd = eps * theta;
    double r = (z - theta) / sd;
    return -0.5 * r * r - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Tabulates prior(theta) * likelihood on [lo, hi] and checks the evidence.
TabulatedPdf tabulate_posterior(double lo, double hi, const char *param, double z, double eps,
                                double (*log_prior)(double, const PriorSpec &), const PriorSpec &prior) {
    std::vector<double> logw(posterior_grid_points);
    const double h = (hi - lo) / static_cast<double>(posterior_grid_points - 1);
    for (std::size_t k = 0; k < posterior_grid_points; ++k) {
        double theta = lo + h * static_cast<double>(k);
        logw[k] = log_prior(theta, prior) + log_likelihood(z, theta, eps);
    }
    double log_norm = 0.0;
    TabulatedPdf pdf;
    try {
        pdf = TabulatedPdf::from_log_density(lo, hi, logw, &log_norm);
    } catch (const InferenceError &) {
        throw InferenceError(fmt::format("posterior for '{}' has no mass (measurement {} inconsistent with prior)", param, z));
    }
    if (log_norm < min_log_evidence) {
        throw InferenceError(fmt::format("posterior normalising constant for '{}' below 1e-300 (measurement {} inconsistent with prior)",
                                         param, z));
    }
    return pdf;
}

double log_prior_mean(double theta, const PriorSpec &prior) {
    double r = (theta - prior.mean_mu) / prior.mean_sigma;
    return -0.5 * r * r - std::log(prior.mean_sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_prior_peak(double, const PriorSpec &prior) { return -std::log(prior.peak_max - prior.peak_min); }

std::pair<double, double> mean_prior_window(const PriorSpec &prior) {
    double hi = prior.mean_mu + 6.0 * prior.mean_sigma;
    double lo = std::max(prior.mean_mu - 6.0 * prior.mean_sigma, hi * 1e-9);
    return {lo, hi};
}

TabulatedPdf mean_posterior(const PriorSpec &prior, const Measurement &msmt, const MeasurementModel &model) {
    auto [lo, hi] = mean_prior_window(prior);
    if (!model.mean_observed) {
        if (prior.mean_is_point_mass()) {
            return TabulatedPdf::point_mass(prior.mean_mu);
        }
        std::vector<double> logw(posterior_grid_points);
        const double h = (hi - lo) / static_cast<double>(posterior_grid_points - 1);
        for (std::size_t k = 0; k < posterior_grid_points; ++k) {
            logw[k] = log_prior_mean(lo + h * static_cast<double>(k), prior);
        }
        return TabulatedPdf::from_log_density(lo, hi, logw);
    }
    const double z = msmt.z_mean;
    if (!(z > 0.0)) {
        throw InferenceError(fmt::format("mean measurement must be positive, got {}", z));
    }
    if (prior.mean_is_point_mass()) {
        return TabulatedPdf::point_mass(prior.mean_mu);
    }
    if (model.eps_mean == 0.0) {
        if (z < lo || z > hi) {
            throw InferenceError(fmt::format("posterior normalising constant for 'mean' below 1e-300 (exact measurement {} outside prior support)", z));
        }
        return TabulatedPdf::point_mass(z);
    }
    auto [llo, lhi] = likelihood_window(z, model.eps_mean);
    double wlo = std::max(lo, llo);
    double whi = std::min(hi, lhi);
    if (!(whi > wlo)) {
        wlo = lo;
        whi = hi;
    }
    return tabulate_posterior(wlo, whi, "mean", z, model.eps_mean, log_prior_mean, prior);
}

TabulatedPdf peak_posterior(const PriorSpec &prior, const Measurement &msmt, const MeasurementModel &model) {
    if (prior.peak_is_point_mass()) {
        return TabulatedPdf::point_mass(prior.peak_min);
    }
    const double lo = prior.peak_min;
    const double hi = prior.peak_max;
    if (!model.peak_observed) {
        std::vector<double> flat(posterior_grid_points, 0.0);
        return TabulatedPdf::from_log_density(lo, hi, flat);
    }
    const double z = msmt.z_peak;
    if (!(z > 0.0)) {
        throw InferenceError(fmt::format("peak measurement must be positive, got {}", z));
    }
    if (model.eps_peak == 0.0) {
        if (z < lo || z > hi) {
            throw InferenceError(fmt::format("posterior normalising constant for 'peak' below 1e-300 (exact measurement {} outside prior support)", z));
        }
        return TabulatedPdf::point_mass(z);
    }
    auto [llo, lhi] = likelihood_window(z, model.eps_peak);
    double wlo = std::max(lo, llo);
    double whi = std::min(hi, lhi);
    if (!(whi > wlo)) {
        wlo = lo;
        whi = hi;
    }
    return tabulate_posterior(wlo, whi, "peak", z, model.eps_peak, log_prior_peak, prior);
}

double positive_normal(double mu, double sd, Rng &rng, const char *what) {
    if (sd == 0.0) {
        return mu;
    }
    std::normal_distribution<double> dist{mu, sd};
    for (std::size_t i = 0; i < max_rejection_draws; ++i) {
        double v = dist(rng);
        if (v > 0.0) {
            return v;
        }
    }
    throw InferenceError(fmt::format("could not draw a positive {} measurement", what));
}

} // namespace

// ---------------------------------------------------------------------------
// LoadDataset

std::size_t LoadDataset::type_index(std::string_view type_id) const { return index_of(type_ids, type_id, "building type"); }

std::size_t LoadDataset::year_index(std::string_view year_id) const { return index_of(year_ids, year_id, "load year"); }

const std::vector<double> &LoadDataset::profile(std::string_view type_id, std::string_view year_id) const {
    return profiles.at(type_index(type_id) * year_ids.size() + year_index(year_id));
}

void LoadDataset::validate() const {
    if (type_ids.empty() || year_ids.empty()) {
        throw SchemaError("load dataset needs at least one type and one year");
    }
    if (profiles.size() != type_ids.size() * year_ids.size()) {
        throw SchemaError("load dataset does not cover every (type, year) pair");
    }
    if (!(timestep_hours > 0.0)) {
        throw ValidationError("timestep must be positive");
    }
    const auto T = hours();
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto &p = profiles[k];
        const auto &type = type_ids[k / year_ids.size()];
        const auto &year = year_ids[k % year_ids.size()];
        if (p.size() != T || T == 0) {
            throw SchemaError(fmt::format("profile ({}, {}) has {} entries, expected {}", type, year, p.size(), T));
        }
        for (std::size_t t = 0; t < T; ++t) {
            if (!(p[t] >= 0.0) || !std::isfinite(p[t])) {
                throw ValidationError(fmt::format("profile ({}, {}) has invalid load {} at t={}", type, year, p[t], t));
            }
        }
        if (!(*std::max_element(p.begin(), p.end()) > mean_of(p))) {
            throw ValidationError(fmt::format("profile ({}, {}) is constant (max == mean)", type, year));
        }
    }
}

LoadDataset generate_synthetic_dataset(std::size_t n_types, std::size_t n_years, std::size_t hours, std::uint64_t seed) {
    if (n_types < 1 || n_years < 1) {
        throw ArgumentError("synthetic dataset needs at least one type and one year");
    }
    if (hours < 24) {
        throw ArgumentError(fmt::format("synthetic dataset needs at least 24 hours, got {}", hours));
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;

    LoadDataset ds;
    ds.timestep_hours = 1.0;
    for (std::size_t k = 0; k < n_types; ++k) {
        ds.type_ids.push_back(fmt::format("B{}", k));
    }
    for (std::size_t y = 0; y < n_years; ++y) {
        ds.year_ids.push_back(fmt::format("{}", 2012 + y));
    }

    // Weather severity is shared by every building in a year.
    std::vector<double> winter_severity(n_years);
    for (std::size_t y = 0; y < n_years; ++y) {
        auto rng = make_rng(seed, {stream::dataset, 3, y});
        winter_severity[y] = std::uniform_real_distribution<double>{0.8, 1.2}(rng);
    }

    ds.profiles.reserve(n_types * n_years);
    for (std::size_t k = 0; k < n_types; ++k) {
        auto trng = make_rng(seed, {stream::dataset, 1, k});
        auto u = [&](double a, double b) { return std::uniform_real_distribution<double>{a, b}(trng); };
        const double base = u(0.35, 0.6);
        const double occ_amp = u(0.4, 1.0);
        const double occ_start = u(6.5, 9.0);
        const double occ_end = u(17.0, 20.0);
        const double weekend = u(0.35, 0.85);
        const double heat_amp = u(0.3, 0.9);
        const double heat_morning = u(0.2, 0.6);
        const double scale = u(60.0, 140.0);

        for (std::size_t y = 0; y < n_years; ++y) {
            auto yrng = make_rng(seed, {stream::dataset, 2, k, y});
            const double level = std::uniform_real_distribution<double>{0.9, 1.1}(yrng);
            const double heat_scale = winter_severity[y] * std::uniform_real_distribution<double>{0.85, 1.15}(yrng);
            std::normal_distribution<double> noise{0.0, 0.05};
            std::bernoulli_distribution event_day{0.03};
            std::uniform_real_distribution<double> event_size{0.4, 1.0};
            std::uniform_int_distribution<int> event_hour{8, 18};

            std::vector<double> p(hours);
            double ar = 0.0;
            int event_start = -1;
            double event_amp = 0.0;
            for (std::size_t t = 0; t < hours; ++t) {
                const auto day = t / 24;
                const double h = static_cast<double>(t % 24);
                if (t % 24 == 0) {
                    event_start = event_day(yrng) ? event_hour(yrng) : -1;
                    event_amp = event_start >= 0 ? event_size(yrng) : 0.0;
                }
                const double doy = static_cast<double>(day % 365);
                const bool is_weekend = day % 7 >= 5;
                const double occ = smooth_step(2.0 * (h - occ_start)) * smooth_step(2.0 * (occ_end - h));
                const double season = 0.5 * (1.0 + std::cos(two_pi * (doy - 15.0) / 365.0));
                const double heat = season * (1.0 + heat_morning * std::exp(-(h - 7.0) * (h - 7.0) / 4.0)) * (0.6 + 0.4 * occ);
                ar = 0.8 * ar + noise(yrng);
                double v = base + occ_amp * occ * (is_weekend ? weekend : 1.0) + heat_amp * heat_scale * heat + ar;
                if (event_start >= 0 && h >= event_start && h < event_start + 3) {
                    v += event_amp;
                }
                p[t] = scale * level * std::max(v, 0.02);
            }
            ds.profiles.push_back(std::move(p));
        }
    }
    ds.validate();
    return ds;
}

LoadDataset load_dataset(const std::filesystem::path &path, double timestep_hours) {
    auto table = csv::read(path);
    const auto c_type = table.column("type_id");
    const auto c_year = table.column("year_id");
    const auto c_t = table.column("t");
    const auto c_load = table.column("load_kwh");

    LoadDataset ds;
    ds.timestep_hours = timestep_hours;
    std::map<std::pair<std::size_t, std::size_t>, std::map<long long, double>> series;
    auto intern = [](std::vector<std::string> &ids, const std::string &id) {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it != ids.end()) {
            return static_cast<std::size_t>(it - ids.begin());
        }
        ids.push_back(id);
        return ids.size() - 1;
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        auto ti = intern(ds.type_ids, row[c_type]);
        auto yi = intern(ds.year_ids, row[c_year]);
        auto t = csv::to_integer(row[c_t], r, "t");
        double load = csv::to_double(row[c_load], r, "load_kwh");
        if (load < 0.0) {
            throw ValidationError(fmt::format("{}: row {} has negative load {}", path.string(), r + 1, load));
        }
        if (!series[{ti, yi}].emplace(t, load).second) {
            throw SchemaError(fmt::format("{}: duplicate hour {} for ({}, {})", path.string(), t, row[c_type], row[c_year]));
        }
    }
    if (ds.type_ids.empty()) {
        throw SchemaError(fmt::format("{}: no load rows", path.string()));
    }

    for (std::size_t ti = 0; ti < ds.type_ids.size(); ++ti) {
        for (std::size_t yi = 0; yi < ds.year_ids.size(); ++yi) {
            auto it = series.find({ti, yi});
            if (it == series.end()) {
                throw SchemaError(fmt::format("{}: missing profile for type '{}' year '{}'", path.string(),
                                              ds.type_ids[ti], ds.year_ids[yi]));
            }
            std::vector<double> p;
            p.reserve(it->second.size());
            long long expected = 0;
            for (auto [t, v] : it->second) {
                if (t != expected++) {
                    throw SchemaError(fmt::format("{}: hours for ({}, {}) are not contiguous from 0", path.string(),
                                                  ds.type_ids[ti], ds.year_ids[yi]));
                }
                p.push_back(v);
            }
            ds.profiles.push_back(std::move(p));
        }
    }
    ds.validate();
    return ds;
}

void write_dataset(const LoadDataset &ds, const std::filesystem::path &path) {
    csv::Writer w(path);
    w.row({"type_id", "year_id", "t", "load_kwh"});
    for (std::size_t ti = 0; ti < ds.type_ids.size(); ++ti) {
        for (std::size_t yi = 0; yi < ds.year_ids.size(); ++yi) {
            const auto &p = ds.profiles[ti * ds.year_ids.size() + yi];
            for (std::size_t t = 0; t < p.size(); ++t) {
                w.field(std::string_view{ds.type_ids[ti]}).field(std::string_view{ds.year_ids[yi]}).field(t).field(p[t]);
                w.end_row();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Prior / measurement

PriorSpec PriorSpec::for_dataset(const LoadDataset &ds) {
    PriorSpec p;
    p.type_ids = ds.type_ids;
    p.year_ids = ds.year_ids;
    return p;
}

void PriorSpec::validate() const {
    if (type_ids.empty() || year_ids.empty()) {
        throw ArgumentError("prior needs non-empty type and year id sets");
    }
    if (!(mean_sigma > 0.0) || !std::isfinite(mean_mu)) {
        throw ArgumentError("prior mean_sigma must be > 0");
    }
    if (!(peak_min > 0.0) || !(peak_max >= peak_min)) {
        throw ArgumentError("prior requires peak_max >= peak_min > 0");
    }
}

bool PriorSpec::mean_is_point_mass() const { return mean_sigma <= 1e-9 * std::max(1.0, std::abs(mean_mu)); }

bool PriorSpec::peak_is_point_mass() const { return peak_max - peak_min <= 1e-9 * std::max(1.0, peak_max); }

void MeasurementModel::validate() const {
    if (!(eps_mean >= 0.0) || !(eps_peak >= 0.0)) {
        throw ArgumentError("measurement errors must be >= 0");
    }
}

void BuildingLoadParams::validate() const {
    if (!(mean_kw > 0.0) || !(peak_kw > mean_kw)) {
        throw ValidationError(fmt::format("building parameters need 0 < mean ({}) < peak ({})", mean_kw, peak_kw));
    }
}

std::vector<BuildingLoadParams> sample_district_params(const PriorSpec &prior, std::size_t n_buildings, Rng &rng) {
    if (n_buildings < 1) {
        throw ArgumentError("district needs at least one building");
    }
    prior.validate();
    const auto &year = prior.year_ids[uniform_index(rng, prior.year_ids.size())];
    std::vector<BuildingLoadParams> out;
    out.reserve(n_buildings);
    std::normal_distribution<double> mean_dist{prior.mean_mu, prior.mean_sigma};
    std::uniform_real_distribution<double> peak_dist{prior.peak_min, prior.peak_max};
    for (std::size_t i = 0; i < n_buildings; ++i) {
        BuildingLoadParams p;
        p.type_id = prior.type_ids[uniform_index(rng, prior.type_ids.size())];
        p.year_id = year;
        p.peak_kw = prior.peak_is_point_mass() ? prior.peak_min : peak_dist(rng);
        bool ok = false;
        for (std::size_t d = 0; d < max_rejection_draws && !ok; ++d) {
            p.mean_kw = mean_dist(rng);
            ok = p.mean_kw > 0.0 && p.mean_kw < p.peak_kw;
        }
        if (!ok) {
            throw ArgumentError("prior mean distribution has no mass below the sampled peak");
        }
        out.push_back(std::move(p));
    }
    return out;
}

Measurement sample_measurement(const BuildingLoadParams &truth, const MeasurementModel &model, Rng &rng) {
    model.validate();
    Measurement m;
    m.observed_type = truth.type_id;
    m.observed_year = truth.year_id;
    m.z_mean = positive_normal(truth.mean_kw, model.eps_mean * truth.mean_kw, rng, "mean");
    m.z_peak = positive_normal(truth.peak_kw, model.eps_peak * truth.peak_kw, rng, "peak");
    return m;
}

BuildingPosterior posterior_update(const PriorSpec &prior, const Measurement &msmt, const MeasurementModel &model) {
    prior.validate();
    model.validate();
    BuildingPosterior post;
    if (model.type_observed) {
        index_of(prior.type_ids, msmt.observed_type, "building type");
        post.type_support = {msmt.observed_type};
    } else {
        post.type_support = prior.type_ids;
    }
    if (model.year_observed) {
        index_of(prior.year_ids, msmt.observed_year, "load year");
        post.year_support = {msmt.observed_year};
    } else {
        post.year_support = prior.year_ids;
    }
    post.mean_pdf = mean_posterior(prior, msmt, model);
    post.peak_pdf = peak_posterior(prior, msmt, model);
    return post;
}

BuildingPosterior prior_as_posterior(const PriorSpec &prior) {
    MeasurementModel none;
    none.type_observed = false;
    none.year_observed = false;
    none.mean_observed = false;
    none.peak_observed = false;
    return posterior_update(prior, Measurement{}, none);
}

std::vector<BuildingLoadParams> sample_posterior_params(std::span<const BuildingPosterior> posteriors, Rng &rng) {
    if (posteriors.empty()) {
        throw ArgumentError("district needs at least one building posterior");
    }
    const auto &years = posteriors.front().year_support;
    if (years.empty()) {
        throw InferenceError("posterior has an empty year support");
    }
    const auto &year = years[uniform_index(rng, years.size())];
    std::vector<BuildingLoadParams> out;
    out.reserve(posteriors.size());
    for (const auto &post : posteriors) {
        if (post.type_support.empty()) {
            throw InferenceError("posterior has an empty type support");
        }
        BuildingLoadParams p;
        p.type_id = post.type_support[uniform_index(rng, post.type_support.size())];
        p.year_id = year;
        p.peak_kw = post.peak_pdf.inverse_cdf(uniform01(rng));
        bool ok = false;
        for (std::size_t d = 0; d < max_posterior_redraws && !ok; ++d) {
            p.mean_kw = post.mean_pdf.inverse_cdf(uniform01(rng));
            ok = p.mean_kw > 0.0 && p.mean_kw < p.peak_kw;
        }
        if (!ok) {
            throw InferenceError(fmt::format("inconsistent posterior: no mean draw below peak {} after {} attempts",
                                             p.peak_kw, max_posterior_redraws));
        }
        out.push_back(std::move(p));
    }
    return out;
}

LoadProfile build_profile(const BuildingLoadParams &params, const LoadDataset &ds) {
    const auto &x = ds.profile(params.type_id, params.year_id);
    const double dt = ds.timestep_hours;
    const double x_mean = mean_of(x);
    const double x_max = *std::max_element(x.begin(), x.end());
    if (!(x_max > x_mean)) {
        throw ValidationError(fmt::format("degenerate profile ({}, {}): max equals mean", params.type_id, params.year_id));
    }
    const double b = (params.peak_kw * dt - params.mean_kw * dt) / (x_max - x_mean);
    const double a = params.mean_kw * dt - b * x_mean;
    LoadProfile out;
    out.energy.resize(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        double y = a + b * x[t];
        if (y < 0.0) {
            y = 0.0;
            ++out.clamped_steps;
        }
        out.energy[t] = y;
    }
    return out;
}

} // namespace dvoi
