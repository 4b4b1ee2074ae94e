#include "dvoi/scenario.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"
#include "dvoi/stats.h"

#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

namespace dvoi {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Solar data

const std::vector<double> &SolarDataset::year(std::string_view year_id) const {
    auto it = std::find(year_ids.begin(), year_ids.end(), year_id);
    if (it == year_ids.end()) {
        throw LookupError(fmt::format("unknown solar year '{}'", year_id));
    }
    return series[static_cast<std::size_t>(it - year_ids.begin())];
}

void SolarDataset::validate() const {
    if (year_ids.empty() || series.size() != year_ids.size()) {
        throw SchemaError("solar dataset needs one series per year");
    }
    const auto T = hours();
    for (std::size_t y = 0; y < series.size(); ++y) {
        if (series[y].size() != T || T == 0) {
            throw SchemaError(fmt::format("solar year '{}' has {} entries, expected {}", year_ids[y], series[y].size(), T));
        }
        for (std::size_t t = 0; t < T; ++t) {
            double g = series[y][t];
            if (!(g >= 0.0 && g <= 1.2)) {
                throw ValidationError(fmt::format("solar year '{}' value {} at t={} outside [0, 1.2]", year_ids[y], g, t));
            }
        }
    }
}

SolarDataset generate_synthetic_solar(std::size_t n_years, std::size_t hours, std::uint64_t seed) {
    if (n_years < 1 || hours < 24) {
        throw ArgumentError("synthetic solar needs >= 1 year and >= 24 hours");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    SolarDataset ds;
    for (std::size_t y = 0; y < n_years; ++y) {
        ds.year_ids.push_back(fmt::format("{}", 2010 + y));
        auto rng = make_rng(seed, {stream::solar, y});
        std::uniform_real_distribution<double> cloud{0.15, 1.0};
        std::normal_distribution<double> jitter{1.0, 0.08};
        std::vector<double> g(hours);
        double clearness = 1.0;
        for (std::size_t t = 0; t < hours; ++t) {
            const auto day = t / 24;
            const double h = static_cast<double>(t % 24) + 0.5;
            if (t % 24 == 0) {
                clearness = std::pow(cloud(rng), 0.7);
            }
            const double season = std::cos(two_pi * (static_cast<double>(day % 365) - 172.0) / 365.0);
            const double daylight = 12.0 + 4.0 * season;
            const double sunrise = 12.0 - 0.5 * daylight;
            const double elevation = std::sin(std::numbers::pi * (h - sunrise) / daylight);
            double v = 0.0;
            if (elevation > 0.0) {
                v = elevation * (0.6 + 0.4 * season) * clearness * jitter(rng);
            }
            g[t] = std::clamp(v, 0.0, 1.0);
        }
        ds.series.push_back(std::move(g));
    }
    ds.validate();
    return ds;
}

SolarDataset load_solar(const fs::path &path) {
    auto table = csv::read(path);
    const auto c_year = table.column("year_id");
    const auto c_t = table.column("t");
    const auto c_gen = table.column("gen_kw_per_kwp");
    std::vector<std::string> ids;
    std::vector<std::map<long long, double>> rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        auto it = std::find(ids.begin(), ids.end(), row[c_year]);
        std::size_t yi = static_cast<std::size_t>(it - ids.begin());
        if (it == ids.end()) {
            ids.push_back(row[c_year]);
            rows.emplace_back();
        }
        auto t = csv::to_integer(row[c_t], r, "t");
        if (!rows[yi].emplace(t, csv::to_double(row[c_gen], r, "gen_kw_per_kwp")).second) {
            throw SchemaError(fmt::format("{}: duplicate hour {} for solar year '{}'", path.string(), t, row[c_year]));
        }
    }
    SolarDataset ds;
    ds.year_ids = ids;
    for (std::size_t y = 0; y < ids.size(); ++y) {
        std::vector<double> g;
        long long expected = 0;
        for (auto [t, v] : rows[y]) {
            if (t != expected++) {
                throw SchemaError(fmt::format("{}: hours for solar year '{}' are not contiguous from 0", path.string(), ids[y]));
            }
            g.push_back(v);
        }
        ds.series.push_back(std::move(g));
    }
    ds.validate();
    return ds;
}

void write_solar(const SolarDataset &ds, const fs::path &path) {
    csv::Writer w(path);
    w.row({"year_id", "t", "gen_kw_per_kwp"});
    for (std::size_t y = 0; y < ds.year_ids.size(); ++y) {
        for (std::size_t t = 0; t < ds.series[y].size(); ++t) {
            w.field(std::string_view{ds.year_ids[y]}).field(t).field(ds.series[y][t]);
            w.end_row();
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios

std::vector<double> Scenario::aggregate_kw() const {
    std::vector<double> agg(hours(), 0.0);
    for (const auto &row : loads) {
        for (std::size_t t = 0; t < agg.size(); ++t) {
            agg[t] += row[t];
        }
    }
    for (auto &a : agg) {
        a /= timestep_hours;
    }
    return agg;
}

double ScenarioSet::total_probability() const {
    double sum = 0.0;
    for (const auto &s : scenarios) {
        sum += s.probability;
    }
    return sum;
}

void ScenarioSet::validate() const {
    if (scenarios.empty()) {
        throw ValidationError("scenario set is empty");
    }
    const auto B = scenarios.front().buildings();
    const auto T = scenarios.front().hours();
    for (std::size_t m = 0; m < scenarios.size(); ++m) {
        const auto &s = scenarios[m];
        if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
            throw ValidationError(fmt::format("scenario {} probability {} outside [0, 1]", m, s.probability));
        }
        if (s.buildings() != B || s.hours() != T) {
            throw ValidationError(fmt::format("scenario {} has shape {}x{}, expected {}x{}", m, s.buildings(), s.hours(), B, T));
        }
        for (const auto &row : s.loads) {
            if (row.size() != T) {
                throw ValidationError(fmt::format("scenario {} has a load row of length {}", m, row.size()));
            }
            for (double v : row) {
                if (!(v >= 0.0)) {
                    throw ValidationError(fmt::format("scenario {} has negative load {}", m, v));
                }
            }
        }
    }
    if (std::abs(total_probability() - 1.0) > 1e-9) {
        throw ValidationError(fmt::format("scenario probabilities sum to {}", total_probability()));
    }
}

Scenario make_scenario(const std::vector<BuildingLoadParams> &params, const LoadDataset &load_ds,
                       const SolarDataset &solar_ds, Rng &rng) {
    if (solar_ds.hours() < load_ds.hours()) {
        throw ValidationError(fmt::format("solar data covers {} steps, loads need {}", solar_ds.hours(), load_ds.hours()));
    }
    Scenario s;
    s.timestep_hours = load_ds.timestep_hours;
    s.params = params;
    for (const auto &p : params) {
        auto profile = build_profile(p, load_ds);
        s.clamped_steps += profile.clamped_steps;
        s.loads.push_back(std::move(profile.energy));
    }
    auto yi = uniform_index(rng, solar_ds.year_ids.size());
    s.solar_year = solar_ds.year_ids[yi];
    const auto &g = solar_ds.series[yi];
    s.solar.assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(load_ds.hours()));
    return s;
}

ScenarioSet assemble_scenarios(std::span<const std::vector<BuildingLoadParams>> param_draws, const LoadDataset &load_ds,
                               const SolarDataset &solar_ds, Rng &rng) {
    if (param_draws.empty()) {
        throw ArgumentError("no parameter draws to assemble");
    }
    ScenarioSet set;
    set.scenarios.reserve(param_draws.size());
    const double rho = 1.0 / static_cast<double>(param_draws.size());
    for (const auto &draw : param_draws) {
        auto s = make_scenario(draw, load_ds, solar_ds, rng);
        s.probability = rho;
        set.scenarios.push_back(std::move(s));
    }
    return set;
}

FeatureVector features(const Scenario &s) {
    auto agg = s.aggregate_kw();
    FeatureVector f;
    if (agg.empty()) {
        return f;
    }
    f.agg_mean = mean_of(agg);
    f.agg_max = *std::max_element(agg.begin(), agg.end());
    f.agg_std = population_std(agg);
    return f;
}

// ---------------------------------------------------------------------------
// Fast-Forward reduction

FastForwardSelection fast_forward_select(const std::vector<std::vector<double>> &points,
                                         std::span<const double> probabilities, std::size_t k) {
    const auto n = points.size();
    if (probabilities.size() != n) {
        throw ArgumentError("one probability per point required");
    }
    if (k < 1 || k > n) {
        throw ArgumentError(fmt::format("reduced size k={} must be in [1, {}]", k, n));
    }

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double ss = 0.0;
            for (std::size_t d = 0; d < points[a].size(); ++d) {
                double diff = points[a][d] - points[b][d];
                ss += diff * diff;
            }
            dist[a * n + b] = dist[b * n + a] = std::sqrt(ss);
        }
    }

    // nearest[j]: distance from j to the closest selected point so far.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<bool> selected(n, false);
    FastForwardSelection out;
    out.order.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = n;
        double best_value = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < n; ++u) {
            if (selected[u]) {
                continue;
            }
            double value = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (selected[j] || j == u) {
                    continue;
                }
                value += probabilities[j] * std::min(nearest[j], dist[j * n + u]);
            }
            if (value < best_value) {
                best_value = value;
                best = u;
            }
        }
        selected[best] = true;
        out.order.push_back(best);
        for (std::size_t j = 0; j < n; ++j) {
            nearest[j] = std::min(nearest[j], dist[j * n + best]);
        }
    }

    std::vector<std::size_t> chosen = out.order;
    std::sort(chosen.begin(), chosen.end());
    out.assigned.resize(n);
    out.probability.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t target = j;
        if (!selected[j]) {
            double best_d = std::numeric_limits<double>::infinity();
            for (auto c : chosen) {
                if (dist[j * n + c] < best_d) {
                    best_d = dist[j * n + c];
                    target = c;
                }
            }
        }
        out.assigned[j] = target;
        out.probability[target] += probabilities[j];
    }
    return out;
}

std::vector<std::vector<double>> standardized_features(std::span<const FeatureVector> f) {
    const auto n = f.size();
    std::vector<std::vector<double>> points(n);
    if (n == 0) {
        return points;
    }
    for (auto member : {&FeatureVector::agg_mean, &FeatureVector::agg_max, &FeatureVector::agg_std}) {
        std::vector<double> col(n);
        for (std::size_t m = 0; m < n; ++m) {
            col[m] = f[m].*member;
        }
        const double mu = mean_of(col);
        const double sd = population_std(col);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
            continue; // zero-variance feature carries no information
        }
        for (std::size_t m = 0; m < n; ++m) {
            points[m].push_back((col[m] - mu) / sd);
        }
    }
    return points;
}

ScenarioSet reduce_fast_forward(const ScenarioSet &set, std::size_t k) {
    const auto n = set.size();
    if (k < 1 || k > n) {
        throw ArgumentError(fmt::format("reduced size k={} must be in [1, {}]", k, n));
    }
    if (k == n) {
        return set;
    }

    std::vector<FeatureVector> f(n);
    std::vector<double> probs(n);
    for (std::size_t m = 0; m < n; ++m) {
        f[m] = features(set.scenarios[m]);
        probs[m] = set.scenarios[m].probability;
    }
    auto points = standardized_features(f);

    auto sel = fast_forward_select(points, probs, k);
    ScenarioSet out;
    for (std::size_t m = 0; m < n; ++m) {
        if (sel.assigned[m] == m) {
            auto s = set.scenarios[m];
            s.probability = sel.probability[m];
            out.scenarios.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialisation

void write_scenario_set(const ScenarioSet &set, const fs::path &dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["schema_version"] = 1;
    manifest["scenarios"] = json::array();
    for (std::size_t m = 0; m < set.size(); ++m) {
        const auto &s = set.scenarios[m];
        auto file = fmt::format("scenario_{:04d}.csv", m);
        csv::Writer w(dir / file);
        w.field("t").field("solar_kw_per_kwp");
        for (std::size_t i = 0; i < s.buildings(); ++i) {
            w.field(std::string_view{fmt::format("load_{}_kwh", i)});
        }
        w.end_row();
        for (std::size_t t = 0; t < s.hours(); ++t) {
            w.field(t).field(s.solar[t]);
            for (std::size_t i = 0; i < s.buildings(); ++i) {
                w.field(s.loads[i][t]);
            }
            w.end_row();
        }
        json params = json::array();
        for (const auto &p : s.params) {
            params.push_back({{"type_id", p.type_id}, {"year_id", p.year_id}, {"mean_kw", p.mean_kw}, {"peak_kw", p.peak_kw}});
        }
        manifest["scenarios"].push_back({{"file", file},
                                         {"probability", s.probability},
                                         {"timestep_hours", s.timestep_hours},
                                         {"solar_year", s.solar_year},
                                         {"buildings", s.buildings()},
                                         {"params", params}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(fmt::format("cannot write scenario manifest in '{}'", dir.string()));
    }
    out << manifest.dump(2) << '\n';
}

ScenarioSet read_scenario_set(const fs::path &dir) {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("no scenario manifest in '{}'", dir.string()));
    }
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("scenario manifest: {}", e.what()));
    }
    ScenarioSet set;
    try {
        for (const auto &entry : manifest.at("scenarios")) {
            Scenario s;
            s.probability = entry.at("probability").get<double>();
            s.timestep_hours = entry.at("timestep_hours").get<double>();
            s.solar_year = entry.at("solar_year").get<std::string>();
            for (const auto &p : entry.at("params")) {
                s.params.push_back({p.at("type_id").get<std::string>(), p.at("year_id").get<std::string>(),
                                    p.at("mean_kw").get<double>(), p.at("peak_kw").get<double>()});
            }
            const auto B = entry.at("buildings").get<std::size_t>();
            auto table = csv::read(dir / entry.at("file").get<std::string>());
            const auto c_solar = table.column("solar_kw_per_kwp");
            std::vector<std::size_t> c_load(B);
            for (std::size_t i = 0; i < B; ++i) {
                c_load[i] = table.column(fmt::format("load_{}_kwh", i));
            }
            s.loads.assign(B, std::vector<double>(table.rows.size()));
            s.solar.resize(table.rows.size());
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                s.solar[r] = csv::to_double(table.rows[r][c_solar], r, "solar_kw_per_kwp");
                for (std::size_t i = 0; i < B; ++i) {
                    s.loads[i][r] = csv::to_double(table.rows[r][c_load[i]], r, "load");
                }
            }
            set.scenarios.push_back(std::move(s));
        }
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("scenario manifest: {}", e.what()));
    }
    set.validate();
    return set;
}

} // namespace dvoi
