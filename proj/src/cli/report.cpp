#include "dvoi/cli.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dvoi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const double nan = std::numeric_limits<double>::quiet_NaN();

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        return nan;
    }
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return nan;
    }
    return sxy / std::sqrt(sxx * syy);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct RecordRow {
    std::size_t index{0};
    bool ok{false};
    double battery{nan}, solar{nan}, grid{nan};
    double expected_cost{nan}, cost_std{nan}, cost_range{nan}, posterior_mean_load{nan};
};

std::vector<RecordRow> read_records(const fs::path &path) {
    auto table = csv::read(path);
    const auto c_index = table.column("index");
    const auto c_status = table.column("status");
    const auto c_bat = table.column("total_battery_kwh");
    const auto c_pv = table.column("total_solar_kwp");
    const auto c_grid = table.column("grid_kw");
    const auto c_cost = table.column("posterior_expected_cost_gbp");
    const auto c_std = table.column("posterior_cost_std_gbp");
    const auto c_range = table.column("posterior_cost_range_gbp");
    const auto c_load = table.column("posterior_mean_load_kw");
    std::vector<RecordRow> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        RecordRow rec;
        rec.index = static_cast<std::size_t>(csv::to_integer(row[c_index], r, "index"));
        rec.ok = row[c_status] == "ok";
        if (rec.ok) {
            rec.battery = csv::to_double(row[c_bat], r, "total_battery_kwh");
            rec.solar = csv::to_double(row[c_pv], r, "total_solar_kwp");
            rec.grid = csv::to_double(row[c_grid], r, "grid_kw");
            rec.expected_cost = csv::to_double(row[c_cost], r, "posterior_expected_cost_gbp");
            rec.cost_std = csv::to_double(row[c_std], r, "posterior_cost_std_gbp");
            rec.cost_range = csv::to_double(row[c_range], r, "posterior_cost_range_gbp");
            rec.posterior_mean_load = csv::to_double(row[c_load], r, "posterior_mean_load_kw");
        }
        out.push_back(rec);
    }
    return out;
}

std::vector<double> read_prior_totals(const fs::path &path) {
    auto table = csv::read(path);
    const auto c = table.column("total_gbp");
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.push_back(csv::to_double(table.rows[r][c], r, "total_gbp"));
    }
    return out;
}

void write_histogram(const fs::path &path, std::span<const double> prior, std::span<const double> posterior,
                     std::size_t bins) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto s : {prior, posterior}) {
        for (double v : s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    csv::Writer w(path);
    w.row({"bin_low_gbp", "bin_high_gbp", "prior_count", "preposterior_count"});
    if (!std::isfinite(lo)) {
        return;
    }
    if (hi <= lo) {
        hi = lo + 1.0;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    auto count = [&](std::span<const double> s) {
        std::vector<std::size_t> c(bins, 0);
        for (double v : s) {
            auto b = static_cast<std::size_t>((v - lo) / width);
            ++c[std::min(b, bins - 1)];
        }
        return c;
    };
    auto cp = count(prior);
    auto cq = count(posterior);
    for (std::size_t b = 0; b < bins; ++b) {
        w.field(lo + width * static_cast<double>(b)).field(lo + width * static_cast<double>(b + 1));
        w.field(cp[b]).field(cq[b]);
        w.end_row();
    }
}

// p05..p95 of aggregate load across samples, per source and step.
void write_load_bands(const fs::path &in, const fs::path &out) {
    auto table = csv::read(in);
    const std::size_t first_t = 2;
    const std::size_t T = table.header.size() - first_t;
    std::map<std::string, std::vector<std::size_t>> by_source;
    std::vector<std::string> order;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &src = table.rows[r][0];
        if (!by_source.count(src)) {
            order.push_back(src);
        }
        by_source[src].push_back(r);
    }
    csv::Writer w(out);
    w.row({"source", "t", "p05_kw", "p25_kw", "p50_kw", "p75_kw", "p95_kw"});
    std::vector<double> column;
    for (const auto &src : order) {
        const auto &rows = by_source[src];
        for (std::size_t t = 0; t < T; ++t) {
            column.clear();
            for (auto r : rows) {
                column.push_back(csv::to_double(table.rows[r][first_t + t], r, table.header[first_t + t]));
            }
            w.field(std::string_view{src}).field(t);
            for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
                w.field(quantile(column, q));
            }
            w.end_row();
        }
    }
}

} // namespace

int cmd_report(const fs::path &run_dir, std::size_t bins) {
    if (bins == 0) {
        throw ArgumentError("--bins must be at least 1");
    }
    for (const char *name : {"voi_result.json", "records.csv", "prior_costs.csv"}) {
        if (!fs::exists(run_dir / name)) {
            throw IoError(fmt::format("'{}' has no {}; run `dvoi voi run` first", run_dir.string(), name));
        }
    }
    const auto result = read_json(run_dir / "voi_result.json");
    const auto records = read_records(run_dir / "records.csv");
    const auto prior_totals = read_prior_totals(run_dir / "prior_costs.csv");
    const auto prior = summarize(prior_totals);

    std::vector<double> post_costs, mean_load, battery, solar, grid, std_ratio, range_ratio;
    for (const auto &r : records) {
        if (!r.ok) {
            continue;
        }
        post_costs.push_back(r.expected_cost);
        mean_load.push_back(r.posterior_mean_load);
        battery.push_back(r.battery);
        solar.push_back(r.solar);
        grid.push_back(r.grid);
    }
    write_histogram(run_dir / "cost_histogram.csv", prior_totals, post_costs, bins);

    {
        csv::Writer w(run_dir / "design_scatter.csv");
        w.row({"index", "status", "total_battery_kwh", "total_solar_kwp", "grid_kw", "posterior_expected_cost_gbp"});
        const auto &pd = result.at("prior").at("design");
        auto sum = [](const json &a) {
            double s = 0.0;
            for (const auto &v : a) {
                s += v.get<double>();
            }
            return s;
        };
        w.field("prior").field("prior").field(sum(pd.at("battery_kwh"))).field(sum(pd.at("solar_kwp")));
        w.field(pd.at("grid_kw").get<double>()).field(prior.mean);
        w.end_row();
        for (const auto &r : records) {
            w.field(r.index).field(std::string_view{r.ok ? "ok" : "failed"});
            if (r.ok) {
                w.field(r.battery).field(r.solar).field(r.grid).field(r.expected_cost);
            } else {
                w.field("").field("").field("").field("");
            }
            w.end_row();
        }
    }
    {
        csv::Writer w(run_dir / "capacity_vs_posterior_mean.csv");
        w.row({"index", "posterior_mean_load_kw", "total_battery_kwh", "total_solar_kwp", "grid_kw"});
        for (const auto &r : records) {
            if (r.ok) {
                w.field(r.index).field(r.posterior_mean_load).field(r.battery).field(r.solar).field(r.grid);
                w.end_row();
            }
        }
    }
    {
        csv::Writer w(run_dir / "risk_ratios.csv");
        w.row({"index", "std_ratio", "range_ratio"});
        auto ratio = [](double a, double b) {
            if (b > 0.0) {
                return a / b;
            }
            return a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        };
        for (const auto &r : records) {
            if (!r.ok) {
                continue;
            }
            std_ratio.push_back(ratio(r.cost_std, prior.std));
            range_ratio.push_back(ratio(r.cost_range, prior.range()));
            w.field(r.index).field(std_ratio.back()).field(range_ratio.back());
            w.end_row();
        }
    }
    if (fs::exists(run_dir / "aggregate_loads.csv")) {
        write_load_bands(run_dir / "aggregate_loads.csv", run_dir / "load_percentile_bands.csv");
    }

    auto median = [](const std::vector<double> &v) { return v.empty() ? nan : quantile(v, 0.5); };
    json summary = {
        {"schema_version", 1},
        {"n_records", records.size()},
        {"n_ok", post_costs.size()},
        {"evii_gbp", result.value("evii_gbp", nan)},
        {"evii_pct", result.value("evii_pct", nan)},
        {"correlation_with_posterior_mean_load",
         {{"battery", number_or_null(pearson(mean_load, battery))},
          {"solar", number_or_null(pearson(mean_load, solar))},
          {"grid", number_or_null(pearson(mean_load, grid))}}},
        {"median_std_ratio", number_or_null(median(std_ratio))},
        {"median_range_ratio", number_or_null(median(range_ratio))},
        {"prior_cost", {{"mean", prior.mean}, {"std", prior.std}, {"range", prior.range()}}}};
    write_json(run_dir / "report_summary.json", summary);
    fmt::print("report written to {} ({} of {} records ok)\n", run_dir.string(), post_costs.size(), records.size());
    return exit_ok;
}

} // namespace dvoi::cli
