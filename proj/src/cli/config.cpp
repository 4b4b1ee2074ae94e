#include "dvoi/cli.h"
#include "dvoi/errors.h"
#include "dvoi/lp.h"
#include "dvoi/parallel.h"

#include <fmt/chrono.h>
#include <fmt/core.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

namespace dvoi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Typed access to one config object that rejects keys nobody asked for.
class Section {
  public:
    Section(const json &j, std::string name) : j_{j}, name_{std::move(name)} {
        if (!j_.is_object()) {
            throw SchemaError(fmt::format("config section '{}' must be an object", name_));
        }
    }

    bool has(const std::string &key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <typename T>
    T get(const std::string &key, T fallback) {
        if (!has(key)) {
            return fallback;
        }
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception &) {
            throw SchemaError(fmt::format("config key '{}.{}' has the wrong type", name_, key));
        }
    }

    std::size_t count(const std::string &key, std::size_t fallback) {
        if (!has(key)) {
            return fallback;
        }
        const auto &v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            throw ArgumentError(fmt::format("config key '{}.{}' must be an integer >= 1", name_, key));
        }
        return v.get<std::size_t>();
    }

    const json &object(const std::string &key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto &[key, value] : j_.items()) {
            if (!seen_.count(key)) {
                throw SchemaError(fmt::format("unknown config key '{}{}{}'", name_, name_.empty() ? "" : ".", key));
            }
        }
    }

  private:
    const json &j_;
    std::string name_;
    std::set<std::string> seen_;
};

const json empty_object = json::object();

const json &section_or_empty(const json &root, const char *key) {
    return root.contains(key) && !root.at(key).is_null() ? root.at(key) : empty_object;
}

fs::path resolve_path(const fs::path &base, const std::string &p) {
    fs::path path{p};
    return path.is_absolute() ? path : base / path;
}

} // namespace

json apply_set_overrides(json config, const std::vector<std::string> &assignments) {
    for (const auto &a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ArgumentError(fmt::format("override '{}' must look like key.path=value", a));
        }
        const auto key = a.substr(0, eq);
        const auto text = a.substr(eq + 1);
        json value;
        try {
            value = json::parse(text);
        } catch (const json::exception &) {
            value = text;
        }
        json *node = &config;
        std::size_t start = 0;
        for (;;) {
            const auto dot = key.find('.', start);
            const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) {
                throw ArgumentError(fmt::format("override '{}' has an empty key component", a));
            }
            if (!node->is_object()) {
                throw ArgumentError(fmt::format("override '{}' descends into a non-object", a));
            }
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            if (node->is_null()) {
                *node = json::object();
            }
            start = dot + 1;
        }
    }
    return config;
}

std::string config_hash(const json &effective) {
    json canonical = effective;
    if (canonical.is_object()) {
        canonical.erase("output_dir");
        canonical.erase("jobs");
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

PipelineConfig resolve_config(json raw, const Overrides &ov, const fs::path &base_dir) {
    if (!raw.is_object()) {
        throw SchemaError("config must be a JSON object");
    }
    raw = apply_set_overrides(std::move(raw), ov.set);
    if (ov.seed) {
        raw["seed"] = *ov.seed;
    }
    if (ov.mask) {
        raw["mask"] = *ov.mask;
    }
    if (ov.jobs) {
        raw["jobs"] = *ov.jobs;
    }
    if (ov.out) {
        raw["output_dir"] = ov.out->string();
    }

    PipelineConfig pc;
    pc.effective = raw;
    pc.hash = config_hash(raw);
    Section top{raw, ""};
    if (top.get<int>("schema_version", 1) != 1) {
        throw SchemaError("unsupported config schema_version (expected 1)");
    }
    top.has("description");
    pc.output_dir = top.get<std::string>("output_dir", "run");
    pc.failure_threshold = top.get<double>("failure_threshold", 0.05);
    if (!(pc.failure_threshold >= 0.0 && pc.failure_threshold <= 1.0)) {
        throw ArgumentError("failure_threshold must be in [0, 1]");
    }
    auto &v = pc.voi;
    v.seed = top.get<std::uint64_t>("seed", 0);
    v.jobs = top.get<std::size_t>("jobs", 0);
    if (v.jobs == 0) {
        v.jobs = default_jobs();
    }

    if (top.has("instance")) {
        pc.instance = discrete_instance_from_json(top.object("instance"));
        top.finish();
        return pc;
    }

    // Data: synthetic or CSV files.
    Section data{section_or_empty(raw, "data"), "data"};
    top.has("data");
    double dt = data.get<double>("dt", 1.0);
    if (!(dt > 0.0)) {
        throw ArgumentError("data.dt must be positive");
    }
    const auto tariff_seed = data.get<std::uint64_t>("tariff_seed", 7);
    std::optional<TariffSeries> tariffs;
    if (data.has("synthetic")) {
        Section syn{data.object("synthetic"), "data.synthetic"};
        const auto types = syn.count("types", 3);
        const auto years = syn.count("years", 4);
        const auto hours = syn.count("hours", 720);
        const auto solar_years = syn.count("solar_years", 10);
        const auto seed = syn.get<std::uint64_t>("seed", 7);
        syn.finish();
        auto loads = generate_synthetic_dataset(types, years, hours, seed);
        loads.timestep_hours = dt;
        v.loads = std::make_shared<const LoadDataset>(std::move(loads));
        v.solar = std::make_shared<const SolarDataset>(generate_synthetic_solar(solar_years, hours, seed));
    } else {
        if (!data.has("loads_csv") || !data.has("solar_csv")) {
            throw SchemaError("config 'data' needs either 'synthetic' or both 'loads_csv' and 'solar_csv'");
        }
        auto loads_path = resolve_path(base_dir, data.get<std::string>("loads_csv", ""));
        auto solar_path = resolve_path(base_dir, data.get<std::string>("solar_csv", ""));
        for (const auto &p : {loads_path, solar_path}) {
            if (!fs::exists(p)) {
                throw ArgumentError(fmt::format("data file '{}' does not exist", p.string()));
            }
        }
        v.loads = std::make_shared<const LoadDataset>(load_dataset(loads_path, dt));
        v.solar = std::make_shared<const SolarDataset>(load_solar(solar_path));
    }
    if (data.has("tariffs_csv")) {
        auto path = resolve_path(base_dir, data.get<std::string>("tariffs_csv", ""));
        if (!fs::exists(path)) {
            throw ArgumentError(fmt::format("tariff file '{}' does not exist", path.string()));
        }
        tariffs = load_tariffs(path);
    } else {
        tariffs = generate_synthetic_tariffs(v.loads->hours(), dt, tariff_seed);
    }
    data.finish();

    // Prior.
    Section prior{section_or_empty(raw, "prior"), "prior"};
    top.has("prior");
    v.prior = PriorSpec::for_dataset(*v.loads);
    v.prior.type_ids = prior.get("type_ids", v.prior.type_ids);
    v.prior.year_ids = prior.get("year_ids", v.prior.year_ids);
    v.prior.mean_mu = prior.get("mean_mu", v.prior.mean_mu);
    v.prior.mean_sigma = prior.get("mean_sigma", v.prior.mean_sigma);
    v.prior.peak_min = prior.get("peak_min", v.prior.peak_min);
    v.prior.peak_max = prior.get("peak_max", v.prior.peak_max);
    prior.finish();

    Section meas{section_or_empty(raw, "measurement"), "measurement"};
    top.has("measurement");
    v.measurement.eps_mean = meas.get("eps_mean", v.measurement.eps_mean);
    v.measurement.eps_peak = meas.get("eps_peak", v.measurement.eps_peak);
    v.measurement.type_observed = meas.get("type_observed", v.measurement.type_observed);
    v.measurement.year_observed = meas.get("year_observed", v.measurement.year_observed);
    meas.finish();

    SystemParams base;
    base.dt = dt;
    base.price = tariffs->price;
    base.carbon = tariffs->carbon;
    top.has("system");
    v.system = system_params_from_json(section_or_empty(raw, "system"), base);
    if (top.get<bool>("annualize_operating_cost", false)) {
        v.system.operating_scale = 8760.0 / (static_cast<double>(v.loads->hours()) * dt);
    }

    Section mpc{section_or_empty(raw, "mpc"), "mpc"};
    top.has("mpc");
    v.mpc.horizon_steps = mpc.count("horizon_steps", v.mpc.horizon_steps);
    v.mpc.execute_steps = mpc.count("execute_steps", v.mpc.execute_steps);
    v.mpc.fos_op = mpc.get("fos_op", v.mpc.fos_op);
    mpc.finish();

    Section sampling{section_or_empty(raw, "sampling"), "sampling"};
    top.has("sampling");
    v.n_buildings = sampling.count("n_buildings", 5);
    v.n_prior = sampling.count("n_prior", 1000);
    v.n_posterior = sampling.count("n_posterior", 256);
    v.n_eval = sampling.count("n_eval", v.n_posterior);
    v.n_measurements = sampling.count("n_measurements", 256);
    v.k_reduced = sampling.count("k_reduced", 10);
    sampling.finish();

    v.mask = UncertaintyMask::parse(top.get<std::string>("mask", "all"));
    const auto evpi_mode = top.get<std::string>("evpi_mode", "exclude_year");
    if (evpi_mode == "exclude_year") {
        v.evpi_mode = EvpiMode::exclude_year;
    } else if (evpi_mode == "include_year") {
        v.evpi_mode = EvpiMode::include_year;
    } else {
        throw ArgumentError(fmt::format("evpi_mode must be exclude_year or include_year, got '{}'", evpi_mode));
    }
    top.finish();
    v.validate();
    return pc;
}

PipelineConfig read_config(const fs::path &path, const Overrides &overrides) {
    auto raw = read_json(path);
    return resolve_config(std::move(raw), overrides, path.parent_path());
}

void write_json(const fs::path &path, const json &j) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError(fmt::format("write to '{}' failed", path.string()));
    }
}

json read_json(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    }
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

namespace {

std::string utc_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

} // namespace

RunManifest::RunManifest(fs::path dir, std::string command, const PipelineConfig &config) : dir_{std::move(dir)} {
    doc_ = {{"schema_version", 1},
            {"command", std::move(command)},
            {"config_hash", config.hash},
            {"seed", config.voi.seed},
            {"jobs", config.voi.jobs},
            {"versions", {{"dvoi", version}, {"lp_solver", lp_solver_version()}}},
            {"started_utc", utc_now()},
            {"finished_utc", nullptr},
            {"status", "running"},
            {"stage_runtimes_s", json::object()}};
    write();
}

void RunManifest::stage(const std::string &name, double seconds) {
    doc_["stage_runtimes_s"][name] = seconds;
    write();
}

void RunManifest::finish(const std::string &status) {
    doc_["status"] = status;
    doc_["finished_utc"] = utc_now();
    write();
}

void RunManifest::write() const { write_json(dir_ / "manifest.json", doc_); }

} // namespace dvoi::cli
