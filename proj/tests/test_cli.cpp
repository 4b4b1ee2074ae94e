#include "dvoi/cli.h"
#include "dvoi/csv.h"
#include "dvoi/errors.h"
#include "test_util.h"

#include <doctest.h>

#include <sstream>

using namespace dvoi;
using nlohmann::json;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dvoi");
    std::vector<char *> argv;
    for (auto &a : args) {
        argv.push_back(a.data());
    }
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

json tiny_config(const std::filesystem::path &out) {
    auto j = json::parse(R"({
        "schema_version": 1,
        "seed": 3,
        "jobs": 1,
        "mask": "all",
        "data": {"dt": 1.0, "synthetic": {"types": 2, "years": 2, "hours": 48, "solar_years": 2, "seed": 4}},
        "annualize_operating_cost": true,
        "mpc": {"horizon_steps": 24, "execute_steps": 12, "fos_op": 1.01},
        "sampling": {"n_buildings": 2, "n_prior": 12, "n_posterior": 6, "n_eval": 6,
                     "n_measurements": 3, "k_reduced": 3}
    })");
    j["output_dir"] = out.string();
    return j;
}

std::size_t count_lines(const std::string &text) {
    std::size_t n = 0;
    for (char c : text) {
        n += c == '\n';
    }
    return n;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path &path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(testutil::read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("config overrides") {
    json base = {{"a", {{"b", 1}}}, {"name", "x"}};
    auto j = cli::apply_set_overrides(base, {"a.b=2.5", "a.c=[1,2]", "name=hello world", "d.e=true"});
    CHECK(j["a"]["b"].get<double>() == 2.5);
    CHECK(j["a"]["c"].size() == 2);
    CHECK(j["name"] == "hello world");
    CHECK(j["d"]["e"] == true);
    CHECK_THROWS_AS(cli::apply_set_overrides(base, {"novalue"}), ArgumentError);

    testutil::TempDir dir("cfg");
    auto cfg = tiny_config(dir / "run");
    auto pc = cli::resolve_config(cfg, {}, dir.path());
    CHECK(pc.voi.n_eval == 6);
    CHECK(pc.voi.system.operating_scale == doctest::Approx(8760.0 / 48.0));

    cli::Overrides ov;
    ov.seed = 99;
    ov.mask = "peak";
    ov.jobs = 2;
    ov.set = {"sampling.k_reduced=2"};
    auto over = cli::resolve_config(cfg, ov, dir.path());
    CHECK(over.voi.seed == 99);
    CHECK(over.voi.jobs == 2);
    CHECK(over.voi.k_reduced == 2);
    CHECK_FALSE(over.voi.mask.reduce_mean);
    CHECK(over.voi.mask.reduce_peak);
    CHECK(over.hash != pc.hash);

    // output location and worker count do not change the hash
    cli::Overrides cosmetic;
    cosmetic.jobs = 4;
    cosmetic.out = dir / "elsewhere";
    CHECK(cli::resolve_config(cfg, cosmetic, dir.path()).hash == pc.hash);
}

TEST_CASE("config schema errors") {
    testutil::TempDir dir("cfgerr");
    auto cfg = tiny_config(dir / "run");
    auto unknown = cfg;
    unknown["sampling"]["n_sampels"] = 3;
    CHECK_THROWS_AS(cli::resolve_config(unknown, {}, dir.path()), SchemaError);
    auto zero = cfg;
    zero["sampling"]["n_eval"] = 0;
    CHECK_THROWS_AS(cli::resolve_config(zero, {}, dir.path()), ArgumentError);
    auto version = cfg;
    version["schema_version"] = 2;
    CHECK_THROWS_AS(cli::resolve_config(version, {}, dir.path()), SchemaError);
    auto missing = cfg;
    missing["data"] = {{"loads_csv", "nope.csv"}, {"solar_csv", "nope.csv"}};
    CHECK_THROWS_AS(cli::resolve_config(missing, {}, dir.path()), ArgumentError);
    CHECK_THROWS_AS(cli::resolve_config(cfg, cli::Overrides{{}, {}, std::string("year"), {}, {}}, dir.path()),
                    ArgumentError);
}

TEST_CASE("dataset generation is reproducible") {
    testutil::TempDir dir("gen");
    auto a = dir / "a";
    auto b = dir / "b";
    const std::vector<std::string> common = {"dataset", "gen", "--types", "2", "--years", "2", "--hours", "48",
                                             "--solar-years", "2", "--seed", "11", "--out"};
    auto args_a = common;
    args_a.push_back(a.string());
    auto args_b = common;
    args_b.push_back(b.string());
    REQUIRE(run_cli(args_a) == cli::exit_ok);
    REQUIRE(run_cli(args_b) == cli::exit_ok);
    for (const char *name : {"loads.csv", "solar.csv", "tariffs.csv"}) {
        CHECK(testutil::read_text(a / name) == testutil::read_text(b / name));
    }
    CHECK(count_lines(testutil::read_text(a / "loads.csv")) == 1 + 2 * 2 * 48);

    auto loads = load_dataset(a / "loads.csv");
    CHECK(loads.type_ids.size() == 2);
    CHECK(loads.hours() == 48);

    auto bad = common;
    bad[7] = "12";
    bad.push_back((dir / "c").string());
    CHECK(run_cli(bad) == cli::exit_validation);
    CHECK(run_cli({"dataset", "gen", "--bogus"}) == cli::exit_validation);
}

TEST_CASE("design command writes a loadable design") {
    testutil::TempDir dir("design");
    auto cfg = tiny_config(dir / "run");
    testutil::write_text(dir / "cfg.json", cfg.dump());
    REQUIRE(run_cli({"design", "--config", (dir / "cfg.json").string(), "--export-lp", (dir / "m.lp").string()}) ==
            cli::exit_ok);
    auto doc = cli::read_json(dir / "run" / "design.json");
    auto design = design_from_json(doc.at("design"));
    CHECK(design.buildings() == 2);
    CHECK(design_to_json(design) == doc.at("design"));
    CHECK(std::filesystem::exists(dir / "m.lp"));
    CHECK(std::filesystem::exists(dir / "run" / "manifest.json"));
    auto breakdown = read_rows(dir / "run" / "breakdown.csv");
    REQUIRE(breakdown.size() == 9);
    CHECK(breakdown[7][0] == "Total");
    CHECK(std::stod(breakdown[7][1]) == doctest::Approx(doc.at("sp_objective_gbp").get<double>()).epsilon(1e-9));
    CHECK(count_lines(testutil::read_text(dir / "run" / "prior_costs.csv")) == 7);

    REQUIRE(run_cli({"simulate", "--config", (dir / "cfg.json").string(), "--design",
                     (dir / "run" / "design.json").string(), "--sample", "2", "--out", (dir / "sim").string()}) ==
            cli::exit_ok);
    CHECK(count_lines(testutil::read_text(dir / "sim" / "timeseries.csv")) == 49);

    // capital so expensive that only the grid connection is worth buying
    auto pricey = cfg;
    pricey["system"] = {{"p_s", 1e9}, {"p_pv", 1e9}};
    pricey["output_dir"] = (dir / "pricey").string();
    auto pc = cli::resolve_config(pricey, {}, dir.path());
    REQUIRE(cli::cmd_design(pc, std::nullopt) == cli::exit_ok);
    auto zero = design_from_json(cli::read_json(dir / "pricey" / "design.json").at("design"));
    CHECK(zero.total_battery() == doctest::Approx(0.0));
    CHECK(zero.total_solar() == doctest::Approx(0.0));
    CHECK(zero.grid_kw > 0.0);
}

TEST_CASE("voi run and report") {
    testutil::TempDir dir("voi");
    auto cfg = tiny_config(dir / "run");
    auto pc = cli::resolve_config(cfg, {}, dir.path());
    REQUIRE(cli::cmd_voi_run(pc) == cli::exit_ok);
    auto result = cli::read_json(dir / "run" / "voi_result.json");
    for (const char *key : {"prior", "preposterior", "evii_gbp", "evii_raw_gbp", "evii_pct", "risk", "records"}) {
        CHECK(result.contains(key));
    }
    CHECK(result.at("evii_gbp").get<double>() >= 0.0);
    CHECK(result.at("records").size() == 3);

    REQUIRE(cli::cmd_report(dir / "run", 5) == cli::exit_ok);
    auto hist = read_rows(dir / "run" / "cost_histogram.csv");
    REQUIRE(hist.size() == 6);
    std::size_t prior_total = 0, post_total = 0;
    for (std::size_t i = 1; i < hist.size(); ++i) {
        prior_total += std::stoul(hist[i][2]);
        post_total += std::stoul(hist[i][3]);
    }
    CHECK(prior_total == 6);
    CHECK(post_total == 3);
    CHECK(read_rows(dir / "run" / "design_scatter.csv").size() == 1 + 1 + 3);
    CHECK(std::filesystem::exists(dir / "run" / "report_summary.json"));

    // same config, same bytes
    auto again = cfg;
    again["output_dir"] = (dir / "again").string();
    REQUIRE(cli::cmd_voi_run(cli::resolve_config(again, {}, dir.path())) == cli::exit_ok);
    CHECK(testutil::read_text(dir / "again" / "voi_result.json") ==
          testutil::read_text(dir / "run" / "voi_result.json"));

    std::filesystem::create_directories(dir / "empty");
    CHECK_THROWS_AS(cli::cmd_report(dir / "empty", 5), IoError);
    CHECK(run_cli({"report", (dir / "empty").string()}) != cli::exit_ok);
}

TEST_CASE("exact EVPI of the two-scenario instance") {
    testutil::TempDir dir("evpi");
    const auto config = std::filesystem::path(DVOI_SOURCE_DIR) / "configs" / "evpi_two_scenario.json";
    REQUIRE(run_cli({"voi", "evpi", "--config", config.string(), "--out", (dir / "e").string()}) == cli::exit_ok);
    auto doc = cli::read_json(dir / "e" / "evpi.json");
    CHECK(doc.at("mode") == "exact_discrete");
    CHECK(doc.at("evpi_gbp").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(doc.at("evii_gbp").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(run_cli({"voi", "run", "--config", config.string(), "--out", (dir / "r").string()}) ==
          cli::exit_validation);
}
