#pragma once

#include "dvoi/voi.h"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dvoi::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_solver = 2;
inline constexpr int exit_partial_failure = 3;

inline constexpr const char *version = "0.1.0";

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::vector<std::string> set;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mask;
    std::optional<std::size_t> jobs;
    std::optional<std::filesystem::path> out;
};

/// Fully resolved pipeline configuration.
struct PipelineConfig {
    nlohmann::json effective; ///< config after overrides, as copied into run directories
    VoiConfig voi;
    std::optional<DiscreteInstance> instance;
    std::filesystem::path output_dir;
    double failure_threshold{0.05};
    std::string hash;
};

/// Applies `a.b.c=value` assignments; values parse as JSON when possible and
/// fall back to plain strings.
nlohmann::json apply_set_overrides(nlohmann::json config, const std::vector<std::string> &assignments);

/// 64-bit FNV-1a of the canonical config, excluding output location and worker count.
std::string config_hash(const nlohmann::json &effective);

/// Validates the whole config and loads or synthesises the datasets it names.
/// Relative paths resolve against `base_dir`.
PipelineConfig resolve_config(nlohmann::json raw, const Overrides &overrides, const std::filesystem::path &base_dir);

PipelineConfig read_config(const std::filesystem::path &path, const Overrides &overrides);

/// Writes a JSON document with a trailing newline.
void write_json(const std::filesystem::path &path, const nlohmann::json &j);
nlohmann::json read_json(const std::filesystem::path &path);

/// Started/finished manifest for a run directory.
class RunManifest {
  public:
    RunManifest(std::filesystem::path dir, std::string command, const PipelineConfig &config);
    void stage(const std::string &name, double seconds);
    void finish(const std::string &status);

  private:
    void write() const;
    std::filesystem::path dir_;
    nlohmann::json doc_;
};

int cmd_dataset_gen(std::size_t types, std::size_t years, std::size_t hours, std::size_t solar_years, double dt,
                    std::uint64_t seed, const std::filesystem::path &out);
int cmd_design(const PipelineConfig &config, const std::optional<std::filesystem::path> &export_lp);
int cmd_simulate(const PipelineConfig &config, const std::filesystem::path &design_path, std::size_t sample);
int cmd_voi_run(const PipelineConfig &config);
int cmd_voi_evpi(const PipelineConfig &config);
int cmd_report(const std::filesystem::path &run_dir, std::size_t bins);

/// Entry point shared by the executable and tests.
int run(int argc, char **argv);

} // namespace dvoi::cli
