#pragma once

#include "dvoi/designopt.h"
#include "dvoi/scenario.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("dvoi_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parameters with flat tariffs over T steps.
inline dvoi::SystemParams flat_params(std::size_t T, double price, double carbon) {
    dvoi::SystemParams p;
    p.price.assign(T, price);
    p.carbon.assign(T, carbon);
    return p;
}

inline dvoi::Scenario make_scenario(std::vector<std::vector<double>> loads, std::vector<double> solar,
                                    double probability = 1.0, double dt = 1.0) {
    dvoi::Scenario s;
    s.loads = std::move(loads);
    s.solar = std::move(solar);
    s.probability = probability;
    s.timestep_hours = dt;
    return s;
}

inline dvoi::ScenarioSet single(dvoi::Scenario s) {
    s.probability = 1.0;
    dvoi::ScenarioSet set;
    set.scenarios.push_back(std::move(s));
    return set;
}

} // namespace testutil
