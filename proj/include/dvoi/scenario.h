#pragma once

#include "dvoi/loadmodel.h"
#include "dvoi/random.h"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dvoi {

/// Normalised solar generation (kW per kWp) per weather year.
struct SolarDataset {
    std::vector<std::string> year_ids;
    std::vector<std::vector<double>> series;

    std::size_t hours() const { return series.empty() ? 0 : series.front().size(); }
    const std::vector<double> &year(std::string_view year_id) const;
    void validate() const;
};

SolarDataset generate_synthetic_solar(std::size_t n_years, std::size_t hours, std::uint64_t seed);

/// Reads `year_id,t,gen_kw_per_kwp` rows.
SolarDataset load_solar(const std::filesystem::path &path);
void write_solar(const SolarDataset &ds, const std::filesystem::path &path);

/// One joint realisation of every building's load plus solar availability.
struct Scenario {
    std::vector<std::vector<double>> loads; ///< B x T, kWh per step
    std::vector<double> solar;              ///< T, kW/kWp
    double probability{1.0};
    double timestep_hours{1.0};
    std::vector<BuildingLoadParams> params;
    std::string solar_year;
    std::size_t clamped_steps{0};

    std::size_t buildings() const { return loads.size(); }
    std::size_t hours() const { return solar.size(); }

    /// Aggregate district load in kW at each step.
    std::vector<double> aggregate_kw() const;
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;

    std::size_t size() const { return scenarios.size(); }
    double total_probability() const;
    /// Sum-to-one, non-negative loads, uniform B and T.
    void validate() const;
};

struct FeatureVector {
    double agg_mean{0.0};
    double agg_max{0.0};
    double agg_std{0.0};
};

/// Builds one scenario from a district parameter draw; the solar year is sampled uniformly.
Scenario make_scenario(const std::vector<BuildingLoadParams> &params, const LoadDataset &load_ds,
                       const SolarDataset &solar_ds, Rng &rng);

/// One equiprobable scenario per parameter draw.
ScenarioSet assemble_scenarios(std::span<const std::vector<BuildingLoadParams>> param_draws, const LoadDataset &load_ds,
                               const SolarDataset &solar_ds, Rng &rng);

FeatureVector features(const Scenario &s);

/// Result of greedy Fast-Forward selection on arbitrary points.
struct FastForwardSelection {
    std::vector<std::size_t> order;    ///< selected indices in selection order
    std::vector<std::size_t> assigned; ///< for every input, the selected index it is mapped to
    std::vector<double> probability;   ///< redistributed probability per input index (0 if not selected)
};

/// Fast-Forward selection with Euclidean distances between `points`
/// (one row per scenario) and probability-weighted objective. Ties are
/// broken by lowest input index.
FastForwardSelection fast_forward_select(const std::vector<std::vector<double>> &points,
                                         std::span<const double> probabilities, std::size_t k);

/// Z-scores each feature over the set and drops zero-variance features.
std::vector<std::vector<double>> standardized_features(std::span<const FeatureVector> features);

/// Reduces a scenario set to k members by Fast-Forward selection on
/// z-scored (agg_mean, agg_max, agg_std) features. Output keeps input order.
ScenarioSet reduce_fast_forward(const ScenarioSet &set, std::size_t k);

/// Directory of per-scenario CSVs plus manifest.json.
void write_scenario_set(const ScenarioSet &set, const std::filesystem::path &dir);
ScenarioSet read_scenario_set(const std::filesystem::path &dir);

} // namespace dvoi
