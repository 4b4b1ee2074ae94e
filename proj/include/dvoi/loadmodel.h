#pragma once

#include "dvoi/random.h"
#include "dvoi/tabulated_pdf.h"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvoi {

/// Number of knots used for tabulated posterior densities.
inline constexpr std::size_t posterior_grid_points = 1024;

/// Hourly building load profiles indexed by (type, year).
struct LoadDataset {
    std::vector<std::string> type_ids;
    std::vector<std::string> year_ids;
    double timestep_hours{1.0};
    /// profiles[type_index * year_ids.size() + year_index], each of length hours().
    std::vector<std::vector<double>> profiles;

    std::size_t hours() const { return profiles.empty() ? 0 : profiles.front().size(); }
    std::size_t type_index(std::string_view type_id) const;
    std::size_t year_index(std::string_view year_id) const;
    const std::vector<double> &profile(std::string_view type_id, std::string_view year_id) const;

    /// Checks the cross-product, length, sign and max > mean invariants.
    void validate() const;
};

/// Prior over one building's load parameters. type and year are uniform over
/// their id sets, mean ~ N(mean_mu, mean_sigma) truncated to (0, peak), and
/// peak ~ U(peak_min, peak_max).
struct PriorSpec {
    std::vector<std::string> type_ids;
    std::vector<std::string> year_ids;
    double mean_mu{100.0};
    double mean_sigma{25.0};
    double peak_min{200.0};
    double peak_max{400.0};

    static PriorSpec for_dataset(const LoadDataset &ds);
    void validate() const;

    /// True when the mean prior is narrower than numerical resolution.
    bool mean_is_point_mass() const;
    bool peak_is_point_mass() const;
};

/// Measurement likelihood: z | theta ~ N(theta, eps * theta), with eps a
/// fractional standard deviation. The observed flags select which parameters
/// a monitoring campaign reveals.
struct MeasurementModel {
    double eps_mean{0.1};
    double eps_peak{0.075};
    bool type_observed{true};
    bool year_observed{false};
    bool mean_observed{true};
    bool peak_observed{true};

    void validate() const;
};

struct BuildingLoadParams {
    std::string type_id;
    std::string year_id;
    double mean_kw{0.0};
    double peak_kw{0.0};

    void validate() const;
    friend bool operator==(const BuildingLoadParams &, const BuildingLoadParams &) = default;
};

/// Hypothetical monitoring result for one building.
struct Measurement {
    std::string observed_type;
    std::string observed_year;
    double z_mean{0.0};
    double z_peak{0.0};
};

/// Posterior over one building's parameters.
struct BuildingPosterior {
    std::vector<std::string> type_support;
    std::vector<std::string> year_support;
    TabulatedPdf mean_pdf;
    TabulatedPdf peak_pdf;
};

struct LoadProfile {
    std::vector<double> energy;
    std::size_t clamped_steps{0};
};

/// Deterministic synthetic load dataset with diurnal, weekly and seasonal
/// structure; shape depends on the type, noise and event timing on the year.
LoadDataset generate_synthetic_dataset(std::size_t n_types, std::size_t n_years, std::size_t hours,
                                       std::uint64_t seed);

/// Reads `type_id,year_id,t,load_kwh` rows.
LoadDataset load_dataset(const std::filesystem::path &path, double timestep_hours = 1.0);
void write_dataset(const LoadDataset &ds, const std::filesystem::path &path);

std::vector<BuildingLoadParams> sample_district_params(const PriorSpec &prior, std::size_t n_buildings, Rng &rng);

Measurement sample_measurement(const BuildingLoadParams &truth, const MeasurementModel &model, Rng &rng);

BuildingPosterior posterior_update(const PriorSpec &prior, const Measurement &msmt, const MeasurementModel &model);

/// The prior expressed in posterior form (nothing observed).
BuildingPosterior prior_as_posterior(const PriorSpec &prior);

/// Draws one district parameter set from per-building posteriors. The year is
/// drawn once from the first building's year support and shared.
std::vector<BuildingLoadParams> sample_posterior_params(std::span<const BuildingPosterior> posteriors, Rng &rng);

/// Affine rescale of the (type, year) profile to the requested mean and peak
/// power, clamped at zero.
LoadProfile build_profile(const BuildingLoadParams &params, const LoadDataset &ds);

} // namespace dvoi
