#pragma once

#include "dvoi/designopt.h"
#include "dvoi/loadmodel.h"
#include "dvoi/scenario.h"
#include "dvoi/simulator.h"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dvoi {

/// Which load parameters a hypothetical measurement campaign reveals.
struct UncertaintyMask {
    bool reduce_type{true};
    bool reduce_mean{true};
    bool reduce_peak{true};

    /// "none", "type", "mean", "peak" or "all".
    static UncertaintyMask parse(std::string_view name);
    std::string name() const;
};

enum class EvpiMode {
    exclude_year, ///< year and weather stay uncertain
    include_year, ///< every parameter, year and solar year included, is revealed
};

/// Everything one VoI computation needs; datasets are shared read-only.
struct VoiConfig {
    std::shared_ptr<const LoadDataset> loads;
    std::shared_ptr<const SolarDataset> solar;
    PriorSpec prior;
    MeasurementModel measurement;
    SystemParams system;
    MpcParams mpc;
    std::size_t n_buildings{5};
    std::size_t n_prior{1000};
    std::size_t n_posterior{256};
    std::size_t n_eval{256};
    std::size_t n_measurements{256};
    std::size_t k_reduced{10};
    UncertaintyMask mask;
    EvpiMode evpi_mode{EvpiMode::exclude_year};
    std::uint64_t seed{0};
    std::size_t jobs{1};

    void validate() const;
};

struct PriorLegResult {
    ScenarioSet reduced;
    DesignSolution solution;
    CostBreakdown sp_breakdown;
    CostDistribution costs;
    CostDistribution baseline;
};

PriorLegResult prior_leg(const VoiConfig &config);

struct MeasurementRecord {
    std::size_t index{0};
    bool ok{false};
    std::string error;
    std::vector<BuildingLoadParams> truth;
    std::vector<Measurement> measurement;
    SystemDesign posterior_design;
    double posterior_expected_cost{0.0};
    double posterior_cost_std{0.0};
    double posterior_cost_se{0.0};
    double posterior_cost_range{0.0};
    double sp_objective{0.0};
    double capital_cost{0.0};
    double posterior_mean_load_kw{0.0}; ///< sum over buildings of posterior mean of mean load
    std::vector<double> eval_costs;
};

struct PreposteriorResult {
    double expected_cost{0.0};
    double standard_error{0.0};
    std::size_t failures{0};
    std::vector<MeasurementRecord> records;
};

PreposteriorResult preposterior_leg(const VoiConfig &config);

/// Measurement model with the components outside the mask switched off.
MeasurementModel masked_measurement_model(const VoiConfig &config);

/// Rebuilds the per-building posteriors behind a successful record.
std::vector<BuildingPosterior> record_posteriors(const VoiConfig &config, const MeasurementRecord &record);

/// Evaluation scenarios drawn from the given posteriors. Sample j uses the
/// same random stream for every posterior (common random numbers).
ScenarioSource evaluation_source(const VoiConfig &config, std::vector<BuildingPosterior> posteriors);

/// Evaluation scenarios drawn from the prior.
ScenarioSource prior_evaluation_source(const VoiConfig &config);

struct EviiResult {
    double prior_cost{0.0};
    double preposterior_cost{0.0};
    double evii{0.0};
    double evii_raw{0.0};
    double evii_pct{0.0};
};

EviiResult compute_evii(double prior_cost, double preposterior_cost);

struct EvpiResult {
    double prior_cost{0.0};
    double perfect_info_cost{0.0};
    double evpi{0.0};
    double evpi_raw{0.0};
    double standard_error{0.0};
    std::vector<double> per_sample_cost;
};

/// Uses the given prior-leg cost summary when present, otherwise runs the prior leg.
EvpiResult compute_evpi(const VoiConfig &config, const std::optional<SampleSummary> &prior = std::nullopt);

struct ConvergenceTrace {
    std::vector<double> running_mean;
    std::vector<double> ci_low;  ///< NaN for the first prefix
    std::vector<double> ci_high; ///< NaN for the first prefix
};

ConvergenceTrace convergence_trace(std::span<const double> samples);

struct SpErrorReport {
    double mean_error_pct{0.0};
    double mean_abs_error_pct{0.0};
    std::vector<double> per_record_pct;
};

/// Relative error of the SP estimate of operating cost against the simulated
/// mean, positive when the SP under-estimates.
SpErrorReport sp_error_report(std::span<const MeasurementRecord> records);

struct QuantileSummary {
    double min{0.0}, q25{0.0}, median{0.0}, q75{0.0}, max{0.0};
};

struct RiskReport {
    std::vector<double> std_ratio;
    std::vector<double> range_ratio;
    QuantileSummary std_ratio_summary;
    QuantileSummary range_ratio_summary;
};

RiskReport risk_report(const SampleSummary &prior, std::span<const MeasurementRecord> records);

QuantileSummary quantile_summary(std::vector<double> values);

/// A finite, explicitly enumerated decision problem: scenarios with
/// probabilities and a signal label that a measurement would reveal.
struct DiscreteInstance {
    ScenarioSet scenarios;
    std::vector<std::string> signal;
    SystemParams system;
};

/// Exact values for a DiscreteInstance: designs are optimised against the
/// exact (conditional) distributions and evaluated by full-horizon optimal
/// operation with no factor of safety.
struct DiscreteVoi {
    double prior_cost{0.0};
    double perfect_info_cost{0.0};
    double signal_cost{0.0};
    double evpi{0.0};
    double evii{0.0};
    SystemDesign prior_design;
    std::vector<SystemDesign> perfect_designs;
};

DiscreteVoi exact_discrete_voi(const DiscreteInstance &instance);

DiscreteInstance discrete_instance_from_json(const nlohmann::json &j);

/// Full-horizon optimal operating cost of `design` on `scenario`, no factor of safety.
double exact_cost(const SystemDesign &design, const Scenario &scenario, const SystemParams &params);

} // namespace dvoi
