#pragma once

#include <optional>
#include <span>
#include <vector>

namespace dvoi {

/// Summary of a Monte Carlo sample. `std` is the unbiased sample standard
/// deviation (0 for a single sample); `standard_error` is std/sqrt(n) and is
/// empty when n < 2.
struct SampleSummary {
    std::size_t n{0};
    double mean{0.0};
    double std{0.0};
    std::optional<double> standard_error;
    double min{0.0};
    double max{0.0};

    double range() const { return max - min; }
};

SampleSummary summarize(std::span<const double> samples);

double mean_of(std::span<const double> values);

/// Population (divide-by-n) standard deviation.
double population_std(std::span<const double> values);

/// Linear-interpolation quantile (type 7), q in [0, 1]. Requires a non-empty input.
double quantile(std::vector<double> values, double q);

} // namespace dvoi
