#pragma once

#include <vector>

namespace dvoi {

/// A one-dimensional density tabulated on a uniform grid and interpolated
/// linearly between knots. A single-knot table represents a point mass.
///
/// The density is normalised with the trapezoid rule, so moments, the CDF and
/// inverse-CDF sampling are all exact for the piecewise-linear interpolant.
class TabulatedPdf {
  public:
    TabulatedPdf() = default;

    static TabulatedPdf point_mass(double x);

    /// Builds a normalised table on `n` uniform knots over [lo, hi] from
    /// unnormalised log-density values (one per knot). Returns the log of the
    /// trapezoid normalising constant through `log_norm` when non-null.
    static TabulatedPdf from_log_density(double lo, double hi, const std::vector<double> &log_density,
                                         double *log_norm = nullptr);

    bool is_point_mass() const { return grid_.size() == 1; }
    const std::vector<double> &grid() const { return grid_; }
    const std::vector<double> &density() const { return density_; }
    double lower() const { return grid_.front(); }
    double upper() const { return grid_.back(); }
    double cell_width() const;

    /// Interpolated density; 0 outside the support. Meaningless for point masses.
    double density_at(double x) const;

    /// Trapezoid integral of the table (1 up to rounding).
    double integral() const;

    double mean() const;
    double variance() const;

    /// Inverse CDF of the piecewise-linear density, u in [0, 1].
    double inverse_cdf(double u) const;

  private:
    std::vector<double> grid_;
    std::vector<double> density_;
    std::vector<double> cdf_;
};

} // namespace dvoi
