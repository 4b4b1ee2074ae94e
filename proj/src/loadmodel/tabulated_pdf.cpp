#include "dvoi/tabulated_pdf.h"
#include "dvoi/errors.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dvoi {

TabulatedPdf TabulatedPdf::point_mass(double x) {
    TabulatedPdf pdf;
    pdf.grid_ = {x};
    pdf.density_ = {1.0};
    pdf.cdf_ = {1.0};
    return pdf;
}

TabulatedPdf TabulatedPdf::from_log_density(double lo, double hi, const std::vector<double> &log_density,
                                            double *log_norm) {
    const auto n = log_density.size();
    if (n < 2 || !(hi > lo)) {
        throw ArgumentError("tabulated pdf needs at least two knots over a non-empty interval");
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : log_density) {
        peak = std::max(peak, v);
    }
    if (!std::isfinite(peak)) {
        throw InferenceError("tabulated density is zero everywhere");
    }

    TabulatedPdf pdf;
    pdf.grid_.resize(n);
    pdf.density_.resize(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        pdf.grid_[k] = k + 1 == n ? hi : lo + h * static_cast<double>(k);
        pdf.density_[k] = std::exp(log_density[k] - peak);
    }
    double z = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        z += 0.5 * h * (pdf.density_[k] + pdf.density_[k + 1]);
    }
    if (!(z > 0.0)) {
        throw InferenceError("tabulated density has zero mass");
    }
    for (auto &d : pdf.density_) {
        d /= z;
    }
    if (log_norm != nullptr) {
        *log_norm = peak + std::log(z);
    }

    pdf.cdf_.resize(n);
    pdf.cdf_[0] = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        pdf.cdf_[k + 1] = pdf.cdf_[k] + 0.5 * h * (pdf.density_[k] + pdf.density_[k + 1]);
    }
    return pdf;
}

double TabulatedPdf::cell_width() const {
    if (is_point_mass()) {
        return 0.0;
    }
    return (upper() - lower()) / static_cast<double>(grid_.size() - 1);
}

double TabulatedPdf::density_at(double x) const {
    if (is_point_mass() || x < lower() || x > upper()) {
        return 0.0;
    }
    const double h = cell_width();
    auto k = std::min(static_cast<std::size_t>((x - lower()) / h), grid_.size() - 2);
    double s = (x - grid_[k]) / h;
    return density_[k] * (1.0 - s) + density_[k + 1] * s;
}

double TabulatedPdf::integral() const {
    if (is_point_mass()) {
        return 1.0;
    }
    const double h = cell_width();
    double z = 0.0;
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
        z += 0.5 * h * (density_[k] + density_[k + 1]);
    }
    return z;
}

double TabulatedPdf::mean() const {
    if (is_point_mass()) {
        return grid_[0];
    }
    const double h = cell_width();
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
        double x0 = grid_[k];
        double x1 = grid_[k + 1];
        double p0 = density_[k];
        double p1 = density_[k + 1];
        m += h / 6.0 * (2.0 * x0 * p0 + x0 * p1 + x1 * p0 + 2.0 * x1 * p1);
    }
    return m;
}

double TabulatedPdf::variance() const {
    if (is_point_mass()) {
        return 0.0;
    }
    // Central second moment; shifting by the mean keeps the sums well conditioned.
    const double mu = mean();
    const double h = cell_width();
    double v = 0.0;
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
        double a = grid_[k] - mu;
        double p0 = density_[k];
        double p1 = density_[k + 1];
        v += h * (p0 * (a * a / 2.0 + a * h / 3.0 + h * h / 12.0) + p1 * (a * a / 2.0 + 2.0 * a * h / 3.0 + h * h / 4.0));
    }
    return std::max(v, 0.0);
}

double TabulatedPdf::inverse_cdf(double u) const {
    if (is_point_mass()) {
        return grid_[0];
    }
    u = std::clamp(u, 0.0, 1.0) * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t k = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
    if (k + 1 >= grid_.size()) {
        return upper();
    }
    const double h = cell_width();
    const double p0 = density_[k];
    const double p1 = density_[k + 1];
    const double target = u - cdf_[k];
    // Solve p0*h*s + (p1 - p0)*h*s^2/2 = target for s in [0, 1].
    const double a = 0.5 * (p1 - p0) * h;
    const double b = p0 * h;
    const double disc = std::max(b * b + 4.0 * a * target, 0.0);
    const double denom = b + std::sqrt(disc);
    double s = denom > 0.0 ? 2.0 * target / denom : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return grid_[k] + s * h;
}

} // namespace dvoi
