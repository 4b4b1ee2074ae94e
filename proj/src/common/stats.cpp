#include "dvoi/stats.h"
#include "dvoi/errors.h"

#include <algorithm>
#include <cmath>

namespace dvoi {

double mean_of(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(values.size()));
}

SampleSummary summarize(std::span<const double> samples) {
    SampleSummary s;
    s.n = samples.size();
    if (s.n == 0) {
        return s;
    }
    s.mean = mean_of(samples);
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    s.min = *lo;
    s.max = *hi;
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : samples) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.standard_error = s.std / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw ArgumentError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

} // namespace dvoi
