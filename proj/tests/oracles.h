#pragma once

// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here calls into the library's solvers.

#include "dvoi/designopt.h"
#include "dvoi/loadmodel.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

struct Moments {
    double mean{0.0};
    double variance{0.0};
};

// Trapezoid moments of exp(log_f) on n uniform points over [lo, hi].
inline Moments quadrature_moments(double lo, double hi, std::size_t n, const std::function<double(double)> &log_f) {
    std::vector<double> lf(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        lf[i] = log_f(lo + h * static_cast<double>(i));
        peak = std::max(peak, lf[i]);
    }
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        const double f = w * std::exp(lf[i] - peak);
        z += f;
        m1 += f * x;
        m2 += f * x * x;
    }
    Moments m;
    m.mean = m1 / z;
    m.variance = m2 / z - m.mean * m.mean;
    return m;
}

inline double log_normal_pdf(double x, double mu, double sd) {
    const double r = (x - mu) / sd;
    return -0.5 * r * r - std::log(sd);
}

// Posterior of the mean-load parameter: N(mu, sigma) prior on
// [mu - 6 sigma, mu + 6 sigma] intersected with (0, inf), likelihood N(z; theta, eps theta).
inline Moments mean_posterior(const dvoi::PriorSpec &prior, double z, double eps, std::size_t n = 1'000'000) {
    const double hi = prior.mean_mu + 6.0 * prior.mean_sigma;
    const double lo = std::max(prior.mean_mu - 6.0 * prior.mean_sigma, 1e-9 * hi);
    return quadrature_moments(lo, hi, n, [&](double t) {
        return log_normal_pdf(t, prior.mean_mu, prior.mean_sigma) + log_normal_pdf(z, t, eps * t);
    });
}

// Posterior of the peak parameter: uniform prior on [peak_min, peak_max].
inline Moments peak_posterior(const dvoi::PriorSpec &prior, double z, double eps, std::size_t n = 1'000'000) {
    return quadrature_moments(prior.peak_min, prior.peak_max, n,
                              [&](double t) { return log_normal_pdf(z, t, eps * t); });
}

// Plain greedy Fast-Forward selection, recomputing the objective from scratch
// for every candidate.
struct Selection {
    std::vector<std::size_t> order;
    std::vector<double> probability;
};

inline double euclid(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) {
        s += (a[f] - b[f]) * (a[f] - b[f]);
    }
    return std::sqrt(s);
}

inline double ff_objective(const std::vector<std::vector<double>> &pts, const std::vector<double> &p,
                           const std::vector<std::size_t> &selected) {
    double total = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (std::find(selected.begin(), selected.end(), j) != selected.end()) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto s : selected) {
            best = std::min(best, euclid(pts[j], pts[s]));
        }
        total += p[j] * best;
    }
    return total;
}

inline Selection greedy_fast_forward(const std::vector<std::vector<double>> &pts, const std::vector<double> &p,
                                     std::size_t k) {
    Selection out;
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best_u = pts.size();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < pts.size(); ++u) {
            if (std::find(out.order.begin(), out.order.end(), u) != out.order.end()) {
                continue;
            }
            auto trial = out.order;
            trial.push_back(u);
            const double v = ff_objective(pts, p, trial);
            if (v < best) {
                best = v;
                best_u = u;
            }
        }
        out.order.push_back(best_u);
    }
    out.probability.assign(pts.size(), 0.0);
    auto sorted = out.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < pts.size(); ++j) {
        std::size_t near = sorted.front();
        double d = std::numeric_limits<double>::infinity();
        for (auto s : sorted) {
            const double e = euclid(pts[j], pts[s]);
            if (e < d) {
                d = e;
                near = s;
            }
        }
        out.probability[near] += p[j];
    }
    return out;
}

// Single-element subset minimising the Fast-Forward objective, by exhaustion.
inline std::size_t best_single(const std::vector<std::vector<double>> &pts, const std::vector<double> &p) {
    std::size_t best_u = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < pts.size(); ++u) {
        const double v = ff_objective(pts, p, {u});
        if (v < best) {
            best = v;
            best_u = u;
        }
    }
    return best_u;
}

// One building, one scenario: lifetime cost minimised over a capacity grid
// (battery 0..10 kWh, solar 0..10 kWp, step 0.5), then refined on finer grids
// around the coarse optimum. Dispatch is enumerated over evenly spaced SoC
// levels per step. The grid connection is optimal in closed form for each
// trajectory: either 0 or fos times the peak.
struct TinyInstance {
    std::vector<double> load;  // kWh
    std::vector<double> solar; // kW/kWp
    dvoi::SystemParams params;
};

struct GridOptimum {
    double cost{std::numeric_limits<double>::infinity()};
    double battery{0.0};
    double solar{0.0};
};

// Best lifetime cost for fixed capacities over the enumerated dispatches. Each
// step tries evenly spaced SoC levels plus the kinks of the cost: full-power
// charge or discharge, zero net draw, and a draw equal to the running peak.
inline double cell_cost(const TinyInstance &inst, double cs, double cpv, std::size_t soc_levels) {
    const auto &p = inst.params;
    const auto T = inst.load.size();
    const double se = std::sqrt(p.eta);
    const double capex = p.p_s * cs + p.p_pv * cpv;
    const std::size_t levels = cs > 0.0 ? soc_levels : 1;
    const double power = p.delta * cs * p.dt;
    const double grid_rate = std::min(p.gamma * p.p_excess_annual(), p.gamma * p.p_grid_annual() * p.fos_design);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> e(T);
    std::function<void(std::size_t, double, double, double)> walk = [&](std::size_t t, double soc, double op,
                                                                          double peak) {
        if (t == T) {
            best = std::min(best, capex + p.gamma * p.operating_scale * op + grid_rate * peak / p.dt);
            return;
        }
        const double base = inst.load[t] - cpv * inst.solar[t] * p.dt;
        std::vector<double> next;
        for (std::size_t l = 0; l < levels; ++l) {
            next.push_back(levels == 1 ? 0.0 : cs * static_cast<double>(l) / (levels - 1.0));
        }
        if (cs > 0.0) {
            next.push_back(soc + se * power);
            next.push_back(soc - power / se);
            for (double target : {0.0, peak, -peak}) {
                // net battery energy d gives e = base + d/se (charging) or base + d*se (discharging)
                const double d = target - base;
                next.push_back(soc + (d > 0.0 ? se * d : d / se));
            }
        }
        const double price = p.price[t] + p.p_c * p.carbon[t];
        for (double n : next) {
            if (n < -1e-12 || n > cs + 1e-12) {
                continue;
            }
            n = std::clamp(n, 0.0, cs);
            const double diff = n - soc;
            const double ch = diff > 0.0 ? diff / se : 0.0;
            const double dis = diff < 0.0 ? -diff * se : 0.0;
            if (ch > power + 1e-9 || dis > power + 1e-9) {
                continue;
            }
            const double et = base + ch - dis;
            walk(t + 1, n, op + price * std::max(0.0, et), std::max(peak, std::abs(et)));
        }
    };
    walk(0, p.soc0_frac * cs, 0.0, 0.0);
    return best;
}

inline GridOptimum grid_search(const TinyInstance &inst, double cs_lo, double cs_hi, double cpv_lo, double cpv_hi,
                               double step, std::size_t soc_levels) {
    GridOptimum best;
    for (double cs = std::max(0.0, cs_lo); cs <= cs_hi + 1e-9; cs += step) {
        for (double cpv = std::max(0.0, cpv_lo); cpv <= cpv_hi + 1e-9; cpv += step) {
            const double c = cell_cost(inst, cs, cpv, soc_levels);
            if (c < best.cost) {
                best = {c, cs, cpv};
            }
        }
    }
    return best;
}

inline GridOptimum brute_force_design(const TinyInstance &inst, double step = 0.5, double max_battery = 10.0,
                                      double max_solar = 10.0, std::size_t soc_levels = 21) {
    auto best = grid_search(inst, 0.0, max_battery, 0.0, max_solar, step, soc_levels);
    // two refinement passes, each five times finer around the incumbent
    for (int pass = 0; pass < 2; ++pass) {
        const double fine = step / 5.0;
        auto refined = grid_search(inst, best.battery - step, best.battery + step, best.solar - step,
                                   best.solar + step, fine, soc_levels);
        if (refined.cost < best.cost) {
            best = refined;
        }
        step = fine;
    }
    return best;
}

// Grid-only decision problem: battery and solar are never worth buying, so
// each scenario's cost is its energy bill plus the connection/excess trade-off
// on the peak. Exact values by enumerating the breakpoints of the expected cost.
struct GridScenario {
    std::vector<double> load; // kWh, one building
    double probability{0.0};
    std::string signal;
};

inline double energy_bill(const GridScenario &s, const dvoi::SystemParams &p) {
    double op = 0.0;
    for (std::size_t t = 0; t < s.load.size(); ++t) {
        op += (p.price[t] + p.p_c * p.carbon[t]) * s.load[t];
    }
    return p.gamma * p.operating_scale * op;
}

inline double peak_kw(const GridScenario &s, const dvoi::SystemParams &p) {
    return *std::max_element(s.load.begin(), s.load.end()) / p.dt;
}

// Minimum expected cost over the grid capacity for scenarios `members`, with
// weights renormalised within the group. Returns the unnormalised contribution
// (group probability times conditional optimum).
inline double group_optimum(const std::vector<GridScenario> &all, const std::vector<std::size_t> &members,
                            const dvoi::SystemParams &p) {
    double mass = 0.0;
    for (auto m : members) {
        mass += all[m].probability;
    }
    if (mass <= 0.0) {
        return 0.0;
    }
    std::vector<double> candidates = {0.0};
    for (auto m : members) {
        candidates.push_back(peak_kw(all[m], p));
    }
    double best = std::numeric_limits<double>::infinity();
    for (double c : candidates) {
        double v = p.gamma * p.p_grid_annual() * c;
        for (auto m : members) {
            const double q = all[m].probability / mass;
            v += q * (energy_bill(all[m], p) + p.gamma * p.p_excess_annual() * std::max(0.0, peak_kw(all[m], p) - c));
        }
        best = std::min(best, v);
    }
    return mass * best;
}

struct GridVoi {
    double prior{0.0};
    double perfect{0.0};
    double signal{0.0};
    double evpi() const { return prior - perfect; }
    double evii() const { return prior - signal; }
};

inline GridVoi grid_voi(const std::vector<GridScenario> &all, const dvoi::SystemParams &p) {
    GridVoi out;
    std::vector<std::size_t> every;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t m = 0; m < all.size(); ++m) {
        every.push_back(m);
        out.perfect += group_optimum(all, {m}, p);
        groups[all[m].signal].push_back(m);
    }
    out.prior = group_optimum(all, every, p);
    for (const auto &[label, members] : groups) {
        out.signal += group_optimum(all, members, p);
    }
    return out;
}

} // namespace oracle
