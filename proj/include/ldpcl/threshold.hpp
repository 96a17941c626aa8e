#pragma once

// Decoding thresholds for single-layer and layered ensembles on the BEC.
//
// Single-layer thresholds come from the classical variational form
//   eps* = inf_{x in (0,1]} x / lambda(1 - rho(1 - x)).
// Bilayer thresholds use the closed form built on the auxiliary functions
//   q1(x) = x * Lambda1(u)/lambda1(u),  u = 1 - rho1(1 - x),
//   q2(y) = y * Lambda2(w)/lambda2(w),  w = 1 - rho2(1 - y),
// and q(y) = max{x : q1(x) = q2(y)}: the threshold is the infimum of
// y / g(1, q(y), y) over the feasible set {q2(y) <= 1}, combined with the
// spillover branch eps1*/p0 when the second layer has idle variable nodes
// and no degree-1 edges.  A density-evolution bisection covers the general
// L-layer case.

#include "ldpcl/de_engine.hpp"
#include "ldpcl/degree_dist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ldpcl {

enum class ThresholdMethod { formula_1d, theorem3, bisection };

inline const char* to_string(ThresholdMethod m) {
    switch (m) {
        case ThresholdMethod::formula_1d: return "formula_1d";
        case ThresholdMethod::theorem3: return "theorem3";
        default: return "bisection";
    }
}

struct ThresholdReport {
    double epsilon_star = 0.0;
    ThresholdMethod method = ThresholdMethod::formula_1d;
    std::vector<double> branch_values; // closed-form branches, when present
    int grid_points = 0;
    double tolerance = 0.0; // relative width of the refinement
    bool degenerate = false; // lambda carried degree-1 mass
    bool fallback = false;   // feasible set was empty, fell back
    std::string note;
};

struct StuckPoint {
    double x_s = 0.0;
    double a_s = 0.0;
};

namespace detail {

inline constexpr int kGridPoints = 4096;
inline constexpr double kRefineRel = 1e-8;

// Half geometric on [1e-9, 0.1], half uniform on (0.1, 1]; ascending, ends
// exactly at 1.
inline const std::vector<double>& composite_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> v;
        v.reserve(kGridPoints);
        int g = kGridPoints / 2;
        double lo = 1e-9, hi = 0.1;
        for (int i = 0; i < g; ++i)
            v.push_back(lo * std::pow(hi / lo, double(i) / double(g - 1)));
        int u = kGridPoints - g;
        for (int i = 1; i <= u; ++i) v.push_back(0.1 + 0.9 * double(i) / u);
        return v;
    }();
    return grid;
}

// Golden-section descent inside [a, b]; infeasible probes evaluate to +inf.
// Returns the best value seen and writes the matching abscissa.
inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, double& xbest) {
    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    double best = std::numeric_limits<double>::infinity();
    xbest = c;
    auto consider = [&](double x, double v) {
        if (v < best) {
            best = v;
            xbest = x;
        }
    };
    consider(c, fc);
    consider(d, fd);
    while (b - a > kRefineRel * std::max(b, 1e-12)) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
            consider(d, fd);
        }
    }
    return best;
}

// Minimize over the composite grid, then golden-refine around the best few
// non-adjacent candidates.  Never returns worse than the raw grid minimum.
inline double grid_minimize(const std::function<double(double)>& f,
                            double& xbest) {
    const auto& grid = composite_grid();
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    double best = std::numeric_limits<double>::infinity();
    xbest = grid.back();
    std::vector<std::size_t> picked;
    for (std::size_t i : order) {
        if (!std::isfinite(vals[i])) break;
        bool adjacent = false;
        for (std::size_t p : picked)
            adjacent |= (i > p ? i - p : p - i) <= 1;
        if (adjacent) continue;
        picked.push_back(i);
        if (vals[i] < best) {
            best = vals[i];
            xbest = grid[i];
        }
        double lo = i == 0 ? grid[0] * 0.5 : grid[i - 1];
        double hi = i + 1 == grid.size() ? grid.back() : grid[i + 1];
        double xr = grid[i];
        double vr = golden_min(f, lo, hi, xr);
        if (vr < best) {
            best = vr;
            xbest = xr;
        }
        if (picked.size() == 3) break;
    }
    return best;
}

} // namespace detail

/// Single-layer threshold via the variational formula.  A lambda with
/// degree-1 mass makes the infimum collapse to 0, reported as degenerate.
inline ThresholdReport threshold_1d(const DegreePoly& lambda,
                                    const DegreePoly& rho) {
    ThresholdReport rep;
    rep.method = ThresholdMethod::formula_1d;
    rep.grid_points = detail::kGridPoints;
    rep.tolerance = detail::kRefineRel;
    if (lambda.coeff(1) > 0.0) {
        rep.epsilon_star = 0.0;
        rep.degenerate = true;
        rep.note = "lambda has degree-1 mass; threshold is 0";
        return rep;
    }
    auto objective = [&](double x) {
        if (x <= 0.0 || x > 1.0) return std::numeric_limits<double>::infinity();
        double den = lambda.eval(1.0 - rho.eval(1.0 - x));
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return x / den;
    };
    double xmin = 1.0;
    double v = detail::grid_minimize(objective, xmin);
    if (v > 1.0) {
        rep.note = "variational value exceeds 1; capped at channel limit";
        v = 1.0;
    }
    rep.epsilon_star = v;
    return rep;
}

inline ThresholdReport threshold_1d(const LayerSpec& layer) {
    return threshold_1d(layer.lambda(), layer.rho());
}

/// q1(x) = x * Lambda1(u) / lambda1(u) with u = 1 - rho1(1 - x).
inline double q1(const LayerSpec& layer1, double x) {
    double u = 1.0 - layer1.rho().eval(1.0 - x);
    double den = layer1.lambda().eval(u);
    if (den <= 0.0)
        throw std::domain_error("q1: lambda(1 - rho(1 - x)) vanished");
    return x * layer1.Lambda().eval(u) / den;
}

/// q2(y) = y * Lambda2(w) / lambda2(w) with w = 1 - rho2(1 - y).
inline double q2(const LayerSpec& layer2, double y) {
    double w = 1.0 - layer2.rho().eval(1.0 - y);
    double den = layer2.lambda().eval(w);
    if (den <= 0.0)
        throw std::domain_error("q2: lambda(1 - rho(1 - y)) vanished");
    return y * layer2.Lambda().eval(w) / den;
}

namespace detail {

// Largest x with q1(x) = target, assuming target <= 1 = q1(1).  Scans a
// descending uniform grid for the sign change closest to x = 1, then bisects
// to 1e-12.  precomputed_q1, when given, holds q1 on that same grid.
inline double q1_inverse_max(const LayerSpec& layer1, double target,
                             const std::vector<double>* precomputed_q1) {
    const int n = kGridPoints;
    auto grid_x = [&](int k) { return double(n - k) / n; }; // k=0 -> 1.0
    auto s = [&](double x) { return q1(layer1, x) - target; };
    double hi = 1.0;
    double s_hi = (precomputed_q1 ? (*precomputed_q1)[0] : q1(layer1, 1.0)) -
                  target;
    if (s_hi <= 0.0) return 1.0; // target >= q1(1) = 1: root pinned at 1
    double lo = 0.0;
    bool bracketed = false;
    for (int k = 1; k < n; ++k) {
        double x = grid_x(k);
        double sk = precomputed_q1 ? (*precomputed_q1)[k] - target : s(x);
        if (sk < 0.0) {
            lo = x;
            hi = grid_x(k - 1);
            bracketed = true;
            break;
        }
    }
    // no sign change on the grid: root lies below the smallest grid point
    if (!bracketed) hi = grid_x(n - 1);
    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        (s(mid) >= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// q(y) = max{x : q1(x) = q2(y)}; requires q2(y) <= 1.
inline double q_of_y(const LayerSpec& layer1, const LayerSpec& layer2,
                     double y) {
    double t = q2(layer2, y);
    if (t > 1.0 + 1e-12)
        throw std::domain_error("q_of_y: q2(y) > 1, no solution with x <= 1");
    return detail::q1_inverse_max(layer1, std::min(t, 1.0), nullptr);
}

/// Closed-form bilayer threshold.
inline ThresholdReport threshold_bilayer(const Ensemble& e) {
    if (e.size() != 2)
        throw std::invalid_argument("threshold_bilayer: ensemble must be bilayer");
    const LayerSpec& l1 = e.layer(0);
    const LayerSpec& l2 = e.layer(1);

    ThresholdReport rep;
    rep.method = ThresholdMethod::theorem3;
    rep.grid_points = detail::kGridPoints;
    rep.tolerance = detail::kRefineRel;

    // q1 precomputed on the descending scan grid used by q1_inverse_max
    std::vector<double> q1_grid(detail::kGridPoints);
    for (int k = 0; k < detail::kGridPoints; ++k) {
        double x = double(detail::kGridPoints - k) / detail::kGridPoints;
        q1_grid[k] = q1(l1, x);
    }

    auto objective = [&](double y) {
        if (y <= 0.0 || y > 1.0) return std::numeric_limits<double>::infinity();
        double t = q2(l2, y);
        if (t > 1.0 + 1e-12) return std::numeric_limits<double>::infinity();
        double x = detail::q1_inverse_max(l1, std::min(t, 1.0), &q1_grid);
        double u = 1.0 - l1.rho().eval(1.0 - x);
        double w = 1.0 - l2.rho().eval(1.0 - y);
        double den = l1.Lambda().eval(u) * l2.lambda().eval(w);
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return y / den;
    };

    double ybest = 1.0;
    double branch1 = detail::grid_minimize(objective, ybest);
    bool have_branch1 = std::isfinite(branch1);

    double p0 = l2.p0();
    bool second_branch = p0 > 0.0 && l2.lambda().coeff(1) == 0.0;

    double eps_star;
    if (!have_branch1) {
        rep.fallback = true;
        if (second_branch) {
            eps_star = threshold_1d(l1).epsilon_star / p0;
            rep.note = "feasible set empty; spillover branch only";
            rep.branch_values = {eps_star};
        } else {
            // no closed-form handle at all: fall back to bisection on DE
            double lo = 0.0, hi = 1.0;
            DEOptions opts;
            opts.record_states = false;
            opts.max_iters = 300000;
            for (int i = 0; i < 60; ++i) {
                double mid = 0.5 * (lo + hi);
                (de_run(e, mid, opts).converged_to_zero ? lo : hi) = mid;
            }
            eps_star = 0.5 * (lo + hi);
            rep.note = "feasible set empty; density-evolution bisection";
            rep.branch_values = {eps_star};
        }
    } else if (second_branch) {
        double branch2 = threshold_1d(l1).epsilon_star / p0;
        rep.branch_values = {branch1, branch2};
        eps_star = std::min(branch1, branch2);
    } else {
        rep.branch_values = {branch1};
        eps_star = branch1;
    }
    if (eps_star > 1.0) {
        rep.note = "threshold capped at channel limit";
        eps_star = 1.0;
    }
    rep.epsilon_star = eps_star;
    return rep;
}

/// Threshold of the first `active_layers` layers by bisection over the
/// erasure probability, deciding each probe with a density-evolution run.
inline ThresholdReport threshold_multilayer_bisection(
    const Ensemble& e, std::size_t active_layers = 0, DEOptions opts = {}) {
    if (active_layers == 0) active_layers = e.size();
    if (active_layers > e.size())
        throw std::invalid_argument(
            "threshold_multilayer_bisection: bad layer count");
    opts.record_states = false;
    // probes closer than ~1e-4 below the threshold need a longer leash to
    // finish their slow descent to zero
    opts.max_iters = std::max(opts.max_iters, 300000L);
    ThresholdReport rep;
    rep.method = ThresholdMethod::bisection;
    rep.tolerance = std::ldexp(1.0, -60);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        bool ok = detail::de_run_prefix(e, active_layers, mid, opts)
                      .converged_to_zero;
        (ok ? lo : hi) = mid;
    }
    rep.epsilon_star = 0.5 * (lo + hi);
    rep.note = "layers 1.." + std::to_string(active_layers);
    return rep;
}

/// Layer-1 stuck point at erasure probability eps: the largest fixed point
/// x_s of x = eps*lambda(1 - rho(1 - x)) together with
/// a_s = Lambda(1 - rho(1 - x_s)).
inline StuckPoint stuck_point(const LayerSpec& layer, double eps,
                              double seed = 1.0, double tol = 1e-12) {
    StuckPoint sp;
    sp.x_s = largest_fixed_point_1d(layer.lambda(), layer.rho(), eps, seed, tol);
    sp.a_s = layer.Lambda().eval(1.0 - layer.rho().eval(1.0 - sp.x_s));
    return sp;
}

} // namespace ldpcl
