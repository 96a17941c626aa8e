#pragma once

// Multi-layer density evolution on the BEC.
//
// For an L-layer ensemble the flooding recursion is
//   x_i' = eps * lambda_i(1 - rho_i(1 - x_i)) * prod_{j != i} Lambda_j(1 - rho_j(1 - x_j))
// started from the all-ones vector.  Iterates are entrywise non-increasing,
// so the limit is the largest fixed point at the given erasure probability.

#include "ldpcl/degree_dist.hpp"

#include <cstdlib>
#include <utility>
#include <vector>

namespace ldpcl {

struct DEOptions {
    double tol = 1e-10;  // "reached zero" level; stalls detected at tol*1e-3 relative
    long max_iters = 100000;
    bool record_states = true;

    /// Default tolerance, overridable through the LDPC_DE_TOL environment
    /// variable (used by the command line tool).
    static double env_tol() {
        if (const char* s = std::getenv("LDPC_DE_TOL")) {
            char* end = nullptr;
            double v = std::strtod(s, &end);
            if (end != s && *end == '\0' && v > 0.0 && v < 1.0) return v;
        }
        return 1e-10;
    }
};

enum class DEStatus { converged_to_zero, fixed_point, max_iters };

inline const char* to_string(DEStatus s) {
    switch (s) {
        case DEStatus::converged_to_zero: return "converged_to_zero";
        case DEStatus::fixed_point: return "fixed_point";
        default: return "max_iters";
    }
}

struct DEState {
    std::vector<double> x;
    long iteration = -1; // -1 denotes the all-ones start
};

struct DETrace {
    double eps = 0.0;
    double tol = 0.0;
    long iterations = 0;
    DEStatus status = DEStatus::max_iters;
    bool converged_to_zero = false;
    std::vector<double> final_state;
    std::vector<std::vector<double>> states; // per-iteration, when recorded
};

namespace detail {

// One flooding update over layers [0, n); layers beyond n contribute nothing
// (they are treated as absent, matching a decoder that only uses the first n
// check types).
inline void de_step_prefix(const Ensemble& e, std::size_t n, double eps,
                           const std::vector<double>& x,
                           std::vector<double>& out) {
    thread_local std::vector<double> lam_u, Lam_u, pre, suf;
    lam_u.resize(n);
    Lam_u.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const LayerSpec& l = e.layer(j);
        double u = 1.0 - l.rho().eval(1.0 - x[j]);
        lam_u[j] = l.lambda().eval(u);
        Lam_u[j] = l.Lambda().eval(u);
    }
    // prefix/suffix products avoid dividing by a possibly-zero factor
    pre.assign(n + 1, 1.0);
    suf.assign(n + 1, 1.0);
    for (std::size_t j = 0; j < n; ++j) pre[j + 1] = pre[j] * Lam_u[j];
    for (std::size_t j = n; j-- > 0;) suf[j] = suf[j + 1] * Lam_u[j];
    out.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        out[j] = eps * lam_u[j] * pre[j] * suf[j + 1];
}

} // namespace detail

/// One density-evolution step over all layers.
inline std::vector<double> de_step(const Ensemble& e, double eps,
                                   const std::vector<double>& x) {
    if (x.size() != e.size())
        throw std::invalid_argument("de_step: state size does not match ensemble");
    std::vector<double> out;
    detail::de_step_prefix(e, e.size(), eps, x, out);
    return out;
}

/// Bilayer convenience wrapper.
inline std::pair<double, double> de_step_2d(const Ensemble& e, double eps,
                                            double x, double y) {
    if (e.size() != 2)
        throw std::invalid_argument("de_step_2d: ensemble must have 2 layers");
    auto v = de_step(e, eps, {x, y});
    return {v[0], v[1]};
}

namespace detail {

inline DETrace de_run_prefix(const Ensemble& e, std::size_t n, double eps,
                             const DEOptions& opts) {
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::domain_error("de_run: eps outside [0,1]");
    DETrace tr;
    tr.eps = eps;
    tr.tol = opts.tol;
    std::vector<double> x(n, 1.0), next;
    // Stall detection is relative: a state slowly passing through small values
    // on its way to zero keeps a change-per-entry ratio bounded away from 0,
    // while a genuine fixed point drives it below any fixed cutoff.
    const double stall_rel = opts.tol * 1e-3;
    for (long l = 0; l < opts.max_iters; ++l) {
        de_step_prefix(e, n, eps, x, next);
        double max_entry = 0.0, max_change = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            max_entry = std::max(max_entry, next[j]);
            max_change = std::max(max_change, std::abs(x[j] - next[j]));
        }
        x.swap(next);
        if (opts.record_states) tr.states.push_back(x);
        tr.iterations = l + 1;
        if (max_entry < opts.tol) {
            tr.status = DEStatus::converged_to_zero;
            tr.converged_to_zero = true;
            break;
        }
        if (max_change <= stall_rel * max_entry) {
            tr.status = DEStatus::fixed_point;
            break;
        }
        tr.status = DEStatus::max_iters;
    }
    tr.final_state = std::move(x);
    return tr;
}

} // namespace detail

/// Run density evolution from the all-ones start until the state reaches
/// zero (entrywise below tol), stalls at a fixed point, or the iteration
/// budget runs out.
inline DETrace de_run(const Ensemble& e, double eps, DEOptions opts = {}) {
    return detail::de_run_prefix(e, e.size(), eps, opts);
}

/// Largest fixed point of the recursion restricted to the first
/// `active_layers` layers (the remaining layers are absent, so the decoder
/// sees only the leading check types).  Returned vector has one entry per
/// active layer.
inline std::vector<double> largest_partial_fixed_point(
    const Ensemble& e, double eps, std::size_t active_layers,
    double tol = 1e-12, long max_iters = 4000000) {
    if (active_layers < 1 || active_layers > e.size())
        throw std::invalid_argument(
            "largest_partial_fixed_point: bad active layer count");
    DEOptions opts;
    opts.tol = tol;
    opts.max_iters = max_iters;
    opts.record_states = false;
    DETrace tr = detail::de_run_prefix(e, active_layers, eps, opts);
    if (tr.converged_to_zero)
        for (auto& v : tr.final_state) v = 0.0;
    return tr.final_state;
}

/// Largest fixed point of the scalar recursion x = eps*lambda(1 - rho(1 - x)),
/// found by monotone iteration downward from `seed`.  Requires that seed be an
/// upper bound for the sought fixed point with map(seed) <= seed; the all-ones
/// start always qualifies.
inline double largest_fixed_point_1d(const DegreePoly& lambda,
                                     const DegreePoly& rho, double eps,
                                     double seed = 1.0, double tol = 1e-12,
                                     long max_iters = 4000000) {
    double x = seed;
    for (long l = 0; l < max_iters; ++l) {
        double xn = eps * lambda.eval(1.0 - rho.eval(1.0 - x));
        if (xn > x) xn = x; // guard against rounding above the monotone path
        if (xn < tol) return 0.0;
        if (x - xn <= 1e-14 * x) return xn;
        x = xn;
    }
    return x;
}

} // namespace ldpcl
