#pragma once

// Layer-2 iteration scheduling for bilayer ensembles.
//
// Running only layer 1 at erasure probability eps stalls at the stuck point
// x_s of the effective channel eps_eff = eps * Lambda2(1 - rho2(1 - y)).
// The optimal schedule lets layer 1 run to its stuck point, performs one
// layer-2 update there, and repeats; N2 counts the layer-2 updates until the
// effective channel falls below layer 1's own threshold, after which layer 1
// finishes alone.  A simulator reproduces the same counts by gating layer-2
// updates on the per-iteration progress |x_{l-1} - x_l| <= eta.

#include "ldpcl/construct.hpp"
#include "ldpcl/de_engine.hpp"
#include "ldpcl/degree_dist.hpp"
#include "ldpcl/threshold.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldpcl {

struct schedule_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// eps at or above the bilayer threshold: the recursion cannot finish.
struct invalid_regime_error : schedule_error {
    using schedule_error::schedule_error;
};
/// iteration budget ran out before success or a definite stall.
struct budget_exhausted_error : schedule_error {
    using schedule_error::schedule_error;
};

enum class ScheduleMode { analytic, simulated };

inline const char* to_string(ScheduleMode m) {
    return m == ScheduleMode::analytic ? "analytic" : "simulated";
}

struct ScheduleUpdate {
    int k = 0;        // 1-based update index
    double eps_k = 0; // effective erasure probability after this update
    double x = 0;     // layer-1 state the update was triggered at
    double y = 0;     // layer-2 edge erasure probability after the update
};

struct ScheduleTrace {
    std::vector<ScheduleUpdate> updates;
    int n2 = 0;
    double eps = 0.0;
    ScheduleMode mode = ScheduleMode::analytic;
    std::optional<double> eta;
    long type1_iterations = 0; // simulator only; analytic treats them as free
};

struct ScheduleOptions {
    double tol = 1e-10;             // layer-1 "decoded" level (simulator)
    long max_type1_per_phase = 1000000;
    long max_total_iters = 50000000;
    long max_updates = 1000000;
    int force_every = 0; // >0: additionally update every k type-1 iterations
};

/// Effective erasure probability seen by layer 1 when the layer-2 edge
/// messages are erased with probability y.
inline double eps_eff(const Ensemble& e, double eps, double y) {
    if (e.size() != 2)
        throw std::invalid_argument("eps_eff: ensemble must be bilayer");
    if (!(eps >= 0.0 && eps <= 1.0 && y >= 0.0 && y <= 1.0))
        throw std::domain_error("eps_eff: inputs outside [0,1]");
    const LayerSpec& l2 = e.layer(1);
    return eps * l2.Lambda().eval(1.0 - l2.rho().eval(1.0 - y));
}

namespace detail {

// one layer-2 message update given the current layer-1 state
inline double layer2_update(const Ensemble& e, double eps, double x, double y) {
    const LayerSpec& l1 = e.layer(0);
    const LayerSpec& l2 = e.layer(1);
    double u = 1.0 - l1.rho().eval(1.0 - x);
    double w = 1.0 - l2.rho().eval(1.0 - y);
    return eps * l1.Lambda().eval(u) * l2.lambda().eval(w);
}

// stalled effective-eps detection: relative drop below 1e-12 across a
// 10-update window
class StallDetector {
  public:
    bool push(double eff) {
        window_.push_back(eff);
        if (window_.size() <= 10) return false;
        double old = window_[window_.size() - 11];
        return old - eff < 1e-12 * eff;
    }

  private:
    std::vector<double> window_;
};

} // namespace detail

/// Optimal schedule via the stuck-point recursion.  Each pass runs layer 1
/// to its stuck point under the current effective channel, then spends one
/// layer-2 update; stops once the effective channel clears layer 1's own
/// threshold.
inline ScheduleTrace schedule_analytic(const Ensemble& e, double eps) {
    if (e.size() != 2)
        throw std::invalid_argument("schedule_analytic: ensemble must be bilayer");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::domain_error("schedule_analytic: eps outside (0,1)");

    ScheduleTrace tr;
    tr.eps = eps;
    tr.mode = ScheduleMode::analytic;

    const LayerSpec& l1 = e.layer(0);
    double eps1 = threshold_1d(l1).epsilon_star;
    if (eps <= eps1) return tr; // layer 1 already suffices: n2 = 0

    detail::StallDetector stall;
    double y = 1.0, eff = eps, x_seed = 1.0;
    for (int k = 1;; ++k) {
        double x = largest_fixed_point_1d(l1.lambda(), l1.rho(), eff, x_seed);
        y = detail::layer2_update(e, eps, x, y);
        eff = eps_eff(e, eps, y);
        tr.updates.push_back({k, eff, x, y});
        tr.n2 = k;
        if (eff < eps1) break;
        if (stall.push(eff))
            throw invalid_regime_error(
                "schedule_analytic: effective erasure probability stopped "
                "decreasing; eps is at or above the bilayer threshold");
        x_seed = x;
    }
    return tr;
}

/// Simulated schedule (progress-gated layer-2 updates).  A layer-2 update
/// fires when layer 1's per-iteration progress drops to eta or below while
/// the effective channel still exceeds layer 1's threshold; an update makes
/// the gate wait one iteration so layer 1 can respond.  force_every > 0
/// additionally updates after that many type-1 iterations in a phase.
inline ScheduleTrace schedule_simulate(const Ensemble& e, double eps,
                                       double eta,
                                       const ScheduleOptions& opts = {}) {
    if (e.size() != 2)
        throw std::invalid_argument("schedule_simulate: ensemble must be bilayer");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::domain_error("schedule_simulate: eps outside (0,1)");
    if (!(eta > 0.0))
        throw std::domain_error("schedule_simulate: eta must be positive");

    ScheduleTrace tr;
    tr.eps = eps;
    tr.mode = ScheduleMode::simulated;
    tr.eta = eta;

    const LayerSpec& l1 = e.layer(0);
    double eps1 = threshold_1d(l1).epsilon_star;

    detail::StallDetector stall;
    double x = 1.0, y = 1.0, eff = eps;
    long phase = 0;
    bool just_updated = false;
    for (long total = 0; total < opts.max_total_iters; ++total) {
        double xn = eff * l1.lambda().eval(1.0 - l1.rho().eval(1.0 - x));
        if (xn > x) xn = x;
        ++tr.type1_iterations;
        ++phase;
        if (xn < opts.tol) return tr; // decoded
        bool gate = !just_updated && x - xn <= eta && eff >= eps1;
        bool forced = opts.force_every > 0 && phase >= opts.force_every;
        just_updated = false;
        if (gate || forced) {
            y = detail::layer2_update(e, eps, xn, y);
            eff = eps_eff(e, eps, y);
            tr.updates.push_back({++tr.n2, eff, xn, y});
            just_updated = true;
            phase = 0;
            if (tr.n2 >= opts.max_updates)
                throw budget_exhausted_error(
                    "schedule_simulate: layer-2 update budget exhausted");
            if (eff >= eps1 && stall.push(eff))
                throw invalid_regime_error(
                    "schedule_simulate: effective erasure probability stopped "
                    "decreasing; eps is at or above the bilayer threshold");
        } else if (phase >= opts.max_type1_per_phase) {
            throw budget_exhausted_error(
                "schedule_simulate: type-1 iteration budget exhausted within "
                "a phase");
        }
        x = xn;
    }
    throw budget_exhausted_error(
        "schedule_simulate: total iteration budget exhausted");
}

/// A schedule is valid exactly when some update pushed the effective
/// erasure probability below layer 1's threshold.
inline bool is_valid_schedule(const ScheduleTrace& trace,
                              double layer1_threshold) {
    for (const auto& u : trace.updates)
        if (u.eps_k < layer1_threshold) return true;
    return false;
}

// ---------------------------------------------------------------------------
// N2 sweep over a (delta1, delta2) grid of Tornado bilayer designs

struct N2SweepParams {
    double eps1 = 0.05;
    double eps2 = 0.2;
    double eps_fraction = 0.999;
    double tail_tol = 1e-12;
    Layer2Target mode = Layer2Target::full_eps2;
};

struct N2SweepRow {
    double delta1 = 0.0; // achieved type-1 gap
    double delta2 = 0.0; // achieved type-2 gap
    double rate = 0.0;
    int n2 = -1;
    double eps = 0.0;
    std::string mode; // schedule mode, or "error:<reason>" on failure
    int d1 = 0, d2 = 0;
    bool ok = false;
};

namespace detail {

// smallest-error depth for a requested Tornado gap at channel eps
inline int invert_tornado_gap(double delta, double eps) {
    if (!(delta > 0.0 && delta <= eps))
        throw std::invalid_argument("n2_sweep: gap target outside (0, eps]");
    int guess = std::max(1, int(std::lround(eps / delta)));
    int best = guess;
    double best_err = std::abs(tornado_gap(guess, eps) - delta);
    for (int d = std::max(1, guess - 2); d <= guess + 2; ++d) {
        double err = std::abs(tornado_gap(d, eps) - delta);
        if (err < best_err) {
            best = d;
            best_err = err;
        }
    }
    return best;
}

} // namespace detail

/// Builds the Tornado bilayer for each (delta1, delta2) target and counts
/// layer-2 updates of the optimal schedule at eps_fraction * eps2.
/// Row-level failures are recorded without aborting the sweep.
inline std::vector<N2SweepRow> n2_sweep(
    const N2SweepParams& params,
    const std::vector<std::pair<double, double>>& grid) {
    if (!(params.eps_fraction > 0.0 && params.eps_fraction < 1.0))
        throw std::invalid_argument("n2_sweep: eps_fraction outside (0,1)");
    std::vector<N2SweepRow> rows;
    rows.reserve(grid.size());
    for (const auto& [d1_target, d2_target] : grid) {
        N2SweepRow row;
        row.eps = params.eps_fraction * params.eps2;
        row.delta1 = d1_target;
        row.delta2 = d2_target;
        try {
            row.d1 = detail::invert_tornado_gap(d1_target, params.eps1);
            row.d2 = detail::invert_tornado_gap(d2_target, params.eps2);
            row.delta1 = tornado_gap(row.d1, params.eps1);
            row.delta2 = tornado_gap(row.d2, params.eps2);
            DesignTargets targets({params.eps1, params.eps2});
            auto c = construct_bilayer(
                targets, tornado_family(row.d1, params.tail_tol),
                tornado_family(row.d2, params.tail_tol), params.mode);
            row.rate = design_rate(c.ensemble);
            auto trace = schedule_analytic(c.ensemble, row.eps);
            row.n2 = trace.n2;
            row.mode = to_string(trace.mode);
            row.ok = true;
        } catch (const std::exception& ex) {
            row.mode = std::string("error:") + ex.what();
            row.ok = false;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace ldpcl
