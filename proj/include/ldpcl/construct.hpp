#pragma once

// Ensemble constructions: the bilayer recipe, its L-layer generalization,
// the Tornado component family, and additive gap-to-capacity accounting.
//
// The bilayer recipe takes targets eps1 < eps2, a first layer with
// single-layer threshold eps1, and a threshold-parameterized generator for
// the second layer.  Layer 1 alone stalls at x_s(eps2) when the channel runs
// at eps2; the surviving variable nodes see an effective erasure probability
// eps2 * a_s(eps2), so a second layer whose component threshold matches that
// value (or, more conservatively, eps2 itself) pushes decoding through.  The
// idle fraction p0 = eps1/eps2 keeps the layer-1-only threshold at eps1.
// The L-layer version repeats the argument against the largest fixed point
// of each prefix.

#include "ldpcl/de_engine.hpp"
#include "ldpcl/degree_dist.hpp"
#include "ldpcl/threshold.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ldpcl {

struct DesignTargets {
    std::vector<double> thresholds;

    explicit DesignTargets(std::vector<double> t) : thresholds(std::move(t)) {
        if (thresholds.empty())
            throw std::invalid_argument("DesignTargets: empty threshold list");
        double prev = 0.0;
        for (double v : thresholds) {
            if (!(v > prev && v < 1.0))
                throw std::invalid_argument(
                    "DesignTargets: thresholds must be strictly increasing in (0,1)");
            prev = v;
        }
    }

    std::size_t size() const { return thresholds.size(); }
};

/// A component-code family: maps a requested single-layer threshold to a
/// (lambda, rho) pair whose measured threshold lands within 1e-3 of it.
struct ComponentFamily {
    std::string name;
    std::function<std::pair<DegreePoly, DegreePoly>(double)> make;
};

// ---------------------------------------------------------------------------
// Tornado family

struct TornadoParams {
    int D = 1;              // variable-side truncation depth
    double eps = 0.5;       // target threshold
    double tail_tol = 1e-12; // Poisson mass dropped during truncation
};

inline double harmonic_number(int D) {
    if (D < 1) throw std::invalid_argument("harmonic_number: D must be >= 1");
    double h = 0.0;
    for (int i = D; i >= 1; --i) h += 1.0 / i;
    return h;
}

/// Harmonic-weight variable side, Poisson check side with alpha = H(D)/eps.
inline std::pair<DegreePoly, DegreePoly> tornado_layer(const TornadoParams& p) {
    if (p.D < 1) throw std::invalid_argument("tornado_layer: D must be >= 1");
    if (!(p.eps > 0.0 && p.eps < 1.0))
        throw std::invalid_argument("tornado_layer: eps must lie in (0,1)");
    if (!(p.tail_tol < 1e-6))
        throw std::invalid_argument("tornado_layer: tail_tol too loose (>= 1e-6)");

    double H = harmonic_number(p.D);
    std::map<int, double> lam;
    for (int i = 1; i <= p.D; ++i) lam[i + 1] = 1.0 / (H * i);

    // Poisson weights in log space so large alpha cannot underflow; the
    // coefficient on exponent j (edge degree j+1) is proportional to
    // alpha^j / j!.
    double alpha = H / p.eps;
    int jmax = int(std::ceil(alpha + 12.0 * std::sqrt(alpha) + 60.0));
    std::vector<double> w(jmax + 1);
    double log_alpha = std::log(alpha);
    double peak = -std::numeric_limits<double>::infinity();
    for (int j = 0; j <= jmax; ++j) {
        w[j] = j * log_alpha - std::lgamma(j + 1.0);
        peak = std::max(peak, w[j]);
    }
    double total = 0.0;
    for (int j = 0; j <= jmax; ++j) {
        w[j] = std::exp(w[j] - peak);
        total += w[j];
    }
    // trim up to tail_tol/2 of mass from each end
    double cut = 0.5 * p.tail_tol * total;
    int lo = 0, hi = jmax;
    for (double acc = 0.0; lo < hi && acc + w[lo] <= cut; ++lo) acc += w[lo];
    for (double acc = 0.0; hi > lo && acc + w[hi] <= cut; --hi) acc += w[hi];
    double kept = 0.0;
    for (int j = lo; j <= hi; ++j) kept += w[j];
    std::map<int, double> rho;
    for (int j = lo; j <= hi; ++j)
        if (w[j] > 0.0) rho[j + 1] = w[j] / kept;

    return {DegreePoly(lam, Perspective::edge),
            DegreePoly(rho, Perspective::edge)};
}

/// Closed-form additive gap 1 - eps - R of the (untruncated) Tornado pair.
inline double tornado_gap(int D, double eps) {
    double alpha = harmonic_number(D) / eps;
    return eps * ((1.0 - std::exp(-alpha)) * (1.0 + 1.0 / D) - 1.0);
}

inline ComponentFamily tornado_family(int D, double tail_tol = 1e-12) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "tornado(D=%d)", D);
    return {buf, [D, tail_tol](double t) {
                return tornado_layer({D, t, tail_tol});
            }};
}

// ---------------------------------------------------------------------------
// Check-regular family: lambda = x with checks split across two consecutive
// degrees r, r+1 so that rho'(1) = 1/t exactly.  Since 1 - rho(1-x) is
// concave, x / (1 - rho(1-x)) is minimized at x -> 0, making the threshold
// exactly t.

inline std::pair<DegreePoly, DegreePoly> checkreg_layer(double t) {
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("checkreg_layer: threshold must lie in (0,1)");
    int r = int(std::floor(1.0 / t)) + 1;
    double theta = r - 1.0 / t;
    std::map<int, double> rho;
    if (theta > 0.0) rho[r] = theta;
    if (theta < 1.0) rho[r + 1] = 1.0 - theta;
    return {DegreePoly({{2, 1.0}}, Perspective::edge),
            DegreePoly(rho, Perspective::edge)};
}

inline ComponentFamily checkreg_family() {
    return {"checkreg", [](double t) { return checkreg_layer(t); }};
}

// ---------------------------------------------------------------------------
// Constructions

enum class Layer2Target { exact_as, full_eps2 };

inline const char* to_string(Layer2Target m) {
    return m == Layer2Target::exact_as ? "exact_as" : "full_eps2";
}

struct ConstructionInfo {
    std::vector<double> targets;           // eps_1 .. eps_L
    std::vector<double> component_targets; // effective threshold given to each family
    std::vector<double> p0;                // idle fractions, p0[0] = 0
    std::vector<double> a_s;               // prefix attenuation before layers 2..L
    std::vector<std::string> family_names;
    Layer2Target layer2_target = Layer2Target::exact_as;
};

struct Construction {
    Ensemble ensemble;
    ConstructionInfo info;
};

/// L-layer construction: each new layer is designed against the largest
/// fixed point of the prefix built so far.
inline Construction construct_multilayer(
    const DesignTargets& targets, const std::vector<ComponentFamily>& families,
    Layer2Target mode = Layer2Target::exact_as) {
    std::size_t L = targets.size();
    if (families.size() != L)
        throw std::invalid_argument(
            "construct_multilayer: need one family per target");

    ConstructionInfo info;
    info.targets = targets.thresholds;
    info.layer2_target = mode;

    double eps1 = targets.thresholds[0];
    auto [lam1, rho1] = families[0].make(eps1);
    double measured1 = threshold_1d(lam1, rho1).epsilon_star;
    if (std::abs(measured1 - eps1) > 1e-3)
        throw std::invalid_argument(
            "construct: layer-1 threshold misses its target by more than 1e-3");

    std::vector<LayerSpec> layers;
    layers.emplace_back(lam1, rho1, 0.0);
    info.component_targets.push_back(eps1);
    info.p0.push_back(0.0);
    info.family_names.push_back(families[0].name);

    for (std::size_t i = 1; i < L; ++i) {
        double eps_i = targets.thresholds[i];
        Ensemble prefix(layers);
        std::vector<double> xs =
            largest_partial_fixed_point(prefix, eps_i, layers.size());
        double a = 1.0;
        for (std::size_t j = 0; j < layers.size(); ++j) {
            double u = 1.0 - layers[j].rho().eval(1.0 - xs[j]);
            a *= layers[j].Lambda().eval(u);
        }
        if (!(a > 0.0))
            throw std::invalid_argument(
                "construct: prefix already decodes at the next target; "
                "no attenuation to design against");
        double component = mode == Layer2Target::exact_as ? eps_i * a : eps_i;
        auto [lam, rho] = families[i].make(component);
        layers.emplace_back(lam, rho,
                            targets.thresholds[i - 1] / eps_i);
        info.component_targets.push_back(component);
        info.p0.push_back(targets.thresholds[i - 1] / eps_i);
        info.a_s.push_back(a);
        info.family_names.push_back(families[i].name);
    }
    return {Ensemble(layers), std::move(info)};
}

/// Pins a caller-supplied (lambda, rho) pair as a degenerate family.
inline ComponentFamily fixed_pair_family(std::pair<DegreePoly, DegreePoly> p,
                                         std::string name = "fixed") {
    return {std::move(name),
            [p = std::move(p)](double) { return p; }};
}

/// Bilayer construction with an explicit first layer.
inline Construction construct_bilayer(
    const DesignTargets& targets, std::pair<DegreePoly, DegreePoly> layer1,
    const ComponentFamily& layer2_family,
    Layer2Target mode = Layer2Target::exact_as) {
    if (targets.size() != 2)
        throw std::invalid_argument("construct_bilayer: need exactly 2 targets");
    return construct_multilayer(
        targets, {fixed_pair_family(std::move(layer1)), layer2_family}, mode);
}

/// Bilayer construction with both layers drawn from families.
inline Construction construct_bilayer(
    const DesignTargets& targets, const ComponentFamily& layer1_family,
    const ComponentFamily& layer2_family,
    Layer2Target mode = Layer2Target::exact_as) {
    if (targets.size() != 2)
        throw std::invalid_argument("construct_bilayer: need exactly 2 targets");
    return construct_multilayer(targets, {layer1_family, layer2_family}, mode);
}

// ---------------------------------------------------------------------------
// Gap accounting

struct GapReport {
    std::vector<double> per_layer_gaps; // delta_i = 1 - eps_i^comp - R_i^comp
    std::vector<double> p0s;
    double bound = 0.0;      // sum_i delta_i * (1 - p0_i)
    double actual_gap = 0.0; // 1 - eps_L - design_rate
};

/// Node-average variable degree attached to a layer, (1-p0)/int(lambda).
inline double average_degree(const LayerSpec& layer) {
    return (1.0 - layer.p0()) / layer.lambda().integral01();
}

namespace detail {

inline GapReport gap_report_impl(const Ensemble& e,
                                 const std::vector<double>& targets,
                                 const std::vector<double>& component) {
    if (targets.size() != e.size() || component.size() != e.size())
        throw std::invalid_argument("gap_report: one threshold per layer required");
    GapReport rep;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const LayerSpec& l = e.layer(i);
        double Ri = 1.0 - l.rho().integral01() / l.lambda().integral01();
        rep.per_layer_gaps.push_back(1.0 - component[i] - Ri);
        rep.p0s.push_back(l.p0());
        rep.bound += rep.per_layer_gaps.back() * (1.0 - l.p0());
    }
    rep.actual_gap = 1.0 - targets.back() - design_rate(e);
    return rep;
}

} // namespace detail

/// Gap report with component thresholds taken to equal the targets (exact
/// for full_eps2-built ensembles and for the published rate tables).
inline GapReport gap_report(const Ensemble& e, const DesignTargets& targets) {
    return detail::gap_report_impl(e, targets.thresholds, targets.thresholds);
}

/// Gap report using the true per-layer component thresholds recorded during
/// construction.
inline GapReport gap_report(const Construction& c) {
    return detail::gap_report_impl(c.ensemble, c.info.targets,
                                   c.info.component_targets);
}

} // namespace ldpcl
