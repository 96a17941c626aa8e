#pragma once

// Degree distributions for multi-layer LDPC ensembles on the BEC.
//
// Polynomials are stored sparsely, keyed by node degree.  Edge-perspective
// polynomials use the convention  p(x) = sum_i p_i x^(i-1),  node-perspective
// ones use  P(x) = sum_i P_i x^i.  An L-layer ensemble carries one
// (lambda, rho, p0) triple per layer, where p0 is the fraction of variable
// nodes not connected to that layer's checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldpcl {

enum class Perspective { edge, node };

class DegreePoly {
public:
    DegreePoly(std::map<int, double> coeffs, Perspective persp)
        : coeffs_(std::move(coeffs)), persp_(persp) {
        validate_and_normalize();
        build_dense();
    }

    Perspective perspective() const { return persp_; }
    const std::map<int, double>& coeffs() const { return coeffs_; }

    double coeff(int degree) const {
        auto it = coeffs_.find(degree);
        return it == coeffs_.end() ? 0.0 : it->second;
    }

    int min_degree() const { return coeffs_.begin()->first; }
    int max_degree() const { return coeffs_.rbegin()->first; }

    /// Evaluate at x in [0, 1].  Throws std::domain_error outside.
    double eval(double x) const {
        // tolerate rounding spill from compositions like 1 - rho(1 - x),
        // where a many-term rho can sum to 1 + O(eps) at the endpoint
        if (!(x >= -1e-12 && x <= 1.0 + 1e-12))
            throw std::domain_error("DegreePoly::eval: x outside [0,1]");
        x = std::min(1.0, std::max(0.0, x));
        double acc = 0.0;
        for (std::size_t k = dense_.size(); k-- > 0;)
            acc = acc * x + dense_[k];
        return acc;
    }

    /// Integral over [0, 1]:  sum_i c_i / (e(i) + 1)  with e(i) the exponent.
    double integral01() const {
        double acc = 0.0;
        int shift = persp_ == Perspective::edge ? -1 : 0;
        for (const auto& [deg, c] : coeffs_) acc += c / double(deg + shift + 1);
        return acc;
    }

    /// Derivative at x = 1:  sum_i c_i e(i).
    double derivative_at_one() const {
        double acc = 0.0;
        int shift = persp_ == Perspective::edge ? -1 : 0;
        for (const auto& [deg, c] : coeffs_) acc += c * double(deg + shift);
        return acc;
    }

private:
    void validate_and_normalize() {
        if (coeffs_.empty())
            throw std::invalid_argument("degree polynomial: no coefficients");
        int min_deg = persp_ == Perspective::edge ? 1 : 0;
        double sum = 0.0;
        for (const auto& [deg, c] : coeffs_) {
            if (deg < min_deg)
                throw std::invalid_argument(
                    "degree polynomial: degree " + std::to_string(deg) +
                    " below minimum " + std::to_string(min_deg));
            if (deg > max_supported_degree)
                throw std::invalid_argument(
                    "degree polynomial: degree " + std::to_string(deg) + " too large");
            if (!(c >= 0.0))
                throw std::invalid_argument(
                    "degree polynomial: negative coefficient at degree " +
                    std::to_string(deg));
            sum += c;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument(
                "degree polynomial: coefficients sum to " + std::to_string(sum) +
                ", not 1");
        // Renormalize real drift, but keep sub-1e-12 deviations verbatim:
        // coefficients quantized to 12 significant digits on the wire sum to
        // within 5e-13 of 1, and leaving them untouched makes
        // parse-then-serialize the identity on such files.
        if (std::abs(sum - 1.0) > 1e-12)
            for (auto& [deg, c] : coeffs_) c /= sum;
        // drop exact zeros, but never all of them
        for (auto it = coeffs_.begin(); it != coeffs_.end();) {
            if (it->second == 0.0 && coeffs_.size() > 1)
                it = coeffs_.erase(it);
            else
                ++it;
        }
    }

    void build_dense() {
        int shift = persp_ == Perspective::edge ? -1 : 0;
        dense_.assign(std::size_t(max_degree() + shift) + 1, 0.0);
        for (const auto& [deg, c] : coeffs_) dense_[std::size_t(deg + shift)] = c;
    }

    static constexpr int max_supported_degree = 1 << 20;

    std::map<int, double> coeffs_;
    Perspective persp_;
    std::vector<double> dense_;
};

/// Node-perspective counterpart of an edge-perspective polynomial:
///   P(x) = p0 + (1 - p0) * int_0^x p / int_0^1 p,   P_i proportional to p_i / i.
inline DegreePoly edge_to_node(const DegreePoly& p, double p0 = 0.0) {
    if (p.perspective() != Perspective::edge)
        throw std::invalid_argument("edge_to_node: input must be edge-perspective");
    if (!(p0 >= 0.0 && p0 <= 1.0))
        throw std::invalid_argument("edge_to_node: p0 outside [0,1]");
    std::map<int, double> out;
    if (p0 > 0.0) out[0] = p0;
    if (p0 < 1.0) {
        double norm = 0.0;
        for (const auto& [deg, c] : p.coeffs()) norm += c / double(deg);
        for (const auto& [deg, c] : p.coeffs())
            out[deg] = (1.0 - p0) * (c / double(deg)) / norm;
    }
    return DegreePoly(std::move(out), Perspective::node);
}

/// Inverse of edge_to_node; returns the edge polynomial and the degree-0 mass.
inline std::pair<DegreePoly, double> node_to_edge(const DegreePoly& P) {
    if (P.perspective() != Perspective::node)
        throw std::invalid_argument("node_to_edge: input must be node-perspective");
    double p0 = P.coeff(0);
    if (1.0 - p0 <= 0.0)
        throw std::invalid_argument("node_to_edge: no positive-degree mass");
    std::map<int, double> out;
    double norm = 0.0;
    for (const auto& [deg, c] : P.coeffs())
        if (deg > 0) norm += c * double(deg);
    for (const auto& [deg, c] : P.coeffs())
        if (deg > 0) out[deg] = c * double(deg) / norm;
    return {DegreePoly(std::move(out), Perspective::edge), p0};
}

/// One layer of an ensemble: variable and check edge distributions plus the
/// fraction p0 of variable nodes with no edge into this layer.
class LayerSpec {
public:
    LayerSpec(DegreePoly lambda, DegreePoly rho, double p0 = 0.0)
        : lambda_(std::move(lambda)), rho_(std::move(rho)), p0_(p0),
          Lambda_(edge_to_node(lambda_, p0_)) {
        if (lambda_.perspective() != Perspective::edge)
            throw std::invalid_argument("LayerSpec: lambda must be edge-perspective");
        if (rho_.perspective() != Perspective::edge)
            throw std::invalid_argument("LayerSpec: rho must be edge-perspective");
        if (!(p0_ >= 0.0 && p0_ <= 1.0))
            throw std::invalid_argument("LayerSpec: p0 outside [0,1]");
    }

    const DegreePoly& lambda() const { return lambda_; }
    const DegreePoly& rho() const { return rho_; }
    double p0() const { return p0_; }
    /// Node-perspective variable distribution Lambda (includes the p0 mass).
    const DegreePoly& Lambda() const { return Lambda_; }

private:
    DegreePoly lambda_;
    DegreePoly rho_;
    double p0_;
    DegreePoly Lambda_;
};

class Ensemble {
public:
    explicit Ensemble(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
        if (layers_.empty())
            throw std::invalid_argument("Ensemble: needs at least one layer");
        if (layers_[0].p0() != 0.0)
            throw std::invalid_argument("Ensemble: layers[0].p0 must be 0");
        if (layers_[0].lambda().coeff(1) != 0.0)
            throw std::invalid_argument(
                "Ensemble: layers[0].lambda must have no degree-1 mass");
    }

    std::size_t size() const { return layers_.size(); }
    const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
    const std::vector<LayerSpec>& layers() const { return layers_; }

private:
    std::vector<LayerSpec> layers_;
};

/// Design rate  R = 1 - sum_i (int rho_i / int lambda_i) (1 - p0_i).
inline double design_rate(const Ensemble& e) {
    double r = 1.0;
    for (const auto& layer : e.layers())
        r -= layer.rho().integral01() / layer.lambda().integral01() *
             (1.0 - layer.p0());
    return r;
}

} // namespace ldpcl
