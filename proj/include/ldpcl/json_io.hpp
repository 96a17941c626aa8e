#pragma once

// JSON serialization of the library types, plus parsing and validation of
// ensemble files.
//
// The on-disk ensemble schema is
//
//   {"layers": [{"lambda": {"<degree>": coef, ...},
//                "rho":    {"<degree>": coef, ...},
//                "p0":     0.0}, ...]}
//
// with degrees as decimal-string keys and coefficients in edge perspective.
// Writers are deterministic: fixed key order, degrees ascending, numbers
// printed with 12 significant digits, so identical inputs give
// byte-identical files.  Parsing is delegated to nlohmann::json; validation
// errors carry the path of the offending field (e.g. "layers[0].p0").

#include "ldpcl/construct.hpp"
#include "ldpcl/de_engine.hpp"
#include "ldpcl/degree_dist.hpp"
#include "ldpcl/schedule.hpp"
#include "ldpcl/threshold.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace ldpcl {

/// Ensemble-file violation with the JSON path of the offending field.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& path, const std::string& reason)
        : std::runtime_error(path + ": " + reason), path_(path) {}
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

namespace jsonio {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

inline std::string num_array(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i]);
    }
    out += ']';
    return out;
}

inline std::string str_array(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += quote(v[i]);
    }
    out += ']';
    return out;
}

inline std::string dist_object(const DegreePoly& p) {
    std::string out = "{";
    bool first = true;
    for (const auto& [deg, coef] : p.coeffs()) {
        if (!first) out += ", ";
        first = false;
        out += quote(std::to_string(deg)) + ": " + fmt(coef);
    }
    out += '}';
    return out;
}

inline std::string layer_object(const LayerSpec& l, const std::string& indent) {
    std::string out = "{\n";
    out += indent + "  \"lambda\": " + dist_object(l.lambda()) + ",\n";
    out += indent + "  \"rho\": " + dist_object(l.rho()) + ",\n";
    out += indent + "  \"p0\": " + fmt(l.p0()) + "\n";
    out += indent + "}";
    return out;
}

inline std::string layers_array(const Ensemble& e, const std::string& indent) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < e.size(); ++i) {
        out += indent + "  " + layer_object(e.layer(i), indent + "  ");
        out += (i + 1 < e.size()) ? ",\n" : "\n";
    }
    out += indent + "]";
    return out;
}

} // namespace jsonio

/// Canonical ensemble file contents.
inline std::string ensemble_to_json(const Ensemble& e) {
    return "{\n  \"layers\": " + jsonio::layers_array(e, "  ") + "\n}\n";
}

// ---------------------------------------------------------------------------
// parsing

namespace jsonio {

inline int parse_degree_key(const std::string& key, const std::string& path) {
    if (key.empty())
        throw ParseError(path, "degree keys must be decimal integers");
    char* end = nullptr;
    long v = std::strtol(key.c_str(), &end, 10);
    if (*end != '\0' || v < 1 || v > 1000000)
        throw ParseError(path + "." + quote(key),
                         "degree keys must be decimal integers >= 1");
    return static_cast<int>(v);
}

inline DegreePoly parse_dist(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object())
        throw ParseError(path, "must be an object mapping degrees to coefficients");
    if (j.empty()) throw ParseError(path, "must contain at least one degree");
    std::map<int, double> m;
    for (const auto& [key, val] : j.items()) {
        int deg = parse_degree_key(key, path);
        if (!val.is_number())
            throw ParseError(path + "." + quote(key),
                             "coefficient must be a number");
        m[deg] += val.get<double>();
    }
    try {
        return DegreePoly(m, Perspective::edge);
    } catch (const std::exception& ex) {
        throw ParseError(path, ex.what());
    }
}

} // namespace jsonio

/// Parses and validates an ensemble document.  Unknown top-level keys (such
/// as a provenance block) are ignored; schema violations raise ParseError
/// with the offending field path.
inline Ensemble parse_ensemble(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const std::exception& ex) {
        throw ParseError("(document)", ex.what());
    }
    if (!doc.is_object()) throw ParseError("(document)", "must be a JSON object");
    if (!doc.contains("layers"))
        throw ParseError("layers", "missing required key");
    const auto& layers = doc["layers"];
    if (!layers.is_array() || layers.empty())
        throw ParseError("layers", "must be a non-empty array");

    std::vector<LayerSpec> specs;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        std::string base = "layers[" + std::to_string(i) + "]";
        const auto& jl = layers[i];
        if (!jl.is_object()) throw ParseError(base, "must be an object");
        for (const char* key : {"lambda", "rho"})
            if (!jl.contains(key))
                throw ParseError(base + "." + key, "missing required key");
        DegreePoly lam = jsonio::parse_dist(jl["lambda"], base + ".lambda");
        DegreePoly rho = jsonio::parse_dist(jl["rho"], base + ".rho");
        double p0 = 0.0;
        if (jl.contains("p0")) {
            if (!jl["p0"].is_number())
                throw ParseError(base + ".p0", "must be a number");
            p0 = jl["p0"].get<double>();
        }
        try {
            specs.emplace_back(std::move(lam), std::move(rho), p0);
        } catch (const std::exception& ex) {
            throw ParseError(base + ".p0", ex.what());
        }
    }
    try {
        return Ensemble(std::move(specs));
    } catch (const std::exception& ex) {
        throw ParseError("layers", ex.what());
    }
}

// ---------------------------------------------------------------------------
// report serialization

inline std::string threshold_report_to_json(const ThresholdReport& r) {
    using namespace jsonio;
    std::string out = "{\n";
    out += "  \"epsilon_star\": " + fmt(r.epsilon_star) + ",\n";
    out += "  \"method\": " + quote(to_string(r.method)) + ",\n";
    out += "  \"branch_values\": " + num_array(r.branch_values) + ",\n";
    out += "  \"grid_points\": " + std::to_string(r.grid_points) + ",\n";
    out += "  \"tolerance\": " + fmt(r.tolerance) + ",\n";
    out += std::string("  \"degenerate\": ") + (r.degenerate ? "true" : "false") + ",\n";
    out += std::string("  \"fallback\": ") + (r.fallback ? "true" : "false") + ",\n";
    out += "  \"note\": " + quote(r.note) + "\n";
    out += "}\n";
    return out;
}

/// Iteration-indexed trace rows suitable for plotting DE trajectories.
inline std::string de_trace_to_json(const DETrace& t) {
    using namespace jsonio;
    std::string out = "{\n";
    out += "  \"eps\": " + fmt(t.eps) + ",\n";
    out += "  \"tol\": " + fmt(t.tol) + ",\n";
    out += "  \"status\": " + quote(to_string(t.status)) + ",\n";
    out += std::string("  \"converged_to_zero\": ") +
           (t.converged_to_zero ? "true" : "false") + ",\n";
    out += "  \"iterations\": " + std::to_string(t.iterations) + ",\n";
    out += "  \"final_state\": " + num_array(t.final_state) + ",\n";
    out += "  \"states\": [";
    for (std::size_t i = 0; i < t.states.size(); ++i) {
        if (i) out += ',';
        out += "\n    {\"l\": " + std::to_string(i + 1) +
               ", \"x\": " + num_array(t.states[i]) + "}";
    }
    out += t.states.empty() ? "]\n" : "\n  ]\n";
    out += "}\n";
    return out;
}

inline std::string schedule_trace_to_json(const ScheduleTrace& t) {
    using namespace jsonio;
    std::string out = "{\n";
    out += "  \"eps\": " + fmt(t.eps) + ",\n";
    out += "  \"mode\": " + quote(to_string(t.mode)) + ",\n";
    out += "  \"eta\": " + (t.eta ? fmt(*t.eta) : std::string("null")) + ",\n";
    out += "  \"n2\": " + std::to_string(t.n2) + ",\n";
    out += "  \"type1_iterations\": " + std::to_string(t.type1_iterations) + ",\n";
    out += "  \"updates\": [";
    for (std::size_t i = 0; i < t.updates.size(); ++i) {
        const auto& u = t.updates[i];
        if (i) out += ',';
        out += "\n    {\"k\": " + std::to_string(u.k) +
               ", \"eps_k\": " + fmt(u.eps_k) + ", \"x\": " + fmt(u.x) +
               ", \"y\": " + fmt(u.y) + "}";
    }
    out += t.updates.empty() ? "]\n" : "\n  ]\n";
    out += "}\n";
    return out;
}

inline std::string gap_report_object(const GapReport& g, const std::string& indent) {
    using namespace jsonio;
    std::string out = "{\n";
    out += indent + "  \"per_layer_gaps\": " + num_array(g.per_layer_gaps) + ",\n";
    out += indent + "  \"p0s\": " + num_array(g.p0s) + ",\n";
    out += indent + "  \"bound\": " + fmt(g.bound) + ",\n";
    out += indent + "  \"actual_gap\": " + fmt(g.actual_gap) + "\n";
    out += indent + "}";
    return out;
}

/// Optional verification results attached to a design's provenance block.
struct DesignVerification {
    std::vector<double> measured_thresholds; // prefix thresholds, layer 1..L
    GapReport gap;
};

/// Full output of the design command: the standard ensemble document plus a
/// provenance block recording targets, families, and (optionally) the
/// verification measurements.
inline std::string design_to_json(const Construction& c,
                                  const DesignVerification* verify = nullptr) {
    using namespace jsonio;
    const ConstructionInfo& info = c.info;
    std::string out = "{\n";
    out += "  \"layers\": " + layers_array(c.ensemble, "  ") + ",\n";
    out += "  \"provenance\": {\n";
    out += "    \"targets\": " + num_array(info.targets) + ",\n";
    out += "    \"component_targets\": " + num_array(info.component_targets) + ",\n";
    out += "    \"p0\": " + num_array(info.p0) + ",\n";
    out += "    \"a_s\": " + num_array(info.a_s) + ",\n";
    out += "    \"families\": " + str_array(info.family_names) + ",\n";
    out += "    \"layer2_target\": " + quote(to_string(info.layer2_target)) + ",\n";
    out += "    \"rate\": " + fmt(design_rate(c.ensemble));
    if (verify) {
        out += ",\n    \"measured_thresholds\": " +
               num_array(verify->measured_thresholds) + ",\n";
        out += "    \"gap_report\": " + gap_report_object(verify->gap, "    ");
    }
    out += "\n  }\n}\n";
    return out;
}

} // namespace ldpcl
