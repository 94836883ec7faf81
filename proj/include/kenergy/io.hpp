#pragma once

// JSON records for functions, polytopes and reports; CSV series.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kenergy/energy.hpp"
#include "kenergy/errors.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/polytope.hpp"
#include "kenergy/pwa.hpp"
#include "kenergy/stability.hpp"

namespace kenergy {

using json = nlohmann::json;

/// Round-trip decimal form used for every CSV cell.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) x = 0.0;  // drop the sign of -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Non-finite numbers become null.
inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Records

inline json to_json(const Interval& I) { return json::array({I.lo, I.hi}); }

inline json to_json(const GridFunction& f) {
    json j{{"dim", 1}, {"domain", to_json(f.domain())}, {"grid_size", f.cells()}, {"values", f.data()}};
    if (f.tails()) j["tail_slopes"] = json::array({f.tails()->left, f.tails()->right});
    return j;
}

inline json to_json(const GridFunction2D& f) {
    return {{"dim", 2},
            {"domain", json::array({to_json(f.axis1()), to_json(f.axis2())})},
            {"grid_size", json::array({f.cells1(), f.cells2()})},
            {"values", f.data()}};
}

inline json to_json(const Polytope& P) {
    if (P.dim() == 1) return {{"interval", to_json(P.as_interval())}};
    json v = json::array();
    for (const Vec2& p : P.vertices()) v.push_back(json::array({p.x, p.y}));
    return {{"vertices", v}};
}

inline json to_json(const PiecewiseAffine1D& f) {
    return {{"dim", 1},
            {"domain", to_json(f.domain())},
            {"offset", f.value_at_lo()},
            {"breakpoints", f.breakpoints()},
            {"slopes", f.slopes()}};
}

inline json to_json(const MaxAffine2D& f) {
    json forms = json::array();
    for (const auto& g : f.forms()) forms.push_back(json::array({g.a.x, g.a.y, g.b}));
    return {{"dim", 2}, {"affine_forms", forms}, {"polytope", to_json(f.domain())}};
}

namespace detail {

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(std::string("JSON record lacks '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("JSON field '") + key + "': " + e.what());
    }
}

inline Interval interval_from(const json& j) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("interval must have two entries");
    return {v[0], v[1]};
}

}  // namespace detail

inline Polytope polytope_from_json(const json& j) {
    try {
        if (j.is_string()) return Polytope::named(j.get<std::string>());
        if (j.contains("interval")) {
            Interval I = detail::interval_from(j.at("interval"));
            return Polytope::interval(I.lo, I.hi);
        }
        if (j.contains("vertices")) {
            Polygon poly;
            for (const auto& v : j.at("vertices")) {
                auto p = v.get<std::vector<double>>();
                if (p.size() != 2) throw ConfigError("polygon vertex must have two coordinates");
                poly.push_back({p[0], p[1]});
            }
            return Polytope::polygon(std::move(poly));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("polytope record: ") + e.what());
    }
    throw ConfigError("polytope record needs 'interval', 'vertices' or a name");
}

inline GridFunction grid_from_json(const json& j) {
    try {
        if (detail::field<int>(j, "dim") != 1) throw ConfigError("expected a 1D grid record");
        Interval d = detail::interval_from(j.at("domain"));
        auto values = detail::field<std::vector<double>>(j, "values");
        if (j.contains("grid_size") && detail::field<std::size_t>(j, "grid_size") + 1 != values.size())
            throw ConfigError("grid_size does not match the number of values");
        std::optional<TailSlopes> tails;
        if (j.contains("tail_slopes") && !j.at("tail_slopes").is_null()) {
            Interval t = detail::interval_from(j.at("tail_slopes"));
            tails = TailSlopes{t.lo, t.hi};
        }
        return GridFunction(d, std::move(values), tails);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid record: ") + e.what());
    }
}

inline GridFunction2D grid2d_from_json(const json& j) {
    try {
        if (detail::field<int>(j, "dim") != 2) throw ConfigError("expected a 2D grid record");
        const json& d = j.at("domain");
        auto n = detail::field<std::vector<std::size_t>>(j, "grid_size");
        if (d.size() != 2 || n.size() != 2) throw ConfigError("2D grid needs two axes");
        return GridFunction2D(detail::interval_from(d[0]), detail::interval_from(d[1]), n[0], n[1],
                              detail::field<std::vector<double>>(j, "values"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("2D grid record: ") + e.what());
    }
}

inline PiecewiseAffine1D pwa_from_json(const json& j) {
    try {
        return PiecewiseAffine1D(detail::interval_from(j.at("domain")),
                                 detail::field<double>(j, "offset"),
                                 detail::field<std::vector<double>>(j, "breakpoints"),
                                 detail::field<std::vector<double>>(j, "slopes"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("piecewise-affine record: ") + e.what());
    }
}

inline MaxAffine2D max_affine_from_json(const json& j) {
    try {
        std::vector<AffineForm2> forms;
        for (const auto& f : j.at("affine_forms")) {
            auto c = f.get<std::vector<double>>();
            if (c.size() != 3) throw ConfigError("affine form needs [a1, a2, b]");
            forms.push_back({{c[0], c[1]}, c[2]});
        }
        return MaxAffine2D(polytope_from_json(j.at("polytope")), std::move(forms));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("max-affine record: ") + e.what());
    }
}

using AnyFunction = std::variant<GridFunction, GridFunction2D, PiecewiseAffine1D, MaxAffine2D>;

/// Dispatches on the record's keys.
inline AnyFunction function_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("function record must be a JSON object");
    if (j.contains("affine_forms")) return max_affine_from_json(j);
    if (j.contains("breakpoints")) return pwa_from_json(j);
    int dim = detail::field<int>(j, "dim");
    if (dim == 1) return grid_from_json(j);
    if (dim == 2) return grid2d_from_json(j);
    throw ConfigError("unsupported dimension " + std::to_string(dim));
}

inline json to_json(const AnyFunction& f) {
    return std::visit([](const auto& g) { return to_json(g); }, f);
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const EnergyReport& r) {
    json j{{"convention", to_string(r.convention)},
           {"linear_part", r.linear_part},
           {"entropy_dual", number_or_null(r.entropy_dual)},
           {"total", number_or_null(r.total)},
           {"finite", r.finite}};
    if (r.entropy_primal) j["entropy_primal"] = number_or_null(*r.entropy_primal);
    if (r.newtonian) j["newtonian"] = *r.newtonian;
    if (r.identity_residual) j["identity_residual"] = *r.identity_residual;
    return j;
}

inline json to_json(const RelativeNorm& n) { return {{"value", n.value}, {"minimizer_l", n.minimizer_l}}; }

inline json to_json(const StabilityReport& r) {
    return {{"convention", to_string(r.convention)},
            {"delta_estimate", r.delta_estimate},
            {"family_size", r.family_size},
            {"excluded", r.excluded},
            {"witness_label", r.witness.label},
            {"witness", std::visit([](const auto& f) { return to_json(f); }, r.witness.fn)},
            {"witness_linear_part", r.witness_linear},
            {"witness_relative_norm", r.witness_norm}};
}

inline json to_json(const UniquenessCertificate& c) {
    return {{"convention", to_string(c.convention)},
            {"hypothesis", {{"ok", c.hypothesis_ok},
                            {"density_sup", number_or_null(c.density_sup)},
                            {"inverse_relation_residual", number_or_null(c.inverse_relation_residual)}}},
            {"energy", {{"constant", c.energy_constant},
                        {"variation", number_or_null(c.energy_variation)},
                        {"t", c.ts},
                        {"values", [&] {
                             json a = json::array();
                             for (double e : c.energies) a.push_back(number_or_null(e));
                             return a;
                         }()}}},
            {"hessian_agreement", c.hessian_agreement},
            {"hessians_agree", c.hessians_agree},
            {"convexity_defect", c.convexity_defect},
            {"difference_convex", c.difference_convex},
            {"L_of_difference", c.L_of_difference},
            {"linear_vanishes", c.linear_vanishes},
            {"affine_residual", c.affine_residual},
            {"affine_conclusion", c.affine_conclusion},
            {"failed_stage", c.failed_stage ? json(*c.failed_stage) : json(nullptr)}};
}

inline json to_json(const SlopeReport& r) {
    json rows = json::array();
    for (const auto& s : r.samples)
        rows.push_back({{"t", s.t},
                        {"energy", s.energy},
                        {"energy_over_t", s.energy_over_t},
                        {"correction", s.correction},
                        {"correction_bound", number_or_null(s.correction_bound)},
                        {"sandwich_holds", s.sandwich_holds}});
    return {{"convention", to_string(r.convention)}, {"prediction", r.prediction}, {"samples", rows}};
}

// ---------------------------------------------------------------------------
// CSV

/// Series writer: a "# convention: ..." line, then a header row, then rows.
class Csv {
public:
    Csv(Convention conv, std::vector<std::string> columns) : Csv(to_string(conv), std::move(columns)) {}
    Csv(const std::string& convention, std::vector<std::string> columns) : width_(columns.size()) {
        out_ << "# convention: " << convention << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& cells) {
        if (cells.size() != width_) throw InvalidArgument("Csv: row width differs from header");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << format_double(cells[i]);
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t width_;
    std::ostringstream out_;
};

}  // namespace kenergy
