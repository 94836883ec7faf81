#pragma once

// Batch front-end: a RunConfig in, a JSON report and a CSV series out.
// tools/kenergy.cpp only parses flags and writes files.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kenergy/convex_core.hpp"
#include "kenergy/energy.hpp"
#include "kenergy/errors.hpp"
#include "kenergy/geodesic.hpp"
#include "kenergy/io.hpp"
#include "kenergy/polytope.hpp"
#include "kenergy/stability.hpp"

namespace kenergy {

struct RunConfig {
    std::string command;
    std::optional<std::string> input;     ///< JSON function record (or {u, polytope, convention})
    std::optional<std::string> builtin;   ///< u0 | quadratic | kink | phi0 | u0-square
    std::optional<std::string> input2;    ///< second function: direction or u1
    std::optional<std::string> builtin2;  ///< also: affine | minimizer (certify)
    std::optional<std::string> polytope;  ///< name or path to a polytope record
    std::optional<std::size_t> grid;
    Interval window = kDefaultWindow;
    std::optional<Convention> convention;
    std::vector<double> ts;
    double tmax = 1.0;
    int steps = 11;
    std::uint64_t seed = 0;
    bool scale_inf_by_volume = false;
    std::optional<std::string> out;  ///< output prefix
};

struct RunResult {
    int exit_code = 0;  ///< 0 ok, 1 invariant violation or computation error, 2 usage error
    std::string json;
    std::string csv;
    std::string message;  ///< human-readable diagnostic for stderr
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"transform", "geodesic",  "counterexample",
                                                "energy",    "slope",     "stability",
                                                "minimize",  "certify"};
    return names;
}

namespace detail {

inline void validate(const RunConfig& c) {
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
        throw ConfigError("unknown command '" + c.command + "'");
    if (c.grid && *c.grid < 4) throw ConfigError("--grid must be at least 4");
    if (!(c.window.hi > c.window.lo)) throw ConfigError("--window must satisfy lo < hi");
    if (!(c.tmax > 0)) throw ConfigError("--tmax must be positive");
    if (c.steps < 2) throw ConfigError("--steps must be at least 2");
    for (double t : c.ts)
        if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("--t values must be nonnegative");
    if (c.input && c.builtin) throw ConfigError("give either --input or --builtin, not both");
    if (c.input2 && c.builtin2) throw ConfigError("give either --input2 or --builtin2, not both");
}

struct Loaded {
    AnyFunction fn;
    std::optional<Polytope> polytope;
    std::optional<Convention> convention;
};

inline AnyFunction builtin_function(const std::string& name, std::size_t grid, const RunConfig& c) {
    if (name == "u0") return sample_fubini_study_symbol(grid);
    if (name == "quadratic")
        return GridFunction::sample({0.0, 1.0}, grid, [](double y) { return 0.5 * y * y; });
    if (name == "kink") return equator_kink();
    if (name == "phi0") return sample_fubini_study_potential(c.window, grid);
    if (name == "u0-square")
        return GridFunction2D::sample({0.0, 1.0}, {0.0, 1.0}, c.grid.value_or(kDefaultCells2D),
                                      c.grid.value_or(kDefaultCells2D), [](double a, double b) {
                                          return fubini_study_symbol(a) + fubini_study_symbol(b);
                                      });
    throw ConfigError("unknown builtin '" + name + "'");
}

inline Loaded load(const std::optional<std::string>& path, const std::optional<std::string>& name,
                   const std::string& fallback, std::size_t grid, const RunConfig& c) {
    if (path) {
        json j = read_json_file(*path);
        Loaded l{GridFunction({0.0, 1.0}, {0.0, 0.0}), std::nullopt, std::nullopt};
        if (j.is_object() && j.contains("u")) {
            l.fn = function_from_json(j.at("u"));
            if (j.contains("polytope")) l.polytope = polytope_from_json(j.at("polytope"));
            if (j.contains("convention")) l.convention = parse_convention(j.at("convention").get<std::string>());
        } else {
            l.fn = function_from_json(j);
        }
        return l;
    }
    return {builtin_function(name.value_or(fallback), grid, c), std::nullopt, std::nullopt};
}

/// Compact 1D grid view of a function; PWA inputs are sampled.
inline GridFunction as_grid(const AnyFunction& f, std::size_t grid, const char* what) {
    if (auto g = std::get_if<GridFunction>(&f)) return *g;
    if (auto p = std::get_if<PiecewiseAffine1D>(&f)) return p->sample(grid);
    throw ConfigError(std::string(what) + ": expected a one-dimensional function");
}

/// Grid `g` resampled onto `like`'s nodes if they differ.
inline GridFunction on_grid_of(const AnyFunction& f, const GridFunction& like, const char* what) {
    if (auto p = std::get_if<PiecewiseAffine1D>(&f)) {
        if (p->domain() != like.domain()) throw DomainMismatch(std::string(what) + ": domains differ");
        return p->sample(like.cells());
    }
    GridFunction g = as_grid(f, like.cells(), what);
    if (g.domain() == like.domain() && g.cells() == like.cells()) return g;
    if (g.domain() != like.domain()) throw DomainMismatch(std::string(what) + ": domains differ");
    return GridFunction::sample(like.domain(), like.cells(), [&](double y) { return g(y); });
}

inline Polytope polytope_of(const RunConfig& c, const std::optional<Polytope>& from_input,
                            const std::string& fallback) {
    if (c.polytope) {
        if (c.polytope->find('.') != std::string::npos || c.polytope->find('/') != std::string::npos)
            return polytope_from_json(read_json_file(*c.polytope));
        return Polytope::named(*c.polytope);
    }
    if (from_input) return *from_input;
    return Polytope::named(fallback);
}

inline Polytope interval_polytope(const GridFunction& u) {
    return Polytope::interval(u.domain().lo, u.domain().hi);
}

// --- subcommands ------------------------------------------------------------

inline RunResult cmd_transform(const RunConfig& c, Convention conv) {
    const std::size_t grid = c.grid.value_or(kDefaultCells);
    Loaded in = load(c.input, c.builtin, "u0", grid, c);
    RunResult r;
    if (auto g2 = std::get_if<GridFunction2D>(&in.fn)) {
        GridFunction2D out = legendre(*g2, c.window, c.window, g2->cells1(), g2->cells2());
        r.json = json{{"transform", to_json(out)}}.dump();
        return r;
    }
    GridFunction f = as_grid(in.fn, grid, "transform");
    LegendreOptions opts;
    opts.cells = grid;
    if (!f.on_real_line()) opts.window = c.window;
    GridFunction out = legendre(f, opts);
    r.json = json{{"input", to_json(f)}, {"transform", to_json(out)}}.dump();
    Csv csv(conv, {"x", "value"});
    for (std::size_t i = 0; i < out.size(); ++i) csv.row({out.node(i), out[i]});
    r.csv = csv.str();
    return r;
}

inline RunResult cmd_geodesic(const RunConfig& c, Convention conv) {
    const std::size_t grid = c.grid.value_or(kDefaultCells);
    GridFunction u0 = as_grid(load(c.input, c.builtin, "u0", grid, c).fn, grid, "geodesic");
    GridFunction v = on_grid_of(load(c.input2, c.builtin2, "kink", grid, c).fn, u0, "geodesic");
    std::vector<double> ts = c.ts.empty() ? std::vector<double>{0.0, 0.25, 0.5, 1.0} : c.ts;
    double tmax = *std::max_element(ts.begin(), ts.end());
    GeodesicSegment seg(u0, v, {0.0, tmax});
    Csv csv(conv, {"t", "x", "phi"});
    json curves = json::array();
    for (double t : ts) {
        GridFunction phi = seg.primal(t, {.cells = grid, .window = c.window});
        for (std::size_t i = 0; i < phi.size(); ++i) csv.row({t, phi.node(i), phi[i]});
        auto dec = second_derivative_decompose(seg.at(t));
        curves.push_back({{"t", t},
                          {"c11_seminorm", number_or_null(c11_seminorm(phi))},
                          {"dual_atom_mass", dec.atom_mass()}});
    }
    RunResult r;
    r.json = json{{"convention", to_string(conv)},
                  {"u0", to_json(u0)},
                  {"v", to_json(v)},
                  {"t_range", json::array({0.0, tmax})},
                  {"torus_orbit", is_torus_orbit(seg)},
                  {"curves", curves}}
                 .dump();
    r.csv = csv.str();
    return r;
}

inline RunResult cmd_counterexample(const RunConfig& c, Convention conv) {
    const std::size_t grid = c.grid.value_or(kDefaultCells);
    const Polytope P = Polytope::interval(0.0, 1.0);
    const GridFunction u0 = sample_fubini_study_symbol(grid);
    const PiecewiseAffine1D kink = equator_kink();
    const GridFunction v = kink.sample(grid);
    const GeodesicSegment seg = GeodesicSegment::ray(u0, v);
    const MabuchiOptions no_primal{.primal = false};
    Csv csv(conv, {"t", "M", "linear_part", "entropy_dual", "atom_mass", "atom_location", "phi_error"});
    std::vector<double> ts, ms;
    json rows = json::array();
    for (int k = 0; k < c.steps; ++k) {
        double t = c.tmax * k / (c.steps - 1);
        GridFunction ut = seg.at(t);
        EnergyReport e = mabuchi(ut, P, conv, no_primal);
        auto dec = second_derivative_decompose(ut);
        double loc = dec.atoms.empty() ? std::nan("") : dec.atoms.front().location;
        GridFunction phi = legendre(ut, {.cells = grid, .window = c.window});
        double err = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i)
            err = std::max(err, std::abs(phi[i] - counterexample_phi(t, phi.node(i))));
        csv.row({t, e.total, e.linear_part, e.entropy_dual, dec.atom_mass(), loc, err});
        rows.push_back({{"t", t}, {"M", e.total}, {"atom_mass", dec.atom_mass()}, {"phi_error", err}});
        ts.push_back(t);
        ms.push_back(e.total);
    }
    double second = 0.0;
    for (std::size_t k = 1; k + 1 < ms.size(); ++k)
        second = std::max(second, std::abs(ms[k + 1] - 2.0 * ms[k] + ms[k - 1]));
    const double slope = (ms.back() - ms.front()) / (ts.back() - ts.front());
    const double predicted = linear_part(kink, P, conv);
    const bool orbit = is_torus_orbit(seg);
    const bool ok = second <= 1e-6 && std::abs(slope - predicted) <= 1e-4 && !orbit;
    RunResult r;
    r.json = json{{"convention", to_string(conv)},
                  {"rows", rows},
                  {"affineness_residual", second},
                  {"slope", slope},
                  {"L_of_direction", predicted},
                  {"torus_orbit", orbit},
                  {"invariants_hold", ok}}
                 .dump();
    r.csv = csv.str();
    if (!ok) {
        r.exit_code = 1;
        r.message = "counterexample: invariant violated";
    }
    return r;
}

inline RunResult cmd_energy(const RunConfig& c, Convention conv_flag) {
    const std::size_t grid = c.grid.value_or(kDefaultCells);
    Loaded in = load(c.input, c.builtin, "u0", grid, c);
    Convention conv = c.convention ? conv_flag : in.convention.value_or(conv_flag);
    EnergyReport e;
    json extra;
    if (auto g2 = std::get_if<GridFunction2D>(&in.fn)) {
        Polytope P = polytope_of(c, in.polytope, "unit-square");
        e = mabuchi(*g2, P, conv);
    } else if (auto m2 = std::get_if<MaxAffine2D>(&in.fn)) {
        e.convention = conv;
        e.linear_part = linear_part(*m2, conv);
        e.entropy_dual = std::numeric_limits<double>::infinity();
        e.total = e.entropy_dual;
        e.finite = false;
    } else {
        GridFunction u = as_grid(in.fn, grid, "energy");
        Polytope P = c.polytope || in.polytope ? polytope_of(c, in.polytope, "unit-interval")
                                               : interval_polytope(u);
        MabuchiOptions opts;
        opts.window = c.window;
        e = mabuchi(u, P, conv, opts);
    }
    RunResult r;
    r.json = to_json(e).dump();
    return r;
}

inline RunResult cmd_slope(const RunConfig& c, Convention conv) {
    const std::size_t grid = c.grid.value_or(kDefaultCells);
    GridFunction u0 = as_grid(load(c.input, c.builtin, "u0", grid, c).fn, grid, "slope");
    GridFunction v = on_grid_of(load(c.input2, c.builtin2, "quadratic", grid, c).fn, u0, "slope");
    std::vector<double> ts = c.ts.empty() ? std::vector<double>{1.0, 10.0, 100.0, 1000.0} : c.ts;
    const Polytope P = interval_polytope(u0);
    SlopeReport s = slope_estimate(GeodesicSegment::ray(u0, v), P, conv, ts);
    Csv csv(conv, {"t", "M_over_t", "prediction", "correction", "correction_bound", "sandwich"});
    bool ok = true;
    for (const auto& x : s.samples) {
        csv.row({x.t, x.energy_over_t, s.prediction, x.correction, x.correction_bound,
                 x.sandwich_holds ? 1.0 : 0.0});
        ok = ok && x.sandwich_holds;
    }
    RunResult r;
    r.json = to_json(s).dump();
    r.csv = csv.str();
    if (!ok) {
        r.exit_code = 1;
        r.message = "slope: correction left the sandwich bound";
    }
    return r;
}

inline RunResult cmd_stability(const RunConfig& c, Convention conv) {
    Polytope P = polytope_of(c, std::nullopt, "unit-interval");
    GeneratorOptions g;
    g.seed = c.seed;
    RelativeNormOptions n;
    n.scale_inf_by_volume = c.scale_inf_by_volume;
    StabilityReport s = stability_margin(P, conv, default_generators(P, g), n);
    RunResult r;
    json j = to_json(s);
    j["polytope"] = to_json(P);
    j["seed"] = c.seed;
    r.json = j.dump();
    return r;
}

inline RunResult cmd_minimize(const RunConfig& c, Convention conv) {
    Polytope P = polytope_of(c, std::nullopt, "unit-interval");
    MinimizeOptions opts;
    opts.cells = c.grid.value_or(1024);
    MinimizeResult m = minimize_F(P, conv, opts);
    Csv csv(conv, {"y", "u"});
    for (std::size_t i = 0; i < m.u.size(); ++i) csv.row({m.u.node(i), m.u[i]});
    RunResult r;
    r.json = json{{"convention", to_string(conv)},
                  {"u", to_json(m.u)},
                  {"iterations", m.iterations},
                  {"residual", m.residual},
                  {"objective", m.objective}}
                 .dump();
    r.csv = csv.str();
    return r;
}

inline RunResult cmd_certify(const RunConfig& c, Convention conv) {
    const std::size_t grid = c.grid.value_or(1024);
    GridFunction u0 = as_grid(load(c.input, c.builtin, "u0", grid, c).fn, grid, "certify");
    const Polytope P = interval_polytope(u0);
    GridFunction u1 = u0;
    std::string second = c.builtin2.value_or("affine");
    if (c.input2) {
        u1 = on_grid_of(load(c.input2, std::nullopt, "", grid, c).fn, u0, "certify");
    } else if (second == "affine") {
        u1 = add_affine(u0, 0.3, -1.0);
    } else if (second == "kink") {
        u1 = combine(1.0, u0, 1.0, equator_kink().sample(u0.cells()));
    } else if (second == "minimizer") {
        MinimizeOptions opts;
        opts.cells = u0.cells();
        u1 = minimize_F(P, conv, opts).u;
    } else {
        u1 = on_grid_of(builtin_function(second, u0.cells(), c), u0, "certify");
    }
    UniquenessCertificate cert = certify_unique(u0, u1, P, conv);
    RunResult r;
    r.json = to_json(cert).dump();
    return r;
}

}  // namespace detail

/// Runs one subcommand. Never throws: errors become a JSON diagnostic and a
/// nonzero exit code.
inline RunResult run(const RunConfig& config) {
    RunResult r;
    try {
        detail::validate(config);
        const Convention conv = config.convention.value_or(Convention::donaldson);
        const std::string& cmd = config.command;
        if (cmd == "transform") return detail::cmd_transform(config, conv);
        if (cmd == "geodesic") return detail::cmd_geodesic(config, conv);
        if (cmd == "counterexample") return detail::cmd_counterexample(config, conv);
        if (cmd == "energy") return detail::cmd_energy(config, conv);
        if (cmd == "slope") return detail::cmd_slope(config, conv);
        if (cmd == "stability") return detail::cmd_stability(config, conv);
        if (cmd == "minimize") return detail::cmd_minimize(config, conv);
        return detail::cmd_certify(config, conv);
    } catch (const ConfigError& e) {
        r.exit_code = 2;
        r.json = json{{"error", e.kind()}, {"message", e.what()}}.dump();
        r.message = e.what();
    } catch (const IoError& e) {
        r.exit_code = 2;
        r.json = json{{"error", e.kind()}, {"message", e.what()}}.dump();
        r.message = e.what();
    } catch (const NonConvergence& e) {
        r.exit_code = 1;
        r.json = json{{"error", e.kind()},
                      {"message", e.what()},
                      {"gradient_norm", e.gradient_norm()},
                      {"iterations", e.iterations()}}
                     .dump();
        r.message = e.what();
    } catch (const Error& e) {
        r.exit_code = 1;
        r.json = json{{"error", e.kind()}, {"message", e.what()}}.dump();
        r.message = e.what();
    } catch (const std::exception& e) {
        r.exit_code = 1;
        r.json = json{{"error", "Internal"}, {"message", e.what()}}.dump();
        r.message = e.what();
    }
    return r;
}

}  // namespace kenergy
