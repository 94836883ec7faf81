#pragma once

// The toric K-energy M(u) = L(u) - ∫_P log det ∇²u, its primal counterparts
// on the real line, and the slope of M along geodesic rays.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kenergy/convex_core.hpp"
#include "kenergy/errors.hpp"
#include "kenergy/geodesic.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/polytope.hpp"
#include "kenergy/pwa.hpp"

namespace kenergy {

/// Densities below this floor count as degenerate.
inline constexpr double kHessianFloor = 1e-14;
/// Degenerate set measure beyond which the entropy is +infinity.
inline constexpr double kDegenerateMeasure = 1e-3;

/// An extended-real value: finite == false stands for +infinity.
struct ExtendedValue {
    double value = 0.0;
    bool finite = true;

    static ExtendedValue infinite() { return {std::numeric_limits<double>::infinity(), false}; }
};

struct EnergyReport {
    double linear_part = 0.0;
    double entropy_dual = 0.0;
    std::optional<double> entropy_primal;  // 1D on [0, 1] only; +inf with atoms
    std::optional<double> newtonian;       // 1D on [0, 1] only
    /// |L_paper-lemma(u) - E_0(∂²φ)|, the reduced Chen-Tian identity.
    std::optional<double> identity_residual;
    double total = 0.0;
    Convention convention = Convention::donaldson;
    bool finite = true;
};

// ---------------------------------------------------------------------------
// Linear part

namespace detail {

inline void require_same_interval(const Interval& d, const Polytope& p, const char* where) {
    const Interval& q = p.as_interval();
    if (std::abs(d.lo - q.lo) > 1e-12 || std::abs(d.hi - q.hi) > 1e-12)
        throw DomainMismatch(std::string(where) + ": function domain differs from the polytope");
}

inline double trapezoid(const GridFunction& u) {
    const std::size_t n = u.cells();
    if (n == 0) return 0.0;
    double s = 0.5 * (u[0] + u[n]);
    for (std::size_t i = 1; i < n; ++i) s += u[i];
    return s * u.step();
}

}  // namespace detail

/// α_∂ ∫_{∂P} u dσ - α_P ∫_P u dy for samples on the interval P.
inline double linear_part(const GridFunction& u, const Polytope& P, Convention conv) {
    detail::require_same_interval(u.domain(), P, "linear_part");
    const double h = u.step();
    const double limit = h > 0 ? 1.0 / (h * h) : std::numeric_limits<double>::infinity();
    if (std::abs(u[0]) > limit || std::abs(u[u.cells()]) > limit)
        throw BoundaryDivergence("linear_part: boundary values exceed the 1/h^2 scale");
    auto c = coefficients(conv, P);
    return c.boundary * (u[0] + u[u.cells()]) - c.interior * detail::trapezoid(u);
}

/// Exact value for a piecewise-affine function.
inline double linear_part(const PiecewiseAffine1D& u, const Polytope& P, Convention conv) {
    detail::require_same_interval(u.domain(), P, "linear_part");
    auto c = coefficients(conv, P);
    return c.boundary * (u(u.domain().lo) + u(u.domain().hi)) - c.interior * u.integral();
}

/// Exact value for a max-of-affine function on its polygon.
inline double linear_part(const MaxAffine2D& u, Convention conv) {
    auto c = coefficients(conv, u.domain());
    return c.boundary * u.boundary_integral() - c.interior * u.integral();
}

/// Samples on a box polytope; trapezoid rules on the box and its edges.
inline double linear_part(const GridFunction2D& u, const Polytope& P, Convention conv) {
    auto box = P.as_box();
    if (!box || box->first != u.axis1() || box->second != u.axis2())
        throw DomainMismatch("linear_part: 2D grids must cover a box polytope exactly");
    const std::size_t n1 = u.cells1(), n2 = u.cells2();
    const double h1 = u.step1(), h2 = u.step2();
    auto w = [](std::size_t i, std::size_t n) { return (i == 0 || i == n) ? 0.5 : 1.0; };
    double interior = 0.0;
    for (std::size_t i = 0; i <= n1; ++i)
        for (std::size_t j = 0; j <= n2; ++j) interior += w(i, n1) * w(j, n2) * u.at(i, j);
    interior *= h1 * h2;
    double boundary = 0.0;
    for (std::size_t i = 0; i <= n1; ++i) boundary += w(i, n1) * h1 * (u.at(i, 0) + u.at(i, n2));
    for (std::size_t j = 0; j <= n2; ++j) boundary += w(j, n2) * h2 * (u.at(0, j) + u.at(n1, j));
    auto c = coefficients(conv, P);
    return c.boundary * boundary - c.interior * interior;
}

// ---------------------------------------------------------------------------
// Entropies

namespace detail {

/// Node weights of the dual-cell midpoint rule; the boundary half-cells are
/// lumped into the first and last interior nodes.
inline double entropy_weight(std::size_t k, std::size_t m, double h) {
    return (k == 0 || k + 1 == m) ? (m == 1 ? 2.0 * h : 1.5 * h) : h;
}

}  // namespace detail

/// -∫ log u'' over the regular part of ∂²u; atoms are ignored.
inline ExtendedValue entropy_dual(const GridFunction& u) {
    if (u.on_real_line()) throw DomainMismatch("entropy_dual: expects a function on a polytope");
    if (u.cells() < 2) throw InvalidArgument("entropy_dual: need at least two cells");
    auto dec = second_derivative_decompose(u);
    const std::size_t m = dec.regular_density.size();
    double s = 0.0, degenerate = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double w = detail::entropy_weight(k, m, dec.step);
        double r = dec.regular_density[k];
        if (r < kHessianFloor) {
            degenerate += w;
            r = kHessianFloor;
        }
        s -= w * std::log(r);
    }
    if (degenerate > kDegenerateMeasure) return ExtendedValue::infinite();
    return {s, true};
}

inline ExtendedValue entropy_dual(const GridFunction& u, const Polytope& P) {
    detail::require_same_interval(u.domain(), P, "entropy_dual");
    return entropy_dual(u);
}

namespace detail {

/// Lumped midpoint rule for -∫ log det of the centered-difference Hessian,
/// using every `stride`-th node.
inline ExtendedValue entropy_dual_2d_raw(const GridFunction2D& u, std::size_t stride) {
    const std::size_t n1 = u.cells1() / stride, n2 = u.cells2() / stride;
    const double h1 = u.step1() * static_cast<double>(stride);
    const double h2 = u.step2() * static_cast<double>(stride);
    auto at = [&](std::size_t i, std::size_t j) { return u.at(i * stride, j * stride); };
    double s = 0.0, degenerate = 0.0;
    for (std::size_t i = 1; i < n1; ++i)
        for (std::size_t j = 1; j < n2; ++j) {
            double a = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (h1 * h1);
            double b = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (h2 * h2);
            double c = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) /
                       (4 * h1 * h2);
            double mean = 0.5 * (a + b), rad = std::hypot(0.5 * (a - b), c);
            double l1 = std::max(mean + rad, kHessianFloor);
            double l2 = std::max(mean - rad, kHessianFloor);
            double w = entropy_weight(i - 1, n1 - 1, h1) * entropy_weight(j - 1, n2 - 1, h2);
            if (l1 * l2 < kHessianFloor) degenerate += w;
            s -= w * (std::log(l1) + std::log(l2));
        }
    if (degenerate > kDegenerateMeasure) return ExtendedValue::infinite();
    return {s, true};
}

}  // namespace detail

/// -∫_P log det ∇²u on a box. Eigenvalues are floored at 1e-14, and the
/// lumped midpoint values at cell sizes h and 2h are Richardson-combined
/// assuming a leading O(h) error.
inline ExtendedValue entropy_dual(const GridFunction2D& u) {
    if (u.cells1() < 4 || u.cells2() < 4) throw InvalidArgument("entropy_dual: 2D grid too coarse");
    u.require_convex("entropy_dual");
    auto fine = detail::entropy_dual_2d_raw(u, 1);
    if (!fine.finite) return fine;
    if (u.cells1() % 2 != 0 || u.cells2() % 2 != 0 || u.cells1() < 8 || u.cells2() < 8) return fine;
    auto coarse = detail::entropy_dual_2d_raw(u, 2);
    if (!coarse.finite) return fine;
    return {2.0 * fine.value - coarse.value, true};
}

/// ∫ ρ log ρ dx for ρ = φ'' on the window (0 log 0 = 0); +infinity when
/// ∂²φ has atoms.
inline ExtendedValue entropy_primal(const GridFunction& phi) {
    if (phi.cells() < 2) throw InvalidArgument("entropy_primal: need at least two cells");
    auto dec = second_derivative_decompose(phi);
    if (dec.has_atoms()) return ExtendedValue::infinite();
    const std::size_t m = dec.regular_density.size();
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double r = dec.regular_density[k];
        if (r > 0) s += detail::entropy_weight(k, m, dec.step) * r * std::log(r);
    }
    return {s, true};
}

/// E_0(μ) = 1/4 ∬ |x - y| dμ dμ for μ = ∂²φ, as ½ ∫ F (1 - F) dx with F
/// the distribution function φ' shifted to start at 0.
inline double newtonian_energy(const GridFunction& phi) {
    const std::size_t n = phi.cells();
    if (n < 1) throw InvalidArgument("newtonian_energy: need at least one cell");
    const double h = phi.step();
    const double first = (phi[1] - phi[0]) / h, last = (phi[n] - phi[n - 1]) / h;
    double lo = first, hi = last;
    if (phi.tails()) {
        lo = phi.tails()->left;
        hi = phi.tails()->right;
    }
    if (std::abs((hi - lo) - 1.0) > 1e-4 || std::abs((last - first) - 1.0) > 1e-4)
        throw MassDeficit("newtonian_energy: curvature mass is not 1");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double F = std::clamp((phi[i + 1] - phi[i]) / h - lo, 0.0, 1.0);
        s += F * (1.0 - F);
    }
    return 0.5 * h * s;
}

// ---------------------------------------------------------------------------
// K-energy

struct MabuchiOptions {
    /// Also compute the primal entropy and Newtonian energy of u^* (1D, P = [0, 1]).
    bool primal = true;
    Interval window = kDefaultWindow;
    /// Defaults to 4x the input cells, clamped to [4096, 2^18]. Accuracy of
    /// the primal entropy is limited by how well u resolves its endpoints.
    std::optional<std::size_t> primal_cells;
};

inline EnergyReport mabuchi(const GridFunction& u, const Polytope& P, Convention conv,
                            const MabuchiOptions& opts = {}) {
    EnergyReport r;
    r.convention = conv;
    r.linear_part = linear_part(u, P, conv);
    auto ent = entropy_dual(u, P);
    r.entropy_dual = ent.value;
    r.finite = ent.finite;
    r.total = ent.finite ? r.linear_part + ent.value : std::numeric_limits<double>::infinity();
    const Interval& I = P.as_interval();
    if (opts.primal && I.lo == 0.0 && I.hi == 1.0) {
        const std::size_t cells =
            opts.primal_cells.value_or(std::clamp<std::size_t>(4 * u.cells(), 4096, 1u << 18));
        GridFunction phi = legendre(u, {.cells = cells, .window = opts.window});
        auto ep = entropy_primal(phi);
        r.entropy_primal = ep.value;
        r.newtonian = newtonian_energy(phi);
        r.identity_residual =
            std::abs(linear_part(u, P, Convention::paper_lemma) - *r.newtonian);
    }
    return r;
}

inline EnergyReport mabuchi(const GridFunction2D& u, const Polytope& P, Convention conv) {
    EnergyReport r;
    r.convention = conv;
    r.linear_part = linear_part(u, P, conv);
    auto ent = entropy_dual(u);
    r.entropy_dual = ent.value;
    r.finite = ent.finite;
    r.total = ent.finite ? r.linear_part + ent.value : std::numeric_limits<double>::infinity();
    return r;
}

/// L¹ distance of the regular densities of two functions on the same grid,
/// restricted to nodes inside `region`.
inline double regular_hessian_distance(const GridFunction& a, const GridFunction& b,
                                       Interval region) {
    if (a.domain() != b.domain() || a.size() != b.size())
        throw DomainMismatch("regular_hessian_distance: grids differ");
    auto da = second_derivative_decompose(a), db = second_derivative_decompose(b);
    double s = 0.0;
    for (std::size_t k = 0; k < da.nodes.size(); ++k)
        if (region.contains(da.nodes[k]))
            s += std::abs(da.regular_density[k] - db.regular_density[k]) * da.step;
    return s;
}

// ---------------------------------------------------------------------------
// Slope along rays

struct SlopeSample {
    double t = 0.0;
    double energy = 0.0;          ///< M(u_t)
    double energy_over_t = 0.0;
    /// entropy_dual(u_0) - entropy_dual(u_t) = ∫ log(1 + t A v''), A = 1/u_0''.
    double correction = 0.0;
    /// Vol(P) dim log t + correction(1), the upper bound valid for t >= 1.
    double correction_bound = std::numeric_limits<double>::infinity();
    bool sandwich_holds = true;
};

struct SlopeReport {
    std::vector<SlopeSample> samples;
    double prediction = 0.0;  ///< L(v)
    Convention convention = Convention::donaldson;
};

inline SlopeReport slope_estimate(const GeodesicSegment& ray, const Polytope& P, Convention conv,
                                  std::span<const double> ts) {
    if (!ray.direction().is_convex()) throw NonConvexDirection("slope_estimate: direction not convex");
    SlopeReport out;
    out.convention = conv;
    out.prediction = linear_part(ray.direction(), P, conv);
    const MabuchiOptions no_primal{.primal = false};
    const double e0 = entropy_dual(ray.start(), P).value;
    auto e1 = entropy_dual(ray.at(1.0), P);
    const double corr1 = e1.finite ? e0 - e1.value : std::numeric_limits<double>::infinity();
    for (double t : ts) {
        if (!(t > 0)) throw InvalidArgument("slope_estimate: t must be positive");
        SlopeSample s;
        s.t = t;
        auto rep = mabuchi(ray.at(t), P, conv, no_primal);
        if (!rep.finite) throw InvalidArgument("slope_estimate: K-energy is infinite along the ray");
        s.energy = rep.total;
        s.energy_over_t = rep.total / t;
        s.correction = e0 - rep.entropy_dual;
        const double tol = 1e-9;
        if (t >= 1.0) {
            s.correction_bound = P.volume() * P.dim() * std::log(t) + corr1;
            s.sandwich_holds = s.correction >= -tol && s.correction <= s.correction_bound + tol;
        } else {
            s.sandwich_holds = s.correction >= -tol;
        }
        out.samples.push_back(s);
    }
    return out;
}

}  // namespace kenergy
