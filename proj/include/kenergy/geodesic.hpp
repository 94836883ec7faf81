#pragma once

// Geodesics in Legendre coordinates (u_t = u_0 + t v), the explicit
// flat-collar family over the Fubini-Study potential, and torus-orbit
// detection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "kenergy/convex_core.hpp"
#include "kenergy/errors.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/pwa.hpp"

namespace kenergy {

// ---------------------------------------------------------------------------
// Reference functions

/// log(1 + e^x), evaluated without overflow.
inline double fubini_study_potential(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Its Legendre dual on [0, 1]: y log y + (1 - y) log(1 - y).
inline double fubini_study_symbol(double y) {
    double a = y > 0 ? y * std::log(y) : 0.0;
    double b = y < 1 ? (1.0 - y) * std::log1p(-y) : 0.0;
    return a + b;
}

/// 0 on [0, 1/2], y - 1/2 on [1/2, 1].
inline PiecewiseAffine1D equator_kink() { return PiecewiseAffine1D::kink({0.0, 1.0}, 1.0, 0.5); }

inline GridFunction sample_fubini_study_potential(Interval window = kDefaultWindow,
                                                  std::size_t cells = kDefaultCells) {
    return GridFunction::sample(window, cells, fubini_study_potential, TailSlopes{0.0, 1.0});
}

inline GridFunction sample_fubini_study_symbol(std::size_t cells = kDefaultCells) {
    return GridFunction::sample({0.0, 1.0}, cells, fubini_study_symbol);
}

/// Closed form of (u_0 + t v)^* for the equator kink v: the potential is
/// unchanged for x <= 0, affine with slope 1/2 on the collar [0, t], and a
/// translate of itself beyond.
inline double counterexample_phi(double t, double x) {
    if (t < 0) throw InvalidArgument("counterexample_phi: t must be nonnegative");
    if (x <= 0) return fubini_study_potential(x);
    if (x <= t) return std::log(2.0) + 0.5 * x;
    return fubini_study_potential(x - t) + 0.5 * t;
}

/// 2 φ_t(x) - x: equals log(e^{-x} + e^{x}) for x <= 0, log 2 on [0, t],
/// and its own translate by t beyond. Slopes range over [-1, 1].
inline double symmetric_double(double t, double x) { return 2.0 * counterexample_phi(t, x) - x; }

/// Largest centered second-difference quotient; +infinity when the second
/// derivative carries an atom.
inline double c11_seminorm(const GridFunction& phi) {
    auto dec = second_derivative_decompose(phi);
    if (dec.has_atoms()) return std::numeric_limits<double>::infinity();
    const double h = phi.step();
    double worst = 0.0;
    for (std::size_t i = 1; i < phi.cells(); ++i)
        worst = std::max(worst, (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h));
    return worst;
}

/// Largest second-difference quotient of f(t, x) in t, x and mixed, over a
/// tensor grid. Bounded values indicate joint C^{1,1} behaviour.
inline double spacetime_second_difference_bound(const std::function<double(double, double)>& f,
                                                Interval ts, std::size_t t_cells, Interval xs,
                                                std::size_t x_cells) {
    const double ht = ts.length() / static_cast<double>(t_cells);
    const double hx = xs.length() / static_cast<double>(x_cells);
    double worst = 0.0;
    for (std::size_t a = 1; a < t_cells; ++a)
        for (std::size_t b = 1; b < x_cells; ++b) {
            double t = ts.lo + ht * static_cast<double>(a), x = xs.lo + hx * static_cast<double>(b);
            double ftt = (f(t + ht, x) - 2 * f(t, x) + f(t - ht, x)) / (ht * ht);
            double fxx = (f(t, x + hx) - 2 * f(t, x) + f(t, x - hx)) / (hx * hx);
            double ftx = (f(t + ht, x + hx) - f(t + ht, x - hx) - f(t - ht, x + hx) +
                          f(t - ht, x - hx)) / (4 * ht * hx);
            worst = std::max({worst, std::abs(ftt), std::abs(fxx), std::abs(ftx)});
        }
    return worst;
}

// ---------------------------------------------------------------------------
// Segments and rays

/// Number of equispaced parameters checked when the direction is not convex.
inline constexpr int kSegmentConvexityChecks = 17;

class GeodesicSegment {
public:
    /// u_t = u0 + t v for t in `t_range` (t_range.hi may be +infinity).
    GeodesicSegment(GridFunction u0, GridFunction v, Interval t_range)
        : u0_(std::move(u0)), v_(std::move(v)), t_range_(t_range) {
        if (u0_.domain() != v_.domain() || u0_.size() != v_.size())
            throw DomainMismatch("GeodesicSegment: u0 and v live on different grids");
        if (u0_.on_real_line() || v_.on_real_line())
            throw DomainMismatch("GeodesicSegment: expects functions on a compact polytope");
        if (!(t_range_.hi >= t_range_.lo)) throw InvalidArgument("GeodesicSegment: empty t range");
        validate();
    }

    static GeodesicSegment ray(GridFunction u0, GridFunction v) {
        if (!v.is_convex()) throw NonConvexDirection("ray: direction is not convex");
        return {std::move(u0), std::move(v), {0.0, std::numeric_limits<double>::infinity()}};
    }

    const GridFunction& start() const { return u0_; }
    const GridFunction& direction() const { return v_; }
    const Interval& t_range() const { return t_range_; }
    bool is_ray() const { return std::isinf(t_range_.hi); }

    GridFunction at(double t) const { return combine(1.0, u0_, t, v_); }

    /// The primal potential φ_t = (u_t)^*.
    GridFunction primal(double t, const LegendreOptions& opts = {}) const {
        return legendre(at(t), opts);
    }

private:
    void validate() const {
        if (v_.is_convex()) {
            if (!at(t_range_.lo).is_convex())
                throw NonConvexInput("GeodesicSegment: u_t not convex at the start");
            if (!is_ray() && !at(t_range_.hi).is_convex())
                throw NonConvexInput("GeodesicSegment: u_t not convex at the end");
            return;
        }
        if (is_ray()) throw NonConvexDirection("GeodesicSegment: ray with non-convex direction");
        for (int k = 0; k < kSegmentConvexityChecks; ++k) {
            double t = t_range_.lo + t_range_.length() * k / (kSegmentConvexityChecks - 1);
            if (!at(t).is_convex())
                throw NonConvexInput("GeodesicSegment: u_t not convex at t = " + std::to_string(t));
        }
    }

    GridFunction u0_;
    GridFunction v_;
    Interval t_range_;
};

/// Segment from u0 to u1 over t in [0, 1].
inline GeodesicSegment geodesic_between(const GridFunction& u0, const GridFunction& u1) {
    if (u0.domain() != u1.domain() || u0.size() != u1.size())
        throw DomainMismatch("geodesic_between: endpoints live on different grids");
    return {u0, combine(1.0, u1, -1.0, u0), {0.0, 1.0}};
}

/// True iff the Legendre direction is affine, i.e. the path is the orbit of
/// a one-parameter subgroup of the complex torus. `tol` is relative to the
/// value scale of the direction.
inline bool is_torus_orbit(const GeodesicSegment& seg, double tol = 1e-8) {
    return is_affine(seg.direction(), tol * seg.direction().value_scale());
}

}  // namespace kenergy
