#pragma once

// Convex envelopes, the Legendre-Fenchel transform on grids, and the
// Lebesgue decomposition of the second derivative into a regular density
// and atoms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kenergy/errors.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/pwa.hpp"

namespace kenergy {

namespace detail {

/// Indices of the lower convex hull of (x_i, f_i), x strictly increasing.
/// Collinear interior points are dropped.
inline std::vector<std::size_t> lower_hull(std::span<const double> xs, std::span<const double> fs) {
    std::vector<std::size_t> hull;
    hull.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (hull.size() >= 2) {
            std::size_t a = hull[hull.size() - 2], b = hull.back();
            // Remove b when it lies on or above the chord a -> i.
            double lhs = (fs[b] - fs[a]) * (xs[i] - xs[a]);
            double rhs = (fs[i] - fs[a]) * (xs[b] - xs[a]);
            if (lhs >= rhs) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }
    return hull;
}

/// Lower hull evaluated back at every sample position.
inline std::vector<double> envelope_values(std::span<const double> xs, std::span<const double> fs) {
    std::vector<double> out(fs.begin(), fs.end());
    if (xs.size() < 3) return out;
    auto hull = lower_hull(xs, fs);
    for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
        std::size_t a = hull[k], b = hull[k + 1];
        for (std::size_t i = a + 1; i < b; ++i) {
            double w = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            out[i] = std::min(fs[i], (1.0 - w) * fs[a] + w * fs[b]);
        }
    }
    return out;
}

/// max_i (q * x_i - f_i) for every ascending query q, via a pointer sweep
/// over the slopes of the lower hull. On uniform grids with `refine`, the
/// maximum is polished by a local quadratic model wherever the second
/// differences around the maximizing node are positive and vary slowly.
inline std::vector<double> conjugate_sweep(std::span<const double> xs, std::span<const double> fs,
                                           std::span<const double> queries, bool refine) {
    std::vector<double> out(queries.size());
    auto hull = lower_hull(xs, fs);
    const std::size_t n = xs.size();
    const double h = n > 1 ? (xs.back() - xs.front()) / static_cast<double>(n - 1) : 0.0;
    auto second = [&](std::size_t i) { return fs[i + 1] - 2.0 * fs[i] + fs[i - 1]; };

    std::size_t k = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double y = queries[q];
        // Ties stay at the smaller x: advance only on strict slope < y.
        while (k + 1 < hull.size()) {
            std::size_t a = hull[k], b = hull[k + 1];
            double slope = (fs[b] - fs[a]) / (xs[b] - xs[a]);
            if (slope < y) ++k;
            else break;
        }
        const std::size_t i = hull[k];
        double best = y * xs[i] - fs[i];
        if (refine && i >= 2 && i + 2 < n) {
            double c = second(i), cl = second(i - 1), cr = second(i + 1);
            if (c > 0 && cl > 0 && cr > 0 && std::abs(cl - c) <= 0.5 * c &&
                std::abs(cr - c) <= 0.5 * c) {
                double d = (fs[i + 1] - fs[i - 1]) / (2.0 * h);
                double curv = c / (h * h);
                double dx = std::clamp((y - d) / curv, -h, h);
                double model = fs[i] + d * dx + 0.5 * curv * dx * dx;
                best = std::max(best, y * (xs[i] + dx) - model);
            }
        }
        out[q] = best;
    }
    return out;
}

inline std::vector<double> nodes_of(Interval d, std::size_t cells) {
    std::vector<double> v(cells + 1);
    const double h = cells == 0 ? 0.0 : d.length() / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i)
        v[i] = (i == cells) ? d.hi : d.lo + h * static_cast<double>(i);
    return v;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convex envelope

/// Largest convex minorant on the grid (exact lower hull in 1D).
inline GridFunction convex_envelope(const GridFunction& f) {
    auto xs = detail::nodes_of(f.domain(), f.cells());
    auto v = detail::envelope_values(xs, f.values());
    return GridFunction(f.domain(), std::move(v), f.tails());
}

/// Approximate 2D envelope: 1D hulls along rows, columns and both diagonal
/// families, repeated until nothing moves. Exact only for the directions
/// swept; inputs used here are already convex or piecewise affine.
inline GridFunction2D convex_envelope(const GridFunction2D& f, int max_rounds = 200) {
    GridFunction2D g = f;
    const std::size_t n1 = f.cells1() + 1, n2 = f.cells2() + 1;
    const double tol = 1e-15 * f.value_scale();
    auto sweep = [&](const std::vector<std::pair<std::size_t, std::size_t>>& line) {
        if (line.size() < 3) return 0.0;
        std::vector<double> xs(line.size()), fs(line.size());
        for (std::size_t k = 0; k < line.size(); ++k) {
            xs[k] = static_cast<double>(k);
            fs[k] = g.at(line[k].first, line[k].second);
        }
        auto env = detail::envelope_values(xs, fs);
        double moved = 0.0;
        for (std::size_t k = 0; k < line.size(); ++k) {
            moved = std::max(moved, fs[k] - env[k]);
            g.at(line[k].first, line[k].second) = env[k];
        }
        return moved;
    };
    for (int round = 0; round < max_rounds; ++round) {
        double moved = 0.0;
        std::vector<std::pair<std::size_t, std::size_t>> line;
        for (std::size_t i = 0; i < n1; ++i) {
            line.clear();
            for (std::size_t j = 0; j < n2; ++j) line.emplace_back(i, j);
            moved = std::max(moved, sweep(line));
        }
        for (std::size_t j = 0; j < n2; ++j) {
            line.clear();
            for (std::size_t i = 0; i < n1; ++i) line.emplace_back(i, j);
            moved = std::max(moved, sweep(line));
        }
        // Diagonals i - j = const and anti-diagonals i + j = const.
        for (std::size_t s = 0; s + 1 < n1 + n2; ++s) {
            line.clear();
            for (std::size_t i = 0; i < n1; ++i) {
                std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(s) -
                                   static_cast<std::ptrdiff_t>(n1 - 1);
                if (j >= 0 && j < static_cast<std::ptrdiff_t>(n2))
                    line.emplace_back(i, static_cast<std::size_t>(j));
            }
            moved = std::max(moved, sweep(line));
            line.clear();
            for (std::size_t i = 0; i < n1; ++i) {
                if (s < i) continue;
                std::size_t j = s - i;
                if (j < n2) line.emplace_back(i, j);
            }
            moved = std::max(moved, sweep(line));
        }
        if (moved <= tol) break;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Legendre transform

struct LegendreOptions {
    /// Cells of the output grid; defaults to the input's cell count.
    std::optional<std::size_t> cells;
    /// Output window for compactly supported inputs (functions on R are
    /// transformed onto the closed slope range instead).
    std::optional<Interval> window;
    /// Quadratic polishing of the discrete maximum in smooth regions.
    bool refine = true;
};

/// f*(y) = sup_x (x y - f(x)).
///
/// A function on R (tails present) maps to a compactly supported function
/// on [s-, s+]; the affine tails contribute exactly their window endpoint.
/// A function on a compact interval [a, b] maps to a function on R stored
/// on `window` with tails (a, b).
inline GridFunction legendre(const GridFunction& f, const LegendreOptions& opts = {}) {
    f.require_convex("legendre");
    const GridFunction env = convex_envelope(f);
    auto xs = detail::nodes_of(env.domain(), env.cells());

    Interval out_domain;
    std::optional<TailSlopes> out_tails;
    std::size_t out_cells = opts.cells.value_or(std::max<std::size_t>(env.cells(), 1));
    if (env.tails()) {
        out_domain = {env.tails()->left, env.tails()->right};
        if (out_domain.length() == 0.0) out_cells = 0;
    } else {
        out_domain = opts.window.value_or(kDefaultWindow);
        out_tails = TailSlopes{env.domain().lo, env.domain().hi};
    }
    auto ys = detail::nodes_of(out_domain, out_cells);
    auto vals = detail::conjugate_sweep(xs, env.values(), ys, opts.refine);
    GridFunction raw(out_domain, std::move(vals), out_tails);
    return convex_envelope(raw);
}

/// Separable discrete transform of a function on a box, onto `window1` x
/// `window2` with the given cell counts. No refinement.
inline GridFunction2D legendre(const GridFunction2D& u, Interval window1, Interval window2,
                               std::size_t cells1, std::size_t cells2) {
    u.require_convex("legendre");
    const std::size_t n1 = u.cells1() + 1, n2 = u.cells2() + 1;
    auto y1 = detail::nodes_of(u.axis1(), u.cells1());
    auto y2 = detail::nodes_of(u.axis2(), u.cells2());
    auto x1 = detail::nodes_of(window1, cells1);
    auto x2 = detail::nodes_of(window2, cells2);
    // Partial transform along the second axis, one row at a time.
    std::vector<std::vector<double>> partial(n1);
    std::vector<double> row(n2);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) row[j] = u.at(i, j);
        partial[i] = detail::conjugate_sweep(y2, row, x2, false);
    }
    std::vector<double> out((cells1 + 1) * (cells2 + 1));
    std::vector<double> col(n1);
    for (std::size_t k = 0; k <= cells2; ++k) {
        for (std::size_t i = 0; i < n1; ++i) col[i] = -partial[i][k];
        auto line = detail::conjugate_sweep(y1, col, x1, false);
        for (std::size_t m = 0; m <= cells1; ++m) out[m * (cells2 + 1) + k] = line[m];
    }
    return GridFunction2D(window1, window2, cells1, cells2, std::move(out));
}

struct BiconjugateOptions {
    /// Cells of the intermediate dual grid. Resolution there bounds the
    /// accuracy of the second transform near the edges of the slope range.
    std::size_t dual_cells = std::size_t{1} << 20;
};

/// f** on the original grid: the convex envelope of f, reconstructed through
/// the dual.
inline GridFunction biconjugate(const GridFunction& f, const BiconjugateOptions& opts = {}) {
    const GridFunction env = convex_envelope(f);
    if (env.tails()) {
        GridFunction dual = legendre(env, {.cells = opts.dual_cells});
        return legendre(dual, {.cells = env.cells(), .window = env.domain()});
    }
    const double h = env.step();
    double lo = 0.0, hi = 0.0;
    if (env.cells() > 0) {
        lo = (env[1] - env[0]) / h;
        hi = (env[env.cells()] - env[env.cells() - 1]) / h;
    }
    Interval window{lo - 1.0, hi + 1.0};
    GridFunction dual = legendre(env, {.cells = opts.dual_cells, .window = window});
    GridFunction back = legendre(dual, {.cells = env.cells()});
    return back;
}

// ---------------------------------------------------------------------------
// Second derivative: regular density and atoms

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

/// Decomposition of the second-derivative measure on [lo + h/2, hi - h/2].
/// Interior node i (1..cells-1) carries the dual cell of width h around it.
struct SecondDerivDecomposition {
    Interval domain;
    double step = 0.0;
    std::vector<double> nodes;            ///< interior node positions
    std::vector<double> regular_density;  ///< a.e. second derivative at each node
    std::vector<Atom> atoms;
    double total_mass = 0.0;
    double atom_threshold = 0.0;

    double regular_mass() const {
        double s = 0.0;
        for (double r : regular_density) s += r * step;
        return s;
    }
    double atom_mass() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.mass;
        return s;
    }
    bool has_atoms() const { return !atoms.empty(); }
};

/// Splits ∂²f into a regular density and atoms.
///
/// The raw density at an interior node is the centered second difference
/// over h². A node is part of an atom when its raw density exceeds the
/// larger of the background densities on each side by more than
/// threshold / h, with threshold = 10 h (median density + 1). The background
/// on a side is the density two nodes away, or the nearest node beyond it
/// that does not itself stand out. The first and
/// last interior nodes are never atoms, so endpoint blow-up of the density
/// is kept in the regular part. Each flagged run is widened by one node;
/// inside it the regular density is interpolated linearly from the
/// neighbouring nodes and the excess becomes the atom mass.
inline SecondDerivDecomposition second_derivative_decompose(const GridFunction& f) {
    f.require_convex("second_derivative_decompose");
    SecondDerivDecomposition out;
    out.domain = f.domain();
    out.step = f.step();
    const std::size_t n = f.cells();
    if (n < 2) return out;
    const double h = out.step;
    const std::size_t m = n - 1;  // interior nodes 1..n-1 stored at 0..m-1
    out.nodes.resize(m);
    std::vector<double> rho(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t i = k + 1;
        out.nodes[k] = f.node(i);
        double d2 = f[i + 1] - 2.0 * f[i] + f[i - 1];
        rho[k] = std::max(0.0, d2) / (h * h);
    }
    // Telescoped: slope of the last cell minus slope of the first.
    out.total_mass = ((f[n] - f[n - 1]) - (f[1] - f[0])) / h;

    const double threshold = 10.0 * h * (detail::median(rho) + 1.0);
    out.atom_threshold = threshold;
    std::vector<bool> flagged(m, false);
    if (m >= 5) {
        // Candidates stand out against at least one side. A candidate two
        // nodes away would hide a genuine atom, so the background skips over
        // candidates (a bounded number of them).
        std::vector<bool> candidate(m, false);
        for (std::size_t k = 1; k + 1 < m; ++k) {
            std::size_t l = k >= 2 ? k - 2 : k - 1;
            std::size_t r = k + 2 < m ? k + 2 : k + 1;
            if ((rho[k] - std::min(rho[l], rho[r])) * h > threshold) candidate[k] = true;
        }
        constexpr std::size_t kSkip = 6;
        for (std::size_t k = 1; k + 1 < m; ++k) {
            if (!candidate[k]) continue;
            std::size_t l = k >= 2 ? k - 2 : k - 1;
            for (std::size_t s = 0; s < kSkip && candidate[l] && l > 0; ++s) --l;
            std::size_t r = k + 2 < m ? k + 2 : k + 1;
            for (std::size_t s = 0; s < kSkip && candidate[r] && r + 1 < m; ++s) ++r;
            double background = std::max(rho[l], rho[r]);
            if ((rho[k] - background) * h > threshold) flagged[k] = true;
        }
    }
    out.regular_density = rho;
    std::size_t k = 0;
    while (k < m) {
        if (!flagged[k]) {
            ++k;
            continue;
        }
        std::size_t first = k, last = k;
        // Runs closer than the widening would allow are merged.
        auto flagged_within = [&](std::size_t from, std::size_t span) {
            for (std::size_t j = from + 1; j <= from + span && j < m; ++j)
                if (flagged[j]) return true;
            return false;
        };
        while (last + 1 < m && flagged_within(last, 3)) ++last;
        // Widen by one node on each side.
        std::size_t p = first > 0 ? first - 1 : first;
        std::size_t q = last + 1 < m ? last + 1 : last;
        bool has_left = p > 0, has_right = q + 1 < m;
        double rl = has_left ? rho[p - 1] : rho[q + 1];
        double rr = has_right ? rho[q + 1] : rho[p - 1];
        double yl = has_left ? out.nodes[p - 1] : out.nodes[p];
        double yr = has_right ? out.nodes[q + 1] : out.nodes[q];
        double mass = 0.0, moment = 0.0;
        for (std::size_t j = p; j <= q; ++j) {
            double w = yr > yl ? (out.nodes[j] - yl) / (yr - yl) : 0.5;
            double regular = (1.0 - w) * rl + w * rr;
            double excess = (rho[j] - regular) * h;
            out.regular_density[j] = regular;
            mass += excess;
            moment += excess * out.nodes[j];
        }
        if (mass > 0) out.atoms.push_back({moment / mass, mass});
        k = q + 1;
    }
    return out;
}

/// max over u's interior nodes y in `tested` of |φ''(u'(y)) u''(y) - 1|.
inline double check_inverse_hessian_relation(const GridFunction& phi, const GridFunction& u,
                                             Interval tested) {
    const double hu = u.step(), hp = phi.step();
    if (u.cells() < 2 || phi.cells() < 4) throw InvalidArgument("inverse hessian: grids too small");
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 1; i < u.cells(); ++i) {
        double y = u.node(i);
        if (!tested.contains(y)) continue;
        double upp = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (hu * hu);
        if (upp < 1e-12)
            throw DegenerateHessian("inverse hessian: u'' vanishes at y = " + std::to_string(y));
        double x = (u[i + 1] - u[i - 1]) / (2.0 * hu);
        // φ'' at x by linear interpolation of node second differences.
        double s = (x - phi.domain().lo) / hp;
        if (s < 1.0 || s > static_cast<double>(phi.cells() - 1)) continue;
        auto j = static_cast<std::size_t>(std::floor(s));
        if (j + 1 >= phi.cells()) j = phi.cells() - 2;
        double w = s - static_cast<double>(j);
        auto d2 = [&](std::size_t t) { return (phi[t + 1] - 2.0 * phi[t] + phi[t - 1]) / (hp * hp); };
        double ppp = (1.0 - w) * d2(j) + w * d2(j + 1);
        worst = std::max(worst, std::abs(ppp * upp - 1.0));
        any = true;
    }
    if (!any) throw DomainMismatch("inverse hessian: no tested node maps inside φ's grid");
    return worst;
}

// ---------------------------------------------------------------------------
// Sup-norm distance, affine shifts, affinity

/// Sup-norm of f - g after resampling by linear interpolation on the union
/// of both node sets. Functions on R are compared over R (affine tails
/// included; +infinity if the tail slopes differ).
inline double linf_distance(const GridFunction& f, const GridFunction& g) {
    if (f.on_real_line() != g.on_real_line())
        throw DomainMismatch("linf_distance: compact vs. real-line function");
    Interval common;
    if (f.on_real_line()) {
        if (f.tails()->left != g.tails()->left || f.tails()->right != g.tails()->right)
            return std::numeric_limits<double>::infinity();
        common = {std::min(f.domain().lo, g.domain().lo), std::max(f.domain().hi, g.domain().hi)};
    } else {
        common = {std::max(f.domain().lo, g.domain().lo), std::min(f.domain().hi, g.domain().hi)};
        if (common.lo > common.hi) throw DomainMismatch("linf_distance: disjoint domains");
    }
    double worst = std::abs(f(common.lo) - g(common.lo));
    worst = std::max(worst, std::abs(f(common.hi) - g(common.hi)));
    for (const GridFunction* src : {&f, &g})
        for (std::size_t i = 0; i < src->size(); ++i) {
            double x = src->node(i);
            if (common.contains(x)) worst = std::max(worst, std::abs(f(x) - g(x)));
        }
    return worst;
}

/// f + (slope * x + intercept); tails shift by the slope.
inline GridFunction add_affine(const GridFunction& f, double slope, double intercept) {
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] + slope * f.node(i) + intercept;
    std::optional<TailSlopes> tails;
    if (f.tails()) tails = TailSlopes{f.tails()->left + slope, f.tails()->right + slope};
    return GridFunction(f.domain(), std::move(v), tails);
}

/// Maximum deviation of the samples from the chord through the endpoints.
inline double chord_deviation(const GridFunction& f) {
    if (f.cells() == 0) return 0.0;
    const double a = f.domain().lo, len = f.domain().length();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double w = (f.node(i) - a) / len;
        worst = std::max(worst, std::abs(f[i] - ((1.0 - w) * f[0] + w * f[f.cells()])));
    }
    return worst;
}

inline bool is_affine(const GridFunction& f, double tol) { return chord_deviation(f) <= tol; }
inline bool is_affine(const PiecewiseAffine1D& f) { return f.is_affine(); }

/// Least-squares affine fit over nodes inside `region`, subtracted from f.
inline GridFunction align_affine(const GridFunction& f, Interval region) {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double x = f.node(i);
        if (!region.contains(x)) continue;
        n += 1; sx += x; sy += f[i]; sxx += x * x; sxy += x * f[i];
    }
    if (n < 2) throw InvalidArgument("align_affine: region holds fewer than two nodes");
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    return add_affine(f, -slope, -intercept);
}

}  // namespace kenergy
