#pragma once

// Relative K-stability margins over piecewise-affine test functions, the
// discrete minimization of the 1D K-energy, and the uniqueness certificate.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "kenergy/convex_core.hpp"
#include "kenergy/energy.hpp"
#include "kenergy/errors.hpp"
#include "kenergy/geodesic.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/parallel.hpp"
#include "kenergy/polytope.hpp"
#include "kenergy/pwa.hpp"

namespace kenergy {

// ---------------------------------------------------------------------------
// 1D and 2D minimization helpers

/// Minimizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-12) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (fc <= fd) {
            b = d; d = c; fd = fc;
            c = b - r * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + r * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Nelder-Mead in the plane. Returns the best vertex found.
inline Vec2 nelder_mead(const std::function<double(Vec2)>& f, Vec2 start, double size,
                        int max_iter = 4000, double ftol = 1e-14) {
    std::array<Vec2, 3> x{start, start + Vec2{size, 0.0}, start + Vec2{0.0, size}};
    std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        Vec2 best = x[idx[0]], mid = x[idx[1]], worst = x[idx[2]];
        double fb = fx[idx[0]], fm = fx[idx[1]], fw = fx[idx[2]];
        double spread = std::max(std::abs(best.x - worst.x) + std::abs(best.y - worst.y),
                                 std::abs(best.x - mid.x) + std::abs(best.y - mid.y));
        if (fw - fb <= ftol * (1.0 + std::abs(fb)) && spread < 1e-10) break;
        Vec2 c = 0.5 * (best + mid);
        Vec2 xr = c + (c - worst);
        double fr = f(xr);
        if (fr < fb) {
            Vec2 xe = c + 2.0 * (c - worst);
            double fe = f(xe);
            if (fe < fr) { worst = xe; fw = fe; } else { worst = xr; fw = fr; }
        } else if (fr < fm) {
            worst = xr; fw = fr;
        } else {
            Vec2 xc = fr < fw ? c + 0.5 * (xr - c) : c + 0.5 * (worst - c);
            double fcv = f(xc);
            if (fcv < std::min(fr, fw)) {
                worst = xc; fw = fcv;
            } else {
                mid = best + 0.5 * (mid - best);
                worst = best + 0.5 * (worst - best);
                fm = f(mid);
                fw = f(worst);
            }
        }
        x = {best, mid, worst};
        fx = {fb, fm, fw};
    }
    int b = 0;
    for (int i = 1; i < 3; ++i)
        if (fx[i] < fx[b]) b = i;
    return x[b];
}

// ---------------------------------------------------------------------------
// Relative norm

struct RelativeNormOptions {
    /// Multiply inf_P (u - l) by Vol(P). Off: the literal form.
    bool scale_inf_by_volume = false;
};

struct RelativeNorm {
    double value = 0.0;
    std::vector<double> minimizer_l;  ///< coefficients of the optimal linear l
};

namespace detail {

/// Minimizes a convex function of one slope over a bracket widened around
/// [lo, hi]; throws Unbounded when it keeps decreasing past the bracket.
inline RelativeNorm minimize_over_slope(const std::function<double(double)>& f, double lo, double hi) {
    double w = std::max(1.0, hi - lo);
    double a0 = lo - w, a1 = hi + w;
    double a = golden_section(f, a0, a1);
    double fa = f(a);
    for (double edge : {a0, a1}) {
        if (std::abs(a - edge) < 1e-6 * w) {
            double beyond = edge + (edge < a ? -10.0 * w : 10.0 * w);
            if (f(beyond) < fa - 1e-9 * (1.0 + std::abs(fa)))
                throw Unbounded("relative_norm: objective unbounded below in l");
        }
    }
    return {fa, {a}};
}

}  // namespace detail

/// inf_l ∫_P (u - l) dy - inf_P (u - l) over linear l, exact for PWA u.
inline RelativeNorm relative_norm(const PiecewiseAffine1D& u, const Polytope& P,
                                  const RelativeNormOptions& opts = {}) {
    detail::require_same_interval(u.domain(), P, "relative_norm");
    const Interval& I = P.as_interval();
    const double first_moment = 0.5 * (I.hi * I.hi - I.lo * I.lo);
    const double c = opts.scale_inf_by_volume ? P.volume() : 1.0;
    const double integral = u.integral();
    auto f = [&](double a) {
        return integral - a * first_moment - c * u.plus_affine(-a, 0.0).minimum();
    };
    return detail::minimize_over_slope(f, u.slopes().front(), u.slopes().back());
}

/// Same functional for samples: trapezoid integral, minimum over nodes.
inline RelativeNorm relative_norm(const GridFunction& u, const Polytope& P,
                                  const RelativeNormOptions& opts = {}) {
    detail::require_same_interval(u.domain(), P, "relative_norm");
    const Interval& I = P.as_interval();
    const double first_moment = 0.5 * (I.hi * I.hi - I.lo * I.lo);
    const double c = opts.scale_inf_by_volume ? P.volume() : 1.0;
    const double integral = detail::trapezoid(u);
    auto f = [&](double a) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u.size(); ++i) m = std::min(m, u[i] - a * u.node(i));
        return integral - a * first_moment - c * m;
    };
    const double h = u.step();
    double lo = (u[1] - u[0]) / h, hi = (u[u.cells()] - u[u.cells() - 1]) / h;
    return detail::minimize_over_slope(f, std::min(lo, hi), std::max(lo, hi));
}

/// 2D version by Nelder-Mead over l, restarted from the average gradient
/// and its four unit offsets.
inline RelativeNorm relative_norm(const MaxAffine2D& u, const RelativeNormOptions& opts = {}) {
    const Polytope& P = u.domain();
    const double area = P.volume();
    const Vec2 moment = area * centroid(P.vertices());
    const double c = opts.scale_inf_by_volume ? area : 1.0;
    const double integral = u.integral();
    auto f = [&](Vec2 l) { return integral - dot(l, moment) - c * u.minimum_minus_linear(l); };
    const Vec2 g = u.average_gradient();
    const std::array<Vec2, 5> seeds{g, g + Vec2{1, 0}, g - Vec2{1, 0}, g + Vec2{0, 1}, g - Vec2{0, 1}};
    Vec2 best = g;
    double fbest = f(g);
    for (const Vec2& s : seeds) {
        Vec2 x = s;
        for (double size : {0.5, 0.05, 0.005}) x = nelder_mead(f, x, size);
        double fx = f(x);
        if (fx < fbest) {
            fbest = fx;
            best = x;
        }
    }
    return {fbest, {best.x, best.y}};
}

// ---------------------------------------------------------------------------
// Stability margin

struct Generator {
    std::string label;
    std::variant<PiecewiseAffine1D, MaxAffine2D> fn;
};

struct GeneratorOptions {
    int max_denominator = 8;
    int max_direction_entry = 2;  ///< 2D directions have entries in [-k, k]
    int random_sums = 64;
    std::uint64_t seed = 0;
};

namespace detail {

/// Distinct rationals p/q (q <= max_q) strictly inside (lo, hi), sorted.
inline std::vector<std::pair<long, long>> rationals_between(double lo, double hi, int max_q) {
    std::vector<std::pair<long, long>> out;
    for (long q = 1; q <= max_q; ++q) {
        long p0 = static_cast<long>(std::floor(lo * q)), p1 = static_cast<long>(std::ceil(hi * q));
        for (long p = p0; p <= p1; ++p) {
            double b = static_cast<double>(p) / static_cast<double>(q);
            if (!(b > lo + 1e-12 && b < hi - 1e-12)) continue;
            if (std::gcd(std::abs(p), q) != 1) continue;
            out.emplace_back(p, q);
        }
    }
    std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.first * b.second < b.first * a.second; });
    return out;
}

inline std::string fraction(long p, long q) {
    return q == 1 ? std::to_string(p) : std::to_string(p) + "/" + std::to_string(q);
}

}  // namespace detail

/// Simple kinks max(0, <a, y> - b) with primitive integer a and rational b
/// strictly inside the range of <a, y> on P, plus seeded random positive
/// combinations of two or three of them.
inline std::vector<Generator> default_generators(const Polytope& P, const GeneratorOptions& opts = {}) {
    std::vector<Generator> kinks;
    if (P.dim() == 1) {
        const Interval& I = P.as_interval();
        for (int a : {1, -1}) {
            double lo = std::min(a * I.lo, a * I.hi), hi = std::max(a * I.lo, a * I.hi);
            for (auto [p, q] : detail::rationals_between(lo, hi, opts.max_denominator)) {
                double b = static_cast<double>(p) / static_cast<double>(q);
                kinks.push_back({"kink a=" + std::to_string(a) + " b=" + detail::fraction(p, q),
                                 PiecewiseAffine1D::kink(I, a, b)});
            }
        }
    } else {
        const int k = opts.max_direction_entry;
        for (int a1 = -k; a1 <= k; ++a1)
            for (int a2 = -k; a2 <= k; ++a2) {
                if (std::gcd(std::abs(a1), std::abs(a2)) != 1) continue;
                Vec2 a{static_cast<double>(a1), static_cast<double>(a2)};
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (const Vec2& v : P.vertices()) {
                    lo = std::min(lo, dot(a, v));
                    hi = std::max(hi, dot(a, v));
                }
                for (auto [p, q] : detail::rationals_between(lo, hi, opts.max_denominator)) {
                    double b = static_cast<double>(p) / static_cast<double>(q);
                    kinks.push_back({"kink a=(" + std::to_string(a1) + "," + std::to_string(a2) +
                                         ") b=" + detail::fraction(p, q),
                                     MaxAffine2D::kink(P, a, b)});
                }
            }
    }
    std::vector<Generator> out = kinks;
    if (kinks.size() < 2) return out;
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, kinks.size() - 1);
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    for (int s = 0; s < opts.random_sums; ++s) {
        int terms = 2 + static_cast<int>(rng() % 2);
        std::vector<std::size_t> chosen;
        while (static_cast<int>(chosen.size()) < terms) {
            std::size_t i = pick(rng);
            if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
        }
        std::string label = "sum";
        std::optional<std::variant<PiecewiseAffine1D, MaxAffine2D>> acc;
        for (std::size_t i : chosen) {
            double w = 1.1 - weight(rng);  // in (0.1, 1]
            char buf[64];
            std::snprintf(buf, sizeof buf, " %.17g*[%s]", w, kinks[i].label.c_str());
            label += buf;
            std::visit(
                [&](const auto& f) {
                    using F = std::decay_t<decltype(f)>;
                    F term = f.scaled(w);
                    if (!acc) acc = term;
                    else acc = std::get<F>(*acc) + term;
                },
                kinks[i].fn);
        }
        out.push_back({label, *acc});
    }
    return out;
}

struct StabilityReport {
    double delta_estimate = 0.0;
    Generator witness;
    double witness_linear = 0.0;
    double witness_norm = 0.0;
    std::size_t family_size = 0;  ///< generators with nonzero norm
    std::size_t excluded = 0;
    Convention convention = Convention::donaldson;
};

/// Norms below this are treated as zero (affine generators).
inline constexpr double kZeroNorm = 1e-12;

/// min L(u) / relative_norm(u) over the family, skipping zero norms.
inline StabilityReport stability_margin(const Polytope& P, Convention conv,
                                        const std::vector<Generator>& family,
                                        const RelativeNormOptions& norm_opts = {}) {
    std::vector<double> lin(family.size()), nrm(family.size());
    parallel_for(family.size(), [&](std::size_t i) {
        std::visit(
            [&](const auto& f) {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, PiecewiseAffine1D>) {
                    lin[i] = linear_part(f, P, conv);
                    nrm[i] = relative_norm(f, P, norm_opts).value;
                } else {
                    if (!(f.domain() == P)) throw DomainMismatch("stability_margin: generator polytope differs");
                    lin[i] = linear_part(f, conv);
                    nrm[i] = relative_norm(f, norm_opts).value;
                }
            },
            family[i].fn);
    });
    StabilityReport r;
    r.convention = conv;
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (!(nrm[i] > kZeroNorm)) {
            ++r.excluded;
            continue;
        }
        ++r.family_size;
        double ratio = lin[i] / nrm[i];
        if (!arg || ratio < r.delta_estimate) {
            arg = i;
            r.delta_estimate = ratio;
        }
    }
    if (!arg) throw EmptyFamily("stability_margin: no generator with nonzero norm");
    r.witness = family[*arg];
    r.witness_linear = lin[*arg];
    r.witness_norm = nrm[*arg];
    return r;
}

inline StabilityReport stability_margin(const Polytope& P, Convention conv,
                                        const GeneratorOptions& opts = {}) {
    return stability_margin(P, conv, default_generators(P, opts));
}

// ---------------------------------------------------------------------------
// Discrete minimization of F = L - ∫ log u''

namespace detail {

/// Second difference of k log k (0 log 0 = 0), in a cancellation-free form.
inline double klogk_second_difference(double k) {
    if (k == 1.0) return 2.0 * std::log(2.0);
    return k * std::log1p(-1.0 / (k * k)) + std::log1p(2.0 / (k - 1.0));
}

}  // namespace detail

struct MinimizeOptions {
    std::size_t cells = 1024;
    double tolerance = 1e-8;
    int max_iterations = 10000;
    double pin_value = 0.0;  ///< value of u at the middle node
};

/// Newton iteration on the node densities d_k = u''(y_k), k = 1..N-1, of
///   F(d) = Σ c_k d_k - Σ w_k log d_k,
/// where c_k = L(h max(0, y - y_k)) and the w_k are quadrature weights
/// adapted to the (y - lo) log(y - lo) boundary profile: w_k -> h away from
/// the ends and the canonical potential of P is an exact critical point.
/// The problem is separable and each step is a damped diagonal Newton step.
class DiscreteFMinimizer {
public:
    DiscreteFMinimizer(const Polytope& P, Convention conv, std::size_t cells,
                       const GridFunction* initial = nullptr)
        : domain_(P.as_interval()), cells_(cells) {
        if (cells < 4) throw InvalidArgument("minimize_F: need at least four cells");
        const double h = domain_.length() / static_cast<double>(cells);
        const auto coef = coefficients(conv, P);
        const double n = static_cast<double>(cells);
        c_.resize(cells - 1);
        w_.resize(cells - 1);
        d_.resize(cells - 1);
        for (std::size_t k = 1; k < cells; ++k) {
            double kk = static_cast<double>(k), r = domain_.hi - (domain_.lo + kk * h);
            double c = h * (coef.boundary * r - coef.interior * r * r / 2.0);
            if (!(c > 0)) throw Unbounded("minimize_F: linear part is not positive on a kink");
            c_[k - 1] = c;
            w_[k - 1] = h * (kk * (n - kk) / n) *
                        (detail::klogk_second_difference(kk) + detail::klogk_second_difference(n - kk));
        }
        if (initial) {
            if (initial->domain() != domain_ || initial->cells() != cells)
                throw DomainMismatch("minimize_F: initial guess on a different grid");
            double scale = 0.0;
            for (std::size_t k = 1; k < cells; ++k) {
                double v = ((*initial)[k + 1] - 2.0 * (*initial)[k] + (*initial)[k - 1]) / (h * h);
                d_[k - 1] = v;
                scale = std::max(scale, v);
            }
            for (std::size_t k = 0; k + 1 < cells; ++k)
                if (!(d_[k] > 1e-12 * scale) || !(scale > 0)) d_[k] = w_[k] / c_[k];
        } else {
            std::fill(d_.begin(), d_.end(), 1.0);
        }
    }

    /// One damped Newton step. Returns true once converged.
    bool step() {
        if (residual() <= tolerance_) return true;
        std::vector<double> delta(d_.size());
        double slope = 0.0;
        for (std::size_t k = 0; k < d_.size(); ++k) {
            delta[k] = d_[k] - c_[k] * d_[k] * d_[k] / w_[k];
            slope += (c_[k] - w_[k] / d_[k]) * delta[k];
        }
        const double f0 = objective();
        double alpha = 1.0;
        std::vector<double> trial(d_.size());
        while (alpha > 1e-20) {
            bool positive = true;
            for (std::size_t k = 0; k < d_.size(); ++k) {
                trial[k] = d_[k] + alpha * delta[k];
                if (!(trial[k] > 0)) { positive = false; break; }
            }
            if (positive && objective_at(trial) <= f0 + 1e-4 * alpha * slope) break;
            alpha *= 0.5;
        }
        ++iterations_;
        if (alpha <= 1e-20) return residual() <= tolerance_;
        d_ = trial;
        return residual() <= tolerance_;
    }

    /// max_k |c_k d_k / w_k - 1|, the gradient scaled by the Hessian.
    double residual() const {
        double r = 0.0;
        for (std::size_t k = 0; k < d_.size(); ++k) r = std::max(r, std::abs(c_[k] * d_[k] / w_[k] - 1.0));
        return r;
    }
    double objective() const { return objective_at(d_); }
    int iterations() const { return iterations_; }
    const std::vector<double>& densities() const { return d_; }
    void set_tolerance(double tol) { tolerance_ = tol; }

    /// The current iterate with zero mean slope and u(middle node) = pin.
    GridFunction current(double pin = 0.0) const {
        const double h = domain_.length() / static_cast<double>(cells_);
        std::vector<double> slopes(cells_);
        double s = 0.0;
        slopes[0] = 0.0;
        for (std::size_t j = 1; j < cells_; ++j) slopes[j] = slopes[j - 1] + h * d_[j - 1];
        for (double v : slopes) s += v;
        const double shift = s / static_cast<double>(cells_);
        std::vector<double> u(cells_ + 1, 0.0);
        for (std::size_t j = 0; j < cells_; ++j) u[j + 1] = u[j] + h * (slopes[j] - shift);
        const double offset = pin - u[cells_ / 2];
        for (double& v : u) v += offset;
        return GridFunction(domain_, std::move(u));
    }

private:
    double objective_at(const std::vector<double>& d) const {
        double f = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) f += c_[k] * d[k] - w_[k] * std::log(d[k]);
        return f;
    }

    Interval domain_;
    std::size_t cells_;
    std::vector<double> c_, w_, d_;
    double tolerance_ = 1e-8;
    int iterations_ = 0;
};

struct MinimizeResult {
    GridFunction u;
    int iterations = 0;
    double residual = 0.0;
    double objective = 0.0;
};

/// Minimizer of the discretized K-energy on an interval, normalized to zero
/// mean slope and u(middle node) = pin_value.
inline MinimizeResult minimize_F(const Polytope& P, Convention conv, const MinimizeOptions& opts = {}) {
    if (P.dim() != 1) throw DomainMismatch("minimize_F: intervals only");
    DiscreteFMinimizer m(P, conv, opts.cells);
    m.set_tolerance(opts.tolerance);
    while (!m.step()) {
        if (m.iterations() >= opts.max_iterations)
            throw NonConvergence("minimize_F: iteration cap reached", m.residual(), m.iterations());
    }
    return {m.current(opts.pin_value), m.iterations(), m.residual(), m.objective()};
}

/// argmin over s > 0 of M(s u).
inline double scale_minimizer(const GridFunction& u, const Polytope& P, Convention conv) {
    const MabuchiOptions no_primal{.primal = false};
    auto f = [&](double log_s) {
        std::vector<double> v(u.data());
        for (double& x : v) x *= std::exp(log_s);
        auto r = mabuchi(GridFunction(u.domain(), std::move(v)), P, conv, no_primal);
        return r.finite ? r.total : std::numeric_limits<double>::infinity();
    };
    return std::exp(golden_section(f, std::log(1e-3), std::log(1e3), 1e-13));
}

// ---------------------------------------------------------------------------
// Uniqueness certificate

struct CertifyOptions {
    double epsilon = 0.05;            ///< K_ε = {dist(y, ∂P) >= ε}
    double energy_tol = 1e-6;
    double hessian_tol = 1e-4;        ///< L¹ over K_ε
    double convexity_tol = 1e-9;      ///< relative to 1 + value scale
    double linear_tol = 1e-4;
    double affine_tol = 1e-6;         ///< relative to 1 + value scale
    double density_bound = 1e8;
    double inverse_relation_tol = 0.05;
    std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 1.0};
};

struct UniquenessCertificate {
    Convention convention = Convention::donaldson;
    // (0) hypothesis on u0 over K_ε
    double density_sup = 0.0;
    double inverse_relation_residual = 0.0;
    bool hypothesis_ok = false;
    // (i) M constant along u0 + t (u1 - u0)
    std::vector<double> ts;
    std::vector<double> energies;
    double energy_variation = 0.0;
    bool energy_constant = false;
    // (ii) regular Hessians agree
    double hessian_agreement = 0.0;
    bool hessians_agree = false;
    // (iii) v = u1 - u0 convex on K_ε
    double convexity_defect = 0.0;
    bool difference_convex = false;
    // (iv) L(v) = 0
    double L_of_difference = 0.0;
    bool linear_vanishes = false;
    // (v) v affine on K_ε
    double affine_residual = 0.0;
    bool affine_conclusion = false;

    std::optional<std::string> failed_stage;

    bool passed() const { return !failed_stage.has_value(); }

    /// Throws HypothesisFailed naming the first stage that broke.
    void require() const {
        if (failed_stage) throw HypothesisFailed("certify_unique: stage " + *failed_stage + " failed");
    }
};

namespace detail {

inline GridFunction restrict_to(const GridFunction& f, Interval region) {
    std::size_t first = f.size(), last = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (region.contains(f.node(i))) {
            first = std::min(first, i);
            last = i;
        }
    if (first >= last) throw InvalidArgument("restrict_to: region holds fewer than two nodes");
    std::vector<double> v(f.data().begin() + static_cast<long>(first), f.data().begin() + static_cast<long>(last) + 1);
    return GridFunction({f.node(first), f.node(last)}, std::move(v));
}

}  // namespace detail

/// Checks the chain: equal energy along the segment, equal Hessians a.e.,
/// convex difference, L(difference) = 0, hence affine difference. Every
/// stage is evaluated; `failed_stage` names the first one that failed.
inline UniquenessCertificate certify_unique(const GridFunction& u0, const GridFunction& u1,
                                            const Polytope& P, Convention conv,
                                            const CertifyOptions& opts = {}) {
    if (P.dim() != 1) throw DomainMismatch("certify_unique: intervals only");
    detail::require_same_interval(u0.domain(), P, "certify_unique");
    if (u0.domain() != u1.domain() || u0.size() != u1.size())
        throw DomainMismatch("certify_unique: u0 and u1 live on different grids");
    u0.require_convex("certify_unique");
    u1.require_convex("certify_unique");
    const Interval& I = P.as_interval();
    const Interval K{I.lo + opts.epsilon, I.hi - opts.epsilon};

    UniquenessCertificate c;
    c.convention = conv;

    // (0)
    auto dec = second_derivative_decompose(u0);
    bool atoms_in_K = std::any_of(dec.atoms.begin(), dec.atoms.end(),
                                  [&](const Atom& a) { return K.contains(a.location); });
    for (std::size_t k = 0; k < dec.nodes.size(); ++k)
        if (K.contains(dec.nodes[k])) c.density_sup = std::max(c.density_sup, dec.regular_density[k]);
    try {
        GridFunction phi = legendre(u0);
        c.inverse_relation_residual = check_inverse_hessian_relation(phi, u0, K);
    } catch (const DegenerateHessian&) {
        c.inverse_relation_residual = std::numeric_limits<double>::infinity();
    }
    c.hypothesis_ok = !atoms_in_K && c.density_sup <= opts.density_bound &&
                      c.inverse_relation_residual <= opts.inverse_relation_tol;

    // (i)
    const GridFunction v = combine(1.0, u1, -1.0, u0);
    c.ts = opts.ts;
    const MabuchiOptions no_primal{.primal = false};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool finite = true;
    for (double t : opts.ts) {
        GridFunction ut = combine(1.0, u0, t, v);
        if (!ut.is_convex()) { finite = false; c.energies.push_back(std::numeric_limits<double>::infinity()); continue; }
        auto r = mabuchi(ut, P, conv, no_primal);
        finite = finite && r.finite;
        c.energies.push_back(r.total);
        lo = std::min(lo, r.total);
        hi = std::max(hi, r.total);
    }
    c.energy_variation = finite ? hi - lo : std::numeric_limits<double>::infinity();
    c.energy_constant = c.energy_variation <= opts.energy_tol;

    // (ii)
    c.hessian_agreement = regular_hessian_distance(u0, u1, K);
    c.hessians_agree = c.hessian_agreement <= opts.hessian_tol;

    // (iii)
    GridFunction vk = detail::restrict_to(v, K);
    GridFunction env = convex_envelope(vk);
    for (std::size_t i = 0; i < vk.size(); ++i) c.convexity_defect = std::max(c.convexity_defect, vk[i] - env[i]);
    const double scale = 1.0 + vk.value_scale();
    c.difference_convex = c.convexity_defect <= opts.convexity_tol * scale;

    // (iv)
    c.L_of_difference = linear_part(v, P, conv);
    c.linear_vanishes = std::abs(c.L_of_difference) <= opts.linear_tol;

    // (v)
    c.affine_residual = chord_deviation(vk);
    bool affine = c.affine_residual <= opts.affine_tol * scale;

    const std::pair<bool, const char*> stages[] = {
        {c.hypothesis_ok, "0-hypothesis"}, {c.energy_constant, "i-energy"},
        {c.hessians_agree, "ii-hessian"},  {c.difference_convex, "iii-convexity"},
        {c.linear_vanishes, "iv-linear"},  {affine, "v-affine"}};
    for (const auto& [ok, name] : stages)
        if (!ok) {
            c.failed_stage = name;
            break;
        }
    c.affine_conclusion = !c.failed_stage.has_value();
    return c;
}

}  // namespace kenergy
