#pragma once

// Sampled functions on uniform grids.
//
// A 1D grid over [lo, hi] with `cells` intervals has cells + 1 nodes, both
// endpoints included. Functions that live on the whole real line (the
// primal potentials) are stored on a truncation window together with the
// asymptotic slopes of their affine tails.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kenergy/errors.hpp"

namespace kenergy {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Asymptotic slopes (s-, s+) of a convex function on R outside its window.
struct TailSlopes {
    double left = 0.0;
    double right = 1.0;
    friend bool operator==(const TailSlopes&, const TailSlopes&) = default;
};

inline constexpr Interval kDefaultWindow{-30.0, 30.0};
inline constexpr std::size_t kDefaultCells = 4096;
inline constexpr std::size_t kDefaultCells2D = 256;

class GridFunction {
public:
    GridFunction() = default;

    GridFunction(Interval domain, std::vector<double> values,
                 std::optional<TailSlopes> tails = std::nullopt)
        : domain_(domain), values_(std::move(values)), tails_(tails) {
        if (values_.empty())
            throw InvalidArgument("GridFunction: no samples");
        if (!(domain_.hi >= domain_.lo))
            throw InvalidArgument("GridFunction: empty domain");
        if (values_.size() > 1 && !(domain_.hi > domain_.lo))
            throw InvalidArgument("GridFunction: degenerate domain with several samples");
        for (double v : values_)
            if (!std::isfinite(v))
                throw InvalidArgument("GridFunction: non-finite sample");
        if (tails_ && tails_->left > tails_->right)
            throw InvalidArgument("GridFunction: tail slopes out of order");
    }

    /// Samples `f` at the cells + 1 nodes of `domain`.
    static GridFunction sample(Interval domain, std::size_t cells,
                               const std::function<double(double)>& f,
                               std::optional<TailSlopes> tails = std::nullopt) {
        if (cells == 0) return GridFunction(domain, {f(domain.lo)}, tails);
        std::vector<double> v(cells + 1);
        const double h = domain.length() / static_cast<double>(cells);
        for (std::size_t i = 0; i <= cells; ++i) {
            double x = (i == cells) ? domain.hi : domain.lo + h * static_cast<double>(i);
            v[i] = f(x);
        }
        return GridFunction(domain, std::move(v), tails);
    }

    const Interval& domain() const { return domain_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& data() const { return values_; }
    const std::optional<TailSlopes>& tails() const { return tails_; }
    bool on_real_line() const { return tails_.has_value(); }

    std::size_t size() const { return values_.size(); }
    std::size_t cells() const { return values_.size() - 1; }
    double step() const {
        return cells() == 0 ? 0.0 : domain_.length() / static_cast<double>(cells());
    }
    double node(std::size_t i) const {
        if (i + 1 == values_.size() && cells() > 0) return domain_.hi;
        return domain_.lo + step() * static_cast<double>(i);
    }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Piecewise-linear interpolation; affine tails outside the window when
    /// present, +infinity outside a compact domain.
    double operator()(double x) const {
        if (x < domain_.lo) {
            if (tails_) return values_.front() + tails_->left * (x - domain_.lo);
            return std::numeric_limits<double>::infinity();
        }
        if (x > domain_.hi) {
            if (tails_) return values_.back() + tails_->right * (x - domain_.hi);
            return std::numeric_limits<double>::infinity();
        }
        if (cells() == 0) return values_.front();
        double s = (x - domain_.lo) / step();
        auto i = static_cast<std::size_t>(std::floor(s));
        if (i >= cells()) i = cells() - 1;
        double w = s - static_cast<double>(i);
        return (1.0 - w) * values_[i] + w * values_[i + 1];
    }

    double value_scale() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return std::max(1.0, m);
    }

    /// Largest violation of discrete convexity (raw second differences), 0
    /// when convex.
    double convexity_defect() const {
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < values_.size(); ++i) {
            double d2 = values_[i + 1] - 2.0 * values_[i] + values_[i - 1];
            worst = std::max(worst, -d2);
        }
        if (tails_ && cells() > 0) {
            const double h = step();
            double first = (values_[1] - values_[0]) / h;
            double last = (values_[cells()] - values_[cells() - 1]) / h;
            worst = std::max(worst, (tails_->left - first) * h);
            worst = std::max(worst, (last - tails_->right) * h);
        }
        return worst;
    }

    double convexity_tolerance() const { return 1e-10 * value_scale(); }
    bool is_convex() const { return convexity_defect() <= convexity_tolerance(); }

    /// Throws NonConvexInput unless discretely convex within tolerance.
    void require_convex(const char* where) const {
        if (!is_convex())
            throw NonConvexInput(std::string(where) + ": samples are not convex (defect " +
                                 std::to_string(convexity_defect()) + ")");
    }

private:
    Interval domain_{};
    std::vector<double> values_;
    std::optional<TailSlopes> tails_;
};

/// A function sampled on a (cells1 + 1) x (cells2 + 1) node grid over an
/// axis-aligned box, stored row-major with the first axis outermost.
class GridFunction2D {
public:
    GridFunction2D() = default;

    GridFunction2D(Interval axis1, Interval axis2, std::size_t cells1, std::size_t cells2,
                   std::vector<double> values)
        : axis1_(axis1), axis2_(axis2), cells1_(cells1), cells2_(cells2),
          values_(std::move(values)) {
        if (values_.size() != (cells1_ + 1) * (cells2_ + 1))
            throw InvalidArgument("GridFunction2D: sample count does not match grid");
        if (cells1_ == 0 || cells2_ == 0)
            throw InvalidArgument("GridFunction2D: need at least one cell per axis");
        for (double v : values_)
            if (!std::isfinite(v))
                throw InvalidArgument("GridFunction2D: non-finite sample");
    }

    static GridFunction2D sample(Interval axis1, Interval axis2, std::size_t cells1,
                                 std::size_t cells2,
                                 const std::function<double(double, double)>& f) {
        std::vector<double> v((cells1 + 1) * (cells2 + 1));
        GridFunction2D shape(axis1, axis2, cells1, cells2, std::vector<double>(v.size(), 0.0));
        for (std::size_t i = 0; i <= cells1; ++i)
            for (std::size_t j = 0; j <= cells2; ++j)
                v[i * (cells2 + 1) + j] = f(shape.node1(i), shape.node2(j));
        return GridFunction2D(axis1, axis2, cells1, cells2, std::move(v));
    }

    const Interval& axis1() const { return axis1_; }
    const Interval& axis2() const { return axis2_; }
    std::size_t cells1() const { return cells1_; }
    std::size_t cells2() const { return cells2_; }
    double step1() const { return axis1_.length() / static_cast<double>(cells1_); }
    double step2() const { return axis2_.length() / static_cast<double>(cells2_); }
    double node1(std::size_t i) const {
        return i == cells1_ ? axis1_.hi : axis1_.lo + step1() * static_cast<double>(i);
    }
    double node2(std::size_t j) const {
        return j == cells2_ ? axis2_.hi : axis2_.lo + step2() * static_cast<double>(j);
    }
    double at(std::size_t i, std::size_t j) const { return values_[i * (cells2_ + 1) + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[i * (cells2_ + 1) + j]; }
    const std::vector<double>& data() const { return values_; }

    double value_scale() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return std::max(1.0, m);
    }

    /// Largest negative part among axis second differences and the smaller
    /// eigenvalue of the centered-difference Hessian (scaled back to raw
    /// differences); 0 when discretely convex.
    double convexity_defect() const {
        double worst = 0.0;
        const double h1 = step1(), h2 = step2();
        for (std::size_t i = 0; i <= cells1_; ++i)
            for (std::size_t j = 0; j <= cells2_; ++j) {
                if (i > 0 && i < cells1_)
                    worst = std::max(worst, -(at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)));
                if (j > 0 && j < cells2_)
                    worst = std::max(worst, -(at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)));
                if (i > 0 && i < cells1_ && j > 0 && j < cells2_) {
                    double a = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (h1 * h1);
                    double b = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (h2 * h2);
                    double c = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) +
                                at(i - 1, j - 1)) / (4 * h1 * h2);
                    double mean = 0.5 * (a + b);
                    double rad = std::hypot(0.5 * (a - b), c);
                    worst = std::max(worst, -(mean - rad) * h1 * h2);
                }
            }
        return worst;
    }
    double convexity_tolerance() const { return 1e-10 * value_scale(); }
    bool is_convex() const { return convexity_defect() <= convexity_tolerance(); }
    void require_convex(const char* where) const {
        if (!is_convex())
            throw NonConvexInput(std::string(where) + ": 2D samples are not convex");
    }

private:
    Interval axis1_{}, axis2_{};
    std::size_t cells1_ = 0, cells2_ = 0;
    std::vector<double> values_;
};

/// Pointwise a*f + b*g on a shared grid.
inline GridFunction combine(double a, const GridFunction& f, double b, const GridFunction& g) {
    if (f.domain() != g.domain() || f.size() != g.size())
        throw DomainMismatch("combine: grids differ");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * f[i] + b * g[i];
    std::optional<TailSlopes> tails;
    if (f.tails() && g.tails())
        tails = TailSlopes{a * f.tails()->left + b * g.tails()->left,
                           a * f.tails()->right + b * g.tails()->right};
    return GridFunction(f.domain(), std::move(v), tails);
}

}  // namespace kenergy
