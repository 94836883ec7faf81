#pragma once

// Exact piecewise-affine convex functions: breakpoint/slope form on an
// interval and max-of-affine form on a lattice polygon.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "kenergy/errors.hpp"
#include "kenergy/geometry.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/polytope.hpp"

namespace kenergy {

class PiecewiseAffine1D {
public:
    struct Line {
        double slope = 0.0;
        double intercept = 0.0;
        double operator()(double y) const { return slope * y + intercept; }
    };

    PiecewiseAffine1D() = default;

    /// `slopes` has one more entry than `breakpoints`; slopes must increase
    /// strictly and breakpoints lie strictly inside the domain, in order.
    PiecewiseAffine1D(Interval domain, double value_at_lo, std::vector<double> breakpoints,
                      std::vector<double> slopes)
        : domain_(domain), value_at_lo_(value_at_lo), breakpoints_(std::move(breakpoints)),
          slopes_(std::move(slopes)) {
        if (!(domain_.hi > domain_.lo)) throw InvalidArgument("PiecewiseAffine1D: empty domain");
        if (slopes_.size() != breakpoints_.size() + 1)
            throw InvalidArgument("PiecewiseAffine1D: need one more slope than breakpoints");
        for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
            if (!(breakpoints_[i] > domain_.lo && breakpoints_[i] < domain_.hi))
                throw InvalidArgument("PiecewiseAffine1D: breakpoint outside the open domain");
            if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
                throw InvalidArgument("PiecewiseAffine1D: breakpoints not increasing");
        }
        for (std::size_t i = 1; i < slopes_.size(); ++i)
            if (!(slopes_[i] > slopes_[i - 1]))
                throw NonConvexInput("PiecewiseAffine1D: slopes must increase strictly");
    }

    static PiecewiseAffine1D affine(Interval domain, double slope, double intercept) {
        return {domain, slope * domain.lo + intercept, {}, {slope}};
    }

    /// max(0, a*y - b) on `domain`.
    static PiecewiseAffine1D kink(Interval domain, double a, double b) {
        return max_of(domain, {{0.0, 0.0}, {a, -b}});
    }

    /// Upper envelope of finitely many lines, restricted to `domain`.
    static PiecewiseAffine1D max_of(Interval domain, std::vector<Line> lines) {
        if (lines.empty()) throw InvalidArgument("PiecewiseAffine1D::max_of: no lines");
        auto pick_at = [&](double y) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < lines.size(); ++i) {
                double vi = lines[i](y), vb = lines[best](y);
                if (vi > vb || (vi == vb && lines[i].slope > lines[best].slope)) best = i;
            }
            return best;
        };
        std::size_t cur = pick_at(domain.lo);
        const double start = lines[cur](domain.lo);
        std::vector<double> bps, slopes{lines[cur].slope};
        double y = domain.lo;
        while (true) {
            double next = std::numeric_limits<double>::infinity();
            std::size_t who = cur;
            for (std::size_t i = 0; i < lines.size(); ++i) {
                if (lines[i].slope <= lines[cur].slope) continue;
                double yi = (lines[cur].intercept - lines[i].intercept) /
                            (lines[i].slope - lines[cur].slope);
                if (yi < y) yi = y;
                if (yi < next || (yi == next && lines[i].slope > lines[who].slope)) {
                    next = yi;
                    who = i;
                }
            }
            if (who == cur || !(next < domain.hi)) break;
            if (next > domain.lo && (bps.empty() || next > bps.back())) {
                bps.push_back(next);
                slopes.push_back(lines[who].slope);
            } else {
                slopes.back() = lines[who].slope;
            }
            cur = who;
            y = next;
        }
        return {domain, start, std::move(bps), std::move(slopes)};
    }

    const Interval& domain() const { return domain_; }
    double value_at_lo() const { return value_at_lo_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& slopes() const { return slopes_; }
    std::size_t pieces() const { return slopes_.size(); }
    bool is_affine() const { return breakpoints_.empty(); }

    /// Left endpoint of piece i and the affine line representing it.
    double piece_start(std::size_t i) const { return i == 0 ? domain_.lo : breakpoints_[i - 1]; }
    double piece_end(std::size_t i) const {
        return i + 1 == slopes_.size() ? domain_.hi : breakpoints_[i];
    }
    Line piece_line(std::size_t i) const {
        double y = domain_.lo, v = value_at_lo_;
        for (std::size_t k = 0; k < i; ++k) {
            v += slopes_[k] * (breakpoints_[k] - y);
            y = breakpoints_[k];
        }
        return {slopes_[i], v - slopes_[i] * y};
    }

    double operator()(double y) const {
        y = std::clamp(y, domain_.lo, domain_.hi);
        double pos = domain_.lo, v = value_at_lo_;
        for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
            if (y <= breakpoints_[k]) return v + slopes_[k] * (y - pos);
            v += slopes_[k] * (breakpoints_[k] - pos);
            pos = breakpoints_[k];
        }
        return v + slopes_.back() * (y - pos);
    }

    /// Exact integral over the domain.
    double integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i < pieces(); ++i) {
            double a = piece_start(i), b = piece_end(i);
            s += 0.5 * ((*this)(a) + (*this)(b)) * (b - a);
        }
        return s;
    }

    /// Exact minimum over the domain (attained at an endpoint or breakpoint).
    double minimum() const {
        double m = std::min((*this)(domain_.lo), (*this)(domain_.hi));
        for (double b : breakpoints_) m = std::min(m, (*this)(b));
        return m;
    }

    PiecewiseAffine1D plus_affine(double slope, double intercept) const {
        std::vector<double> s = slopes_;
        for (double& v : s) v += slope;
        return {domain_, value_at_lo_ + slope * domain_.lo + intercept, breakpoints_, std::move(s)};
    }

    PiecewiseAffine1D scaled(double c) const {
        if (!(c > 0)) throw InvalidArgument("PiecewiseAffine1D::scaled: factor must be positive");
        std::vector<double> s = slopes_;
        for (double& v : s) v *= c;
        return {domain_, c * value_at_lo_, breakpoints_, std::move(s)};
    }

    friend PiecewiseAffine1D operator+(const PiecewiseAffine1D& f, const PiecewiseAffine1D& g) {
        if (f.domain_ != g.domain_) throw DomainMismatch("PiecewiseAffine1D: domains differ");
        std::vector<double> bps;
        std::merge(f.breakpoints_.begin(), f.breakpoints_.end(), g.breakpoints_.begin(),
                   g.breakpoints_.end(), std::back_inserter(bps));
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        std::vector<double> slopes;
        for (std::size_t i = 0; i <= bps.size(); ++i) {
            double a = i == 0 ? f.domain_.lo : bps[i - 1];
            double b = i == bps.size() ? f.domain_.hi : bps[i];
            double mid = 0.5 * (a + b);
            slopes.push_back(f.slope_at(mid) + g.slope_at(mid));
        }
        return {f.domain_, f.value_at_lo_ + g.value_at_lo_, std::move(bps), std::move(slopes)};
    }

    GridFunction sample(std::size_t cells) const {
        return GridFunction::sample(domain_, cells, [this](double y) { return (*this)(y); });
    }

private:
    double slope_at(double y) const {
        for (std::size_t k = 0; k < breakpoints_.size(); ++k)
            if (y < breakpoints_[k]) return slopes_[k];
        return slopes_.back();
    }

    Interval domain_{0.0, 1.0};
    double value_at_lo_ = 0.0;
    std::vector<double> breakpoints_;
    std::vector<double> slopes_{0.0};
};

/// max_i (<a_i, y> + b_i) over a lattice polygon; forms that never attain
/// the maximum on a set of positive area are dropped at construction.
class MaxAffine2D {
public:
    MaxAffine2D() = default;

    MaxAffine2D(Polytope domain, std::vector<AffineForm2> forms) : domain_(std::move(domain)) {
        if (domain_.dim() != 2) throw DomainMismatch("MaxAffine2D: domain must be a polygon");
        if (forms.empty()) throw InvalidArgument("MaxAffine2D: no affine forms");
        // Deduplicate identical forms before pruning so ties do not erase both.
        std::vector<AffineForm2> unique;
        for (const auto& f : forms) {
            bool dup = false;
            for (const auto& g : unique)
                if (std::abs(f.a.x - g.a.x) < 1e-14 && std::abs(f.a.y - g.a.y) < 1e-14 &&
                    std::abs(f.b - g.b) < 1e-14)
                    dup = true;
            if (!dup) unique.push_back(f);
        }
        const double area = domain_.volume();
        for (std::size_t i = 0; i < unique.size(); ++i) {
            Polygon region = region_of(unique, i);
            if (region.size() >= 3 && std::abs(signed_area(region)) > 1e-12 * area) {
                forms_.push_back(unique[i]);
            }
        }
        for (std::size_t i = 0; i < forms_.size(); ++i) regions_.push_back(region_of(forms_, i));
    }

    /// max(0, <a, y> - b).
    static MaxAffine2D kink(const Polytope& domain, Vec2 a, double b) {
        return {domain, {{{0.0, 0.0}, 0.0}, {a, -b}}};
    }

    const Polytope& domain() const { return domain_; }
    const std::vector<AffineForm2>& forms() const { return forms_; }
    const std::vector<Polygon>& regions() const { return regions_; }
    bool is_affine() const { return forms_.size() == 1; }

    double operator()(Vec2 y) const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& f : forms_) m = std::max(m, f(y));
        return m;
    }

    double integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i < forms_.size(); ++i) s += integrate(forms_[i], regions_[i]);
        return s;
    }

    /// Exact ∫_{∂P} u dσ with the lattice boundary measure.
    double boundary_integral() const {
        double s = 0.0;
        for (const auto& facet : domain_.facets()) {
            std::vector<PiecewiseAffine1D::Line> lines;
            Vec2 e = facet.to - facet.from;
            for (const auto& f : forms_) lines.push_back({dot(f.a, e), f(facet.from)});
            s += facet.lattice_length * PiecewiseAffine1D::max_of({0.0, 1.0}, lines).integral();
        }
        return s;
    }

    /// Exact minimum of u - <l, y> over the polygon.
    double minimum_minus_linear(Vec2 l = {}) const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& region : regions_)
            for (const Vec2& v : region) m = std::min(m, (*this)(v) - dot(l, v));
        return m;
    }

    MaxAffine2D plus_affine(Vec2 a, double b) const {
        std::vector<AffineForm2> f = forms_;
        for (auto& g : f) {
            g.a = g.a + a;
            g.b += b;
        }
        return {domain_, std::move(f)};
    }

    MaxAffine2D scaled(double c) const {
        if (!(c > 0)) throw InvalidArgument("MaxAffine2D::scaled: factor must be positive");
        std::vector<AffineForm2> f = forms_;
        for (auto& g : f) {
            g.a = c * g.a;
            g.b *= c;
        }
        return {domain_, std::move(f)};
    }

    friend MaxAffine2D operator+(const MaxAffine2D& f, const MaxAffine2D& g) {
        if (!(f.domain_ == g.domain_)) throw DomainMismatch("MaxAffine2D: domains differ");
        std::vector<AffineForm2> sums;
        for (const auto& p : f.forms_)
            for (const auto& q : g.forms_) sums.push_back({p.a + q.a, p.b + q.b});
        return {f.domain_, std::move(sums)};
    }

    /// Area-weighted average gradient.
    Vec2 average_gradient() const {
        Vec2 s{};
        double total = 0.0;
        for (std::size_t i = 0; i < forms_.size(); ++i) {
            double a = std::abs(signed_area(regions_[i]));
            s = s + a * forms_[i].a;
            total += a;
        }
        return total > 0 ? (1.0 / total) * s : s;
    }

    GridFunction2D sample(Interval a1, Interval a2, std::size_t c1, std::size_t c2) const {
        return GridFunction2D::sample(a1, a2, c1, c2,
                                      [this](double x, double y) { return (*this)(Vec2{x, y}); });
    }

private:
    Polygon region_of(const std::vector<AffineForm2>& forms, std::size_t i) const {
        Polygon region = domain_.vertices();
        for (std::size_t j = 0; j < forms.size() && region.size() >= 3; ++j) {
            if (j == i) continue;
            region = clip(region, {forms[i].a - forms[j].a, forms[i].b - forms[j].b});
        }
        return region;
    }

    Polytope domain_ = Polytope::named("unit-square");
    std::vector<AffineForm2> forms_;
    std::vector<Polygon> regions_;
};

}  // namespace kenergy
