#pragma once

// Moment polytopes (intervals and lattice polygons) with their lattice
// boundary measure, and the two normalizations of the linear functional.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kenergy/errors.hpp"
#include "kenergy/geometry.hpp"
#include "kenergy/grid.hpp"

namespace kenergy {

class Polytope {
public:
    /// A boundary edge of a polygon; `lattice_length` is its dσ-measure
    /// (Euclidean length divided by the length of the primitive normal).
    struct Facet {
        Vec2 from;
        Vec2 to;
        double lattice_length = 0.0;
    };

    static Polytope interval(double lo, double hi) {
        if (!(hi > lo)) throw InvalidArgument("Polytope: interval must have positive length");
        Polytope p;
        p.dim_ = 1;
        p.interval_ = {lo, hi};
        return p;
    }

    /// Convex lattice polygon; vertices are reordered counterclockwise if
    /// given clockwise.
    static Polytope polygon(Polygon vertices) {
        if (vertices.size() < 3) throw InvalidArgument("Polytope: polygon needs 3 vertices");
        for (const Vec2& v : vertices)
            if (std::abs(v.x - std::round(v.x)) > 1e-9 || std::abs(v.y - std::round(v.y)) > 1e-9)
                throw InvalidArgument("Polytope: polygon vertices must be lattice points");
        if (signed_area(vertices) < 0) std::reverse(vertices.begin(), vertices.end());
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 e1 = vertices[(i + 1) % n] - vertices[i];
            Vec2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            if (cross(e1, e2) <= 0)
                throw InvalidArgument("Polytope: polygon is not strictly convex");
        }
        Polytope p;
        p.dim_ = 2;
        p.vertices_ = std::move(vertices);
        return p;
    }

    static Polytope box(Interval a1, Interval a2) {
        return polygon({{a1.lo, a2.lo}, {a1.hi, a2.lo}, {a1.hi, a2.hi}, {a1.lo, a2.hi}});
    }

    /// "unit-interval", "symmetric-interval", "unit-square", "unit-triangle".
    static Polytope named(std::string_view name) {
        if (name == "unit-interval") return interval(0.0, 1.0);
        if (name == "symmetric-interval") return interval(-1.0, 1.0);
        if (name == "unit-square") return box({0.0, 1.0}, {0.0, 1.0});
        if (name == "unit-triangle") return polygon({{0, 0}, {1, 0}, {0, 1}});
        throw InvalidArgument("Polytope: unknown name '" + std::string(name) + "'");
    }

    int dim() const { return dim_; }

    const Interval& as_interval() const {
        if (dim_ != 1) throw DomainMismatch("Polytope: not an interval");
        return interval_;
    }
    const Polygon& vertices() const {
        if (dim_ != 2) throw DomainMismatch("Polytope: not a polygon");
        return vertices_;
    }

    /// Axis-aligned box extents if the polygon is a rectangle.
    std::optional<std::pair<Interval, Interval>> as_box() const {
        if (dim_ != 2 || vertices_.size() != 4) return std::nullopt;
        double x0 = vertices_[0].x, x1 = x0, y0 = vertices_[0].y, y1 = y0;
        for (const Vec2& v : vertices_) {
            x0 = std::min(x0, v.x); x1 = std::max(x1, v.x);
            y0 = std::min(y0, v.y); y1 = std::max(y1, v.y);
        }
        for (const Vec2& v : vertices_)
            if ((v.x != x0 && v.x != x1) || (v.y != y0 && v.y != y1)) return std::nullopt;
        return std::make_pair(Interval{x0, x1}, Interval{y0, y1});
    }

    double volume() const {
        return dim_ == 1 ? interval_.length() : signed_area(vertices_);
    }

    /// Total dσ-measure of the boundary.
    double boundary_volume() const {
        if (dim_ == 1) return 2.0;
        double s = 0.0;
        for (const Facet& f : facets()) s += f.lattice_length;
        return s;
    }

    std::vector<Facet> facets() const {
        std::vector<Facet> out;
        if (dim_ != 2) return out;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 p = vertices_[i], q = vertices_[(i + 1) % n];
            auto dx = static_cast<long long>(std::llround(std::abs(q.x - p.x)));
            auto dy = static_cast<long long>(std::llround(std::abs(q.y - p.y)));
            out.push_back({p, q, static_cast<double>(std::gcd(dx, dy))});
        }
        return out;
    }

    bool contains(Vec2 y, double tol = 1e-12) const {
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i)
            if (cross(vertices_[(i + 1) % n] - vertices_[i], y - vertices_[i]) < -tol) return false;
        return true;
    }

    friend bool operator==(const Polytope& a, const Polytope& b) {
        return a.dim_ == b.dim_ && a.interval_ == b.interval_ && a.vertices_ == b.vertices_;
    }

private:
    int dim_ = 1;
    Interval interval_{0.0, 1.0};
    Polygon vertices_;
};

/// Which scaling of the linear functional
///   L(u) = a_boundary * ∫_{∂P} u dσ - a_interior * ∫_P u dy
/// is used. Both kill constants; they differ by the factor Vol(∂P)/Vol(P).
enum class Convention { donaldson, paper_lemma };

struct ConventionCoefficients {
    double boundary = 1.0;
    double interior = 1.0;
};

inline ConventionCoefficients coefficients(Convention c, const Polytope& p) {
    const double vol = p.volume(), bvol = p.boundary_volume();
    if (c == Convention::donaldson) return {1.0, bvol / vol};
    return {vol / bvol, 1.0};
}

inline std::string to_string(Convention c) {
    return c == Convention::donaldson ? "donaldson" : "paper-lemma";
}

inline Convention parse_convention(std::string_view s) {
    if (s == "donaldson") return Convention::donaldson;
    if (s == "paper-lemma" || s == "paper_lemma") return Convention::paper_lemma;
    throw ConfigError("unknown convention '" + std::string(s) + "'");
}

}  // namespace kenergy
