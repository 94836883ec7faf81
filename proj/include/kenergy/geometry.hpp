#pragma once

// Small planar helpers: convex polygons, half-plane clipping, exact
// integration of affine functions.

#include <cmath>
#include <cstddef>
#include <vector>

namespace kenergy {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Affine form <a, y> + b on the plane.
struct AffineForm2 {
    Vec2 a;
    double b = 0.0;
    double operator()(Vec2 y) const { return dot(a, y) + b; }
    friend bool operator==(const AffineForm2&, const AffineForm2&) = default;
};

using Polygon = std::vector<Vec2>;

/// Signed area (positive for counterclockwise order).
inline double signed_area(const Polygon& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += cross(p[i], p[(i + 1) % p.size()]);
    return 0.5 * s;
}

inline Vec2 centroid(const Polygon& p) {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        Vec2 u = p[i], w = p[(i + 1) % p.size()];
        double c = cross(u, w);
        a += c;
        cx += (u.x + w.x) * c;
        cy += (u.y + w.y) * c;
    }
    if (a == 0.0) return p.empty() ? Vec2{} : p.front();
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

/// Keeps the part of a convex polygon where g(y) >= 0 for affine g.
inline Polygon clip(const Polygon& poly, const AffineForm2& g) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 p = poly[i], q = poly[(i + 1) % n];
        double gp = g(p), gq = g(q);
        if (gp >= 0) out.push_back(p);
        if ((gp >= 0) != (gq >= 0)) {
            double t = gp / (gp - gq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

/// Exact integral of an affine form over a polygon.
inline double integrate(const AffineForm2& f, const Polygon& p) {
    double area = std::abs(signed_area(p));
    if (area == 0.0) return 0.0;
    return area * f(centroid(p));
}

}  // namespace kenergy
