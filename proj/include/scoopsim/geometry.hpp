#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace scoopsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

// Oriented rectangle: origin at the scoop entry point, `heading` along the
// travel direction, extends [0, length] along heading and [-width/2, width/2]
// across it.
struct OrientedRect {
    Vec2 origin;
    double heading = 0.0;  // radians
    double length = 0.0;
    double width = 0.0;

    Vec2 axis() const { return {std::cos(heading), std::sin(heading)}; }
    Vec2 perp() const { return {-std::sin(heading), std::cos(heading)}; }

    // Local coordinates (u along heading, v across).
    Vec2 to_local(const Vec2& p) const {
        const Vec2 d = p - origin;
        return {d.dot(axis()), d.dot(perp())};
    }

    bool contains(const Vec2& p, double margin = 0.0) const {
        const Vec2 l = to_local(p);
        return l.x >= -margin && l.x <= length + margin &&
               std::abs(l.y) <= width / 2.0 + margin;
    }

    std::array<Vec2, 4> corners(double margin = 0.0) const {
        const Vec2 a = axis();
        const Vec2 n = perp();
        const double hw = width / 2.0 + margin;
        const Vec2 lo = origin - a * margin;
        const Vec2 hi = origin + a * (length + margin);
        return {lo + n * hw, lo - n * hw, hi - n * hw, hi + n * hw};
    }

    // Axis-aligned bounding box (xmin, ymin, xmax, ymax).
    std::array<double, 4> bbox(double margin = 0.0) const {
        auto cs = corners(margin);
        double xmin = cs[0].x, xmax = cs[0].x, ymin = cs[0].y, ymax = cs[0].y;
        for (const auto& c : cs) {
            xmin = std::min(xmin, c.x);
            xmax = std::max(xmax, c.x);
            ymin = std::min(ymin, c.y);
            ymax = std::max(ymax, c.y);
        }
        return {xmin, ymin, xmax, ymax};
    }

    // Distance from a point to the rectangle (0 inside), and the farthest
    // corner distance. Used for reach-annulus checks.
    double min_dist(const Vec2& p) const {
        const Vec2 l = to_local(p);
        const double dx = std::max({-l.x, 0.0, l.x - length});
        const double dy = std::max(std::abs(l.y) - width / 2.0, 0.0);
        return std::hypot(dx, dy);
    }
    double max_dist(const Vec2& p) const {
        double m = 0.0;
        for (const auto& c : corners()) m = std::max(m, (c - p).norm());
        return m;
    }
};

// Even-odd rule point-in-polygon.
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

namespace detail {

// Sutherland-Hodgman clip of a convex polygon against the half-plane
// n . p <= c.
inline void clip_halfplane(std::vector<Vec2>& poly, const Vec2& n, double c) {
    if (poly.empty()) return;
    std::vector<Vec2> out;
    out.reserve(poly.size() + 2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double da = n.dot(a) - c;
        const double db = n.dot(b) - c;
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0) != (db < 0.0)) {
            const double t = da / (da - db);
            out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
    poly = std::move(out);
}

inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

}  // namespace detail

// Exact fraction of a cell_size x cell_size cell centered at `center` covered
// by the rectangle, by polygon clipping in the rectangle's local frame.
inline double cell_coverage(const OrientedRect& rect, const Vec2& center, double cell_size) {
    const double h = cell_size / 2.0;
    std::vector<Vec2> poly = {rect.to_local({center.x - h, center.y - h}),
                              rect.to_local({center.x + h, center.y - h}),
                              rect.to_local({center.x + h, center.y + h}),
                              rect.to_local({center.x - h, center.y + h})};
    detail::clip_halfplane(poly, {-1.0, 0.0}, 0.0);           // u >= 0
    detail::clip_halfplane(poly, {1.0, 0.0}, rect.length);    // u <= L
    detail::clip_halfplane(poly, {0.0, -1.0}, rect.width / 2.0);
    detail::clip_halfplane(poly, {0.0, 1.0}, rect.width / 2.0);
    if (poly.size() < 3) return 0.0;
    return detail::polygon_area(poly) / (cell_size * cell_size);
}

}  // namespace scoopsim
