#pragma once

// Planar geometry kernel: centroids, containment, line/polygon intersection,
// shoelace areas and grid-sampled land fractions. All coordinates are assumed
// to share one planar CRS; nothing here reprojects.

#include "hydrograph/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace hydrograph::geo {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

using Ring = std::vector<Point>;

struct PolyLine {
    std::vector<Point> vertices;
};

struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;
};

struct MultiPolygon {
    std::vector<Polygon> parts;
};

using Geometry = std::variant<Point, PolyLine, Polygon, MultiPolygon>;

template <typename T>
concept Areal = std::same_as<T, Polygon> || std::same_as<T, MultiPolygon>;

struct BBox {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    bool empty() const { return min_x > max_x || min_y > max_y; }

    void expand(const Point& p) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }

    void expand(const BBox& o) {
        if (o.empty()) return;
        min_x = std::min(min_x, o.min_x);
        min_y = std::min(min_y, o.min_y);
        max_x = std::max(max_x, o.max_x);
        max_y = std::max(max_y, o.max_y);
    }

    bool contains(const Point& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }

    bool intersects(const BBox& o) const {
        return !(o.min_x > max_x || o.max_x < min_x || o.min_y > max_y || o.max_y < min_y);
    }
};

// ---------------------------------------------------------------------------
// Parts access, so the same code serves Polygon and MultiPolygon.

inline std::span<const Polygon> parts_of(const Polygon& p) { return {&p, 1}; }
inline std::span<const Polygon> parts_of(const MultiPolygon& m) { return m.parts; }

inline MultiPolygon to_multi(const Polygon& p) { return MultiPolygon{{p}}; }
inline MultiPolygon to_multi(const MultiPolygon& m) { return m; }

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline double ring_signed_area(const Ring& ring) {
    // Shoelace relative to the first vertex for stability on large coordinates.
    if (ring.size() < 3) return 0.0;
    const Point o = ring.front();
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
        const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
        twice += ax * by - bx * ay;
    }
    return 0.5 * twice;
}

inline void validate_ring(const Ring& ring, const char* what) {
    if (ring.size() < 4)
        throw ValidationError(std::string(what) + " ring needs at least 4 points");
    for (const auto& p : ring)
        if (!finite(p)) throw ValidationError("non-finite coordinate");
    if (!(ring.front() == ring.back())) throw ValidationError("unclosed ring");
}

} // namespace detail

inline void validate(const Point& p) {
    if (!detail::finite(p)) throw ValidationError("non-finite coordinate");
}

inline void validate(const PolyLine& line) {
    if (line.vertices.size() < 2) throw ValidationError("polyline needs at least 2 vertices");
    for (std::size_t i = 0; i < line.vertices.size(); ++i) {
        validate(line.vertices[i]);
        if (i > 0 && line.vertices[i] == line.vertices[i - 1])
            throw ValidationError("polyline has consecutive duplicate vertices");
    }
}

inline void validate(const Polygon& poly) {
    detail::validate_ring(poly.exterior, "exterior");
    if (detail::ring_signed_area(poly.exterior) == 0.0)
        throw ValidationError("exterior ring has zero area");
    for (const auto& h : poly.holes) detail::validate_ring(h, "hole");
}

inline void validate(const MultiPolygon& mp) {
    if (mp.parts.empty()) throw ValidationError("multipolygon needs at least 1 part");
    for (const auto& p : mp.parts) validate(p);
}

inline void validate(const Geometry& g) {
    std::visit([](const auto& v) { validate(v); }, g);
}

// ---------------------------------------------------------------------------
// Bounding boxes

inline BBox bbox(const Point& p) {
    BBox b;
    b.expand(p);
    return b;
}

inline BBox bbox(const PolyLine& line) {
    BBox b;
    for (const auto& p : line.vertices) b.expand(p);
    return b;
}

inline BBox bbox(const Polygon& poly) {
    BBox b;
    for (const auto& p : poly.exterior) b.expand(p);
    return b;
}

inline BBox bbox(const MultiPolygon& mp) {
    BBox b;
    for (const auto& part : mp.parts) b.expand(bbox(part));
    return b;
}

inline BBox bbox(const Geometry& g) {
    return std::visit([](const auto& v) { return bbox(v); }, g);
}

// ---------------------------------------------------------------------------
// Segment predicates

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

// p is collinear with [a,b]; is it within the segment's extent?
inline bool within_extent(const Point& a, const Point& b, const Point& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
    return cross(a, b, p) == 0.0 && within_extent(a, b, p);
}

/// Closed-segment intersection: touching endpoints and collinear overlap count.
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    const int d1 = sign(cross(q1, q2, p1));
    const int d2 = sign(cross(q1, q2, p2));
    const int d3 = sign(cross(p1, p2, q1));
    const int d4 = sign(cross(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && within_extent(q1, q2, p1)) return true;
    if (d2 == 0 && within_extent(q1, q2, p2)) return true;
    if (d3 == 0 && within_extent(p1, p2, q1)) return true;
    if (d4 == 0 && within_extent(p1, p2, q2)) return true;
    return false;
}

enum class RingSide { Outside, Inside, Boundary };

inline RingSide ring_side(const Point& p, const Ring& ring) {
    bool inside = false;
    for (std::size_t i = 0, n = ring.size(); i + 1 < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[i + 1];
        if (on_segment(a, b, p)) return RingSide::Boundary;
        // Half-open crossing rule on y.
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) inside = !inside;
        }
    }
    return inside ? RingSide::Inside : RingSide::Outside;
}

template <typename F>
void for_each_ring(const Polygon& poly, F&& f) {
    f(poly.exterior);
    for (const auto& h : poly.holes) f(h);
}

} // namespace detail

// ---------------------------------------------------------------------------
// point_in_polygon: parity test, holes honoured, boundary counts as inside.

inline bool point_in_polygon(const Point& p, const Polygon& poly) {
    using detail::RingSide;
    const RingSide ext = detail::ring_side(p, poly.exterior);
    if (ext == RingSide::Boundary) return true;
    if (ext == RingSide::Outside) return false;
    for (const auto& hole : poly.holes) {
        const RingSide s = detail::ring_side(p, hole);
        if (s == RingSide::Boundary) return true;
        if (s == RingSide::Inside) return false;
    }
    return true;
}

inline bool point_in_polygon(const Point& p, const MultiPolygon& mp) {
    for (const auto& part : mp.parts)
        if (bbox(part).contains(p) && point_in_polygon(p, part)) return true;
    return false;
}

/// Non-areal geometries contain nothing.
inline bool point_in_polygon(const Point& p, const Geometry& g) {
    return std::visit(
        [&](const auto& v) {
            if constexpr (Areal<std::decay_t<decltype(v)>>)
                return point_in_polygon(p, v);
            else
                return false;
        },
        g);
}

// ---------------------------------------------------------------------------
// intersects

/// True iff some line segment touches a ring edge or some line vertex lies inside.
template <Areal A>
bool intersects(const PolyLine& line, const A& area) {
    const BBox lb = bbox(line);
    for (const auto& part : parts_of(area)) {
        if (!lb.intersects(bbox(part))) continue;
        const auto& v = line.vertices;
        bool hit = false;
        detail::for_each_ring(part, [&](const Ring& ring) {
            for (std::size_t i = 0; !hit && i + 1 < v.size(); ++i)
                for (std::size_t j = 0; !hit && j + 1 < ring.size(); ++j)
                    hit = detail::segments_intersect(v[i], v[i + 1], ring[j], ring[j + 1]);
        });
        if (hit) return true;
        for (const auto& p : v)
            if (point_in_polygon(p, part)) return true;
    }
    return false;
}

/// Polygon overlap test: any edge contact, or either exterior has a vertex inside the other.
template <Areal A, Areal B>
bool intersects(const A& a, const B& b) {
    for (const auto& pa : parts_of(a)) {
        const BBox ba = bbox(pa);
        for (const auto& pb : parts_of(b)) {
            if (!ba.intersects(bbox(pb))) continue;
            bool hit = false;
            detail::for_each_ring(pa, [&](const Ring& ra) {
                detail::for_each_ring(pb, [&](const Ring& rb) {
                    for (std::size_t i = 0; !hit && i + 1 < ra.size(); ++i)
                        for (std::size_t j = 0; !hit && j + 1 < rb.size(); ++j)
                            hit = detail::segments_intersect(ra[i], ra[i + 1], rb[j], rb[j + 1]);
                });
            });
            if (hit) return true;
            for (const auto& p : pa.exterior)
                if (point_in_polygon(p, pb)) return true;
            for (const auto& p : pb.exterior)
                if (point_in_polygon(p, pa)) return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// area

inline double area(const Polygon& poly) {
    double a = std::abs(detail::ring_signed_area(poly.exterior));
    const double outer = a;
    for (const auto& h : poly.holes) a -= std::abs(detail::ring_signed_area(h));
    if (a < -1e-12 * outer) throw ValidationError("invalid polygon");
    return std::max(a, 0.0);
}

inline double area(const MultiPolygon& mp) {
    double total = 0.0;
    for (const auto& p : mp.parts) total += area(p);
    return total;
}

inline double area(const Geometry& g) {
    return std::visit(
        [](const auto& v) -> double {
            if constexpr (Areal<std::decay_t<decltype(v)>>)
                return area(v);
            else
                throw ValidationError("area of non-areal geometry");
        },
        g);
}

// ---------------------------------------------------------------------------
// centroid

namespace detail {

struct WeightedPoint {
    double weight = 0.0;
    double wx = 0.0;  // weight * x
    double wy = 0.0;
};

// Unsigned area and area-weighted centroid sums for a ring.
inline WeightedPoint ring_moment(const Ring& ring) {
    if (ring.size() < 4) return {};
    const Point o = ring.front();
    double twice = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
        const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
        const double c = ax * by - bx * ay;
        twice += c;
        cx += (ax + bx) * c;
        cy += (ay + by) * c;
    }
    if (twice == 0.0) return {};
    const double a = 0.5 * twice;
    const double mx = cx / (6.0 * a) + o.x;
    const double my = cy / (6.0 * a) + o.y;
    const double w = std::abs(a);
    return {w, w * mx, w * my};
}

inline WeightedPoint polygon_moment(const Polygon& poly) {
    WeightedPoint m = ring_moment(poly.exterior);
    for (const auto& h : poly.holes) {
        const WeightedPoint hm = ring_moment(h);
        m.weight -= hm.weight;
        m.wx -= hm.wx;
        m.wy -= hm.wy;
    }
    return m;
}

inline Point finish(const WeightedPoint& m, const BBox& box) {
    if (!(m.weight > 0.0)) throw ValidationError("degenerate geometry");
    const Point c{m.wx / m.weight, m.wy / m.weight};
    [[maybe_unused]] const double tol =
        1e-9 * std::max({1.0, std::abs(box.max_x - box.min_x), std::abs(box.max_y - box.min_y)});
    assert(c.x >= box.min_x - tol && c.x <= box.max_x + tol);
    assert(c.y >= box.min_y - tol && c.y <= box.max_y + tol);
    return c;
}

} // namespace detail

inline Point centroid(const Point& p) { return p; }

/// Length-weighted mean of segment midpoints.
inline Point centroid(const PolyLine& line) {
    detail::WeightedPoint m;
    const auto& v = line.vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double len = std::hypot(v[i + 1].x - v[i].x, v[i + 1].y - v[i].y);
        m.weight += len;
        m.wx += len * 0.5 * (v[i].x + v[i + 1].x);
        m.wy += len * 0.5 * (v[i].y + v[i + 1].y);
    }
    return detail::finish(m, bbox(line));
}

inline Point centroid(const Polygon& poly) {
    return detail::finish(detail::polygon_moment(poly), bbox(poly));
}

inline Point centroid(const MultiPolygon& mp) {
    detail::WeightedPoint total;
    for (const auto& part : mp.parts) {
        const auto m = detail::polygon_moment(part);
        total.weight += m.weight;
        total.wx += m.wx;
        total.wy += m.wy;
    }
    return detail::finish(total, bbox(mp));
}

inline Point centroid(const Geometry& g) {
    return std::visit([](const auto& v) { return centroid(v); }, g);
}

// ---------------------------------------------------------------------------

inline double squared_distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// ---------------------------------------------------------------------------
// Land fraction by lattice sampling.

namespace detail {

template <typename F>
void for_each_lattice_point(const BBox& box, double step, F&& f) {
    const auto nx = static_cast<std::size_t>(std::ceil((box.max_x - box.min_x) / step));
    const auto ny = static_cast<std::size_t>(std::ceil((box.max_y - box.min_y) / step));
    for (std::size_t j = 0; j <= ny; ++j) {
        const double y = box.min_y + 0.5 * step + static_cast<double>(j) * step;
        if (y > box.max_y) break;
        for (std::size_t i = 0; i <= nx; ++i) {
            const double x = box.min_x + 0.5 * step + static_cast<double>(i) * step;
            if (x > box.max_x) break;
            f(Point{x, y});
        }
    }
}

template <typename T>
bool contains_any(const Point& p, std::span<const T> cover, std::span<const BBox> boxes) {
    for (std::size_t k = 0; k < cover.size(); ++k)
        if (boxes[k].contains(p) && point_in_polygon(p, cover[k])) return true;
    return false;
}

} // namespace detail

/// Lattice points (offset by half a step) inside `region`.
template <Areal R>
std::size_t count_lattice_points(const R& region, double grid_step) {
    std::size_t n = 0;
    detail::for_each_lattice_point(bbox(region), grid_step, [&](const Point& p) {
        if (point_in_polygon(p, region)) ++n;
    });
    return n;
}

/// Fraction of region lattice points falling inside any cover polygon.
template <Areal R, typename T>
    requires Areal<T> || std::same_as<T, Geometry>
double land_fraction(const R& region, std::span<const T> cover, double grid_step) {
    if (!(grid_step > 0.0) || !std::isfinite(grid_step))
        throw ValidationError("grid_step must be positive");
    const BBox rb = bbox(region);
    std::vector<BBox> boxes;
    boxes.reserve(cover.size());
    for (const auto& c : cover) boxes.push_back(bbox(c));

    std::size_t inside = 0, covered = 0;
    detail::for_each_lattice_point(rb, grid_step, [&](const Point& p) {
        if (!point_in_polygon(p, region)) return;
        ++inside;
        if (detail::contains_any(p, cover, std::span<const BBox>(boxes))) ++covered;
    });
    if (inside == 0) throw ValidationError("grid too coarse");
    return static_cast<double>(covered) / static_cast<double>(inside);
}

template <Areal R, typename T>
double land_fraction(const R& region, const std::vector<T>& cover, double grid_step) {
    return land_fraction(region, std::span<const T>(cover), grid_step);
}

/// A step fine enough that at least `min_samples` lattice points land in the region.
template <Areal R>
double default_grid_step(const R& region, std::size_t min_samples = 10000) {
    const double a = area(region);
    if (!(a > 0.0)) throw ValidationError("degenerate geometry");
    double step = std::sqrt(a / static_cast<double>(min_samples));
    for (int i = 0; i < 64 && count_lattice_points(region, step) < min_samples; ++i) step *= 0.85;
    return step;
}

} // namespace hydrograph::geo
