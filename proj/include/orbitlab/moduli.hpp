/**
 * @file moduli.hpp
 * @brief Generalized edges in the moduli space R^4 \ {0} of plane segments.
 *
 * A plane segment (x1, y1)-(x2, y2) is a point of R^4. A straight segment
 * P1P2 in R^4 is a generalized edge; its intermediate points are plane
 * segments that sweep out a region of the plane (trapezoid, triangle,
 * butterfly). Polygons decompose into such edges through triangulation.
 */
#pragma once

#include "orbitlab/core.hpp"
#include "orbitlab/figures.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/stabilizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace orbitlab {

struct PlaneSegment {
    Vec2 p = Vec2::Zero();
    Vec2 q = Vec2::Zero();

    Vec4 as_vector() const { return {p.x(), p.y(), q.x(), q.y()}; }
    static PlaneSegment from_vector(const Vec4& v) { return {{v(0), v(1)}, {v(2), v(3)}}; }

    /// Orders the endpoints lexicographically (x, then y).
    PlaneSegment normalized() const {
        const bool swap = q.x() < p.x() || (q.x() == p.x() && q.y() < p.y());
        return swap ? PlaneSegment{q, p} : *this;
    }
};

class GeneralizedEdge {
public:
    /// Takes the 4-vectors as given (no endpoint reordering).
    GeneralizedEdge(const Vec4& p1, const Vec4& p2) : p1_(p1), p2_(p2) {
        if (!p1.allFinite() || !p2.allFinite()) throw UsageError("GeneralizedEdge: non-finite coordinates");
        if (p1.isZero(0.0) || p2.isZero(0.0)) throw UsageError("GeneralizedEdge: endpoints must avoid the origin of R^4");
        if (p1 == p2) throw UsageError("GeneralizedEdge: P1 and P2 coincide");
    }

    /// Builds from two plane segments, normalizing each one's endpoint order.
    static GeneralizedEdge from_segments(const PlaneSegment& s1, const PlaneSegment& s2) {
        return {s1.normalized().as_vector(), s2.normalized().as_vector()};
    }

    const Vec4& start() const noexcept { return p1_; }
    const Vec4& end() const noexcept { return p2_; }

private:
    Vec4 p1_;
    Vec4 p2_;
};

inline PlaneSegment interpolate(const GeneralizedEdge& ge, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("interpolate: t must lie in [0, 1]");
    return PlaneSegment::from_vector((1.0 - t) * ge.start() + t * ge.end());
}

/// g acting on both endpoints of both plane segments.
inline GeneralizedEdge transform(const GL2Element& g, const GeneralizedEdge& ge) {
    auto map = [&](const Vec4& v) {
        const PlaneSegment s = PlaneSegment::from_vector(v);
        return PlaneSegment{g.apply(s.p), g.apply(s.q)}.as_vector();
    };
    return {map(ge.start()), map(ge.end())};
}

/// Boundary of the swept region: start segment, end segment and the two
/// endpoint paths, as a closed polyline (repeated corners dropped).
inline Swept swept_boundary(const GeneralizedEdge& ge) {
    const PlaneSegment a = interpolate(ge, 0.0), b = interpolate(ge, 1.0);
    std::vector<Vec2> ring;
    for (const Vec2& v : {a.p, a.q, b.q, b.p}) {
        if (ring.empty() || (ring.back() - v).norm() > 1e-12) ring.push_back(v);
    }
    while (ring.size() > 1 && (ring.front() - ring.back()).norm() <= 1e-12) ring.pop_back();
    return Swept{std::move(ring)};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepStroke {
    double t = 0.0;
    PlaneSegment segment;
};

struct SweptRegion {
    std::vector<SweepStroke> segments;
    RasterImage raster;
};

inline constexpr int kDefaultSweepSteps = 257;

namespace detail {

inline double stroke_gap(const PlaneSegment& a, const PlaneSegment& b) {
    return std::max((a.p - b.p).norm(), (a.q - b.q).norm());
}

/// True when x lies on interpolate(ge, t) for some t in [0, 1].
/// cross(x - p(t), q(t) - p(t)) is quadratic in t; x is on the union iff one
/// of its roots in [0, 1] puts x between the segment's endpoints.
inline bool on_swept_union(const GeneralizedEdge& ge, const Vec2& x, double tol) {
    const Vec2 p0 = ge.start().head<2>(), q0 = ge.start().tail<2>();
    const Vec2 dp = ge.end().head<2>() - p0, dq = ge.end().tail<2>() - q0;
    const Vec2 a0 = x - p0, d0 = q0 - p0, dd = dq - dp;
    auto cr = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double c0 = cr(a0, d0);
    const double c1 = cr(a0, dd) - cr(dp, d0);
    const double c2 = -cr(dp, dd);

    auto hits = [&](double t) {
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 p = p0 + t * dp, q = q0 + t * dq;
        return point_segment_distance(x, p, q) <= tol;
    };
    if (hits(0.0) || hits(1.0)) return true;
    const double scale = std::abs(c0) + std::abs(c1) + std::abs(c2);
    if (scale == 0.0) {
        // x is collinear with every segment; scan for one that contains it.
        for (int k = 1; k < 64; ++k)
            if (hits(k / 64.0)) return true;
        return false;
    }
    if (std::abs(c2) <= 1e-14 * scale) return std::abs(c1) > 1e-14 * scale && hits(-c0 / c1);
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return hits(-c1 / (2.0 * c2));  // near-tangent, rounding
    const double root = std::sqrt(disc);
    const double qv = -0.5 * (c1 + std::copysign(root, c1));
    if (hits(qv / c2)) return true;
    return qv != 0.0 && hits(c0 / qv);
}

}  // namespace detail

/// Samples interpolate(ge, t) on a uniform grid of `steps` parameters,
/// bisecting until neighbouring segments are at most one pixel apart, and
/// fill-renders the swept region: a pixel is set iff its centre lies on some
/// segment of the family (solved exactly, not from the samples).
inline SweptRegion sweep(const GeneralizedEdge& ge, int steps, int side, const Extent& extent) {
    if (steps < 2) throw UsageError("sweep: steps must be >= 2");
    if (side < 4) throw UsageError("sweep: side must be >= 4");
    SweptRegion region;
    region.raster = RasterImage(side, extent, "swept");
    const double w = region.raster.pixel_width();

    std::vector<double> ts;
    for (int k = 0; k < steps; ++k) ts.push_back(static_cast<double>(k) / (steps - 1));
    std::vector<SweepStroke> strokes;
    strokes.push_back({0.0, interpolate(ge, 0.0)});
    for (std::size_t k = 1; k < ts.size(); ++k) {
        std::vector<double> pending{ts[k]};
        while (!pending.empty()) {
            const double t = pending.back();
            const PlaneSegment s = interpolate(ge, t);
            const double prev = strokes.back().t;
            if (detail::stroke_gap(strokes.back().segment, s) > w && t - prev > 1e-12) {
                pending.push_back(0.5 * (prev + t));
            } else {
                strokes.push_back({t, s});
                pending.pop_back();
            }
        }
    }

    Eigen::AlignedBox2d box;
    for (const Vec4& v : {ge.start(), ge.end()}) box.extend(Vec2(v.head<2>())).extend(Vec2(v.tail<2>()));
    const double tol = 1e-9 * w;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const Vec2 x = region.raster.pixel_center(r, c);
            if (box.exteriorDistance(x) > tol) continue;
            if (detail::on_swept_union(ge, x, tol)) region.raster.at(r, c) = 1;
        }
    }
    region.segments = std::move(strokes);
    return region;
}

/// Pixelwise union of equally sized rasters.
inline RasterImage raster_union(const std::vector<RasterImage>& images) {
    if (images.empty()) throw UsageError("raster_union: no images");
    RasterImage out = images.front();
    for (std::size_t k = 1; k < images.size(); ++k) {
        if (images[k].side != out.side) throw UsageError("raster_union: size mismatch");
        for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= images[k].bits[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical constructions
// ---------------------------------------------------------------------------

/// Two parallel, non-intersecting segments: sweeps the unit square.
inline GeneralizedEdge trapezoid_edge() { return {Vec4(0, 0, 1, 0), Vec4(0, 1, 1, 1)}; }
/// Shared start point: sweeps the triangle (0,0), (1,0), (0,1).
inline GeneralizedEdge triangle_edge() { return {Vec4(0, 0, 1, 0), Vec4(0, 0, 0, 1)}; }
/// Two crossing diagonals: sweeps a bowtie through the origin.
inline GeneralizedEdge butterfly_edge() { return {Vec4(-1, -1, 1, 1), Vec4(-1, 1, 1, -1)}; }

inline GeneralizedEdge preset_edge(const std::string& name) {
    if (name == "trapezoid") return trapezoid_edge();
    if (name == "triangle") return triangle_edge();
    if (name == "butterfly") return butterfly_edge();
    throw UsageError("unknown sweep preset '" + name + "' (trapezoid, triangle, butterfly)");
}

inline Extent preset_extent(const std::string& name) {
    if (name == "butterfly") return Extent::centered(1.1);
    if (name == "hexagon") return Extent::centered(1.1);
    return Extent{-0.1, -0.1, 1.2};
}

inline Polygon regular_polygon(int n, double radius = 1.0) {
    if (n < 3) throw UsageError("regular_polygon: n must be >= 3");
    Polygon p;
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        p.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Triangulation
// ---------------------------------------------------------------------------

inline double signed_area(const std::vector<Vec2>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        s += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * s;
}

namespace detail {

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

inline bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
           std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    constexpr double tol = 1e-12;
    return (std::abs(d1) <= tol && on_segment(a, c, d)) || (std::abs(d2) <= tol && on_segment(b, c, d)) ||
           (std::abs(d3) <= tol && on_segment(c, a, b)) || (std::abs(d4) <= tol && on_segment(d, a, b));
}

inline bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
}

}  // namespace detail

inline bool is_simple_polygon(const std::vector<Vec2>& v) {
    const std::size_t n = v.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if ((v[i] - v[j]).norm() <= 1e-12) return false;
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (detail::segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
        }
    }
    return std::abs(signed_area(v)) > 1e-12;
}

using Triangle = std::array<Vec2, 3>;

/// Ear clipping of a simple polygon into n - 2 counter-clockwise triangles.
inline std::vector<Triangle> ear_clip(const Polygon& poly) {
    if (poly.vertices.size() < 3) throw UsageError("triangulate: polygon needs at least 3 vertices");
    if (!is_simple_polygon(poly.vertices)) throw UsageError("triangulate: polygon is not simple");
    std::vector<Vec2> v = poly.vertices;
    if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    std::vector<Triangle> out;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t ip = idx[(k + idx.size() - 1) % idx.size()], ic = idx[k], in = idx[(k + 1) % idx.size()];
            const Vec2 &a = v[ip], &b = v[ic], &c = v[in];
            if (detail::cross(a, b, c) <= 0.0) continue;  // reflex or degenerate corner
            bool empty = true;
            for (std::size_t other : idx) {
                if (other == ip || other == ic || other == in) continue;
                if (detail::point_in_triangle(v[other], a, b, c)) {
                    empty = false;
                    break;
                }
            }
            if (!empty) continue;
            out.push_back({a, b, c});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
            clipped = true;
            break;
        }
        if (!clipped) throw NumericalError("triangulate: no ear found (degenerate polygon?)");
    }
    out.push_back({v[idx[0]], v[idx[1]], v[idx[2]]});
    return out;
}

/// Each triangle (v0, v1, v2) becomes P1 = (v0, v1), P2 = (v0, v2): both
/// plane segments start at v0, so the sweep covers the triangle.
inline std::vector<GeneralizedEdge> triangulate_to_generalized_edges(const Polygon& poly) {
    std::vector<GeneralizedEdge> out;
    for (const auto& tri : ear_clip(poly)) {
        out.emplace_back(PlaneSegment{tri[0], tri[1]}.as_vector(), PlaneSegment{tri[0], tri[2]}.as_vector());
    }
    return out;
}

inline double triangle_area(const Triangle& t) { return 0.5 * std::abs(detail::cross(t[0], t[1], t[2])); }

// ---------------------------------------------------------------------------
// Stabilizer contrast between an edge and a swept figure
// ---------------------------------------------------------------------------

struct ContrastReport {
    FeatureRow edge;
    FeatureRow figure;
    double gap_sigma = 0.0;  ///< (edge - figure) / combined standard error
};

inline ContrastReport complexity_contrast(const Figure& figure, const BallSpec& ball, double eps, std::uint64_t count,
                                          unsigned workers = 1, const std::string& figure_id = "figure") {
    const std::vector<NamedFigure> figs{{"edge", Edge{0.0, 1.0}}, {figure_id, figure}};
    const auto rows = compare_features(figs, ball, eps, count, workers);
    ContrastReport report{find_row(rows, "edge"), find_row(rows, figure_id), 0.0};
    report.gap_sigma = separation(report.edge, report.figure);
    return report;
}

}  // namespace orbitlab
