/**
 * @file figures.hpp
 * @brief Figures over the plane: parametric shapes, explicit point sets,
 *        distances between figures, binary rasterization and PGM export.
 *
 * A figure is a subset of the plane. Curves (edge, segment, circle,
 * ellipse, polygon boundary, swept boundary) are sampled at uniform
 * parameter spacing; the distance between figures is the symmetric
 * Hausdorff distance measured from each figure's samples to the other
 * figure's exact point set.
 */
#pragma once

#include "orbitlab/core.hpp"
#include "orbitlab/group.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace orbitlab {

/// Symmetric segment [-L u, L u] through the origin, u = (cos angle, sin angle).
struct Edge {
    double angle = 0.0;
    double half_length = 1.0;
};

struct Segment {
    Vec2 p1 = Vec2::Zero();
    Vec2 p2 = Vec2::Zero();
};

struct Circle {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
};

struct Ellipse {
    Vec2 center = Vec2::Zero();
    double a = 1.0;  ///< semi-axis along the orientation direction
    double b = 1.0;
    double angle = 0.0;
};

/// Simple polygon; as a figure it is the closed boundary curve.
struct Polygon {
    std::vector<Vec2> vertices;
};

struct PointCloud {
    std::vector<Vec2> points;
};

/// Boundary of a swept region, stored as a closed polyline.
struct Swept {
    std::vector<Vec2> boundary;
};

using Figure = std::variant<Edge, Segment, Circle, Ellipse, Polygon, PointCloud, Swept>;

enum class FigureKind { Edge, Segment, Circle, Ellipse, Polygon, PointCloud, Swept };

inline FigureKind kind_of(const Figure& f) { return static_cast<FigureKind>(f.index()); }

inline const char* kind_name(FigureKind k) {
    switch (k) {
        case FigureKind::Edge: return "edge";
        case FigureKind::Segment: return "segment";
        case FigureKind::Circle: return "circle";
        case FigureKind::Ellipse: return "ellipse";
        case FigureKind::Polygon: return "polygon";
        case FigureKind::PointCloud: return "pointcloud";
        case FigureKind::Swept: return "swept";
    }
    return "unknown";
}

inline const char* kind_name(const Figure& f) { return kind_name(kind_of(f)); }

inline constexpr std::size_t kDefaultFigureSamples = 256;

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline Mat2 rotation_matrix(double angle) {
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

inline double closed_polyline_distance(const Vec2& p, const std::vector<Vec2>& v) {
    if (v.empty()) return std::numeric_limits<double>::infinity();
    if (v.size() == 1) return (p - v[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
    }
    return best;
}

inline double robust_length(double v0, double v1) {
    const double m = std::max(std::abs(v0), std::abs(v1));
    if (m == 0.0) return 0.0;
    const double a = v0 / m, b = v1 / m;
    return m * std::sqrt(a * a + b * b);
}

// Root of (r0 z0 / (s + r0))^2 + (z1 / (s + 1))^2 - 1 by bisection.
inline double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
    double s = 0.0;
    for (int i = 0; i < 1100; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0) {
            s0 = s;
        } else if (g < 0.0) {
            s1 = s;
        } else {
            break;
        }
    }
    return s;
}

// Distance from (y0, y1), first quadrant, to the axis-aligned ellipse with e0 >= e1 > 0.
inline double ellipse_distance_first_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return 0.0;
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = ellipse_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (sbar + r0);
            const double x1 = y1 / (sbar + 1.0);
            return robust_length(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return robust_length(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

inline double ellipse_distance(const Vec2& p, const Ellipse& e) {
    const Vec2 local = rotation_matrix(-e.angle) * (p - e.center);
    double e0 = std::abs(e.a), e1 = std::abs(e.b);
    double y0 = std::abs(local.x()), y1 = std::abs(local.y());
    if (e0 < e1) {
        std::swap(e0, e1);
        std::swap(y0, y1);
    }
    if (e1 <= 0.0) return point_segment_distance({y0, y1}, {-e0, 0.0}, {e0, 0.0});
    return ellipse_distance_first_quadrant(e0, e1, y0, y1);
}

// Ellipse image of the unit circle under m, recentred at `center`.
inline Ellipse ellipse_from_linear(const Mat2& m, const Vec2& center) {
    Eigen::JacobiSVD<Mat2> svd(m, Eigen::ComputeFullU);
    const Mat2& u = svd.matrixU();
    const Vec2 s = svd.singularValues();
    return Ellipse{center, s(0), s(1), std::atan2(u(1, 0), u(0, 0))};
}

inline std::vector<Vec2> resample_closed_polyline(const std::vector<Vec2>& v, std::size_t n) {
    std::vector<Vec2> out;
    out.reserve(n);
    if (v.empty()) return out;
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        cumulative.push_back(cumulative.back() + (v[(i + 1) % v.size()] - v[i]).norm());
    }
    const double perimeter = cumulative.back();
    if (perimeter <= 0.0) {
        out.assign(n, v[0]);
        return out;
    }
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = perimeter * static_cast<double>(k) / static_cast<double>(n);
        while (seg + 1 < v.size() && cumulative[seg + 1] <= s) ++seg;
        const double len = cumulative[seg + 1] - cumulative[seg];
        const double t = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
        out.push_back(v[seg] + t * (v[(seg + 1) % v.size()] - v[seg]));
    }
    return out;
}

// Even-odd rule.
inline bool inside_polygon(const Vec2& p, const std::vector<Vec2>& v) {
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const Vec2& a = v[i];
        const Vec2& b = v[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampling, transforming, measuring
// ---------------------------------------------------------------------------

/// n points at uniform parameter spacing. Open curves include both ends;
/// closed curves start at parameter 0 and do not repeat it. Explicit point
/// clouds are resampled by index; an empty cloud yields no points.
inline std::vector<Vec2> sample_points(const Figure& f, std::size_t n) {
    if (n < 2) throw UsageError("sample_points: n must be >= 2");
    const double nd = static_cast<double>(n);
    auto open_segment = [&](const Vec2& a, const Vec2& b) {
        std::vector<Vec2> out;
        out.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / (nd - 1.0);
            out.push_back(a + t * (b - a));
        }
        return out;
    };
    return std::visit(
        detail::overloaded{
            [&](const Edge& e) {
                const Vec2 end = e.half_length * detail::unit(e.angle);
                return open_segment(-end, end);
            },
            [&](const Segment& s) { return open_segment(s.p1, s.p2); },
            [&](const Circle& c) {
                std::vector<Vec2> out;
                out.reserve(n);
                for (std::size_t k = 0; k < n; ++k) {
                    out.push_back(c.center + c.radius * detail::unit(2.0 * std::numbers::pi * static_cast<double>(k) / nd));
                }
                return out;
            },
            [&](const Ellipse& e) {
                std::vector<Vec2> out;
                out.reserve(n);
                const Mat2 r = detail::rotation_matrix(e.angle);
                for (std::size_t k = 0; k < n; ++k) {
                    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / nd;
                    out.push_back(e.center + r * Vec2(e.a * std::cos(t), e.b * std::sin(t)));
                }
                return out;
            },
            [&](const Polygon& p) { return detail::resample_closed_polyline(p.vertices, n); },
            [&](const Swept& s) { return detail::resample_closed_polyline(s.boundary, n); },
            [&](const PointCloud& c) {
                std::vector<Vec2> out;
                if (c.points.empty()) return out;
                out.reserve(n);
                const double m = static_cast<double>(c.points.size());
                for (std::size_t k = 0; k < n; ++k) {
                    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * (m - 1.0) / (nd - 1.0)));
                    out.push_back(c.points[idx]);
                }
                return out;
            },
        },
        f);
}

/// Exact image g.f of a figure under a linear map.
inline Figure transform(const GL2Element& g, const Figure& f) {
    const Mat2& m = g.matrix();
    auto map_all = [&](std::vector<Vec2> pts) {
        for (auto& p : pts) p = m * p;
        return pts;
    };
    return std::visit(
        detail::overloaded{
            [&](const Edge& e) -> Figure {
                const Vec2 end = e.half_length * detail::unit(e.angle);
                return Segment{m * (-end), m * end};
            },
            [&](const Segment& s) -> Figure { return Segment{m * s.p1, m * s.p2}; },
            [&](const Circle& c) -> Figure { return detail::ellipse_from_linear(m * c.radius, m * c.center); },
            [&](const Ellipse& e) -> Figure {
                const Mat2 shape = m * detail::rotation_matrix(e.angle) * Vec2(e.a, e.b).asDiagonal();
                return detail::ellipse_from_linear(shape, m * e.center);
            },
            [&](const Polygon& p) -> Figure { return Polygon{map_all(p.vertices)}; },
            [&](const PointCloud& c) -> Figure { return PointCloud{map_all(c.points)}; },
            [&](const Swept& s) -> Figure { return Swept{map_all(s.boundary)}; },
        },
        f);
}

/// Euclidean distance from a point to the figure's point set.
inline double distance_to(const Vec2& p, const Figure& f) {
    return std::visit(
        detail::overloaded{
            [&](const Edge& e) {
                const Vec2 end = e.half_length * detail::unit(e.angle);
                return detail::point_segment_distance(p, -end, end);
            },
            [&](const Segment& s) { return detail::point_segment_distance(p, s.p1, s.p2); },
            [&](const Circle& c) { return std::abs((p - c.center).norm() - c.radius); },
            [&](const Ellipse& e) { return detail::ellipse_distance(p, e); },
            [&](const Polygon& poly) { return detail::closed_polyline_distance(p, poly.vertices); },
            [&](const Swept& s) { return detail::closed_polyline_distance(p, s.boundary); },
            [&](const PointCloud& c) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& q : c.points) best = std::min(best, (p - q).squaredNorm());
                return std::sqrt(best);
            },
        },
        f);
}

namespace detail {

// Visiting order that spreads consecutive probes around the curve, so a
// large directed distance tends to show up within the first few points.
inline std::vector<std::size_t> spread_order(std::size_t n) {
    std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(0.381966 * static_cast<double>(n)));
    while (std::gcd(stride, n) != 1) ++stride;
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = (k * stride) % n;
    return order;
}

// max_i distance_to(points[i], f); stops once the running max exceeds cap.
inline double directed_distance(const std::vector<Vec2>& points, const Figure& f, double cap,
                                const std::vector<std::size_t>& order) {
    double worst = 0.0;
    for (std::size_t idx : order) {
        worst = std::max(worst, distance_to(points[idx], f));
        if (worst > cap) break;
    }
    return worst;
}

}  // namespace detail

/// Symmetric Hausdorff distance using n samples per figure. When `cap` is
/// finite the computation may stop early and return any value above it.
inline double figure_distance(const Figure& f1, const Figure& f2, std::size_t n = kDefaultFigureSamples,
                              double cap = std::numeric_limits<double>::infinity()) {
    const auto s1 = sample_points(f1, n);
    const auto s2 = sample_points(f2, n);
    const bool e1 = s1.empty(), e2 = s2.empty();
    if (e1 && e2) return 0.0;
    if (e1 || e2) return std::numeric_limits<double>::infinity();
    const auto order = detail::spread_order(n);
    const double d12 = detail::directed_distance(s1, f2, cap, order);
    if (d12 > cap) return d12;
    return std::max(d12, detail::directed_distance(s2, f1, cap, order));
}

/// Plain Hausdorff distance between two finite point sets.
inline double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    auto directed = [](const std::vector<Vec2>& x, const std::vector<Vec2>& y) {
        double worst = 0.0;
        for (const auto& p : x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y) best = std::min(best, (p - q).squaredNorm());
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    return std::max(directed(a, b), directed(b, a));
}

/// True for figures rendered as filled regions rather than strokes.
inline bool is_region(const Figure& f) {
    return std::holds_alternative<Polygon>(f) || std::holds_alternative<Swept>(f);
}

// ---------------------------------------------------------------------------
// Raster images
// ---------------------------------------------------------------------------

/// World square [x0, x0 + size] x [y0, y0 + size].
struct Extent {
    double x0 = -1.0;
    double y0 = -1.0;
    double size = 2.0;

    static Extent centered(double half_width) { return {-half_width, -half_width, 2.0 * half_width}; }
    bool contains(const Vec2& p) const {
        return p.x() >= x0 && p.x() <= x0 + size && p.y() >= y0 && p.y() <= y0 + size;
    }
    friend bool operator==(const Extent&, const Extent&) = default;
};

/// N x N binary image; row 0 is the top (largest y).
struct RasterImage {
    int side = 0;
    Extent extent;
    std::vector<std::uint8_t> bits;
    std::string label;

    RasterImage() = default;
    RasterImage(int n, Extent e, std::string kind = {})
        : side(n), extent(e), bits(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0), label(std::move(kind)) {}

    double pixel_width() const { return extent.size / side; }
    Vec2 pixel_center(int row, int col) const {
        const double w = pixel_width();
        return {extent.x0 + (col + 0.5) * w, extent.y0 + extent.size - (row + 0.5) * w};
    }
    std::uint8_t& at(int row, int col) { return bits[static_cast<std::size_t>(row) * side + col]; }
    std::uint8_t at(int row, int col) const { return bits[static_cast<std::size_t>(row) * side + col]; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

    /// Set pixels as a point cloud of their world centres.
    PointCloud to_point_cloud() const {
        PointCloud cloud;
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
                if (at(r, c)) cloud.points.push_back(pixel_center(r, c));
        return cloud;
    }

    /// Pixel values as a flat vector in [0, 1], row-major.
    Eigen::VectorXd flatten() const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(bits.size()));
        for (std::size_t i = 0; i < bits.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits[i] ? 1.0 : 0.0;
        return v;
    }

    friend bool operator==(const RasterImage& a, const RasterImage& b) {
        return a.side == b.side && a.extent == b.extent && a.bits == b.bits;
    }
};

/// Stroke rendering sets a pixel when its centre lies within half a pixel
/// of the figure; polygons and swept boundaries are filled (even-odd).
inline RasterImage rasterize(const Figure& f, int side, const Extent& extent) {
    if (side < 4) throw UsageError("rasterize: side must be >= 4");
    if (!(extent.size > 0.0)) throw UsageError("rasterize: extent size must be positive");
    RasterImage img(side, extent, kind_name(f));
    const double half = 0.5 * img.pixel_width() + 1e-12;
    const bool fill = is_region(f);
    const std::vector<Vec2>* ring = nullptr;
    if (const auto* p = std::get_if<Polygon>(&f)) ring = &p->vertices;
    if (const auto* s = std::get_if<Swept>(&f)) ring = &s->boundary;
    if (const auto* cloud = std::get_if<PointCloud>(&f); cloud && cloud->points.empty()) return img;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const Vec2 p = img.pixel_center(r, c);
            const bool on = fill ? (ring->size() >= 3 && detail::inside_polygon(p, *ring)) : distance_to(p, f) <= half;
            img.at(r, c) = on ? 1 : 0;
        }
    }
    return img;
}

inline double intersection_over_union(const RasterImage& a, const RasterImage& b) {
    if (a.side != b.side) throw UsageError("intersection_over_union: size mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += (a.bits[i] && b.bits[i]) ? 1 : 0;
        uni += (a.bits[i] || b.bits[i]) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// PGM (P5)
// ---------------------------------------------------------------------------

inline std::string pgm_comment(const RasterImage& img) {
    std::ostringstream os;
    os.precision(17);
    os << "# extent " << img.extent.x0 << ' ' << img.extent.y0 << ' ' << img.extent.size << " kind "
       << (img.label.empty() ? "unknown" : img.label);
    return os.str();
}

inline void write_pgm(std::ostream& os, const RasterImage& img) {
    os << "P5\n" << pgm_comment(img) << '\n' << img.side << ' ' << img.side << "\n255\n";
    for (auto b : img.bits) os.put(static_cast<char>(b ? 255 : 0));
}

inline void write_pgm(const std::string& path, const RasterImage& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open " + path + " for writing");
    write_pgm(os, img);
}

/// Gray-level P5 writer for real-valued maps (e.g. filters), min-max normalized.
inline void write_pgm_gray(const std::string& path, const Eigen::VectorXd& values, int side, const std::string& comment) {
    if (values.size() != static_cast<Eigen::Index>(side) * side) throw UsageError("write_pgm_gray: size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open " + path + " for writing");
    const double lo = values.minCoeff(), hi = values.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    os << "P5\n# " << comment << '\n' << side << ' ' << side << "\n255\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (values(i) - lo) / span))));
    }
}

/// Reads a P5 image written by write_pgm (nonzero pixels are set).
inline RasterImage read_pgm(std::istream& is) {
    std::string magic;
    is >> magic;
    if (magic != "P5") throw UsageError("read_pgm: not a P5 file");
    is.get();
    RasterImage img;
    while (is.peek() == '#') {
        std::string line;
        std::getline(is, line);
        std::istringstream cs(line.substr(1));
        std::string tag, kind_tag;
        cs >> tag;
        if (tag == "extent") {
            cs >> img.extent.x0 >> img.extent.y0 >> img.extent.size >> kind_tag >> img.label;
        }
    }
    int w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    is.get();
    if (w != h || w <= 0) throw UsageError("read_pgm: expected a square image");
    img.side = w;
    img.bits.resize(static_cast<std::size_t>(w) * h);
    for (auto& b : img.bits) {
        const int c = is.get();
        if (c == EOF) throw UsageError("read_pgm: truncated pixel data");
        b = c != 0 ? 1 : 0;
    }
    return img;
}

// ---------------------------------------------------------------------------
// Analytic stabilizer dimensions inside GL2(R)
// ---------------------------------------------------------------------------

inline constexpr int kGL2Dimension = 4;

/// Edge: 2; circle and ellipse: 1. Only origin-centred figures of these kinds.
inline int analytic_stabilizer_dim(const Figure& f) {
    auto centred = [](const Vec2& c) { return c.norm() <= 1e-12; };
    if (std::holds_alternative<Edge>(f)) return 2;
    if (const auto* c = std::get_if<Circle>(&f)) {
        if (!centred(c->center)) throw UsageError("analytic_stabilizer_dim: circle must be centred at the origin");
        return 1;
    }
    if (const auto* e = std::get_if<Ellipse>(&f)) {
        if (!centred(e->center)) throw UsageError("analytic_stabilizer_dim: ellipse must be centred at the origin");
        return 1;
    }
    throw UsageError(std::string("analytic_stabilizer_dim: no analytic result for kind '") + kind_name(f) + "'");
}

inline int orbit_dim_from_stab(int group_dim, int stab_dim) {
    if (stab_dim < 0 || stab_dim > group_dim) throw UsageError("orbit_dim_from_stab: need 0 <= stab_dim <= group_dim");
    return group_dim - stab_dim;
}

}  // namespace orbitlab
