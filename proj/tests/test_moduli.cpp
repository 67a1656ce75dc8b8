/**
 * @file test_moduli.cpp
 * @brief Generalized edges, sweeps against brute-force oracles,
 *        triangulation and the edge-vs-swept-figure contrast.
 */
#include "orbitlab/moduli.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace orbitlab;

namespace {

void expect_segment(const PlaneSegment& s, Vec2 p, Vec2 q) {
    EXPECT_LT((s.p - p).norm(), 1e-12);
    EXPECT_LT((s.q - q).norm(), 1e-12);
}

RasterImage flip_rows(const RasterImage& img) {
    RasterImage out = img;
    for (int r = 0; r < img.side; ++r)
        for (int c = 0; c < img.side; ++c) out.at(r, c) = img.at(img.side - 1 - r, c);
    return out;
}

RasterImage rotate_half_turn(const RasterImage& img) {
    RasterImage out = img;
    for (int r = 0; r < img.side; ++r)
        for (int c = 0; c < img.side; ++c) out.at(r, c) = img.at(img.side - 1 - r, img.side - 1 - c);
    return out;
}

}  // namespace

TEST(Interpolate, Examples) {
    const GeneralizedEdge tri = triangle_edge();
    expect_segment(interpolate(tri, 0.0), {0, 0}, {1, 0});
    expect_segment(interpolate(tri, 1.0), {0, 0}, {0, 1});
    expect_segment(interpolate(tri, 0.5), {0, 0}, {0.5, 0.5});
    expect_segment(interpolate(butterfly_edge(), 0.5), {-1, 0}, {1, 0});
    EXPECT_THROW(interpolate(tri, 1.5), UsageError);
}

TEST(Interpolate, IsAffineInT) {
    const GeneralizedEdge ge(Vec4(0.3, -0.2, 1.7, 0.9), Vec4(-1.1, 0.4, 0.2, -0.6));
    for (double a : {0.0, 0.1, 0.37}) {
        for (double b : {0.5, 0.8, 1.0}) {
            const auto m = interpolate(ge, 0.5 * (a + b));
            const auto sa = interpolate(ge, a), sb = interpolate(ge, b);
            EXPECT_LT((m.p - 0.5 * (sa.p + sb.p)).norm(), 1e-12);
            EXPECT_LT((m.q - 0.5 * (sa.q + sb.q)).norm(), 1e-12);
        }
    }
}

TEST(GeneralizedEdge, Validation) {
    EXPECT_THROW(GeneralizedEdge(Vec4::Zero(), Vec4(1, 0, 0, 1)), UsageError);
    EXPECT_THROW(GeneralizedEdge(Vec4(1, 0, 0, 1), Vec4(1, 0, 0, 1)), UsageError);
    const auto ge = GeneralizedEdge::from_segments({{1, 0}, {0, 0}}, {{0, 1}, {0, 0}});
    EXPECT_EQ(ge.start(), Vec4(0, 0, 1, 0));
    EXPECT_EQ(ge.end(), Vec4(0, 0, 0, 1));
}

TEST(Sweep, StrokesAreConvexCombinations) {
    const auto region = sweep(butterfly_edge(), 33, 64, preset_extent("butterfly"));
    ASSERT_GE(region.segments.size(), 33u);
    double prev = -1.0;
    for (const auto& s : region.segments) {
        EXPECT_GT(s.t, prev);
        prev = s.t;
        const auto expect = interpolate(butterfly_edge(), s.t);
        EXPECT_LT((s.segment.p - expect.p).norm(), 1e-12);
        EXPECT_LT((s.segment.q - expect.q).norm(), 1e-12);
    }
    EXPECT_EQ(region.segments.front().t, 0.0);
    EXPECT_EQ(region.segments.back().t, 1.0);
    EXPECT_THROW(sweep(butterfly_edge(), 1, 64, Extent{}), UsageError);
}

class SweepOracle : public ::testing::TestWithParam<std::string> {};

TEST_P(SweepOracle, MatchesBruteForceUnion) {
    const std::string name = GetParam();
    const Extent extent = preset_extent(name);
    const auto region = sweep(preset_edge(name), kDefaultSweepSteps, 128, extent);
    const auto oracle = oracle::sweep_union(preset_edge(name), 128, extent);
    EXPECT_GE(intersection_over_union(region.raster, oracle), 0.99) << name;
}

INSTANTIATE_TEST_SUITE_P(Shapes, SweepOracle, ::testing::Values("trapezoid", "triangle", "butterfly"));

TEST(Sweep, TrapezoidAndTriangleMatchAnalyticRegions) {
    const Extent extent = preset_extent("trapezoid");
    const auto trap = sweep(trapezoid_edge(), kDefaultSweepSteps, 128, extent);
    const auto square = oracle::dilated_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0.0, 128, extent);
    EXPECT_GE(intersection_over_union(trap.raster, square), 0.99);
    const auto tri = sweep(triangle_edge(), kDefaultSweepSteps, 128, extent);
    const auto triangle = oracle::dilated_polygon({{0, 0}, {1, 0}, {0, 1}}, 0.0, 128, extent);
    EXPECT_GE(intersection_over_union(tri.raster, triangle), 0.99);
}

TEST(Sweep, ButterflyIsSymmetric) {
    const auto img = sweep(butterfly_edge(), kDefaultSweepSteps, 128, preset_extent("butterfly")).raster;
    EXPECT_GE(intersection_over_union(img, flip_rows(img)), 0.995);
    EXPECT_GE(intersection_over_union(img, rotate_half_turn(img)), 0.995);
    // The wedges above and below the crossing stay empty.
    EXPECT_EQ(img.at(10, 64), 0);
    EXPECT_EQ(img.at(117, 64), 0);
    EXPECT_EQ(img.at(64, 10), 1);
}

TEST(Sweep, CommutesWithLinearMaps) {
    const GL2Element g(0.8, -0.3, 0.2, 0.7);
    const GeneralizedEdge ge = butterfly_edge();
    const Extent extent = Extent::centered(1.5);
    const auto moved = sweep(transform(g, ge), kDefaultSweepSteps, 128, extent).raster;

    // g applied to the original sweep, pulled back pixel by pixel from a fine raster.
    const int fine_side = 512;
    const auto fine = sweep(ge, kDefaultSweepSteps, fine_side, extent).raster;
    RasterImage pushed(128, extent, "pushed");
    const GL2Element inv = g.inverse();
    for (int r = 0; r < 128; ++r) {
        for (int c = 0; c < 128; ++c) {
            const Vec2 src = inv.apply(pushed.pixel_center(r, c));
            const int fc = static_cast<int>(std::floor((src.x() - extent.x0) / fine.pixel_width()));
            const int fr = static_cast<int>(std::floor((extent.y0 + extent.size - src.y()) / fine.pixel_width()));
            if (fr >= 0 && fr < fine_side && fc >= 0 && fc < fine_side) pushed.at(r, c) = fine.at(fr, fc);
        }
    }
    EXPECT_GE(intersection_over_union(moved, pushed), 0.95);
}

TEST(SweptBoundary, TriangleHasThreeCorners) {
    const Swept s = swept_boundary(triangle_edge());
    EXPECT_EQ(s.boundary.size(), 3u);
    EXPECT_EQ(swept_boundary(trapezoid_edge()).boundary.size(), 4u);
}

TEST(Triangulate, Counts) {
    EXPECT_EQ(triangulate_to_generalized_edges(Polygon{{{0, 0}, {1, 0}, {0, 1}}}).size(), 1u);
    EXPECT_EQ(triangulate_to_generalized_edges(Polygon{{{0, 0}, {2, 0}, {2.5, 1}, {0, 1.2}}}).size(), 2u);
    EXPECT_EQ(triangulate_to_generalized_edges(regular_polygon(6)).size(), 4u);
}

TEST(Triangulate, AreaConservation) {
    const std::vector<Polygon> polys{regular_polygon(6), regular_polygon(9, 0.7),
                                     Polygon{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}},  // L shape
                                     Polygon{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}}};                 // clockwise
    for (const auto& p : polys) {
        double total = 0.0;
        for (const auto& t : ear_clip(p)) total += triangle_area(t);
        const double area = std::abs(signed_area(p.vertices));
        EXPECT_NEAR(total, area, 1e-9 * area);
        EXPECT_EQ(ear_clip(p).size(), p.vertices.size() - 2);
    }
}

TEST(Triangulate, RejectsSelfIntersecting) {
    EXPECT_THROW(triangulate_to_generalized_edges(Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}}), UsageError);
    EXPECT_THROW(triangulate_to_generalized_edges(Polygon{{{0, 0}, {1, 1}}}), UsageError);
}

TEST(Triangulate, QuadrilateralSweepCoversFill) {
    const Polygon quad{{{-0.8, -0.7}, {0.9, -0.5}, {0.6, 0.8}, {-0.7, 0.6}}};
    const Extent extent = Extent::centered(1.0);
    std::vector<RasterImage> parts;
    for (const auto& ge : triangulate_to_generalized_edges(quad)) parts.push_back(sweep(ge, kDefaultSweepSteps, 128, extent).raster);
    EXPECT_GE(intersection_over_union(raster_union(parts), rasterize(quad, 128, extent)), 0.99);
}

TEST(Triangulate, HexagonSweepCoversFill) {
    const Polygon hex = regular_polygon(6);
    const Extent extent = preset_extent("hexagon");
    std::vector<RasterImage> parts;
    for (const auto& ge : triangulate_to_generalized_edges(hex)) parts.push_back(sweep(ge, kDefaultSweepSteps, 128, extent).raster);
    EXPECT_GE(intersection_over_union(raster_union(parts), rasterize(hex, 128, extent)), 0.99);
}

TEST(Contrast, EdgeAgainstItselfHasNoGap) {
    const auto report = complexity_contrast(Edge{0.0, 1.0}, BallSpec{GL2Element::identity(), 0.5, 0}, 0.05, 20000, 1, "edge2");
    EXPECT_EQ(report.edge.hits, report.figure.hits);
    EXPECT_EQ(report.gap_sigma, 0.0);
}

TEST(Contrast, TriangleHasSmallerStabilizer) {
    const auto report = complexity_contrast(swept_boundary(triangle_edge()), BallSpec{GL2Element::identity(), 0.5, 0}, 0.05,
                                            50000, 1, "triangle");
    EXPECT_LT(report.figure.fraction, report.edge.fraction);
}
