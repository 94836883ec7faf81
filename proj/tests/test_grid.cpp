#include <cmath>

#include <gtest/gtest.h>

#include "kenergy/geometry.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/polytope.hpp"

using namespace kenergy;

TEST(GridFunction, SampleHasCellsPlusOneNodes) {
    auto f = GridFunction::sample({0.0, 1.0}, 8, [](double y) { return y * y; });
    EXPECT_EQ(f.size(), 9u);
    EXPECT_EQ(f.cells(), 8u);
    EXPECT_DOUBLE_EQ(f.step(), 0.125);
    EXPECT_DOUBLE_EQ(f.node(4), 0.5);
    EXPECT_DOUBLE_EQ(f[8], 1.0);
    EXPECT_FALSE(f.on_real_line());
}

TEST(GridFunction, InterpolatesLinearlyInside) {
    auto f = GridFunction::sample({0.0, 1.0}, 4, [](double y) { return y * y; });
    EXPECT_DOUBLE_EQ(f(0.125), 0.5 * (0.0 + 0.0625));
    EXPECT_TRUE(std::isinf(f(1.5)));
}

TEST(GridFunction, TailsExtendAffinelyOutsideWindow) {
    auto f = GridFunction::sample({-1.0, 1.0}, 4, [](double x) { return std::abs(x); }, TailSlopes{-1, 1});
    EXPECT_TRUE(f.on_real_line());
    EXPECT_DOUBLE_EQ(f(-3.0), 3.0);
    EXPECT_DOUBLE_EQ(f(5.0), 5.0);
}

TEST(GridFunction, RejectsBadSamples) {
    EXPECT_THROW(GridFunction({0.0, 1.0}, {}), InvalidArgument);
    EXPECT_THROW(GridFunction({0.0, 1.0}, {0.0, NAN}), InvalidArgument);
    EXPECT_THROW(GridFunction({0.0, 1.0}, {0.0, 1.0}, TailSlopes{2.0, 1.0}), InvalidArgument);
}

TEST(GridFunction, ConvexityCheck) {
    auto convex = GridFunction::sample({0.0, 1.0}, 16, [](double y) { return std::exp(y); });
    auto concave = GridFunction::sample({0.0, 1.0}, 16, [](double y) { return -y * y; });
    EXPECT_TRUE(convex.is_convex());
    EXPECT_FALSE(concave.is_convex());
    EXPECT_THROW(concave.require_convex("test"), NonConvexInput);
}

TEST(GridFunction, TailSlopesMustBracketWindowSlopes) {
    auto f = GridFunction::sample({-1.0, 1.0}, 8, [](double x) { return x * x; }, TailSlopes{0.0, 1.0});
    EXPECT_FALSE(f.is_convex());
}

TEST(GridFunction, CombineAddsSamplesAndTails) {
    auto f = GridFunction::sample({0.0, 1.0}, 4, [](double y) { return y; });
    auto g = GridFunction::sample({0.0, 1.0}, 4, [](double y) { return y * y; });
    auto h = combine(2.0, f, 3.0, g);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], 2 * f[i] + 3 * g[i]);
    auto k = GridFunction::sample({0.0, 1.0}, 8, [](double y) { return y; });
    EXPECT_THROW(combine(1.0, f, 1.0, k), DomainMismatch);
}

TEST(GridFunction2D, RowMajorLayoutAndConvexity) {
    auto f = GridFunction2D::sample({0.0, 1.0}, {0.0, 2.0}, 4, 8,
                                    [](double a, double b) { return a * a + b * b + a * b; });
    EXPECT_DOUBLE_EQ(f.at(2, 4), 0.25 + 1.0 + 0.5);
    EXPECT_DOUBLE_EQ(f.data()[2 * 9 + 4], f.at(2, 4));
    EXPECT_TRUE(f.is_convex());
    auto saddle = GridFunction2D::sample({0.0, 1.0}, {0.0, 1.0}, 8, 8,
                                         [](double a, double b) { return a * a - b * b; });
    EXPECT_FALSE(saddle.is_convex());
    // Axis-convex but with an indefinite Hessian.
    auto twisted = GridFunction2D::sample({0.0, 1.0}, {0.0, 1.0}, 8, 8,
                                          [](double a, double b) { return a * a + b * b + 3 * a * b; });
    EXPECT_FALSE(twisted.is_convex());
}

TEST(Geometry, AreaCentroidAndClip) {
    Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    EXPECT_DOUBLE_EQ(signed_area(sq), 1.0);
    Vec2 c = centroid(sq);
    EXPECT_DOUBLE_EQ(c.x, 0.5);
    EXPECT_DOUBLE_EQ(c.y, 0.5);
    Polygon right = clip(sq, {{1.0, 0.0}, -0.5});  // x >= 1/2
    EXPECT_NEAR(signed_area(right), 0.5, 1e-15);
    EXPECT_NEAR(integrate({{1.0, 0.0}, 0.0}, right), 0.375, 1e-15);
}

TEST(Polytope, NamedShapesAndMeasures) {
    auto I = Polytope::named("unit-interval");
    EXPECT_EQ(I.dim(), 1);
    EXPECT_DOUBLE_EQ(I.volume(), 1.0);
    EXPECT_DOUBLE_EQ(I.boundary_volume(), 2.0);
    auto S = Polytope::named("unit-square");
    EXPECT_DOUBLE_EQ(S.volume(), 1.0);
    EXPECT_DOUBLE_EQ(S.boundary_volume(), 4.0);
    auto T = Polytope::named("unit-triangle");
    EXPECT_DOUBLE_EQ(T.volume(), 0.5);
    // Hypotenuse (1,0)-(0,1) has lattice length 1.
    EXPECT_DOUBLE_EQ(T.boundary_volume(), 3.0);
    EXPECT_THROW(Polytope::named("dodecahedron"), InvalidArgument);
}

TEST(Polytope, LatticeLengthUsesGcd) {
    auto P = Polytope::polygon({{0, 0}, {2, 0}, {0, 2}});
    auto facets = P.facets();
    ASSERT_EQ(facets.size(), 3u);
    EXPECT_DOUBLE_EQ(facets[0].lattice_length, 2.0);
    EXPECT_DOUBLE_EQ(facets[1].lattice_length, 2.0);
    EXPECT_DOUBLE_EQ(facets[2].lattice_length, 2.0);
}

TEST(Polytope, PolygonValidation) {
    EXPECT_THROW(Polytope::polygon({{0, 0}, {1, 0}}), InvalidArgument);
    EXPECT_THROW(Polytope::polygon({{0, 0}, {0.5, 0}, {0, 1}}), InvalidArgument);
    EXPECT_THROW(Polytope::polygon({{0, 0}, {1, 0}, {2, 0}, {0, 1}}), InvalidArgument);
    auto cw = Polytope::polygon({{0, 0}, {0, 1}, {1, 0}});
    EXPECT_GT(signed_area(cw.vertices()), 0.0);
    EXPECT_TRUE(cw.contains({0.2, 0.2}));
    EXPECT_FALSE(cw.contains({0.8, 0.8}));
    EXPECT_TRUE(Polytope::box({0, 2}, {0, 1}).as_box().has_value());
    EXPECT_FALSE(Polytope::named("unit-triangle").as_box().has_value());
}

TEST(Convention, CoefficientsKillConstants) {
    for (const char* name : {"unit-interval", "symmetric-interval", "unit-square", "unit-triangle"}) {
        auto P = Polytope::named(name);
        for (auto c : {Convention::donaldson, Convention::paper_lemma}) {
            auto k = coefficients(c, P);
            EXPECT_NEAR(k.boundary * P.boundary_volume(), k.interior * P.volume(), 1e-15) << name;
        }
    }
    auto k = coefficients(Convention::paper_lemma, Polytope::named("unit-interval"));
    EXPECT_DOUBLE_EQ(k.boundary, 0.5);
    EXPECT_DOUBLE_EQ(k.interior, 1.0);
}

TEST(Convention, ParseAndPrint) {
    EXPECT_EQ(parse_convention("donaldson"), Convention::donaldson);
    EXPECT_EQ(parse_convention("paper-lemma"), Convention::paper_lemma);
    EXPECT_EQ(to_string(Convention::paper_lemma), "paper-lemma");
    EXPECT_THROW(parse_convention("tian"), ConfigError);
}
