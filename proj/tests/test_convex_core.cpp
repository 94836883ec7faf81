#include <cmath>

#include <gtest/gtest.h>

#include "kenergy/convex_core.hpp"
#include "kenergy/geodesic.hpp"

using namespace kenergy;

namespace {

double sup_on(const GridFunction& a, double (*exact)(double), Interval region) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (region.contains(a.node(i))) worst = std::max(worst, std::abs(a[i] - exact(a.node(i))));
    return worst;
}

}  // namespace

TEST(ConvexEnvelope, LowerHullOfDoubleWell) {
    auto f = GridFunction::sample({-2.0, 2.0}, 400, [](double x) { return (x * x - 1) * (x * x - 1); });
    auto env = convex_envelope(f);
    EXPECT_TRUE(env.is_convex());
    for (std::size_t i = 0; i < env.size(); ++i) {
        EXPECT_LE(env[i], f[i] + 1e-15);
        if (std::abs(env.node(i)) <= 1.0) EXPECT_NEAR(env[i], 0.0, 1e-12);
    }
    EXPECT_DOUBLE_EQ(env[0], f[0]);
}

TEST(ConvexEnvelope, FixesConvexInput) {
    auto f = GridFunction::sample({0.0, 1.0}, 64, [](double y) { return std::exp(y); });
    EXPECT_EQ(linf_distance(convex_envelope(f), f), 0.0);
}

TEST(ConvexEnvelope, TwoDimensionalRemovesSaddle) {
    auto f = GridFunction2D::sample({-1, 1}, {-1, 1}, 16, 16, [](double a, double b) { return a * a - b * b; });
    auto env = convex_envelope(f);
    for (std::size_t i = 0; i <= 16; ++i)
        for (std::size_t j = 0; j <= 16; ++j) EXPECT_LE(env.at(i, j), f.at(i, j) + 1e-12);
    EXPECT_LT(env.convexity_defect(), 1e-9);
}

TEST(Legendre, QuadraticIsSelfDual) {
    auto q = GridFunction::sample({-3.0, 3.0}, 600, [](double x) { return 0.5 * x * x; }, TailSlopes{-3, 3});
    // Tails make q affine outside the window; inside the slope range the
    // dual is y^2/2 again.
    auto d = legendre(q);
    EXPECT_EQ(d.domain(), (Interval{-3.0, 3.0}));
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], 0.5 * d.node(i) * d.node(i), 1e-9);
}

TEST(Legendre, FubiniStudyPotentialToSymbol) {
    auto phi = sample_fubini_study_potential();
    auto u = legendre(phi, {.cells = kDefaultCells, .window = std::nullopt});
    EXPECT_EQ(u.domain(), (Interval{0.0, 1.0}));
    EXPECT_LE(sup_on(u, fubini_study_symbol, {0.01, 0.99}), 1e-6);
}

TEST(Legendre, RefinementMatters) {
    auto phi = sample_fubini_study_potential();
    LegendreOptions coarse;
    coarse.refine = false;
    auto u = legendre(phi, coarse);
    EXPECT_GT(sup_on(u, fubini_study_symbol, {0.01, 0.99}), 1e-6);
}

TEST(Legendre, CompactInputGivesRealLineOutput) {
    auto u = sample_fubini_study_symbol(1 << 16);
    auto phi = legendre(u, {.cells = 2048, .window = Interval{-10, 10}});
    ASSERT_TRUE(phi.on_real_line());
    EXPECT_EQ(phi.tails()->left, 0.0);
    EXPECT_EQ(phi.tails()->right, 1.0);
    for (std::size_t i = 0; i < phi.size(); i += 64)
        EXPECT_NEAR(phi[i], fubini_study_potential(phi.node(i)), 1e-5);
}

TEST(Legendre, RejectsNonConvexInput) {
    auto f = GridFunction::sample({0.0, 1.0}, 16, [](double y) { return std::sin(6 * y); });
    EXPECT_THROW(legendre(f), NonConvexInput);
}

TEST(Legendre, AffineInputGivesSinglePoint) {
    auto f = GridFunction::sample({-1.0, 1.0}, 8, [](double x) { return 2 * x + 1; }, TailSlopes{2, 2});
    auto d = legendre(f);
    EXPECT_EQ(d.cells(), 0u);
    EXPECT_NEAR(d[0], -1.0, 1e-15);
}

TEST(Legendre, TwoDimensionalSeparableQuadratic) {
    auto u = GridFunction2D::sample({-1, 1}, {-1, 1}, 64, 64, [](double a, double b) { return 0.5 * (a * a + b * b); });
    auto phi = legendre(u, {-0.5, 0.5}, {-0.5, 0.5}, 16, 16);
    for (std::size_t i = 0; i <= 16; ++i)
        for (std::size_t j = 0; j <= 16; ++j) {
            double x = phi.node1(i), y = phi.node2(j);
            EXPECT_NEAR(phi.at(i, j), 0.5 * (x * x + y * y), 2e-4);
        }
}

TEST(Biconjugate, RecoversConvexFunction) {
    auto phi = sample_fubini_study_potential();
    auto back = biconjugate(phi);
    EXPECT_LE(linf_distance(back, phi), 1e-6);
}

TEST(Biconjugate, GivesEnvelopeOfNonConvexCompactFunction) {
    auto f = GridFunction::sample({-2.0, 2.0}, 256, [](double x) { return (x * x - 1) * (x * x - 1); });
    auto back = biconjugate(f);
    EXPECT_LE(linf_distance(back, convex_envelope(f)), 1e-6);
}

TEST(SecondDerivative, SmoothFunctionHasNoAtoms) {
    auto u = sample_fubini_study_symbol();
    auto dec = second_derivative_decompose(u);
    EXPECT_FALSE(dec.has_atoms());
    std::size_t mid = dec.nodes.size() / 2;
    EXPECT_NEAR(dec.regular_density[mid], 4.0, 1e-5);
}

TEST(SecondDerivative, KinkBecomesAtom) {
    const std::size_t n = 4096;
    auto u = combine(1.0, sample_fubini_study_symbol(n), 0.7, equator_kink().sample(n));
    auto dec = second_derivative_decompose(u);
    ASSERT_EQ(dec.atoms.size(), 1u);
    EXPECT_NEAR(dec.atoms[0].location, 0.5, 1.0 / n);
    EXPECT_NEAR(dec.atoms[0].mass, 0.7, 2.0 / n);
    std::size_t mid = dec.nodes.size() / 2;
    EXPECT_NEAR(dec.regular_density[mid], 4.0, 1e-3);
    EXPECT_NEAR(dec.regular_mass() + dec.atom_mass(), dec.total_mass, 1e-6 * dec.total_mass);
}

TEST(SecondDerivative, TwoNearbyKinksMergeIntoOneCluster) {
    auto u = GridFunction::sample({0.0, 1.0}, 1024, [](double y) {
        return 0.5 * y * y + std::max(0.0, y - 0.5) + std::max(0.0, y - 0.5 - 2.0 / 1024);
    });
    auto dec = second_derivative_decompose(u);
    EXPECT_NEAR(dec.atom_mass(), 2.0, 1e-2);
    for (std::size_t k = 0; k < dec.nodes.size(); ++k) EXPECT_NEAR(dec.regular_density[k], 1.0, 1e-9);
}

TEST(SecondDerivative, RejectsNonConvex) {
    auto f = GridFunction::sample({0.0, 1.0}, 16, [](double y) { return -y * y; });
    EXPECT_THROW(second_derivative_decompose(f), NonConvexInput);
}

TEST(InverseHessian, HoldsForDualPair) {
    auto u = sample_fubini_study_symbol();
    auto phi = legendre(u);
    EXPECT_LE(check_inverse_hessian_relation(phi, u, {0.05, 0.95}), 1e-3);
}

TEST(InverseHessian, DegenerateDualHessianThrows) {
    auto u = GridFunction::sample({0.0, 1.0}, 64, [](double y) { return std::max(0.0, y - 0.5); });
    auto phi = legendre(GridFunction::sample({0.0, 1.0}, 64, [](double y) { return y * y; }));
    EXPECT_THROW(check_inverse_hessian_relation(phi, u, {0.1, 0.4}), DegenerateHessian);
}

TEST(Distance, LinfAndDomains) {
    auto a = GridFunction::sample({0.0, 1.0}, 8, [](double y) { return y; });
    auto b = GridFunction::sample({0.0, 1.0}, 16, [](double y) { return y + 0.25; });
    EXPECT_NEAR(linf_distance(a, b), 0.25, 1e-15);
    auto c = GridFunction::sample({2.0, 3.0}, 8, [](double y) { return y; });
    EXPECT_THROW(linf_distance(a, c), DomainMismatch);
    auto r1 = GridFunction::sample({-1, 1}, 8, [](double x) { return x; }, TailSlopes{1, 1});
    auto r2 = GridFunction::sample({-1, 1}, 8, [](double x) { return std::abs(x); }, TailSlopes{-1, 1});
    EXPECT_TRUE(std::isinf(linf_distance(r1, r2)));
}

TEST(Affine, DetectionAndAlignment) {
    auto a = GridFunction::sample({0.0, 1.0}, 32, [](double y) { return 3 * y - 2; });
    EXPECT_TRUE(is_affine(a, 1e-12));
    auto k = equator_kink();
    EXPECT_FALSE(is_affine(k));
    EXPECT_TRUE(is_affine(PiecewiseAffine1D::affine({0, 1}, 2, 1)));
    auto q = GridFunction::sample({0.0, 1.0}, 32, [](double y) { return y * y + 5 * y - 1; });
    auto r = align_affine(q, {0.0, 1.0});
    auto q0 = align_affine(GridFunction::sample({0.0, 1.0}, 32, [](double y) { return y * y; }), {0.0, 1.0});
    EXPECT_LE(linf_distance(r, q0), 1e-12);
    auto s = add_affine(a, -3, 2);
    EXPECT_LE(chord_deviation(s), 1e-15);
    EXPECT_NEAR(s[7], 0.0, 1e-15);
}
