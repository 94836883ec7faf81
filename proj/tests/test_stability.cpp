#include <cmath>

#include <gtest/gtest.h>

#include "kenergy/stability.hpp"

using namespace kenergy;

namespace {

const Polytope kUnit = Polytope::interval(0.0, 1.0);

double scan_norm(const PiecewiseAffine1D& u, double lo, double hi, double step) {
    double best = std::numeric_limits<double>::infinity();
    for (double a = lo; a <= hi; a += step)
        best = std::min(best, u.integral() - 0.5 * a - u.plus_affine(-a, 0.0).minimum());
    return best;
}

double sup_on(const GridFunction& f, Interval region) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (region.contains(f.node(i))) worst = std::max(worst, std::abs(f[i]));
    return worst;
}

}  // namespace

TEST(Optimizers, GoldenSectionAndNelderMead) {
    EXPECT_NEAR(golden_section([](double x) { return (x - 0.3) * (x - 0.3); }, -5, 5), 0.3, 1e-9);
    EXPECT_NEAR(golden_section([](double x) { return std::abs(x + 1.25); }, -5, 5), -1.25, 1e-9);
    Vec2 m = nelder_mead([](Vec2 p) { return std::abs(p.x - 1) + 2 * std::abs(p.y + 0.5); }, {0, 0}, 0.5);
    EXPECT_NEAR(m.x, 1.0, 1e-6);
    EXPECT_NEAR(m.y, -0.5, 1e-6);
}

TEST(RelativeNorm, KinkClosedForm) {
    for (double a : {0.1, 0.25, 0.5, 0.6, 0.9}) {
        auto k = PiecewiseAffine1D::kink({0, 1}, 1.0, a);
        double expected = a < 0.5 ? a * a / 2 : (1 - a) * (1 - a) / 2;
        EXPECT_NEAR(relative_norm(k, kUnit).value, expected, 1e-10) << "a = " << a;
    }
}

TEST(RelativeNorm, MatchesScanOracle) {
    for (const auto& u : {equator_kink(), PiecewiseAffine1D::max_of({0, 1}, {{-1, 0.2}, {0.5, -0.1}, {2, -1}})}) {
        double oracle = scan_norm(u, -5.0, 5.0, 1e-4);
        EXPECT_NEAR(relative_norm(u, kUnit).value, oracle, 1e-5);
    }
}

TEST(RelativeNorm, SampledSymbol) {
    auto u0 = sample_fubini_study_symbol(2048);
    auto r = relative_norm(u0, kUnit);
    // Symmetric: optimal slope is 0 and the value is ∫u0 - min u0.
    EXPECT_NEAR(r.minimizer_l[0], 0.0, 1e-3);
    EXPECT_NEAR(r.value, -0.5 + std::log(2.0), 1e-5);
}

TEST(RelativeNorm, GridAgreesWithExactForKink) {
    auto k = PiecewiseAffine1D::kink({0, 1}, 1.0, 0.375);
    EXPECT_NEAR(relative_norm(k.sample(1024), kUnit).value, relative_norm(k, kUnit).value, 1e-9);
}

TEST(RelativeNorm, ZeroForAffine) {
    auto a = PiecewiseAffine1D::affine({0, 1}, 3.0, 1.0);
    EXPECT_NEAR(relative_norm(a, kUnit).value, 0.0, 1e-12);
    auto S = Polytope::named("unit-square");
    EXPECT_NEAR(relative_norm(MaxAffine2D(S, {{{1, -2}, 0.5}})).value, 0.0, 1e-9);
}

TEST(RelativeNorm, InvariantUnderAffineShift) {
    auto k = PiecewiseAffine1D::kink({0, 1}, 1.0, 0.3);
    EXPECT_NEAR(relative_norm(k.plus_affine(1.7, -2.0), kUnit).value, relative_norm(k, kUnit).value, 1e-9);
}

TEST(RelativeNorm, TwoDimensionalKink) {
    auto S = Polytope::named("unit-square");
    auto k = MaxAffine2D::kink(S, {1, 0}, 0.5);
    EXPECT_NEAR(relative_norm(k).value, 0.125, 1e-8);
    auto shifted = k.plus_affine({0.3, -0.7}, 2.0);
    EXPECT_NEAR(relative_norm(shifted).value, 0.125, 1e-8);
}

TEST(RelativeNorm, LiteralFormCanBeUnbounded) {
    auto P = Polytope::interval(0.0, 3.0);
    auto k = PiecewiseAffine1D::kink({0, 3}, 1.0, 1.0);
    EXPECT_THROW(relative_norm(k, P), Unbounded);
    RelativeNormOptions scaled;
    scaled.scale_inf_by_volume = true;
    EXPECT_GT(relative_norm(k, P, scaled).value, 0.0);
}

TEST(Generators, FamilyShapeAndDeterminism) {
    auto g = default_generators(kUnit);
    // Fractions in (0,1) with denominator <= 8, for two directions, plus 64 sums.
    EXPECT_EQ(g.size(), 2u * 21u + 64u);
    auto h = default_generators(kUnit);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].label, h[i].label);
    GeneratorOptions other;
    other.seed = 7;
    EXPECT_NE(default_generators(kUnit, other).back().label, g.back().label);
    GeneratorOptions small;
    small.random_sums = 0;
    small.max_denominator = 2;
    EXPECT_EQ(default_generators(kUnit, small).size(), 2u);
}

TEST(StabilityMargin, UnitIntervalIsStable) {
    auto r = stability_margin(kUnit, Convention::paper_lemma);
    EXPECT_GT(r.delta_estimate, 0.0);
    EXPECT_NEAR(r.delta_estimate, 1.0, 1e-9);
    EXPECT_EQ(r.witness.label, "kink a=1 b=1/2");
    EXPECT_EQ(r.family_size, 106u);
    auto d = stability_margin(kUnit, Convention::donaldson);
    EXPECT_NEAR(d.delta_estimate, 2.0, 1e-9);
}

TEST(StabilityMargin, SquareIsStable) {
    GeneratorOptions opts;
    opts.max_denominator = 4;
    opts.random_sums = 16;
    auto r = stability_margin(Polytope::named("unit-square"), Convention::donaldson, opts);
    EXPECT_GT(r.delta_estimate, 0.0);
}

TEST(StabilityMargin, EmptyFamily) {
    std::vector<Generator> family{{"affine", PiecewiseAffine1D::affine({0, 1}, 1.0, 0.0)}};
    EXPECT_THROW(stability_margin(kUnit, Convention::donaldson, family), EmptyFamily);
    EXPECT_THROW(stability_margin(kUnit, Convention::donaldson, std::vector<Generator>{}), EmptyFamily);
}

TEST(StabilityMargin, AffineShiftOfGeneratorsKeepsMargin) {
    auto base = default_generators(kUnit);
    auto shifted = base;
    for (auto& g : shifted) g.fn = std::get<PiecewiseAffine1D>(g.fn).plus_affine(0.8, -0.3);
    EXPECT_NEAR(stability_margin(kUnit, Convention::paper_lemma, shifted).delta_estimate,
                stability_margin(kUnit, Convention::paper_lemma, base).delta_estimate, 1e-8);
}

TEST(MinimizeF, RecoversSymbol) {
    auto m = minimize_F(kUnit, Convention::donaldson);
    EXPECT_LE(m.residual, 1e-8);
    auto u0 = sample_fubini_study_symbol(1024);
    auto diff = align_affine(combine(1.0, m.u, -1.0, u0), {0.05, 0.95});
    EXPECT_LE(sup_on(diff, {0.05, 0.95}), 1e-2);
    EXPECT_TRUE(m.u.is_convex());
    EXPECT_NEAR(m.u[512], 0.0, 1e-15);
    EXPECT_NEAR(m.u[0], m.u[1024], 1e-12);
}

TEST(MinimizeF, OtherConventionDoublesTheSymbol) {
    auto m = minimize_F(kUnit, Convention::paper_lemma);
    auto u0 = sample_fubini_study_symbol(1024);
    auto diff = align_affine(combine(1.0, m.u, -2.0, u0), {0.05, 0.95});
    EXPECT_LE(sup_on(diff, {0.05, 0.95}), 1e-2);
}

TEST(MinimizeF, ObjectiveDecreasesMonotonically) {
    DiscreteFMinimizer m(kUnit, Convention::donaldson, 256);
    double prev = m.objective();
    for (int i = 0; i < 60 && !m.step(); ++i) {
        EXPECT_LE(m.objective(), prev + 1e-12);
        prev = m.objective();
    }
    EXPECT_LE(m.residual(), 1e-8);
    for (double d : m.densities()) EXPECT_GT(d, 0.0);
}

TEST(MinimizeF, OneNewtonStepFromSymbolStaysPut) {
    auto u0 = sample_fubini_study_symbol(1024);
    DiscreteFMinimizer m(kUnit, Convention::donaldson, 1024, &u0);
    m.step();
    auto diff = align_affine(combine(1.0, m.current(), -1.0, u0), {0.05, 0.95});
    EXPECT_LE(sup_on(diff, {0.05, 0.95}), 1e-6);
}

TEST(MinimizeF, IterationCapReportsNonConvergence) {
    MinimizeOptions opts;
    opts.max_iterations = 2;
    try {
        minimize_F(kUnit, Convention::donaldson, opts);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.iterations(), 2);
        EXPECT_GT(e.gradient_norm(), 1e-8);
    }
    EXPECT_THROW(minimize_F(Polytope::named("unit-square"), Convention::donaldson), DomainMismatch);
}

TEST(MinimizeF, ScaleTest) {
    auto u0 = sample_fubini_study_symbol(1024);
    EXPECT_NEAR(scale_minimizer(u0, kUnit, Convention::donaldson), 1.0, 1e-3);
    EXPECT_NEAR(scale_minimizer(u0, kUnit, Convention::paper_lemma), 2.0, 1e-3);
}

TEST(Certificate, AffineShiftPasses) {
    auto u0 = sample_fubini_study_symbol(1024);
    auto c = certify_unique(u0, add_affine(u0, -0.4, 2.0), kUnit, Convention::donaldson);
    EXPECT_TRUE(c.passed());
    EXPECT_TRUE(c.affine_conclusion);
    EXPECT_NO_THROW(c.require());
}

TEST(Certificate, KinkFailsAtEnergyStage) {
    auto u0 = sample_fubini_study_symbol(1024);
    auto u1 = combine(1.0, u0, 1.0, equator_kink().sample(1024));
    auto c = certify_unique(u0, u1, kUnit, Convention::paper_lemma);
    EXPECT_FALSE(c.passed());
    ASSERT_TRUE(c.failed_stage.has_value());
    EXPECT_EQ(*c.failed_stage, "i-energy");
    EXPECT_NEAR(c.L_of_difference, 0.125, 1e-4);
    EXPECT_NEAR(c.energy_variation, 0.125, 1e-4);
    EXPECT_TRUE(c.difference_convex);
    EXPECT_TRUE(c.hessians_agree);
    EXPECT_FALSE(c.linear_vanishes);
    EXPECT_THROW(c.require(), HypothesisFailed);
}

TEST(Certificate, MinimizerPasses) {
    auto u0 = sample_fubini_study_symbol(1024);
    auto m = minimize_F(kUnit, Convention::donaldson);
    auto c = certify_unique(u0, m.u, kUnit, Convention::donaldson);
    EXPECT_TRUE(c.affine_conclusion) << c.failed_stage.value_or("");
}

TEST(Certificate, SmoothConvexPerturbationFails) {
    auto u0 = sample_fubini_study_symbol(1024);
    auto w = GridFunction::sample({0, 1}, 1024, [](double y) { return 0.3 * y * y; });
    auto c = certify_unique(u0, combine(1.0, u0, 1.0, w), kUnit, Convention::donaldson);
    ASSERT_TRUE(c.failed_stage.has_value());
    EXPECT_FALSE(c.hessians_agree);
}

TEST(Certificate, HypothesisFailsWithAtomInside) {
    auto bad = combine(1.0, sample_fubini_study_symbol(1024), 1.0, equator_kink().sample(1024));
    auto c = certify_unique(bad, bad, kUnit, Convention::donaldson);
    EXPECT_FALSE(c.hypothesis_ok);
    EXPECT_EQ(c.failed_stage.value_or(""), "0-hypothesis");
}

TEST(Certificate, GridMismatch) {
    auto a = sample_fubini_study_symbol(256);
    auto b = sample_fubini_study_symbol(512);
    EXPECT_THROW(certify_unique(a, b, kUnit, Convention::donaldson), DomainMismatch);
}
