#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "hjreg/hamiltonian.hpp"

using namespace hjreg;

namespace {

PowerNormParams example1(int dim = 2, double m = 2.0) {
    PowerNormParams p;
    p.dim = dim;
    p.m = m;
    return p;
}

const Vec origin = Vec::Zero();

}  // namespace

TEST(PowerNorm, ValueAtThreeFour) {
    const auto model = make_power_norm(example1());
    EXPECT_DOUBLE_EQ(model.H(origin, 0.0, Vec(3, 4)), 24.0);
    EXPECT_DOUBLE_EQ(model.H(origin, 0.0, Vec(0, 0)), -1.0);
}

TEST(PowerNorm, GapMatchesClosedFormAndFiniteDifferences) {
    const auto model = make_power_norm(example1());
    const Vec p(3, 4);
    // (m-1)|Ap|^m + f = 25 + 1
    EXPECT_NEAR(model.legendre_gap(origin, 0.0, p), 26.0, 1e-12);
    // Independent route: finite differences of H in p.
    const double h = 1e-6;
    Vec fd;
    for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero();
        e[i] = h;
        fd[i] = (model.H(origin, 0.0, p + e) - model.H(origin, 0.0, p - e)) / (2 * h);
    }
    EXPECT_NEAR(fd.dot(p) - model.H(origin, 0.0, p), 26.0, 1e-6);
}

TEST(PowerNorm, MetadataDriftFree) {
    const auto model = make_power_norm(example1(1, 3.0));
    EXPECT_EQ(model.family, "power-norm");
    EXPECT_DOUBLE_EQ(model.c0, 0.0);
    EXPECT_DOUBLE_EQ(model.kappa, 1.5);
    EXPECT_TRUE(model.t_independent());
    EXPECT_TRUE(model.x_independent());
    ASSERT_TRUE(model.phi.has_value());
    EXPECT_DOUBLE_EQ((*model.phi)(3.0), 6.0);
}

TEST(PowerNorm, RejectsSmallExponent) {
    auto p = example1();
    p.m = 0.5;
    EXPECT_THROW(make_power_norm(p), InvalidModel);
    p.m = 1.0;
    EXPECT_THROW(make_power_norm(p), InvalidModel);
}

TEST(PowerNorm, RejectsSingularCoerciveMatrix) {
    auto p = example1(1);
    p.alpha = ScalarField::sine(0.0, 1.0, 1.0, 0.0);  // vanishes at x = 0
    EXPECT_THROW(make_power_norm(p), InvalidModel);
    p.coercive = false;
    EXPECT_NO_THROW(make_power_norm(p));
}

TEST(PowerNorm, RejectsFBelowOne) {
    auto p = example1(1);
    p.f = ScalarField::constant(0.5);
    EXPECT_THROW(make_power_norm(p), InvalidModel);
}

TEST(PowerNorm, HomogeneityIdentityAtSamples) {
    auto p = example1(2, 2.5);
    p.alpha = ScalarField::sine(2.0, 0.5, 1.3, 0.2);
    p.diag = Vec(1.0, 0.5);
    p.f = ScalarField::quartic(0.01, 1.0);
    const auto model = make_power_norm(p);
    const SampleBox box;
    for (const auto& s : sample_level_set(model, -std::numeric_limits<double>::infinity(), box, 1000, 3)) {
        const Vec Ap = p.alpha.value(s.x, s.t) * Vec(s.p[0], 0.5 * s.p[1]);
        const double expected = (p.m - 1.0) * std::pow(Ap.norm(), p.m) + p.f.value(s.x, s.t);
        ASSERT_NEAR(model.legendre_gap(s.x, s.t, s.p), expected, 1e-11 * (1.0 + expected));
    }
}

TEST(PowerNorm, DriftBracketingByYoung) {
    auto p = example1(2, 2.0);
    p.alpha = ScalarField::sine(2.0, 0.5, 1.0, 0.0);
    p.b = VectorField{{ScalarField::sine(0.5, 0.5, 2.0, 0.0), ScalarField::constant(-0.7)}};
    const auto model = make_power_norm(p);
    EXPECT_EQ(model.family, "power-norm-drift");
    const double m = p.m;
    // C1 = C2 = (m-1)/m sup|A^{-T} b|^{m/(m-1)}, computed here independently on a fine grid.
    double sup = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const Vec x(-5.0 + 10.0 * i / 2000.0, 0.0);
        const double al = p.alpha.value(x, 0.0);
        const Vec bv = p.b->value(x, 0.0);
        sup = std::max(sup, bv.norm() / al);
    }
    const double C = (m - 1.0) / m * std::pow(sup, m / (m - 1.0)) * (1.0 + 1e-6);
    for (const auto& s : sample_level_set(model, -std::numeric_limits<double>::infinity(), SampleBox{}, 1000, 5)) {
        const Vec Ap = p.alpha.value(s.x, s.t) * s.p;
        const double am = std::pow(Ap.norm(), m);
        const double H = model.H(s.x, s.t, s.p);
        const double f = p.f.value(s.x, s.t);
        ASSERT_LE((1.0 - 1.0 / m) * am - C - f, H + 1e-9 * (1 + std::abs(H)));
        ASSERT_GE((1.0 + 1.0 / m) * am + C - f, H - 1e-9 * (1 + std::abs(H)));
    }
}

TEST(Exponential, Values) {
    const auto model = make_exponential(2);
    EXPECT_NEAR(model.H(origin, 0.0, Vec(0.6, 0.8)), std::numbers::e, 1e-14);
    EXPECT_DOUBLE_EQ(model.H(origin, 0.0, Vec(0, 0)), 1.0);
    // |p| = 2: (|p| - 1) e^|p| = e^2
    EXPECT_NEAR(model.legendre_gap(origin, 0.0, Vec(2, 0)), std::exp(2.0), 1e-12);
    const double h = 1e-6;
    const double fd = (model.H(origin, 0, Vec(2 + h, 0)) - model.H(origin, 0, Vec(2 - h, 0))) / (2 * h);
    EXPECT_NEAR(fd * 2.0 - model.H(origin, 0, Vec(2, 0)), std::exp(2.0), 1e-6);
    EXPECT_NEAR((*model.phi)(std::exp(3.0)), std::exp(3.0) * 2.0, 1e-9);
}

TEST(LogGrowth, Values) {
    const auto model = make_log_growth(1);
    EXPECT_DOUBLE_EQ(model.H(origin, 0.0, Vec(0, 0)), 0.0);
    EXPECT_NEAR(model.legendre_gap(origin, 0.0, Vec(1, 0)), 0.5, 1e-14);
    EXPECT_NEAR(model.H(origin, 0.0, Vec(std::numbers::e - 1.0, 0)), std::numbers::e - 1.0, 1e-14);
    const double h = 1e-6;
    const double fd = (model.H(origin, 0, Vec(1 + h, 0)) - model.H(origin, 0, Vec(1 - h, 0))) / (2 * h);
    EXPECT_NEAR(fd - model.H(origin, 0, Vec(1, 0)), 0.5, 1e-8);
    // phi is exact: phi(H(r)) = r^2/(1+r)
    const double r = 7.5;
    EXPECT_NEAR((*model.phi)(r * std::log1p(r)), r * r / (1 + r), 1e-10);
}

TEST(SampleLevelSet, Example1AboveLevelZero) {
    const auto model = make_power_norm(example1(2));
    SampleBox box;
    box.p_max = 10.0;
    const auto pts = sample_level_set(model, 0.0, box, 100);
    ASSERT_EQ(pts.size(), 100u);
    for (const auto& s : pts) EXPECT_GE(s.p.norm(), 1.0 - 1e-12);
}

TEST(SampleLevelSet, UnconditionalAtMinusInfinity) {
    const auto model = make_log_growth(2);
    const auto pts = sample_level_set(model, -std::numeric_limits<double>::infinity(), SampleBox{}, 37, 9);
    EXPECT_EQ(pts.size(), 37u);
}

TEST(SampleLevelSet, DegenerateMatrixNeverReachesLevel) {
    auto p = example1(2);
    p.alpha = ScalarField::constant(0.0);
    p.coercive = false;
    const auto model = make_power_norm(p);
    EXPECT_TRUE(sample_level_set(model, 1.0, SampleBox{}, 50).empty());
}

TEST(SampleLevelSet, Deterministic) {
    const auto model = make_exponential(2);
    const auto a = sample_level_set(model, 20.0, SampleBox{}, 64, 4);
    const auto b = sample_level_set(model, 20.0, SampleBox{}, 64, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].p, b[i].p);
        EXPECT_EQ(a[i].x, b[i].x);
    }
}

// Derivative consistency for every built-in family, 10^3 points away from kinks.
TEST(Derivatives, AnalyticMatchesFiniteDifferences) {
    std::vector<HamiltonianModel> models;
    models.push_back(make_power_norm(example1(2, 1.5)));
    {
        auto p = example1(2, 3.0);
        p.alpha = ScalarField::sine(2.0, 0.5, 1.3, 0.4);
        p.f = ScalarField::separable(0.1, 1.0, 0.5);
        p.b = VectorField{{ScalarField::sine(0.0, 0.3, 1.0, 0.2), ScalarField::quadratic(0.01, 0.0, 0.3)}};
        models.push_back(make_power_norm(p));
    }
    {
        auto p = example1(2, 2.0);
        p.alpha = ScalarField::sine(0.0, 1.0, 0.7, 0.3);
        p.coercive = false;
        p.c = VectorField{{ScalarField::sine(0.2, 0.4, 1.0, 0.0), ScalarField::constant(0.5)}};
        p.f = ScalarField::quartic(0.02, 1.0);
        models.push_back(make_power_norm(p));
    }
    {
        auto p = example1(1, 2.0);
        p.a = ScalarField::quadratic(1.0, 0.0, 1.0);
        p.f = ScalarField::constant(0.0);
        p.coercive = false;
        models.push_back(make_power_norm(p));
    }
    models.push_back(make_exponential(2));
    models.push_back(make_log_growth(2));

    SampleBox box;
    box.p_max = 8.0;  // keeps exp(|p|) representable with useful finite-difference accuracy
    for (const auto& model : models) {
        const auto res = check_derivatives(model, box, 1000, 11);
        EXPECT_EQ(res.samples, 1000) << model.family;
        EXPECT_LT(res.max_rel_Hp, 1e-5) << model.family;
        EXPECT_LT(res.max_rel_Ht, 1e-5) << model.family;
        EXPECT_LT(res.max_rel_Hx, 1e-5) << model.family;
    }
}

TEST(Derivatives, FiniteDifferenceFallbackFlagsKinks) {
    HamiltonianModel model;
    model.dim = 1;
    model.eval_H = [](const Vec&, double, const Vec& p) { return std::abs(p[0]); };
    EXPECT_FALSE(model.Hp_checked(origin, 0.0, Vec(0.0, 0.0)).has_value());
    const auto g = model.Hp_checked(origin, 0.0, Vec(2.0, 0.0));
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR((*g)[0], 1.0, 1e-9);
}

TEST(Lagrangian, ClosedFormForAutonomousPowerNorm) {
    PowerNormParams p;
    p.dim = 1;
    p.a = ScalarField::constant(1.0);
    p.f = ScalarField::constant(0.0);
    p.coercive = true;
    const auto model = make_power_norm(p);
    ASSERT_TRUE(static_cast<bool>(model.lagrangian));
    EXPECT_NEAR(model.lagrangian(2.0), 1.0, 1e-14);  // q^2/4
    const auto expo = make_exponential(1);
    EXPECT_DOUBLE_EQ(expo.lagrangian(0.5), -1.0);
}
