#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hjreg/conditions.hpp"

using namespace hjreg;

namespace {

HamiltonianModel example1(int dim = 1) {
    PowerNormParams p;
    p.dim = dim;
    return make_power_norm(p);
}

HamiltonianModel example4(ScalarField a) {
    PowerNormParams p;
    p.dim = 1;
    p.a = a;
    p.f = ScalarField::constant(0.0);
    p.coercive = false;
    return make_power_norm(p);
}

SampleBox small_box() {
    SampleBox b;
    b.p_max = 20.0;
    return b;
}

// Independent re-evaluation of an H0 witness.
void expect_valid_H0_witness(const HamiltonianModel& model, const PhiFunction& phi, const Witness& w) {
    const double H = model.H(w.x, w.t, w.p);
    const Vec g = model.Hp(w.x, w.t, w.p);
    const double gap = g.dot(w.p) - H;
    const double tol = 1e-8 * (1.0 + std::abs(H));
    const bool first = gap < phi(H) - tol;
    const bool second = g.norm() > model.kappa * gap + tol;
    EXPECT_TRUE(first || second) << w.inequality;
}

}  // namespace

TEST(CheckH0, Example1Certified) {
    const auto model = example1();
    EXPECT_DOUBLE_EQ(model.kappa, 2.0);
    const auto r = check_H0(model, *model.phi, small_box(), 2000);
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
    EXPECT_EQ(r.violations, 0);
    EXPECT_GE(r.resolved, 1800);
}

TEST(CheckH0, SmallKappaViolatedNearUnitMomentum) {
    auto model = example1();
    model.kappa = 0.1;
    const auto r = check_H0(model, *model.phi, small_box(), 2000);
    ASSERT_EQ(r.verdict, Verdict::violated);
    ASSERT_FALSE(r.witnesses.empty());
    // 2|p| <= 0.1(|p|^2 + 1) fails for |p| in (0.1, 19.9); it holds near |p| = 20.
    for (const auto& w : r.witnesses) {
        expect_valid_H0_witness(model, *model.phi, w);
        EXPECT_LT(w.p.norm(), 19.95);
    }
    bool near_one = false;
    for (const auto& w : r.witnesses) near_one |= std::abs(w.p.norm() - 1.0) < 2.0;
    EXPECT_TRUE(near_one);
}

TEST(CheckH0, ConstantHamiltonianViolated) {
    HamiltonianModel model;
    model.dim = 1;
    model.eval_H = [](const Vec&, double, const Vec&) { return 3.0; };
    model.eval_Hp = [](const Vec&, double, const Vec&) { return Vec(0, 0); };
    model.kappa = 1.0;
    model.coercive = false;
    const auto phi = phi_linear(1.0);
    const auto r = check_H0(model, phi, small_box(), 200);
    ASSERT_EQ(r.verdict, Verdict::violated);
    for (const auto& w : r.witnesses) expect_valid_H0_witness(model, phi, w);
}

TEST(CheckH0, EmptyLevelSetUnresolved) {
    auto p = PowerNormParams{};
    p.alpha = ScalarField::constant(0.0);
    p.coercive = false;
    auto model = make_power_norm(p);
    model.c0 = 1.0;  // H = -1 never reaches it
    auto phi = phi_affine(1.0, -1.0);
    phi.c0 = 1.0;
    const auto r = check_H0(model, phi, small_box(), 100);
    EXPECT_EQ(r.verdict, Verdict::unresolved);
    EXPECT_EQ(r.sampled, 0);
}

TEST(CheckH0, MismatchedThresholdIsMisuse) {
    const auto model = example1();
    EXPECT_THROW(check_H0(model, phi_linear(1.0, 2.0), small_box(), 10), Misuse);
}

TEST(CheckH0, DeterministicAcrossWorkers) {
    auto model = example1(2);
    model.kappa = 0.5;
    CheckOptions serial;
    CheckOptions parallel;
    parallel.workers = 4;
    const auto a = to_json(check_H0(model, *model.phi, small_box(), 1500, serial)).dump();
    const auto b = to_json(check_H0(model, *model.phi, small_box(), 1500, parallel)).dump();
    const auto c = to_json(check_H0(model, *model.phi, small_box(), 1500, serial)).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Integrability, LinearPhi) {
    const auto r = check_integrability(phi_linear(1.0), 4.0);
    EXPECT_TRUE(r.integrable);
    EXPECT_NEAR(r.F_A, 0.5, 1e-10);  // 2/A
}

TEST(Integrability, SLogSAtTwiceE) {
    const auto r = check_integrability(phi_s_log_s(std::numbers::e), 2.0 * std::numbers::e);
    EXPECT_TRUE(r.integrable);
    EXPECT_GT(r.F_A, 0.0);
    EXPECT_TRUE(std::isfinite(r.F_A));
}

TEST(Integrability, DecreasingPhiRejectedByMonotonicity) {
    PhiFunction phi;
    phi.c0 = std::numbers::e;
    phi.eval = [](double s) { return 1.0 / std::log(s); };
    const auto r = check_integrability(phi);
    EXPECT_FALSE(r.integrable);
    EXPECT_NE(r.reason.find("nondecreasing"), std::string::npos);
}

TEST(Integrability, LogarithmicPhiNotIntegrable) {
    PhiFunction phi;
    phi.c0 = 1.0;
    phi.eval = [](double s) { return std::log(s); };
    const auto r = check_integrability(phi, 3.0);
    EXPECT_FALSE(r.integrable);
}

TEST(CheckH1, TimeIndependentVacuous) {
    const auto model = example1();
    const StructureProfile profile(*model.phi, 1.0);
    const auto r = check_H1(model, profile, 0.0, small_box(), 100);
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
    ASSERT_EQ(r.notes.size(), 1u);
    EXPECT_NE(r.notes[0].find("t-independent"), std::string::npos);
}

TEST(CheckH1, Example4ProductTimeFactorCertified) {
    const auto model = example4(ScalarField::separable(1.0, 0.5, 1.0));  // (x^2 + 0.5)(1 + t)
    const StructureProfile profile(*model.phi, 4.0);
    const auto r = check_H1(model, profile, 4.0, small_box(), 3000);
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
    EXPECT_EQ(r.violations, 0);
}

TEST(CheckH1, Example4AdditiveTimeViolatedAtSmallA) {
    const auto model = example4(ScalarField::quadratic(1.0, 0.0, 1.0));  // x^2 + t
    const StructureProfile profile(*model.phi, 4.0);
    const auto r = check_H1(model, profile, 4.0, small_box(), 3000);
    ASSERT_EQ(r.verdict, Verdict::violated);
    for (const auto& w : r.witnesses) {
        const double a = w.x[0] * w.x[0] + w.t;
        EXPECT_LT(a, 1.0 + 1e-9);  // |p|^2 <= (H/4) H fails iff a H < 4
        const double H = model.H(w.x, w.t, w.p);
        const double gap = model.Hp(w.x, w.t, w.p).dot(w.p) - H;
        EXPECT_GT(std::abs(model.Ht(w.x, w.t, w.p)), profile.psi(H) * gap + 1e-8 * (1 + H));
    }
}

TEST(CheckH1, ThresholdBelowModelC1IsMisuse) {
    auto model = example4(ScalarField::separable(1.0, 0.5, 1.0));
    model.c1 = 4.0;
    const StructureProfile profile(*model.phi, 4.0);
    EXPECT_THROW(check_H1(model, profile, 1.0, small_box(), 10), Misuse);
}

TEST(CheckH2, Example1Coercive) {
    const auto model = example1(2);
    SampleBox K;
    const auto r = check_H2(model, {K}, {1, 2, 4, 8, 16, 32});
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
    EXPECT_NE(r.notes[0].find("32.000000->1023.000000"), std::string::npos);  // R^2 - 1
}

TEST(CheckH2, PositivePartCoefficientNotCoercive) {
    const auto model = example4(ScalarField::positive_squared(1.0));
    SampleBox K;
    K.x_lo = -1.0;
    K.x_hi = 1.0;
    const auto r = check_H2(model, {K}, {1, 2, 4, 8, 16});
    ASSERT_EQ(r.verdict, Verdict::violated);
    ASSERT_EQ(r.witnesses.size(), 1u);
    EXPECT_EQ(model.H(r.witnesses[0].x, r.witnesses[0].t, r.witnesses[0].p), 0.0);
    EXPECT_EQ(r.notes.back(), "not coercive on sample");
}

TEST(CheckH2, ExponentialCoercive) {
    const auto r = check_H2(make_exponential(2), {SampleBox{}}, {1, 2, 4, 8});
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
}

TEST(CheckH2, RejectsUnsortedRadii) {
    EXPECT_THROW(check_H2(example1(), {SampleBox{}}, {2, 1}), std::invalid_argument);
}

TEST(CheckH3, XIndependentVacuous) {
    const auto r = check_H3(example1(), small_box(), 100);
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
    EXPECT_NE(r.notes[0].find("x-independent"), std::string::npos);
}

TEST(CheckH3, LipschitzCoefficientsCertifiedForLargeGamma) {
    PowerNormParams p;
    p.dim = 2;
    p.alpha = ScalarField::sine(2.0, 0.5, 1.0, 0.0);
    p.c = VectorField{{ScalarField::sine(0.0, 0.5, 1.0, 0.0), ScalarField::constant(0.3)}};
    p.f = ScalarField::sine(2.0, 0.5, 2.0, 0.0);
    p.gamma = 20.0;
    p.c2 = 5.0;
    const auto model = make_power_norm(p);
    const auto r = check_H3(model, small_box(), 2000);
    EXPECT_EQ(r.verdict, Verdict::certified_on_sample);
}

TEST(CheckH3, QuarticSourceSmallGammaViolated) {
    PowerNormParams p;
    p.f = ScalarField::quartic(1.0, 1.0);
    p.gamma = 0.01;
    const auto model = make_power_norm(p);
    const auto r = check_H3(model, small_box(), 2000);
    ASSERT_EQ(r.verdict, Verdict::violated);
    for (const auto& w : r.witnesses) {
        const double H = model.H(w.x, w.t, w.p);
        const double gap = model.Hp(w.x, w.t, w.p).dot(w.p) - H;
        EXPECT_GT(model.Hx(w.x, w.t, w.p).norm(), 0.01 * (w.p.norm() + 1) * gap + 1e-8 * (1 + std::abs(H)));
    }
}

TEST(CheckH3, MissingGammaIsMisuse) {
    PowerNormParams p;
    p.f = ScalarField::quartic(1.0, 1.0);
    auto model = make_power_norm(p);
    model.gamma.reset();
    EXPECT_THROW(check_H3(model, small_box(), 10), Misuse);
}

TEST(Report, JsonCarriesVerdictStrings) {
    CertificationReport rep;
    rep.family = "power-norm";
    rep.hypotheses.push_back(check_H3(example1(), small_box(), 10));
    rep.integrability = check_integrability(phi_linear(1.0), 1.0);
    const auto j = to_json(rep);
    EXPECT_EQ(j["hypotheses"][0]["verdict"], "certified-on-sample");
    EXPECT_TRUE(j["integrability"]["integrable"].get<bool>());
    EXPECT_FALSE(rep.any_violation());
}
