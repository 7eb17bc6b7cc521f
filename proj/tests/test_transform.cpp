#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hjreg/transform.hpp"

using namespace hjreg;

namespace {

HamiltonianModel quadratic_free() {
    PowerNormParams p;
    p.dim = 2;
    p.f = ScalarField::constant(0.0);
    p.a = ScalarField::constant(1.0);
    return make_power_norm(p);
}

SampleBox box20() {
    SampleBox b;
    b.p_max = 20.0;
    return b;
}

}  // namespace

TEST(ExpTransform, ZeroMapsToMinusOne) {
    auto u = GridField::zeros(1, 16, 1.0);
    const auto v = u_to_v(u);
    for (double x : v.values) EXPECT_EQ(x, -1.0);
    for (double x : v_to_u(v).values) EXPECT_EQ(x, 0.0);
}

TEST(ExpTransform, LogTwoMapsToMinusHalf) {
    auto u = GridField::zeros(1, 16, 1.0);
    for (auto& x : u.values) x = std::log(2.0);
    for (double x : u_to_v(u).values) EXPECT_NEAR(x, -0.5, 1e-15);
    auto v = GridField::zeros(1, 16, 1.0);
    for (auto& x : v.values) x = -0.5;
    for (double x : v_to_u(v).values) EXPECT_NEAR(x, std::log(2.0), 1e-15);
}

TEST(ExpTransform, RoundTripOnRandomFields) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 50.0);
    auto u = GridField::zeros(2, 32, 2.0);
    for (auto& x : u.values) x = dist(rng);
    const auto back = v_to_u(u_to_v(u));
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(back.values[k], u.values[k], 1e-12 * (1 + u.values[k]));
    auto v = u_to_v(u);
    const auto again = u_to_v(v_to_u(v));
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(again.values[k], v.values[k], 1e-15);
}

TEST(ExpTransform, Monotone) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(0.0, 5.0);
    auto u = GridField::zeros(1, 64, 1.0);
    auto w = u;
    for (std::size_t k = 0; k < u.size(); ++k) {
        u.values[k] = dist(rng);
        w.values[k] = u.values[k] + dist(rng);
    }
    const auto vu = u_to_v(u), vw = u_to_v(w);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_LE(vu.values[k], vw.values[k]);
}

TEST(ExpTransform, Errors) {
    auto u = GridField::zeros(1, 16, 1.0);
    u.values[3] = -0.25;
    try {
        u_to_v(u);
        FAIL();
    } catch (const NormalizationError& e) {
        EXPECT_NE(std::string(e.what()).find("-0.25"), std::string::npos);
    }
    u.values[3] = 700.0;
    EXPECT_THROW(u_to_v(u), NormalizationError);
    u.values[3] = 690.0;
    EXPECT_LT(u_to_v(u).values[3], 0.0);

    auto v = GridField::zeros(1, 16, 1.0);
    for (auto& x : v.values) x = -0.5;
    v.values[0] = 0.0;
    EXPECT_THROW(v_to_u(v), NormalizationError);
    v.values[0] = -1.5;
    EXPECT_THROW(v_to_u(v), NormalizationError);
}

TEST(TransformedH, ReducesToBaseAtMinusOne) {
    PowerNormParams p;
    p.dim = 2;
    p.alpha = ScalarField::sine(2.0, 0.5, 1.0, 0.3);
    p.f = ScalarField::quartic(0.01, 1.0);
    const TransformedHamiltonian tr(make_power_norm(p));
    for (const auto& s : sample_level_set(tr.base, -INFINITY, SampleBox{}, 200, 1)) {
        EXPECT_EQ(tr.G(s.x, s.t, -1.0, s.p), tr.base.H(s.x, s.t, s.p));
    }
}

TEST(TransformedH, QuadraticAtMinusHalf) {
    const TransformedHamiltonian tr(quadratic_free());
    const Vec x = Vec::Zero(), p(1, 0);
    EXPECT_NEAR(tr.G(x, 0, -0.5, p), 2.0, 1e-14);
    EXPECT_NEAR(tr.Gv(x, 0, -0.5, p), 4.0, 1e-14);
    const double h = 1e-6;
    const double fd = (tr.G(x, 0, -0.5 + h, p) - tr.G(x, 0, -0.5 - h, p)) / (2 * h);
    EXPECT_NEAR(fd, 4.0, 1e-6);
    EXPECT_THROW(tr.G(x, 0, 0.0, p), OutOfDomain);
    EXPECT_THROW(tr.G(x, 0, -1.5, p), OutOfDomain);
}

TEST(TransformedH, ChainRuleMatchesFiniteDifferences) {
    PowerNormParams p;
    p.dim = 2;
    p.m = 2.5;
    p.alpha = ScalarField::sine(2.0, 0.5, 1.0, 0.3);
    p.f = ScalarField::separable(0.05, 1.0, 0.5);
    const TransformedHamiltonian tr(make_power_norm(p));
    SampleBox box;
    box.p_max = 3.0;
    Halton hv(2);
    for (const auto& s : sample_level_set(tr.base, -INFINITY, box, 300, 2)) {
        const double v = -(0.2 + 0.8 * hv.next()[0]);
        const double G = tr.G(s.x, s.t, v, s.p);
        const double hvs = 1e-6 * std::abs(v);
        const double fd_v = (tr.G(s.x, s.t, v + hvs, s.p) - tr.G(s.x, s.t, v - hvs, s.p)) / (2 * hvs);
        const double scale = 1e-5 * (1.0 + std::abs(G) + std::abs(fd_v));
        EXPECT_NEAR(tr.Gv(s.x, s.t, v, s.p), fd_v, scale);
        const Vec gp = tr.Gp(s.x, s.t, v, s.p);
        for (int i = 0; i < 2; ++i) {
            Vec e = Vec::Zero();
            e[i] = 1e-6 * (1.0 + s.p.norm());
            const double fd = (tr.G(s.x, s.t, v, s.p + e) - tr.G(s.x, s.t, v, s.p - e)) / (2 * e[i]);
            EXPECT_NEAR(gp[i], fd, 1e-5 * (1.0 + std::abs(fd)));
        }
        // G <= H(-p/v) since -v <= 1 (only meaningful where H >= 0).
        const double Hq = tr.base.H(s.x, s.t, -s.p / v);
        if (Hq >= 0) {
            EXPECT_LE(G, Hq + 1e-12 * (1 + Hq));
        }
    }
}

TEST(TransformedH, PowerNormScaling) {
    PowerNormParams p;
    p.dim = 2;
    p.m = 3.0;
    p.alpha = ScalarField::sine(2.0, 0.5, 1.0, 0.0);
    const TransformedHamiltonian tr(make_power_norm(p));
    const Vec x(0.7, -0.2), p0(0.3, 0.4);
    const double v = -0.4, lambda = 2.5, al = p.alpha.value(x, 0.0), f = p.f.value(x, 0.0);
    const double expected = -v * (std::pow(al * lambda * p0.norm() / -v, 3.0) - f);
    EXPECT_NEAR(tr.G(x, 0.0, v, lambda * p0), expected, 1e-12 * expected);
    // gradient term scales like |lambda/v|^{m-1}
    const double base_term = tr.G(x, 0.0, -1.0, p0) + f;
    EXPECT_NEAR(tr.G(x, 0.0, v, lambda * p0) - (-v) * (-f), -v * base_term * std::pow(lambda / -v, 3.0),
                1e-12 * expected);
}

TEST(GLemma, Example1AllCertified) {
    PowerNormParams p;
    p.dim = 2;
    const auto model = make_power_norm(p);
    const StructureProfile profile(*model.phi, 1.0);
    const auto rs = check_G_lemma(TransformedHamiltonian(model), profile, box20(), 2000);
    ASSERT_EQ(rs.size(), 3u);
    for (const auto& r : rs) EXPECT_EQ(r.verdict, Verdict::certified_on_sample) << r.name;
    EXPECT_NE(rs[1].notes[0].find("vacuous"), std::string::npos);
}

TEST(GLemma, PsiTransferFromH1) {
    // (x^2 + 0.5)(1 + t)|p|^2: (H1) holds above 4, so (G1) must hold above 4.
    PowerNormParams p;
    p.a = ScalarField::separable(1.0, 0.5, 1.0);
    p.f = ScalarField::constant(0.0);
    p.coercive = false;
    auto model = make_power_norm(p);
    const StructureProfile profile(*model.phi, 4.0);
    ASSERT_EQ(check_H1(model, profile, 4.0, box20(), 2000).verdict, Verdict::certified_on_sample);
    const auto rs = check_G_lemma(TransformedHamiltonian(model), profile, box20(), 2000);
    EXPECT_EQ(rs[1].verdict, Verdict::certified_on_sample);
    EXPECT_GT(rs[1].resolved, 1500);
    // |H_p|/(H_p.p - H) = m/|p| is unbounded where a is large and |p| small,
    // so no uniform kappa exists for this family.
    EXPECT_EQ(rs[0].verdict, Verdict::violated);
    EXPECT_EQ(rs[0].witnesses[0].inequality, "|G_p| <= kappa G_v");
}

TEST(GLemma, WitnessesCarryV) {
    PowerNormParams p;
    p.dim = 1;
    auto model = make_power_norm(p);
    model.kappa = 0.1;
    const StructureProfile profile(*model.phi, 1.0);
    const TransformedHamiltonian tr(model);
    const auto rs = check_G_lemma(tr, profile, box20(), 1000);
    ASSERT_EQ(rs[0].verdict, Verdict::violated);
    for (const auto& w : rs[0].witnesses) {
        ASSERT_TRUE(w.v.has_value());
        EXPECT_GE(*w.v, -1.0);
        EXPECT_LE(*w.v, -1e-3);
        const double G = tr.G(w.x, w.t, *w.v, w.p);
        EXPECT_GE(G, 1.0 - 1e-9);
        EXPECT_GT(tr.Gp(w.x, w.t, *w.v, w.p).norm(), 0.1 * tr.Gv(w.x, w.t, *w.v, w.p) + 1e-8 * (1 + G));
    }
}

TEST(GridIo, RoundTripBinaryAndSidecar) {
    auto f = GridField::from_function(2, 16, 3.0, [](const Vec& x) { return std::sin(x[0]) + 0.1 * x[1]; }, 0.75);
    const auto dir = std::filesystem::temp_directory_path() / "hjreg_grid_io";
    std::filesystem::create_directories(dir);
    write_field(dir / "u.field", f);
    EXPECT_EQ(std::filesystem::file_size(dir / "u.field"), 16u * 16u * 8u);
    const auto g = read_field(dir / "u.field");
    EXPECT_EQ(g.dim, 2);
    EXPECT_EQ(g.n, 16);
    EXPECT_EQ(g.L, 3.0);
    EXPECT_EQ(g.time, 0.75);
    EXPECT_EQ(g.values, f.values);
    std::filesystem::remove_all(dir);
}

TEST(GridIo, PeriodicIndexing) {
    auto f = GridField::from_function(1, 16, 1.0, [](const Vec& x) { return x[0]; });
    EXPECT_EQ(f(17), f(1));
    EXPECT_EQ(f(-1), f(15));
    EXPECT_THROW(GridField::zeros(1, 8, 1.0), std::invalid_argument);
}
