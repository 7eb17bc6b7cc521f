#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hjreg/scenario.hpp"

using namespace hjreg;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg.toml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("hjreg_scenario_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ScenarioConfig small_run(const fs::path& dir) {
    auto cfg = parse_config(R"(
name = "small"
[model]
family = "power-norm"
m = 2.0
f = 1.0
[grid]
n = 64
[time]
t_end = 0.3
[checks]
samples = 500
estimates = ["theorem_main", "ut_bound", "gradient_bound"]
)");
    cfg.output.dir = dir.string();
    return cfg;
}

}  // namespace

TEST(Config, DefaultsAndFields) {
    const auto cfg = parse_config(R"(
[model]
family = "scalar-coefficient"
m = 3
a = { kind = "separable", coef = 1.0, offset = 0.5, time_rate = 1.0 }
[model.thresholds]
c1 = 3.0
gamma = 4
)");
    EXPECT_EQ(cfg.model.family, "scalar-coefficient");
    EXPECT_DOUBLE_EQ(cfg.model.m, 3.0);
    ASSERT_TRUE(cfg.model.a);
    EXPECT_EQ(cfg.model.a->kind(), ScalarField::Kind::separable);
    EXPECT_DOUBLE_EQ(cfg.model.a->value(Vec(1.0, 0.0), 1.0), 3.0);
    EXPECT_EQ(cfg.model.f.kind(), ScalarField::Kind::constant);
    EXPECT_DOUBLE_EQ(cfg.model.f.value(Vec::Zero(), 0.0), 0.0);
    EXPECT_EQ(*cfg.model.c1, 3.0);
    EXPECT_EQ(*cfg.model.gamma, 4.0);
    EXPECT_EQ(cfg.grid.n, 200);
    EXPECT_EQ(cfg.checks.samples, 10000);
    EXPECT_EQ(cfg.time.scheme, Scheme::lax_friedrichs);
    const auto model = build_model(cfg.model);
    EXPECT_EQ(model.c1, 3.0);
    EXPECT_FALSE(model.t_independent());
}

TEST(Config, DiagnosticsCarryLineAndKey) {
    EXPECT_NE(error_of("[grid]\nn = 100\nsize = 3\n").find("cfg.toml:3:1: key 'grid.size': unknown key"),
              std::string::npos);
    EXPECT_NE(error_of("[model]\nfamily = \"power-norm\"\nb = [1.0]\n").find("cfg.toml:3:1: key 'model.b'"),
              std::string::npos);
    EXPECT_NE(error_of("[model]\nfamily = \"quartic\"\n").find("'quartic' is not one of"), std::string::npos);
    EXPECT_NE(error_of("[grid]\nn = \"many\"\n").find("key 'grid.n': expected an integer"), std::string::npos);
    EXPECT_NE(error_of("[grid]\nn = 8\n").find("at least 16"), std::string::npos);
    EXPECT_NE(error_of("[model]\nfamily = \"power-norm\"\nf = { kind = \"sine\", period = 2 }\n")
                  .find("key 'model.f.period'"),
              std::string::npos);
    EXPECT_NE(error_of("[model\n").find("cfg.toml:1:"), std::string::npos);
    EXPECT_NE(error_of("[output]\nformats = [\"pdf\"]\n").find("output.formats[0]"), std::string::npos);
    EXPECT_NE(error_of("[checks]\nradii = [4.0, 2.0]\n").find("radii must increase"), std::string::npos);
    EXPECT_NE(error_of("[model]\nfamily = \"scalar-coefficient\"\n").find("needs 'a'"), std::string::npos);
    EXPECT_NE(error_of("[model]\ndim = 2\n[grid]\nN = 1\n").find("differs from model.dim"), std::string::npos);
    EXPECT_NE(error_of("[extras]\nx = 1\n").find("key 'extras'"), std::string::npos);
}

TEST(Config, DimensionFollowsEitherSection) {
    EXPECT_EQ(parse_config("[grid]\nN = 2\n").model.dim, 2);
    EXPECT_EQ(parse_config("[model]\ndim = 2\n").grid.N, 2);
}

TEST(Config, ExponentRejectedAtConstruction) {
    const auto cfg = parse_config("[model]\nfamily = \"power-norm\"\nm = 0.5\n");
    EXPECT_THROW(build_model(cfg.model), InvalidModel);
}

TEST(Config, ResolvedJsonIsComplete) {
    const auto j = to_json(parse_config("[model]\nfamily = \"exponential\"\n"));
    EXPECT_EQ(j["model"]["family"], "exponential");
    EXPECT_FALSE(j["model"].contains("m"));
    EXPECT_EQ(j["checks"]["gradient_window"][1], "t_end");
    EXPECT_EQ(j["output"]["formats"].size(), 3u);
}

TEST(Config, ShippedScenariosParse) {
    for (const auto& entry : fs::directory_iterator(HJREG_CONFIG_DIR)) {
        const auto cfg = load_config(entry.path());
        EXPECT_NO_THROW(build_model(cfg.model)) << entry.path();
    }
}

TEST(InitialData, Families) {
    auto cfg = parse_config("[initial]\nkind = \"distance\"\namplitude = 2.0\noffset = 1.0\n[grid]\nn = 20\n");
    auto u = build_initial(cfg);
    EXPECT_DOUBLE_EQ(u(0), 1.0);
    EXPECT_DOUBLE_EQ(u(10), 2.0);
    cfg.initial.kind = "cosine";
    u = build_initial(cfg);
    EXPECT_NEAR(u(10), 5.0, 1e-12);
    cfg.grid.N = 2;
    cfg.initial.kind = "distance";
    u = build_initial(cfg);
    EXPECT_NEAR(u(5, 5), 1.0 + 2.0 * std::sqrt(0.125), 1e-12);
}

TEST(Certify, Example1VacuousAndCertified) {
    const auto dir = scratch("ex1");
    auto cfg = parse_config("[model]\nfamily = \"power-norm\"\n[checks]\nsamples = 2000\n");
    cfg.output.dir = dir.string();
    const auto r = run_certify(cfg);
    for (const char* h : {"H0", "H2", "G0"}) EXPECT_EQ(r.find(h)->verdict, Verdict::certified_on_sample) << h;
    for (const char* h : {"H1", "H3"}) {
        EXPECT_EQ(r.find(h)->verdict, Verdict::certified_on_sample);
        EXPECT_EQ(r.find(h)->notes.front().rfind("vacuous", 0), 0u) << h;
    }
    EXPECT_FALSE(r.any_violation());
    EXPECT_TRUE(fs::exists(dir / "certification.json"));
    EXPECT_TRUE(fs::exists(dir / "config.resolved.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["command"], "certify");
    EXPECT_EQ(manifest["seed"], 0);
    EXPECT_FALSE(manifest.contains("workers"));
    fs::remove_all(dir);
}

TEST(Certify, Example4AdditiveViolatesH1) {
    auto cfg = load_config(fs::path(HJREG_CONFIG_DIR) / "example4-additive.toml");
    cfg.checks.samples = 2000;
    const auto setup = prepare(cfg);
    const auto r = certify(cfg, setup);
    const auto* h1 = r.find("H1");
    ASSERT_NE(h1, nullptr);
    EXPECT_EQ(h1->verdict, Verdict::violated);
    EXPECT_FALSE(h1->witnesses.empty());
    EXPECT_TRUE(r.any_violation());
}

TEST(Certify, MissingGammaIsUnresolved) {
    auto cfg = parse_config(R"(
[model]
family = "power-norm"
f = { kind = "sine", offset = 2.0, amp = 0.5, freq = 1.0 }
[checks]
hypotheses = ["H3"]
g_lemma = false
samples = 200
)");
    const auto r = certify(cfg, prepare(cfg));
    EXPECT_EQ(r.find("H3")->verdict, Verdict::unresolved);
}

TEST(Certify, EmpiricalPhiWhenRequested) {
    auto cfg = parse_config("[model]\nfamily = \"power-norm\"\n[checks]\nphi = \"empirical\"\nsamples = 1600\n");
    const auto setup = prepare(cfg);
    EXPECT_NE(setup.profile->phi().description.find("empirical"), std::string::npos);
    EXPECT_EQ(setup.model.c0, 1.0);
    EXPECT_FALSE(setup.notes.empty());
}

TEST(SolveVerify, WritesArtifactsAndIsDeterministic) {
    const auto a = scratch("run_a"), b = scratch("run_b");
    RunContext one, four;
    four.workers = 4;
    const auto ra = run_solve_verify(small_run(a), one);
    run_solve_verify(small_run(b), four);
    EXPECT_TRUE(ra.estimates.all_passed());
    for (const char* f : {"certification.json", "estimates.json", "theorem_main.csv", "ut_bound.csv",
                          "ut_bound_max_ut_negative.csv", "gradient_bound_max_grad.csv", "trace/meta.json"})
        EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_FALSE(fs::exists(a / "FAILED"));
    for (const char* f : {"certification.json", "estimates.json", "manifest.json", "theorem_main.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(SolveVerify, ExponentialBeyondTStar) {
    const auto dir = scratch("expo");
    auto cfg = load_config(fs::path(HJREG_CONFIG_DIR) / "exponential.toml");
    cfg.output.dir = dir.string();
    cfg.output.formats = {"json"};
    cfg.checks.samples = 1000;
    cfg.grid.n = 100;
    RunContext ctx;
    ctx.skip_cert = true;
    const auto r = run_solve_verify(cfg, ctx);
    EXPECT_FALSE(r.certification);
    const auto* th = r.estimates.find("theorem_main");
    ASSERT_NE(th, nullptr);
    EXPECT_LT(th->site.t, r.estimates.t_star);
    EXPECT_NE(th->notes.front().find("excluded"), std::string::npos);
    const auto* capped = r.estimates.find("corollary_capped");
    ASSERT_NE(capped, nullptr);
    EXPECT_TRUE(capped->applicable);
    EXPECT_TRUE(capped->passed);
    fs::remove_all(dir);
}

TEST(SolveVerify, InapplicableChecksAreReported) {
    const auto dir = scratch("na");
    auto cfg = small_run(dir);
    cfg.checks.estimates = {"corollary_capped", "corollary_decay"};
    cfg.output.formats = {"json"};
    RunContext ctx;
    ctx.skip_cert = true;
    const auto r = run_solve_verify(cfg, ctx);
    ASSERT_EQ(r.estimates.entries.size(), 2u);
    for (const auto& e : r.estimates.entries) {
        EXPECT_FALSE(e.applicable);
        EXPECT_FALSE(e.notes.empty());
    }
    fs::remove_all(dir);
}

TEST(SolveVerify, ViolationBlocksSolveAndLeavesMarker) {
    const auto dir = scratch("blocked");
    auto cfg = load_config(fs::path(HJREG_CONFIG_DIR) / "example4-additive.toml");
    cfg.checks.samples = 1000;
    cfg.output.dir = dir.string();
    EXPECT_THROW(run_solve_verify(cfg), Misuse);
    EXPECT_TRUE(fs::exists(dir / "FAILED"));
    EXPECT_TRUE(fs::exists(dir / "certification.json"));
    EXPECT_NE(slurp(dir / "FAILED").find("--skip-cert"), std::string::npos);
    fs::remove_all(dir);
}

TEST(SolveVerify, StoredTraceRoundTrip) {
    const auto dir = scratch("stored"), again = scratch("stored_verify");
    auto cfg = small_run(dir);
    cfg.checks.refine = false;
    const auto r = run_solve_verify(cfg);
    auto vcfg = cfg;
    vcfg.output.dir = again.string();
    const auto v = run_verify_stored(vcfg, dir / "trace");
    EXPECT_EQ(to_json(v).dump(), to_json(r.estimates).dump());
    auto other = vcfg;
    other.model.family = "exponential";
    EXPECT_THROW(run_verify_stored(other, dir / "trace"), Misuse);
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST(Profile, DumpTables) {
    const auto j = dump_profile(parse_config("[model]\nfamily = \"exponential\"\n"));
    EXPECT_EQ(j["eta"].size(), 20u);
    EXPECT_EQ(j["psi"].size(), 20u);
    for (const auto& row : j["eta"])
        EXPECT_NEAR(row["F_eta"].get<double>(), row["s"].get<double>(), 1e-8 * (1 + row["s"].get<double>()));
    EXPECT_GT(j["t_star"].get<double>(), 0.0);
}

TEST(Catalogue, EveryFamilyListedWithReference) {
    const auto models = model_catalogue();
    ASSERT_EQ(models.size(), model_families().size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        EXPECT_EQ(models[i].family, model_families()[i]);
        EXPECT_FALSE(models[i].reference.empty());
    }
}
