#pragma once

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "conditions.hpp"
#include "config.hpp"
#include "transform.hpp"
#include "verify.hpp"

namespace hjreg {

inline constexpr const char* version = "0.1.0";

/// Process-level knobs that never enter any output.
struct RunContext {
    int workers = 1;
    bool skip_cert = false;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline nlohmann::ordered_json manifest(const ScenarioConfig& cfg, const std::string& command) {
    nlohmann::ordered_json j;
    j["tool"] = "hjreg";
    j["version"] = version;
    j["command"] = command;
    j["scenario"] = cfg.name;
    j["seed"] = cfg.checks.seed;
    j["libraries"] = {
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                             std::to_string(TOML_LIB_PATCH)},
    };
    return j;
}

/// Writes the resolved config and the manifest; every output directory
/// carries both.
inline void describe_run(const std::filesystem::path& dir, const ScenarioConfig& cfg, const std::string& command) {
    std::filesystem::create_directories(dir);
    write_json(dir / "config.resolved.json", to_json(cfg));
    write_json(dir / "manifest.json", manifest(cfg, command));
}

/// The family's closed-form phi, or the empirical envelope when none exists
/// or when the config asks for it.
inline PhiFunction resolve_phi(HamiltonianModel& model, const ChecksConfig& checks, std::vector<std::string>& notes) {
    if (checks.phi == "analytic" && model.phi) return *model.phi;
    std::vector<double> levels = checks.phi_levels;
    if (levels.empty()) {
        const double lo = std::max(model.c0, 1.0);
        for (int j = 0; j < 16; ++j) levels.push_back(lo * std::pow(1000.0, j / 15.0));
    }
    auto phi = extract_empirical_phi(model, levels, checks.box, std::max(1, checks.samples / static_cast<int>(levels.size())),
                                     checks.seed);
    if (phi.c0 != model.c0) {
        notes.push_back("c0 raised from " + std::to_string(model.c0) + " to the first empirical level " +
                        std::to_string(phi.c0));
        model.c0 = phi.c0;
    }
    notes.push_back("phi: " + phi.description + " over " + std::to_string(levels.size()) + " levels");
    for (double s : phi.unresolved_levels) notes.push_back("empirical phi: level " + std::to_string(s) + " unresolved");
    return phi;
}

inline double critical_level(const HamiltonianModel& model) { return std::max({model.c0, model.c1, model.c2}); }

/// Model, phi and profile as a scenario sees them.
struct Setup {
    HamiltonianModel model;
    std::vector<std::string> notes;
    std::optional<StructureProfile> profile;
};

inline Setup prepare(const ScenarioConfig& cfg) {
    Setup s;
    s.model = build_model(cfg.model);
    auto phi = resolve_phi(s.model, cfg.checks, s.notes);
    s.profile.emplace(std::move(phi), critical_level(s.model));
    return s;
}

inline CertificationReport certify(const ScenarioConfig& cfg, const Setup& setup, const RunContext& ctx = {}) {
    const auto& model = setup.model;
    const auto& profile = *setup.profile;
    const auto& c = cfg.checks;
    CheckOptions opts;
    opts.seed = c.seed;
    opts.workers = ctx.workers;
    opts.rel_tol = c.rel_tol;

    CertificationReport report;
    report.family = model.family;
    report.reference = model.reference;
    report.c0 = model.c0;
    report.c1 = model.c1;
    report.c2 = model.c2;
    report.kappa = model.kappa;
    report.gamma = model.gamma;
    report.phi_description = profile.phi().description;
    report.notes = model.notes;
    report.notes.insert(report.notes.end(), setup.notes.begin(), setup.notes.end());

    auto wants = [&](const std::string& h) { return std::find(c.hypotheses.begin(), c.hypotheses.end(), h) != c.hypotheses.end(); };
    if (wants("H0")) report.hypotheses.push_back(check_H0(model, profile.phi(), c.box, c.samples, opts));
    if (wants("H1")) report.hypotheses.push_back(check_H1(model, profile, model.c1, c.box, c.samples, opts));
    if (wants("H2")) {
        CoercivityOptions co;
        co.divergence_threshold = c.divergence_threshold;
        report.hypotheses.push_back(check_H2(model, {c.box}, c.radii, co, opts));
    }
    if (wants("H3")) {
        if (!model.x_independent() && !model.gamma) {
            HypothesisResult h;
            h.name = "H3";
            h.requested = c.samples;
            h.threshold = model.c2;
            h.notes.push_back("no gamma constant for an x-dependent model; set model.thresholds.gamma");
            report.hypotheses.push_back(h);
        } else {
            report.hypotheses.push_back(check_H3(model, c.box, c.samples, opts));
        }
    }
    if (c.g_lemma)
        for (auto& g : check_G_lemma(TransformedHamiltonian(model), profile, c.box, c.samples, opts))
            report.hypotheses.push_back(std::move(g));
    if (c.integrability) report.integrability = check_integrability(profile.phi());
    return report;
}

/// Builds everything from the config, writes certification.json and returns
/// the report.
inline CertificationReport run_certify(const ScenarioConfig& cfg, const RunContext& ctx = {}) {
    const std::filesystem::path dir = cfg.output.dir;
    describe_run(dir, cfg, "certify");
    const auto setup = prepare(cfg);
    auto report = certify(cfg, setup, ctx);
    write_json(dir / "certification.json", to_json(report));
    return report;
}

namespace detail {

inline EstimateEntry not_applicable(const std::string& check, const std::string& why) {
    EstimateEntry e;
    e.check = check;
    e.applicable = false;
    e.passed = true;
    e.worst = 0.0;
    e.extra = nlohmann::ordered_json::object();
    e.notes.push_back(why);
    return e;
}

inline void write_entry_csv(const std::filesystem::path& dir, const EstimateEntry& e) {
    if (!e.applicable) return;
    if (!e.rows.empty()) write_csv(dir / (e.check + ".csv"), e);
    if (!e.series.empty()) write_series_csv(dir / (e.check + "_" + e.series_name + ".csv"), e);
}

}  // namespace detail

/// Runs the requested estimate checks on a trace. A refined trace feeds the
/// gradient stability comparison when given.
inline EstimateReport verify_trace(const ScenarioConfig& cfg, const Setup& setup, const SolveTrace& trace,
                                   const SolveTrace* refined, const RunContext& ctx = {}) {
    const auto& c = cfg.checks;
    VerifyOptions vo;
    vo.C_tol = c.C_tol;
    vo.s_min_steps = c.s_min_steps;
    vo.eta_scale = c.eta_scale;
    vo.workers = ctx.workers;
    const auto& profile = *setup.profile;
    const NormalizedTrace nt(trace, profile, vo);
    auto report = make_report(nt);
    const double t_end = nt.elapsed(trace.steps());
    for (const auto& name : c.estimates) {
        if (name == "theorem_main") {
            report.entries.push_back(check_theorem_main(nt));
        } else if (name == "ut_bound") {
            report.entries.push_back(check_ut_bound(nt));
        } else if (name == "corollary_capped") {
            if (profile.c_star() > 0.0)
                report.entries.push_back(check_corollary_capped(nt));
            else
                report.entries.push_back(detail::not_applicable(name, "c* = 0: eta is defined on all of (0, inf)"));
        } else if (name == "corollary_decay") {
            if (profile.c_star() > 0.0)
                report.entries.push_back(detail::not_applicable(name, "c* > 0: decay needs eta on all of (0, inf)"));
            else if (t_end < 4.0)
                report.entries.push_back(detail::not_applicable(name, "trace ends before t = 4"));
            else
                report.entries.push_back(check_corollary_decay(nt));
        } else if (name == "gradient_bound") {
            GradientWindow w{c.gradient_t_lo, std::min(c.gradient_t_hi, t_end)};
            report.entries.push_back(check_gradient_bound(nt, setup.model, w, refined));
        }
    }
    return report;
}

inline SolveOptions solve_options(const ScenarioConfig& cfg, const RunContext& ctx) {
    SolveOptions so;
    so.scheme = cfg.time.scheme;
    so.cfl = cfg.time.cfl;
    so.theta_safety = cfg.time.theta_safety;
    so.workers = ctx.workers;
    return so;
}

struct ScenarioResult {
    std::optional<CertificationReport> certification;
    SolveTrace trace;
    EstimateReport estimates;
};

/// Certifies (unless skipped), solves, verifies and writes every artifact.
/// On failure a FAILED marker holding the message is left next to whatever
/// was already written, and the error is rethrown.
inline ScenarioResult run_solve_verify(const ScenarioConfig& cfg, const RunContext& ctx = {},
                                       const std::string& command = "run") {
    const std::filesystem::path dir = cfg.output.dir;
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / "FAILED");
    try {
        describe_run(dir, cfg, command);
        ScenarioResult out;
        const auto setup = prepare(cfg);
        if (!ctx.skip_cert) {
            out.certification = certify(cfg, setup, ctx);
            if (cfg.output.wants("json")) write_json(dir / "certification.json", to_json(*out.certification));
            if (out.certification->any_violation())
                throw Misuse("model is not certified (a hypothesis is violated); rerun with --skip-cert to solve anyway");
        }
        const auto so = solve_options(cfg, ctx);
        const auto u0 = build_initial(cfg);
        out.trace = solve(setup.model, u0, cfg.time.t_end, so);
        if (cfg.output.wants("trace")) write_trace(dir / "trace", out.trace);

        std::optional<SolveTrace> refined;
        const bool gradient = std::find(cfg.checks.estimates.begin(), cfg.checks.estimates.end(), "gradient_bound") !=
                              cfg.checks.estimates.end();
        if (gradient && cfg.checks.refine) {
            auto fine_cfg = cfg;
            fine_cfg.grid.n = 2 * cfg.grid.n;
            refined = solve(setup.model, build_initial(fine_cfg), cfg.time.t_end, so);
        }
        out.estimates = verify_trace(cfg, setup, out.trace, refined ? &*refined : nullptr, ctx);
        if (cfg.output.wants("json")) write_json(dir / "estimates.json", to_json(out.estimates));
        if (cfg.output.wants("csv"))
            for (const auto& e : out.estimates.entries) detail::write_entry_csv(dir, e);
        return out;
    } catch (const std::exception& e) {
        std::ofstream(dir / "FAILED") << e.what() << '\n';
        throw;
    }
}

/// Reruns the estimate checks on a stored trace.
inline EstimateReport run_verify_stored(const ScenarioConfig& cfg, const std::filesystem::path& trace_dir,
                                        const RunContext& ctx = {}) {
    const std::filesystem::path dir = cfg.output.dir;
    describe_run(dir, cfg, "verify");
    const auto setup = prepare(cfg);
    const auto trace = read_trace(trace_dir);
    if (trace.model_family != setup.model.family)
        throw Misuse("stored trace was produced by '" + trace.model_family + "', config names '" +
                     setup.model.family + "'");
    auto report = verify_trace(cfg, setup, trace, nullptr, ctx);
    if (cfg.output.wants("json")) write_json(dir / "estimates.json", to_json(report));
    if (cfg.output.wants("csv"))
        for (const auto& e : report.entries) detail::write_entry_csv(dir, e);
    return report;
}

/// phi, F, eta and psi tabulated for inspection.
inline nlohmann::ordered_json dump_profile(const ScenarioConfig& cfg) {
    using nlohmann::ordered_json;
    const auto setup = prepare(cfg);
    const auto& p = *setup.profile;
    const auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json("inf"); };
    ordered_json j;
    j["family"] = setup.model.family;
    j["phi"] = p.phi().description;
    j["c0"] = p.phi().c0;
    j["c_star"] = p.c_star();
    j["t_star"] = num(p.t_star());
    j["eta_domain_end"] = num(p.eta_domain_end());
    const double end = std::min(p.eta_domain_end(), 10.0);
    auto eta = ordered_json::array();
    for (int k = 0; k < 20; ++k) {
        const double s = end * std::pow(1e-3, 1.0 - (k + 0.5) / 20.0);
        const double e = p.eta(s);
        eta.push_back({{"s", s}, {"eta", e}, {"F_eta", p.F(e)}});
    }
    j["eta"] = eta;
    auto psi = ordered_json::array();
    const double lo = p.phi().c0 + p.phi()(p.phi().c0) + 1.0;
    for (int k = 0; k < 20; ++k) {
        const double tau = lo * std::pow(1e4, k / 19.0);
        psi.push_back({{"tau", tau}, {"psi", p.psi(tau)}, {"phi", p.phi()(tau)}});
    }
    j["psi"] = psi;
    j["notes"] = setup.notes;
    return j;
}

/// One default instance per family, for listing.
inline std::vector<HamiltonianModel> model_catalogue() {
    std::vector<HamiltonianModel> out;
    for (const auto& family : model_families()) {
        ModelConfig m;
        m.family = family;
        if (family == "power-norm-drift") m.b = VectorField::constant(0.5);
        if (family == "degenerate-drift") m.c = VectorField::constant(0.5);
        if (family == "scalar-coefficient") {
            m.a = ScalarField::separable(1.0, 0.5, 1.0);
            m.f = ScalarField::constant(0.0);
        }
        out.push_back(build_model(m));
    }
    return out;
}

}  // namespace hjreg
