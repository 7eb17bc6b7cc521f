#include <CLI11.hpp>

#include <iostream>

#include "hjreg/scenario.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string trace;
    bool strict = false;
    bool skip_cert = false;
    int workers = 1;
    std::optional<std::uint64_t> seed;
};

hjreg::ScenarioConfig load(const Flags& f) {
    auto cfg = hjreg::load_config(f.config);
    if (!f.out.empty()) cfg.output.dir = f.out;
    if (f.seed) cfg.checks.seed = *f.seed;
    return cfg;
}

void print_verdicts(const hjreg::CertificationReport& r) {
    for (const auto& h : r.hypotheses) {
        std::cout << "  " << h.name << ": " << hjreg::to_string(h.verdict);
        if (!h.notes.empty() && h.notes.front().rfind("vacuous", 0) == 0)
            std::cout << " (" << h.notes.front() << ")\n";
        else
            std::cout << " (" << h.violations << " violations, " << h.resolved << "/" << h.requested << " resolved)\n";
    }
    if (r.integrability)
        std::cout << "  integrability: " << (r.integrability->integrable ? "yes" : "no") << " ("
                  << r.integrability->reason << ")\n";
}

void print_estimates(const hjreg::EstimateReport& r) {
    for (const auto& e : r.entries) {
        if (!e.applicable) {
            std::cout << "  " << e.check << ": not applicable\n";
            continue;
        }
        std::cout << "  " << e.check << ": " << (e.passed ? "pass" : "FAIL") << " worst = " << e.worst
                  << " tol = " << e.tol << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularity estimates for Hamilton-Jacobi equations: certification, solving, verification"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "scenario file (TOML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "output directory (overrides output.dir)");
        sub->add_option("--workers", f.workers, "parallel workers")->check(CLI::PositiveNumber);
        sub->add_option("--seed", f.seed, "sampling seed (overrides checks.seed)");
    };

    auto* certify = app.add_subcommand("certify", "sample the structural hypotheses and the transformed ones");
    add_common(certify);
    certify->add_flag("--strict", f.strict, "exit 1 on any violated verdict");

    auto* solve = app.add_subcommand("solve", "solve and store the trace only");
    add_common(solve);
    solve->add_flag("--skip-cert", f.skip_cert, "solve even if certification reports a violation");

    auto* verify = app.add_subcommand("verify", "run the estimate checks on a stored trace");
    add_common(verify);
    verify->add_option("--trace", f.trace, "trace directory written by solve or run")->required()->check(CLI::ExistingDirectory);
    verify->add_flag("--strict", f.strict, "exit 1 when a check fails");

    auto* run = app.add_subcommand("run", "certify, solve and verify");
    add_common(run);
    run->add_flag("--strict", f.strict, "exit 1 on a violation or a failed check");
    run->add_flag("--skip-cert", f.skip_cert, "skip certification");

    app.add_subcommand("list-models", "built-in Hamiltonian families");

    auto* profile = app.add_subcommand("dump-profile", "tabulate eta, F and psi for a scenario's phi");
    add_common(profile);

    CLI11_PARSE(app, argc, argv);

    try {
        hjreg::RunContext ctx;
        ctx.workers = f.workers;
        ctx.skip_cert = f.skip_cert;

        if (app.got_subcommand("list-models")) {
            for (const auto& m : hjreg::model_catalogue())
                std::cout << m.family << "\t" << m.reference << '\n';
            return 0;
        }
        const auto cfg = load(f);

        if (app.got_subcommand("certify")) {
            const auto report = hjreg::run_certify(cfg, ctx);
            std::cout << cfg.name << ": certification written to " << cfg.output.dir << '\n';
            print_verdicts(report);
            return f.strict && report.any_violation() ? 1 : 0;
        }
        if (app.got_subcommand("solve")) {
            auto c = cfg;
            c.checks.estimates.clear();
            c.output.formats = {"trace"};
            const auto r = hjreg::run_solve_verify(c, ctx, "solve");
            std::cout << cfg.name << ": " << r.trace.steps() << " steps, dt = " << r.trace.dt << ", trace in "
                      << cfg.output.dir << "/trace\n";
            return 0;
        }
        if (app.got_subcommand("verify")) {
            const auto report = hjreg::run_verify_stored(cfg, f.trace, ctx);
            print_estimates(report);
            return f.strict && !report.all_passed() ? 1 : 0;
        }
        if (app.got_subcommand("run")) {
            const auto r = hjreg::run_solve_verify(cfg, ctx);
            std::cout << cfg.name << ": outputs in " << cfg.output.dir << '\n';
            if (r.certification) print_verdicts(*r.certification);
            print_estimates(r.estimates);
            return f.strict && !r.estimates.all_passed() ? 1 : 0;
        }
        if (app.got_subcommand("dump-profile")) {
            const auto j = hjreg::dump_profile(cfg);
            if (!f.out.empty()) {
                std::filesystem::create_directories(f.out);
                hjreg::write_json(std::filesystem::path(f.out) / "profile.json", j);
            }
            std::cout << j.dump(2) << '\n';
            return 0;
        }
    } catch (const hjreg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
