#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hamiltonian.hpp"
#include "parallel.hpp"
#include "structure.hpp"

namespace hjreg {

/// "certified-on-sample" is the strongest claim sampling can support.
enum class Verdict { certified_on_sample, violated, unresolved };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::certified_on_sample: return "certified-on-sample";
        case Verdict::violated: return "violated";
        case Verdict::unresolved: return "unresolved";
    }
    return "?";
}

/// A sampled point at which `lhs <= rhs` (or `lhs >= rhs`, see `relation`)
/// failed by more than `tol`.
struct Witness {
    std::string inequality;
    std::string relation = "<=";
    Vec x = Vec::Zero();
    double t = 0.0;
    Vec p = Vec::Zero();
    std::optional<double> v;  ///< transformed checks only
    double H = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double tol = 0.0;
    std::size_t sample_index = 0;

    double excess() const { return relation == "<=" ? lhs - rhs : rhs - lhs; }
};

struct HypothesisResult {
    std::string name;
    Verdict verdict = Verdict::unresolved;
    int requested = 0;
    int sampled = 0;
    int resolved = 0;
    int violations = 0;
    double threshold = 0.0;
    std::vector<Witness> witnesses;
    std::vector<std::string> notes;
};

struct IntegrabilityResult {
    bool integrable = false;
    std::string reason;
    double A = 0.0;
    double F_A = 0.0;
    TailFit tail;
};

struct CheckOptions {
    std::uint64_t seed = 0;
    int workers = 1;
    double rel_tol = 1e-8;
    std::size_t max_witnesses = 8;
    /// Fraction of requested samples that must be resolved for a certification.
    double min_resolved_fraction = 0.9;
};

struct CertificationReport {
    std::string family;
    std::string reference;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, kappa = 0.0;
    std::optional<double> gamma;
    std::string phi_description;
    std::vector<HypothesisResult> hypotheses;
    std::optional<IntegrabilityResult> integrability;
    std::vector<std::string> notes;

    bool any_violation() const {
        return std::any_of(hypotheses.begin(), hypotheses.end(),
                           [](const auto& h) { return h.verdict == Verdict::violated; }) ||
               (integrability && !integrability->integrable);
    }
    const HypothesisResult* find(const std::string& name) const {
        for (const auto& h : hypotheses)
            if (h.name == name) return &h;
        return nullptr;
    }
};

namespace detail {

/// Per-sample outcome of a set of inequalities, reduced in sample order.
struct SampleOutcome {
    bool resolved = false;
    std::vector<Witness> failures;
};

inline void reduce_outcomes(HypothesisResult& result, const std::vector<SampleOutcome>& outcomes,
                            const CheckOptions& opts) {
    std::optional<Witness> worst;
    for (const auto& o : outcomes) {
        if (o.resolved) ++result.resolved;
        if (o.failures.empty()) continue;
        ++result.violations;
        for (const auto& w : o.failures) {
            if (result.witnesses.size() < opts.max_witnesses) result.witnesses.push_back(w);
            if (!worst || w.excess() - w.tol > worst->excess() - worst->tol) worst = w;
        }
    }
    // Keep the worst witness even when the cap dropped it.
    if (worst && std::none_of(result.witnesses.begin(), result.witnesses.end(), [&](const Witness& w) {
            return w.sample_index == worst->sample_index && w.inequality == worst->inequality;
        }))
        result.witnesses.push_back(*worst);
    if (result.violations > 0)
        result.verdict = Verdict::violated;
    else if (result.resolved >= static_cast<int>(std::ceil(opts.min_resolved_fraction * result.requested)))
        result.verdict = Verdict::certified_on_sample;
    else
        result.verdict = Verdict::unresolved;
}

inline Witness make_witness(std::string ineq, const SamplePoint& s, double H, double lhs, double rhs, double tol,
                            std::size_t index, std::string relation = "<=") {
    Witness w;
    w.inequality = std::move(ineq);
    w.relation = std::move(relation);
    w.x = s.x;
    w.t = s.t;
    w.p = s.p;
    w.H = H;
    w.lhs = lhs;
    w.rhs = rhs;
    w.tol = tol;
    w.sample_index = index;
    return w;
}

}  // namespace detail

/// (H0): on {H >= c0}, H_p.p - H >= phi(H) and |H_p| <= kappa (H_p.p - H).
inline HypothesisResult check_H0(const HamiltonianModel& model, const PhiFunction& phi, const SampleBox& box, int n,
                                 const CheckOptions& opts = {}) {
    if (phi.c0 != model.c0)
        throw Misuse("check_H0: phi.c0 = " + std::to_string(phi.c0) + " differs from model c0 = " +
                     std::to_string(model.c0));
    HypothesisResult result;
    result.name = "H0";
    result.requested = n;
    result.threshold = model.c0;
    const auto pts = sample_level_set(model, model.c0, box, n, opts.seed);
    result.sampled = static_cast<int>(pts.size());
    if (pts.empty()) {
        result.notes.push_back("level set {H >= c0} not reached in the sampling box");
        return result;
    }
    std::vector<detail::SampleOutcome> outcomes(pts.size());
    parallel_for(pts.size(), opts.workers, [&](std::size_t i) {
        const auto& s = pts[i];
        const auto g = model.Hp_checked(s.x, s.t, s.p);
        if (!g) return;
        const double H = model.H(s.x, s.t, s.p);
        const double gap = g->dot(s.p) - H;
        const double tol = opts.rel_tol * (1.0 + std::abs(H));
        auto& o = outcomes[i];
        o.resolved = true;
        const double bound = phi(H);
        if (gap < bound - tol)
            o.failures.push_back(detail::make_witness("H_p.p - H >= phi(H)", s, H, gap, bound, tol, i, ">="));
        const double norm = g->norm();
        if (norm > model.kappa * gap + tol)
            o.failures.push_back(detail::make_witness("|H_p| <= kappa (H_p.p - H)", s, H, norm, model.kappa * gap, tol, i));
    });
    detail::reduce_outcomes(result, outcomes, opts);
    return result;
}

/// Integral condition: int_A^inf ds / (s phi(s)) < inf, certified by the tail
/// fit behind compute_F. Monotonicity of phi is checked first.
inline IntegrabilityResult check_integrability(const PhiFunction& phi, std::optional<double> A = std::nullopt) {
    IntegrabilityResult out;
    out.A = A.value_or(std::max(2.0 * phi.c0, 1.0));
    const double bad = first_monotonicity_violation(phi);
    if (!std::isnan(bad)) {
        out.reason = "phi is not nondecreasing and nonnegative (first violation near s = " + std::to_string(bad) + ")";
        return out;
    }
    try {
        const auto F = compute_F(phi, out.A);
        out.integrable = true;
        out.F_A = F.value;
        out.tail = F.tail;
        out.reason = "tail bound " + F.tail.kind + " fit";
    } catch (const NonIntegrable& e) {
        out.reason = e.what();
    } catch (const DomainError& e) {
        out.reason = e.what();
    }
    return out;
}

/// (H1): on {H >= c1}, |H_t| <= psi(H) (H_p.p - H).
inline HypothesisResult check_H1(const HamiltonianModel& model, const StructureProfile& profile, double c1,
                                 const SampleBox& box, int n, const CheckOptions& opts = {}) {
    if (c1 < model.c1) throw Misuse("check_H1: threshold below the model's c1");
    HypothesisResult result;
    result.name = "H1";
    result.requested = n;
    result.threshold = c1;
    if (model.t_independent()) {
        result.verdict = Verdict::certified_on_sample;
        result.notes.push_back("vacuous: t-independent, H_t = 0");
        return result;
    }
    const auto pts = sample_level_set(model, c1, box, n, opts.seed + 1);
    result.sampled = static_cast<int>(pts.size());
    if (pts.empty()) {
        result.notes.push_back("level set {H >= c1} not reached in the sampling box");
        return result;
    }
    const double psi_left = profile.phi().c0 + profile.phi()(profile.phi().c0);
    std::vector<detail::SampleOutcome> outcomes(pts.size());
    parallel_for(pts.size(), opts.workers, [&](std::size_t i) {
        const auto& s = pts[i];
        const double H = model.H(s.x, s.t, s.p);
        if (!(H > psi_left)) return;
        const auto g = model.Hp_checked(s.x, s.t, s.p);
        if (!g) return;
        const double gap = g->dot(s.p) - H;
        const double tol = opts.rel_tol * (1.0 + std::abs(H));
        auto& o = outcomes[i];
        o.resolved = true;
        const double lhs = std::abs(model.Ht(s.x, s.t, s.p));
        const double rhs = profile.psi(H) * gap;
        if (lhs > rhs + tol) o.failures.push_back(detail::make_witness("|H_t| <= psi(H) (H_p.p - H)", s, H, lhs, rhs, tol, i));
    });
    detail::reduce_outcomes(result, outcomes, opts);
    if (result.resolved < result.sampled)
        result.notes.push_back(std::to_string(result.sampled - result.resolved) +
                               " samples below psi's domain or kink-adjacent (unresolved)");
    return result;
}

struct CoercivityOptions {
    double divergence_threshold = 100.0;
    int xt_samples = 256;
    int directions = 16;
};

/// (H2): min over (x,t) in each compact and |p| = R of H must increase in R
/// beyond some R0 and exceed the divergence threshold at the largest radius.
inline HypothesisResult check_H2(const HamiltonianModel& model, const std::vector<SampleBox>& compacts,
                                 const std::vector<double>& radii, const CoercivityOptions& copts = {},
                                 const CheckOptions& opts = {}) {
    for (std::size_t j = 1; j < radii.size(); ++j)
        if (!(radii[j] > radii[j - 1])) throw std::invalid_argument("check_H2: radii must increase");
    HypothesisResult result;
    result.name = "H2";
    result.threshold = copts.divergence_threshold;
    if (radii.size() < 2 || compacts.empty()) {
        result.notes.push_back("need at least two radii and one compact");
        return result;
    }
    const int ndir = model.dim == 1 ? 2 : copts.directions;
    bool all_ok = true;
    for (std::size_t k = 0; k < compacts.size(); ++k) {
        const auto xt = detail::sample_xt(model.dim, compacts[k], copts.xt_samples, opts.seed + 7 * k);
        std::vector<double> mins(radii.size());
        std::vector<SamplePoint> argmins(radii.size());
        parallel_for(radii.size(), opts.workers, [&](std::size_t j) {
            double best = std::numeric_limits<double>::infinity();
            SamplePoint arg;
            for (const auto& [x, t] : xt) {
                for (int d = 0; d < ndir; ++d) {
                    const double angle = 2.0 * std::numbers::pi * d / ndir;
                    const Vec p = model.dim == 1 ? Vec(d == 0 ? radii[j] : -radii[j], 0.0)
                                                 : Vec(radii[j] * std::cos(angle), radii[j] * std::sin(angle));
                    const double H = model.H(x, t, p);
                    if (H < best) {
                        best = H;
                        arg = {x, t, p};
                    }
                }
            }
            mins[j] = best;
            argmins[j] = arg;
        });
        result.sampled += static_cast<int>(xt.size() * radii.size()) * ndir;
        // Largest j0 such that mins is strictly increasing on [j0, last].
        std::size_t j0 = radii.size() - 1;
        while (j0 > 0 && mins[j0 - 1] < mins[j0]) --j0;
        const bool increasing_tail = j0 < radii.size() - 1;
        const bool diverges = mins.back() >= copts.divergence_threshold;
        std::string profile = "compact " + std::to_string(k) + ": min H at radii";
        for (std::size_t j = 0; j < radii.size(); ++j)
            profile += " " + std::to_string(radii[j]) + "->" + std::to_string(mins[j]);
        result.notes.push_back(profile);
        if (increasing_tail && diverges) continue;
        all_ok = false;
        const auto last = radii.size() - 1;
        Witness w;
        w.x = argmins[last].x;
        w.t = argmins[last].t;
        w.p = argmins[last].p;
        w.H = mins[last];
        w.sample_index = k;
        w.relation = ">=";
        if (!diverges) {
            w.inequality = "min_{|p|=R} H >= divergence threshold";
            w.lhs = mins[last];
            w.rhs = copts.divergence_threshold;
        } else {
            w.inequality = "min_{|p|=R} H increasing in R";
            w.lhs = mins[last];
            w.rhs = mins[last - 1];
        }
        result.witnesses.push_back(w);
        ++result.violations;
    }
    result.requested = result.sampled;
    result.resolved = result.sampled;
    result.verdict = all_ok ? Verdict::certified_on_sample : Verdict::violated;
    if (!all_ok) result.notes.push_back("not coercive on sample");
    return result;
}

/// (H3): on {H >= c2}, |H_x| <= gamma (|p| + 1)(H_p.p - H).
inline HypothesisResult check_H3(const HamiltonianModel& model, const SampleBox& box, int n,
                                 const CheckOptions& opts = {}) {
    HypothesisResult result;
    result.name = "H3";
    result.requested = n;
    result.threshold = model.c2;
    if (model.x_independent()) {
        result.verdict = Verdict::certified_on_sample;
        result.notes.push_back("vacuous: x-independent, H_x = 0");
        return result;
    }
    if (!model.gamma) throw Misuse("check_H3: model has no gamma constant");
    const double gamma = *model.gamma;
    const auto pts = sample_level_set(model, model.c2, box, n, opts.seed + 3);
    result.sampled = static_cast<int>(pts.size());
    if (pts.empty()) {
        result.notes.push_back("level set {H >= c2} not reached in the sampling box");
        return result;
    }
    std::vector<detail::SampleOutcome> outcomes(pts.size());
    parallel_for(pts.size(), opts.workers, [&](std::size_t i) {
        const auto& s = pts[i];
        const auto g = model.Hp_checked(s.x, s.t, s.p);
        if (!g) return;
        const double H = model.H(s.x, s.t, s.p);
        const double gap = g->dot(s.p) - H;
        const double tol = opts.rel_tol * (1.0 + std::abs(H));
        auto& o = outcomes[i];
        o.resolved = true;
        const double lhs = model.Hx(s.x, s.t, s.p).norm();
        const double rhs = gamma * (s.p.norm() + 1.0) * gap;
        if (lhs > rhs + tol)
            o.failures.push_back(detail::make_witness("|H_x| <= gamma (|p|+1)(H_p.p - H)", s, H, lhs, rhs, tol, i));
    });
    detail::reduce_outcomes(result, outcomes, opts);
    return result;
}

// JSON ---------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const Witness& w) {
    nlohmann::ordered_json j;
    j["inequality"] = w.inequality;
    j["relation"] = w.relation;
    j["x"] = {w.x[0], w.x[1]};
    j["t"] = w.t;
    j["p"] = {w.p[0], w.p[1]};
    if (w.v) j["v"] = *w.v;
    j["H"] = w.H;
    j["lhs"] = w.lhs;
    j["rhs"] = w.rhs;
    j["tol"] = w.tol;
    j["sample_index"] = w.sample_index;
    return j;
}

inline nlohmann::ordered_json to_json(const HypothesisResult& h) {
    nlohmann::ordered_json j;
    j["name"] = h.name;
    j["verdict"] = to_string(h.verdict);
    j["requested"] = h.requested;
    j["sampled"] = h.sampled;
    j["resolved"] = h.resolved;
    j["violations"] = h.violations;
    j["threshold"] = h.threshold;
    j["notes"] = h.notes;
    auto ws = nlohmann::ordered_json::array();
    for (const auto& w : h.witnesses) ws.push_back(to_json(w));
    j["witnesses"] = ws;
    return j;
}

inline nlohmann::ordered_json to_json(const IntegrabilityResult& r) {
    nlohmann::ordered_json j;
    j["integrable"] = r.integrable;
    j["reason"] = r.reason;
    j["A"] = r.A;
    j["F_A"] = r.F_A;
    j["tail_fit"] = {{"kind", r.tail.kind}, {"a", r.tail.a}, {"b", r.tail.b}, {"M", r.tail.M},
                     {"tail_bound", std::isfinite(r.tail.tail_bound) ? nlohmann::ordered_json(r.tail.tail_bound)
                                                                     : nlohmann::ordered_json(nullptr)}};
    return j;
}

inline nlohmann::ordered_json to_json(const CertificationReport& r) {
    nlohmann::ordered_json j;
    j["claim"] = "certified-on-sample means no violation among the sampled points; it is not a proof";
    j["family"] = r.family;
    j["reference"] = r.reference;
    j["thresholds"] = {{"c0", r.c0}, {"c1", r.c1}, {"c2", r.c2}};
    j["constants"] = {{"kappa", r.kappa},
                      {"gamma", r.gamma ? nlohmann::ordered_json(*r.gamma) : nlohmann::ordered_json(nullptr)}};
    j["phi"] = r.phi_description;
    if (r.integrability) j["integrability"] = to_json(*r.integrability);
    auto hs = nlohmann::ordered_json::array();
    for (const auto& h : r.hypotheses) hs.push_back(to_json(h));
    j["hypotheses"] = hs;
    j["notes"] = r.notes;
    return j;
}

}  // namespace hjreg
