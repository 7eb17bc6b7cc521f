#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "solver.hpp"
#include "structure.hpp"

namespace hjreg {

struct VerifyOptions {
    /// Scheme-error allowance: tol = C_tol (dx + dt) / s_min.
    double C_tol = 10.0;
    /// s_min = s_min_steps * dt.
    double s_min_steps = 10.0;
    int sweep_stride = 8;
    int workers = 1;
    /// Multiplies eta; 0.5 reproduces the constant printed for the power case.
    double eta_scale = 1.0;
};

/// Location of a residual on the trace: step indices and grid index.
struct ResidualSite {
    int step_t = -1;
    int step_s = -1;  ///< -1 when the check has no s
    std::size_t index = 0;
    double t = 0.0;
    double s = std::numeric_limits<double>::quiet_NaN();
    Vec x = Vec::Zero();
};

struct CsvRow {
    double t;
    double s;
    double residual;
    Vec x;
};

struct EstimateEntry {
    std::string check;
    bool applicable = true;
    bool passed = false;
    /// "min >= -tol" or "max <= tol".
    std::string sense;
    double worst = 0.0;
    double tol = 0.0;
    ResidualSite site;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
    std::vector<std::string> notes;
    std::vector<CsvRow> rows;
    /// Extra plot series (t, value), e.g. max |Du| or max (u_t)^- per step.
    std::string series_name;
    std::vector<std::pair<double, double>> series;

    /// Magnitude of the worst violation of the zero bound (0 if none).
    double worst_negative() const { return sense == "max <= tol" ? std::max(0.0, worst) : std::max(0.0, -worst); }
};

struct EstimateReport {
    int dim = 1, n = 0, steps = 0;
    double L = 0.0, dx = 0.0, dt = 0.0;
    std::string scheme;
    double shift = 0.0;
    double c_star = 0.0, t_star = 0.0;
    std::string phi;
    double C_tol = 0.0, s_min = 0.0, tol = 0.0;
    std::vector<EstimateEntry> entries;

    bool all_passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return !e.applicable || e.passed; });
    }
    const EstimateEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.check == name) return &e;
        return nullptr;
    }
};

/// Trace read through the normalization u - min(u): the bounded-below
/// solution shifted so its minimum over the stored steps is 0.
class NormalizedTrace {
public:
    NormalizedTrace(const SolveTrace& trace, const StructureProfile& profile, const VerifyOptions& opts = {})
        : trace_(trace), profile_(profile), opts_(opts) {
        if (trace.steps() < 1) throw std::invalid_argument("verify: trace has no steps");
        shift_ = std::numeric_limits<double>::infinity();
        for (const auto& f : trace.fields) shift_ = std::min(shift_, f.min());
        s_min_ = opts.s_min_steps * trace.dt;
        tol_ = opts.C_tol * (trace.dx + trace.dt) / s_min_;
        k_min_ = std::max(1, static_cast<int>(std::ceil(s_min_ / trace.dt - 1e-9)));
        const double t0 = trace.time(0);
        eta_.assign(static_cast<std::size_t>(trace.steps()) + 1, std::numeric_limits<double>::quiet_NaN());
        k_max_ = 0;
        for (int k = 1; k <= trace.steps(); ++k) {
            const double t = trace.time(k) - t0;
            if (!(t < profile.eta_domain_end()) || !(t < profile.t_star())) break;
            eta_[static_cast<std::size_t>(k)] = opts.eta_scale * profile.eta(t);
            k_max_ = k;
        }
    }

    const SolveTrace& trace() const { return trace_; }
    const StructureProfile& profile() const { return profile_; }
    const VerifyOptions& options() const { return opts_; }
    double shift() const { return shift_; }
    double s_min() const { return s_min_; }
    double tol() const { return tol_; }
    /// First step with t >= s_min.
    int k_min() const { return k_min_; }
    /// Last step with t < t* (and inside eta's domain).
    int k_max() const { return k_max_; }
    bool truncated() const { return k_max_ < trace_.steps(); }
    double elapsed(int k) const { return trace_.time(k) - trace_.time(0); }
    double eta_at(int k) const { return eta_[static_cast<std::size_t>(k)]; }
    double u(int k, std::size_t i) const { return trace_.fields[static_cast<std::size_t>(k)].values[i] - shift_; }
    double v(int k, std::size_t i) const { return -std::exp(-u(k, i)); }
    double ut(int k, std::size_t i) const {
        return (trace_.fields[static_cast<std::size_t>(k)].values[i] -
                trace_.fields[static_cast<std::size_t>(k - 1)].values[i]) /
               trace_.dt;
    }
    double vt(int k, std::size_t i) const { return (v(k, i) - v(k - 1, i)) / trace_.dt; }
    std::size_t size() const { return trace_.fields.front().size(); }
    Vec node(std::size_t i) const { return trace_.fields.front().node(i); }

private:
    const SolveTrace& trace_;
    const StructureProfile& profile_;
    VerifyOptions opts_;
    double shift_ = 0.0, s_min_ = 0.0, tol_ = 0.0;
    int k_min_ = 1, k_max_ = 0;
    std::vector<double> eta_;
};

namespace detail {

struct Extremum {
    double value = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
};

/// Minimum of f(i) over the grid, first index on ties.
template <class Fn>
Extremum grid_min(std::size_t n, Fn&& f) {
    Extremum e;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = f(i);
        if (r < e.value) {
            e.value = r;
            e.index = i;
        }
    }
    return e;
}

inline ResidualSite site(const NormalizedTrace& nt, int k, int j, std::size_t i) {
    ResidualSite s;
    s.step_t = k;
    s.step_s = j;
    s.index = i;
    s.t = nt.elapsed(k);
    if (j >= 0) s.s = nt.elapsed(j);
    s.x = nt.node(i);
    return s;
}

inline void note_truncation(const NormalizedTrace& nt, EstimateEntry& e) {
    if (nt.truncated())
        e.notes.push_back("steps with t >= " + std::to_string(nt.profile().t_star()) + " (t*) excluded");
    e.notes.push_back("s >= s_min = " + std::to_string(nt.s_min()) + "; eta(0+) = +inf makes s = 0 vacuous");
}

struct FormResult {
    Extremum u_form, v_form;
    int k_u = -1, k_v = -1;
    std::vector<CsvRow> rows;
    std::vector<std::pair<double, double>> negative_part;
};

/// min over steps in [k_lo, k_hi] and the grid of u_t + w(k) u and v_t + w(k).
inline FormResult ut_forms(const NormalizedTrace& nt, int k_lo, int k_hi, const std::function<double(int)>& weight) {
    FormResult out;
    if (k_hi < k_lo) return out;
    const auto count = static_cast<std::size_t>(k_hi - k_lo + 1);
    std::vector<Extremum> us(count), vs(count), uts(count);
    parallel_for(count, nt.options().workers, [&](std::size_t c) {
        const int k = k_lo + static_cast<int>(c);
        const double w = weight(k);
        us[c] = grid_min(nt.size(), [&](std::size_t i) { return nt.ut(k, i) + w * nt.u(k, i); });
        vs[c] = grid_min(nt.size(), [&](std::size_t i) { return nt.vt(k, i) + w; });
        uts[c] = grid_min(nt.size(), [&](std::size_t i) { return nt.ut(k, i); });
    });
    for (std::size_t c = 0; c < count; ++c) {
        const int k = k_lo + static_cast<int>(c);
        if (us[c].value < out.u_form.value) {
            out.u_form = us[c];
            out.k_u = k;
        }
        if (vs[c].value < out.v_form.value) {
            out.v_form = vs[c];
            out.k_v = k;
        }
        out.rows.push_back({nt.elapsed(k), std::numeric_limits<double>::quiet_NaN(), us[c].value, nt.node(us[c].index)});
        out.negative_part.emplace_back(nt.elapsed(k), std::max(0.0, -uts[c].value));
    }
    return out;
}

inline nlohmann::ordered_json site_json(const ResidualSite& s) {
    nlohmann::ordered_json j;
    j["step_t"] = s.step_t;
    j["t"] = s.t;
    if (s.step_s >= 0) {
        j["step_s"] = s.step_s;
        j["s"] = s.s;
    }
    j["index"] = s.index;
    j["x"] = {s.x[0], s.x[1]};
    return j;
}

}  // namespace detail

/// min over grid and stored pairs s_min <= s < t < t* of
/// v(x,t) - v(x,s) + (t - s) eta(s).
inline EstimateEntry check_theorem_main(const NormalizedTrace& nt) {
    EstimateEntry e;
    e.check = "theorem_main";
    e.sense = "min >= -tol";
    e.tol = nt.tol();
    detail::note_truncation(nt, e);
    std::vector<std::pair<int, int>> pairs;  // (s, t)
    for (int k = nt.k_min() + 1; k <= nt.k_max(); ++k) {
        for (double frac : {0.25, 0.5, 0.75}) {
            const int j = static_cast<int>(std::lround(frac * k));
            if (j >= nt.k_min() && j < k) pairs.emplace_back(j, k);
        }
        pairs.emplace_back(k - 1, k);
    }
    const int stride = std::max(1, nt.options().sweep_stride);
    std::vector<int> thin;
    for (int k = 0; k <= nt.k_max(); k += stride)
        if (k >= nt.k_min()) thin.push_back(k);
    for (std::size_t a = 0; a < thin.size(); ++a)
        for (std::size_t b = a + 1; b < thin.size(); ++b) pairs.emplace_back(thin[a], thin[b]);
    std::sort(pairs.begin(), pairs.end(), [](const auto& p, const auto& q) {
        return p.second != q.second ? p.second < q.second : p.first < q.first;
    });
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    e.extra["pairs"] = pairs.size();
    if (pairs.empty()) {
        e.applicable = false;
        e.notes.push_back("no (s, t) pairs inside [s_min, t*)");
        return e;
    }
    std::vector<detail::Extremum> mins(pairs.size());
    parallel_for(pairs.size(), nt.options().workers, [&](std::size_t c) {
        const auto [j, k] = pairs[c];
        const double gap = (nt.elapsed(k) - nt.elapsed(j)) * nt.eta_at(j);
        mins[c] = detail::grid_min(nt.size(), [&](std::size_t i) { return nt.v(k, i) - nt.v(j, i) + gap; });
    });
    detail::Extremum worst;
    std::size_t at = 0;
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        if (mins[c].value < worst.value) {
            worst = mins[c];
            at = c;
        }
        e.rows.push_back({nt.elapsed(pairs[c].second), nt.elapsed(pairs[c].first), mins[c].value, nt.node(mins[c].index)});
    }
    e.worst = worst.value;
    e.site = detail::site(nt, pairs[at].second, pairs[at].first, worst.index);
    e.passed = e.worst >= -e.tol;
    return e;
}

/// u_t + eta(t) u >= -tol and v_t + eta(t) >= -tol on steps with s_min <= t < t*.
inline EstimateEntry check_ut_bound(const NormalizedTrace& nt) {
    EstimateEntry e;
    e.check = "ut_bound";
    e.sense = "min >= -tol";
    e.tol = nt.tol();
    detail::note_truncation(nt, e);
    const auto r = detail::ut_forms(nt, nt.k_min(), nt.k_max(), [&](int k) { return nt.eta_at(k); });
    if (r.k_u < 0) {
        e.applicable = false;
        e.notes.push_back("no steps inside [s_min, t*)");
        return e;
    }
    e.worst = r.u_form.value;
    e.site = detail::site(nt, r.k_u, -1, r.u_form.index);
    e.extra["v_form"] = {{"worst", r.v_form.value},
                         {"passed", r.v_form.value >= -e.tol},
                         {"site", detail::site_json(detail::site(nt, r.k_v, -1, r.v_form.index))}};
    e.passed = e.worst >= -e.tol && r.v_form.value >= -e.tol;
    e.rows = r.rows;
    e.series_name = "max_ut_negative";
    e.series = r.negative_part;
    return e;
}

/// u_t + max(eta(t), eta(t*/2)) u >= -tol (and the v-form) on every step
/// with t >= s_min, including t > t*.
inline EstimateEntry check_corollary_capped(const NormalizedTrace& nt) {
    const auto& profile = nt.profile();
    if (!(profile.c_star() > 0.0)) throw Misuse("check_corollary_capped: needs c* > 0");
    EstimateEntry e;
    e.check = "corollary_capped";
    e.sense = "min >= -tol";
    e.tol = nt.tol();
    const int last = nt.trace().steps();
    std::vector<double> cap(static_cast<std::size_t>(last) + 1, 0.0);
    for (int k = nt.k_min(); k <= last; ++k)
        cap[static_cast<std::size_t>(k)] = nt.options().eta_scale * profile.eta_capped(nt.elapsed(k)).value;
    const auto r = detail::ut_forms(nt, nt.k_min(), last, [&](int k) { return cap[static_cast<std::size_t>(k)]; });
    if (r.k_u < 0) {
        e.applicable = false;
        e.notes.push_back("no steps with t >= s_min");
        return e;
    }
    e.worst = r.u_form.value;
    e.site = detail::site(nt, r.k_u, -1, r.u_form.index);
    e.extra["cap"] = nt.options().eta_scale * profile.eta(0.5 * profile.t_star());
    e.extra["v_form"] = {{"worst", r.v_form.value},
                         {"passed", r.v_form.value >= -e.tol},
                         {"site", detail::site_json(detail::site(nt, r.k_v, -1, r.v_form.index))}};
    e.passed = e.worst >= -e.tol && r.v_form.value >= -e.tol;
    e.rows = r.rows;
    e.series_name = "max_ut_negative";
    e.series = r.negative_part;
    return e;
}

/// d(t) = max (u_t)^- at t in {1, 2, 4}: nonincreasing within tol and
/// d(4) <= eta(4) max u(., 4) + tol.
inline EstimateEntry check_corollary_decay(const NormalizedTrace& nt) {
    const auto& profile = nt.profile();
    if (profile.c_star() > 0.0) throw Misuse("check_corollary_decay: needs c* = 0");
    const auto& trace = nt.trace();
    if (nt.elapsed(trace.steps()) < 4.0 - 1e-9) throw Misuse("check_corollary_decay: trace must reach t = 4");
    EstimateEntry e;
    e.check = "corollary_decay";
    e.sense = "max <= tol";
    e.tol = nt.tol();
    std::vector<double> d, bound;
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : {1.0, 2.0, 4.0}) {
        const int k = std::clamp(static_cast<int>(std::lround(t / trace.dt)), 1, trace.steps());
        double dk = 0.0, umax = 0.0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < nt.size(); ++i) {
            const double neg = std::max(0.0, -nt.ut(k, i));
            if (neg > dk) {
                dk = neg;
                at = i;
            }
            umax = std::max(umax, nt.u(k, i));
        }
        const double b = nt.options().eta_scale * profile.eta(nt.elapsed(k)) * umax;
        d.push_back(dk);
        bound.push_back(b);
        samples.push_back({{"t", nt.elapsed(k)}, {"d", dk}, {"eta_max_u", b}, {"index", at}});
        e.rows.push_back({nt.elapsed(k), std::numeric_limits<double>::quiet_NaN(), dk, nt.node(at)});
        if (dk - b > worst) {
            worst = dk - b;
            e.site = detail::site(nt, k, -1, at);
        }
    }
    const bool nonincreasing = d[1] <= d[0] + e.tol && d[2] <= d[1] + e.tol;
    e.worst = worst;
    e.extra["samples"] = samples;
    e.extra["nonincreasing"] = nonincreasing;
    e.passed = nonincreasing && d[2] <= bound[2] + e.tol && worst <= e.tol;
    return e;
}

struct GradientWindow {
    double t_lo = 0.0;  ///< 0: s_min
    double t_hi = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double max_gradient(const SolveTrace& trace, double t_lo, double t_hi) {
    double m = 0.0;
    for (int k = 1; k <= trace.steps(); ++k) {
        const double t = trace.time(k) - trace.time(0);
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
        for (const auto& g : discrete_gradient(trace.fields[static_cast<std::size_t>(k)])) m = std::max(m, g.norm());
    }
    return m;
}

}  // namespace detail

/// max over the window of H(x, t, Du) - eta(t) u <= tol, plus max |Du| and
/// its stability against a refined trace when one is given.
inline EstimateEntry check_gradient_bound(const NormalizedTrace& nt, const HamiltonianModel& model,
                                          GradientWindow window = {}, const SolveTrace* refined = nullptr) {
    EstimateEntry e;
    e.check = "gradient_bound";
    e.sense = "max <= tol";
    e.tol = nt.tol();
    if (!model.coercive) {
        e.applicable = false;
        e.notes.push_back("not applicable: model is not coercive");
        return e;
    }
    detail::note_truncation(nt, e);
    const double t_lo = std::max(window.t_lo, nt.s_min());
    std::vector<int> ks;
    for (int k = nt.k_min(); k <= nt.k_max(); ++k) {
        const double t = nt.elapsed(k);
        if (t >= t_lo - 1e-12 && t <= window.t_hi + 1e-12) ks.push_back(k);
    }
    if (ks.empty()) {
        e.applicable = false;
        e.notes.push_back("no steps inside the window");
        return e;
    }
    std::vector<detail::Extremum> mins(ks.size());
    std::vector<double> lips(ks.size());
    parallel_for(ks.size(), nt.options().workers, [&](std::size_t c) {
        const int k = ks[c];
        const auto& field = nt.trace().fields[static_cast<std::size_t>(k)];
        const auto grad = discrete_gradient(field);
        const double eta = nt.eta_at(k);
        const double t = field.time;
        mins[c] = detail::grid_min(nt.size(), [&](std::size_t i) {
            return -(model.H(field.node(i), t, grad[i]) - eta * nt.u(k, i));
        });
        double m = 0.0;
        for (const auto& g : grad) m = std::max(m, g.norm());
        lips[c] = m;
    });
    detail::Extremum worst;
    std::size_t at = 0;
    double lip = 0.0;
    for (std::size_t c = 0; c < ks.size(); ++c) {
        if (mins[c].value < worst.value) {
            worst = mins[c];
            at = c;
        }
        lip = std::max(lip, lips[c]);
        e.rows.push_back({nt.elapsed(ks[c]), std::numeric_limits<double>::quiet_NaN(), -mins[c].value,
                          nt.node(mins[c].index)});
        e.series.emplace_back(nt.elapsed(ks[c]), lips[c]);
    }
    e.worst = -worst.value;
    e.site = detail::site(nt, ks[at], -1, worst.index);
    e.extra["window"] = {nt.elapsed(ks.front()), nt.elapsed(ks.back())};
    e.extra["max_grad"] = lip;
    bool stable = true;
    if (refined) {
        const double fine = detail::max_gradient(*refined, nt.elapsed(ks.front()), nt.elapsed(ks.back()));
        const double ratio = fine / lip;
        stable = ratio >= 0.8 && ratio <= 1.25;
        e.extra["max_grad_refined"] = fine;
        e.extra["refinement_ratio"] = ratio;
        e.extra["stable"] = stable;
    } else {
        e.notes.push_back("no refined trace: Lipschitz stability not checked");
    }
    e.series_name = "max_grad";
    e.passed = e.worst <= e.tol && std::isfinite(lip) && stable;
    return e;
}

// Output --------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const EstimateEntry& e) {
    nlohmann::ordered_json j;
    j["check"] = e.check;
    j["applicable"] = e.applicable;
    j["passed"] = e.passed;
    j["sense"] = e.sense;
    j["worst"] = e.worst;
    j["tol"] = e.tol;
    if (e.applicable) j["site"] = detail::site_json(e.site);
    j["extra"] = e.extra;
    j["notes"] = e.notes;
    return j;
}

inline EstimateReport make_report(const NormalizedTrace& nt) {
    EstimateReport r;
    const auto& f = nt.trace().fields.front();
    r.dim = f.dim;
    r.n = f.n;
    r.L = f.L;
    r.steps = nt.trace().steps();
    r.dx = nt.trace().dx;
    r.dt = nt.trace().dt;
    r.scheme = to_string(nt.trace().scheme);
    r.shift = nt.shift();
    r.c_star = nt.profile().c_star();
    r.t_star = nt.profile().t_star();
    r.phi = nt.profile().phi().description;
    r.C_tol = nt.options().C_tol;
    r.s_min = nt.s_min();
    r.tol = nt.tol();
    return r;
}

inline nlohmann::ordered_json to_json(const EstimateReport& r) {
    nlohmann::ordered_json j;
    j["grid"] = {{"dim", r.dim}, {"n", r.n}, {"L", r.L}, {"dx", r.dx}, {"dt", r.dt}, {"steps", r.steps},
                 {"scheme", r.scheme}};
    j["normalization_shift"] = r.shift;
    j["profile"] = {{"c_star", r.c_star},
                    {"t_star", std::isfinite(r.t_star) ? nlohmann::ordered_json(r.t_star) : nlohmann::ordered_json("inf")},
                    {"phi", r.phi}};
    j["tolerance"] = {{"C_tol", r.C_tol}, {"s_min", r.s_min}, {"tol", r.tol}};
    auto es = nlohmann::ordered_json::array();
    for (const auto& e : r.entries) es.push_back(to_json(e));
    j["checks"] = es;
    j["all_passed"] = r.all_passed();
    return j;
}

/// Columns t, s, residual, x0, x1; s is empty when the check has none.
inline void write_csv(const std::filesystem::path& path, const EstimateEntry& e) {
    std::ofstream out(path);
    out << "t,s,residual,x0,x1\n";
    out << std::setprecision(17);
    for (const auto& r : e.rows) {
        out << r.t << ',';
        if (!std::isnan(r.s)) out << r.s;
        out << ',' << r.residual << ',' << r.x[0] << ',' << r.x[1] << '\n';
    }
}

inline void write_series_csv(const std::filesystem::path& path, const EstimateEntry& e) {
    std::ofstream out(path);
    out << "t," << e.series_name << '\n';
    out << std::setprecision(17);
    for (const auto& [t, v] : e.series) out << t << ',' << v << '\n';
}

}  // namespace hjreg
