#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grid.hpp"
#include "hamiltonian.hpp"
#include "parallel.hpp"

namespace hjreg {

enum class Scheme { lax_friedrichs, tvd_rk2 };

inline const char* to_string(Scheme s) { return s == Scheme::lax_friedrichs ? "lax-friedrichs" : "tvd-rk2"; }

inline Scheme parse_scheme(const std::string& s) {
    if (s == "lax-friedrichs") return Scheme::lax_friedrichs;
    if (s == "tvd-rk2") return Scheme::tvd_rk2;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

using Theta = std::array<double, 2>;

inline double cfl_number(int dim, double dt, double dx, const Theta& theta) {
    return dt * (theta[0] + (dim == 2 ? theta[1] : 0.0)) / dx;
}

namespace detail {

struct Stencil {
    Vec minus = Vec::Zero();
    Vec plus = Vec::Zero();
};

inline Stencil one_sided(const GridField& u, std::size_t k) {
    const auto [i, j] = u.ij(k);
    const double h = u.dx();
    Stencil s;
    s.minus[0] = (u(i, j) - u(i - 1, j)) / h;
    s.plus[0] = (u(i + 1, j) - u(i, j)) / h;
    if (u.dim == 2) {
        s.minus[1] = (u(i, j) - u(i, j - 1)) / h;
        s.plus[1] = (u(i, j + 1) - u(i, j)) / h;
    }
    return s;
}

}  // namespace detail

/// Per-axis bounds of the one-sided differences of u.
struct GradientRange {
    Vec lo = Vec::Zero();
    Vec hi = Vec::Zero();
};

inline GradientRange gradient_range(const GridField& u) {
    GradientRange r;
    r.lo.setConstant(std::numeric_limits<double>::infinity());
    r.hi.setConstant(-std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto s = detail::one_sided(u, k);
        r.lo = r.lo.cwiseMin(s.minus).cwiseMin(s.plus);
        r.hi = r.hi.cwiseMax(s.minus).cwiseMax(s.plus);
    }
    if (u.dim == 1) r.lo[1] = r.hi[1] = 0.0;
    return r;
}

/// safety * max |dH/dp_axis| over grid nodes, times {t0, t1} and a lattice
/// (5 points per axis) spanning the current gradient range.
inline Theta estimate_theta(const HamiltonianModel& model, const GridField& u, double t0, double t1,
                            double safety = 1.2, int workers = 1) {
    const auto range = gradient_range(u);
    constexpr int lattice = 5;
    std::vector<Vec> ps;
    const int ny = u.dim == 2 ? lattice : 1;
    for (int a = 0; a < lattice; ++a)
        for (int b = 0; b < ny; ++b) {
            Vec p = Vec::Zero();
            p[0] = range.lo[0] + (range.hi[0] - range.lo[0]) * a / (lattice - 1);
            if (u.dim == 2) p[1] = range.lo[1] + (range.hi[1] - range.lo[1]) * b / (lattice - 1);
            ps.push_back(p);
        }
    const bool x_free = model.x_independent();
    const std::size_t nodes = x_free ? 1 : u.size();
    std::vector<Vec> local(nodes, Vec::Zero());
    parallel_for(nodes, workers, [&](std::size_t k) {
        const Vec x = u.node(k);
        Vec m = Vec::Zero();
        for (double t : {t0, t1})
            for (const auto& p : ps) m = m.cwiseMax(model.Hp(x, t, p).cwiseAbs());
        local[k] = m;
    });
    Vec m = Vec::Zero();
    for (const auto& l : local) m = m.cwiseMax(l);
    return {safety * m[0], u.dim == 2 ? safety * m[1] : 0.0};
}

/// One forward-Euler Lax-Friedrichs step:
/// u - dt [H(x, t, (D-u + D+u)/2) - sum theta/2 (D+u - D-u)].
inline GridField lf_step(const GridField& u, const HamiltonianModel& model, double dt, const Theta& theta,
                         int workers = 1, double cfl_limit = 0.9) {
    const double c = cfl_number(u.dim, dt, u.dx(), theta);
    if (c > cfl_limit * (1.0 + 1e-12))
        throw CflViolation("lf_step: CFL number " + std::to_string(c) + " exceeds " + std::to_string(cfl_limit));
    GridField next = u;
    next.time = u.time + dt;
    parallel_for(u.size(), workers, [&](std::size_t k) {
        const auto s = detail::one_sided(u, k);
        const Vec p = 0.5 * (s.minus + s.plus);
        double visc = 0.5 * theta[0] * (s.plus[0] - s.minus[0]);
        if (u.dim == 2) visc += 0.5 * theta[1] * (s.plus[1] - s.minus[1]);
        next.values[k] = u.values[k] - dt * (model.H(u.node(k), u.time, p) - visc);
    });
    for (std::size_t k = 0; k < next.size(); ++k)
        if (!std::isfinite(next.values[k]))
            throw NonFinite("lf_step: non-finite value at index " + std::to_string(k) + " (t = " +
                            std::to_string(next.time) + ")");
    return next;
}

struct SolveOptions {
    Scheme scheme = Scheme::lax_friedrichs;
    /// Fixed viscosity per axis; unset means adaptive estimation.
    std::optional<Theta> fixed_theta;
    double theta_safety = 1.2;
    double theta_floor = 1e-8;
    int theta_refresh = 16;
    double cfl = 0.9;
    /// Upper bound on dt; 0 means dx.
    double dt_max = 0.0;
    /// Extra factor dividing the initial CFL step, leaving room for theta growth.
    double dt_headroom = 1.0;
    int workers = 1;
};

struct SolveTrace {
    std::vector<GridField> fields;
    double dx = 0.0;
    double dt = 0.0;
    Theta theta{0.0, 0.0};  ///< last viscosity used
    Theta theta_initial{0.0, 0.0};
    double max_cfl = 0.0;
    Scheme scheme = Scheme::lax_friedrichs;
    std::string model_family;

    int steps() const { return static_cast<int>(fields.size()) - 1; }
    double time(int k) const { return fields.at(static_cast<std::size_t>(k)).time; }
};

/// Marches u0 to t_end with constant dt chosen from the CFL condition at t = 0.
inline SolveTrace solve(const HamiltonianModel& model, const GridField& u0, double t_end,
                        const SolveOptions& opts = {}) {
    if (!(t_end > 0.0)) throw std::invalid_argument("solve: t_end must be positive");
    if (u0.dim != model.dim) throw std::invalid_argument("solve: field and model dimensions differ");
    u0.validate();
    const double dx = u0.dx();
    auto clamp_theta = [&](Theta th) {
        th[0] = std::max(th[0], opts.theta_floor);
        th[1] = u0.dim == 2 ? std::max(th[1], opts.theta_floor) : 0.0;
        return th;
    };
    Theta theta = clamp_theta(opts.fixed_theta ? *opts.fixed_theta
                                               : estimate_theta(model, u0, u0.time, u0.time + dx,
                                                                opts.theta_safety, opts.workers));
    const double sum = theta[0] + (u0.dim == 2 ? theta[1] : 0.0);
    const double dt_cfl = opts.cfl * dx / sum / opts.dt_headroom;
    const double dt_cap = std::min(opts.dt_max > 0.0 ? opts.dt_max : dx, dt_cfl);
    const int steps = static_cast<int>(std::ceil(t_end / dt_cap - 1e-9));
    const double dt = t_end / steps;

    SolveTrace trace;
    trace.dx = dx;
    trace.dt = dt;
    trace.scheme = opts.scheme;
    trace.theta_initial = theta;
    trace.model_family = model.family;
    trace.fields.reserve(static_cast<std::size_t>(steps) + 1);
    trace.fields.push_back(u0);
    const double t0 = u0.time;
    for (int k = 0; k < steps; ++k) {
        const GridField& u = trace.fields.back();
        if (!opts.fixed_theta && k > 0 && k % opts.theta_refresh == 0) {
            theta = clamp_theta(estimate_theta(model, u, u.time, u.time + opts.theta_refresh * dt, opts.theta_safety,
                                               opts.workers));
            const double c = cfl_number(u.dim, dt, dx, theta);
            if (c > opts.cfl * (1.0 + 1e-12))
                throw CflViolation("solve: re-estimated viscosity gives CFL number " + std::to_string(c) +
                                   " at t = " + std::to_string(u.time) + "; lower dt_max or raise dt_headroom");
        }
        trace.max_cfl = std::max(trace.max_cfl, cfl_number(u.dim, dt, dx, theta));
        GridField next;
        if (opts.scheme == Scheme::lax_friedrichs) {
            next = lf_step(u, model, dt, theta, opts.workers, opts.cfl);
        } else {
            const auto u1 = lf_step(u, model, dt, theta, opts.workers, opts.cfl);
            const auto u2 = lf_step(u1, model, dt, theta, opts.workers, opts.cfl);
            next = u;
            for (std::size_t i = 0; i < u.size(); ++i) next.values[i] = 0.5 * (u.values[i] + u2.values[i]);
        }
        next.time = t0 + (k + 1) * dt;
        trace.fields.push_back(std::move(next));
    }
    trace.theta = theta;
    return trace;
}

/// (u^k - u^{k-1}) / dt.
inline GridField discrete_time_derivative(const SolveTrace& trace, int k) {
    if (k < 1 || k > trace.steps())
        throw std::out_of_range("discrete_time_derivative: step " + std::to_string(k) + " outside [1, " +
                                std::to_string(trace.steps()) + "]");
    const auto& a = trace.fields[static_cast<std::size_t>(k - 1)];
    const auto& b = trace.fields[static_cast<std::size_t>(k)];
    GridField out = b;
    for (std::size_t i = 0; i < b.size(); ++i) out.values[i] = (b.values[i] - a.values[i]) / trace.dt;
    return out;
}

/// Centered differences per axis.
inline std::vector<Vec> discrete_gradient(const GridField& u) {
    std::vector<Vec> g(u.size(), Vec::Zero());
    const double h2 = 2.0 * u.dx();
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto [i, j] = u.ij(k);
        g[k][0] = (u(i + 1, j) - u(i - 1, j)) / h2;
        if (u.dim == 2) g[k][1] = (u(i, j + 1) - u(i, j - 1)) / h2;
    }
    return g;
}

// Hopf-Lax oracle -----------------------------------------------------------

struct HopfLaxOptions {
    /// Half-width of the momentum range for the numeric Legendre transform;
    /// 0 means max(1, 1.25 max|Du0|).
    double p_range = 0.0;
    int p_points = 2001;
};

/// Refuses unless H(p) passes a midpoint-convexity test on [-P, P].
inline void require_convex(const HamiltonianModel& model, double P, int points = 201) {
    const Vec x = Vec::Zero();
    auto H = [&](double p) { return model.H(x, 0.0, Vec(p, 0.0)); };
    for (int i = 0; i < points; ++i)
        for (int j = i + 2; j < points; j += 3) {
            const double a = -P + 2.0 * P * i / (points - 1);
            const double b = -P + 2.0 * P * j / (points - 1);
            const double mid = H(0.5 * (a + b));
            const double chord = 0.5 * (H(a) + H(b));
            if (mid > chord + 1e-12 * (1.0 + std::abs(chord)))
                throw Misuse("hopf_lax: H fails the midpoint convexity test between p = " + std::to_string(a) +
                             " and " + std::to_string(b));
        }
}

/// sup over |p| <= P of p q - H(p): grid search, then golden section on the
/// bracketing cells (the objective is concave).
inline double numeric_lagrangian(const HamiltonianModel& model, double q, double P, int points) {
    const Vec x = Vec::Zero();
    auto obj = [&](double p) { return p * q - model.H(x, 0.0, Vec(p, 0.0)); };
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        const double val = obj(-P + 2.0 * P * i / (points - 1));
        if (val > best_val) {
            best_val = val;
            best = i;
        }
    }
    const double h = 2.0 * P / (points - 1);
    double a = std::max(-P, -P + (best - 1) * h);
    double b = std::min(P, -P + (best + 1) * h);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = obj(c), fd = obj(d);
    for (int it = 0; it < 80 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    return std::max({best_val, fc, fd});
}

/// u(x,t) = min over grid points y and periodic images of u0(y) + t L((x-y)/t).
inline GridField hopf_lax(const HamiltonianModel& model, const GridField& u0, double t, const HopfLaxOptions& opts = {}) {
    if (model.dim != 1 || u0.dim != 1) throw Misuse("hopf_lax: 1-D models only");
    if (!model.t_independent() || !model.x_independent()) throw Misuse("hopf_lax: H must depend on p only");
    if (!(t > 0.0)) throw std::invalid_argument("hopf_lax: t must be positive");
    const auto range = gradient_range(u0);
    const double P =
        opts.p_range > 0.0 ? opts.p_range : std::max(1.0, 1.25 * std::max(std::abs(range.lo[0]), std::abs(range.hi[0])));
    require_convex(model, P);

    const int n = u0.n;
    const double dx = u0.dx();
    // Offsets (i - j + k n) dx with k in {-1, 0, 1}.
    const int span = 2 * n - 1;
    std::vector<double> tl(static_cast<std::size_t>(2 * span + 1));
    for (int m = -span; m <= span; ++m) {
        const double q = m * dx / t;
        tl[static_cast<std::size_t>(m + span)] =
            t * (model.lagrangian ? model.lagrangian(q) : numeric_lagrangian(model, q, P, opts.p_points));
    }
    GridField out = u0;
    out.time = u0.time + t;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            for (int k = -1; k <= 1; ++k)
                best = std::min(best, u0.values[static_cast<std::size_t>(j)] +
                                          tl[static_cast<std::size_t>(i - j + k * n + span)]);
        out.values[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

// Trace I/O -----------------------------------------------------------------

inline nlohmann::ordered_json trace_meta(const SolveTrace& trace) {
    const auto& f = trace.fields.front();
    nlohmann::ordered_json j;
    j["dim"] = f.dim;
    j["n"] = f.n;
    j["L"] = f.L;
    j["dx"] = trace.dx;
    j["dt"] = trace.dt;
    j["theta"] = {trace.theta[0], trace.theta[1]};
    j["theta_initial"] = {trace.theta_initial[0], trace.theta_initial[1]};
    j["max_cfl"] = trace.max_cfl;
    j["scheme"] = to_string(trace.scheme);
    j["model"] = trace.model_family;
    j["steps"] = trace.steps();
    std::vector<double> times;
    for (const auto& g : trace.fields) times.push_back(g.time);
    j["time_stamps"] = times;
    return j;
}

/// Directory of step_<k>.field files plus meta.json.
inline void write_trace(const std::filesystem::path& dir, const SolveTrace& trace) {
    std::filesystem::create_directories(dir);
    for (int k = 0; k <= trace.steps(); ++k)
        write_values(dir / ("step_" + std::to_string(k) + ".field"), trace.fields[static_cast<std::size_t>(k)].values);
    std::ofstream meta(dir / "meta.json");
    meta << trace_meta(trace).dump(2) << '\n';
}

inline SolveTrace read_trace(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw std::runtime_error("missing " + (dir / "meta.json").string());
    const auto j = nlohmann::json::parse(in);
    SolveTrace trace;
    trace.dx = j.at("dx").get<double>();
    trace.dt = j.at("dt").get<double>();
    trace.theta = {j.at("theta")[0].get<double>(), j.at("theta")[1].get<double>()};
    trace.theta_initial = {j.at("theta_initial")[0].get<double>(), j.at("theta_initial")[1].get<double>()};
    trace.max_cfl = j.at("max_cfl").get<double>();
    trace.scheme = parse_scheme(j.at("scheme").get<std::string>());
    trace.model_family = j.at("model").get<std::string>();
    const auto times = j.at("time_stamps").get<std::vector<double>>();
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto f = GridField::zeros(j.at("dim").get<int>(), j.at("n").get<int>(), j.at("L").get<double>(), times[k]);
        f.values = read_values(dir / ("step_" + std::to_string(k) + ".field"), f.size());
        trace.fields.push_back(std::move(f));
    }
    return trace;
}

}  // namespace hjreg
