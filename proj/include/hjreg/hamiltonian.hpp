#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"
#include "halton.hpp"
#include "phi.hpp"
#include "types.hpp"

namespace hjreg {

using ScalarEval = std::function<double(const Vec& x, double t, const Vec& p)>;
using VectorEval = std::function<Vec(const Vec& x, double t, const Vec& p)>;

/// Radius below which norm-type Hamiltonians are treated as kink-adjacent.
inline constexpr double kink_radius = 1e-3;

/// Sampling region for (x, t, p): every spatial axis in [x_lo, x_hi],
/// t in [t_lo, t_hi], |p| <= p_max.
struct SampleBox {
    double x_lo = -5.0;
    double x_hi = 5.0;
    double t_lo = 0.1;
    double t_hi = 1.0;
    double p_max = 50.0;
};

struct SamplePoint {
    Vec x = Vec::Zero();
    double t = 0.0;
    Vec p = Vec::Zero();
};

/// A Hamiltonian H(x,t,p) together with its derivatives and the structure
/// constants it claims. Immutable after construction; evaluators are pure.
struct HamiltonianModel {
    std::string family;
    std::string reference;
    int dim = 1;

    ScalarEval eval_H;
    VectorEval eval_Hp;  ///< empty: centered finite differences
    ScalarEval eval_Ht;  ///< empty: t-independent
    VectorEval eval_Hx;  ///< empty: x-independent

    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double kappa = 1.0;
    std::optional<double> gamma;
    bool coercive = false;

    /// Structure function supplied by the family, when it has a closed form.
    std::optional<PhiFunction> phi;
    /// Closed-form Lagrangian L(q) for 1-D autonomous convex models.
    std::function<double(double)> lagrangian;
    /// Remarks recorded at construction (e.g. discrepancies in constants).
    std::vector<std::string> notes;

    bool t_independent() const { return !eval_Ht; }
    bool x_independent() const { return !eval_Hx; }

    double H(const Vec& x, double t, const Vec& p) const { return eval_H(x, t, p); }

    Vec Hp(const Vec& x, double t, const Vec& p) const {
        if (eval_Hp) return eval_Hp(x, t, p);
        Vec g = Vec::Zero();
        for (int i = 0; i < dim; ++i) {
            const double h = 1e-5 * (1.0 + std::abs(p[i]));
            Vec e = Vec::Zero();
            e[i] = h;
            g[i] = (eval_H(x, t, p + e) - eval_H(x, t, p - e)) / (2.0 * h);
        }
        return g;
    }

    /// H_p, or nullopt when the finite-difference fallback finds the point
    /// kink-adjacent (one-sided differences disagree by more than 10%).
    std::optional<Vec> Hp_checked(const Vec& x, double t, const Vec& p) const {
        if (eval_Hp) return eval_Hp(x, t, p);
        Vec g = Vec::Zero();
        const double h0 = eval_H(x, t, p);
        for (int i = 0; i < dim; ++i) {
            const double h = 1e-5 * (1.0 + std::abs(p[i]));
            Vec e = Vec::Zero();
            e[i] = h;
            const double fwd = (eval_H(x, t, p + e) - h0) / h;
            const double bwd = (h0 - eval_H(x, t, p - e)) / h;
            if (std::abs(fwd - bwd) > 0.1 * std::max(std::abs(fwd), std::abs(bwd)) &&
                std::abs(fwd - bwd) > 1e-8)
                return std::nullopt;
            g[i] = 0.5 * (fwd + bwd);
        }
        return g;
    }

    double Ht(const Vec& x, double t, const Vec& p) const { return eval_Ht ? eval_Ht(x, t, p) : 0.0; }
    Vec Hx(const Vec& x, double t, const Vec& p) const { return eval_Hx ? eval_Hx(x, t, p) : Vec::Zero(); }

    /// H_p.p - H, the quantity bounded below by phi(H).
    double legendre_gap(const Vec& x, double t, const Vec& p) const { return Hp(x, t, p).dot(p) - H(x, t, p); }
};

/// Parameters of the power-norm family a(x,t)|A(x,t)p|^m - b(x,t).p - f(x,t)
/// with A = alpha(x,t) * diag(d). Drift is either explicit (b) or degenerate
/// (b = A^T c).
struct PowerNormParams {
    int dim = 1;
    double m = 2.0;
    ScalarField alpha = ScalarField::constant(1.0);
    Vec diag = Vec(1.0, 1.0);
    ScalarField f = ScalarField::constant(1.0);
    std::optional<VectorField> b;
    std::optional<VectorField> c;
    std::optional<ScalarField> a;
    bool coercive = true;
    /// Region on which the parameter invariants are sampled.
    SampleBox validation_box{};
    int validation_samples = 4096;
    /// Structure-constant overrides; unset fields get the family defaults.
    std::optional<double> kappa;
    std::optional<double> gamma;
    std::optional<double> c1;
    std::optional<double> c2;
};

namespace detail {

inline Vec project(int dim, Vec v) {
    if (dim == 1) v[1] = 0.0;
    return v;
}

inline std::vector<std::pair<Vec, double>> sample_xt(int dim, const SampleBox& box, int n, std::uint64_t seed) {
    Halton h(seed);
    std::vector<std::pair<Vec, double>> out;
    out.reserve(static_cast<std::size_t>(n) + 5);
    // Box centre and corners first: isolated degeneracies often sit there.
    const double mid = 0.5 * (box.x_lo + box.x_hi);
    out.emplace_back(make_vec(dim, mid, mid), box.t_lo);
    out.emplace_back(make_vec(dim, box.x_lo, box.x_lo), box.t_lo);
    out.emplace_back(make_vec(dim, box.x_hi, box.x_hi), box.t_hi);
    out.emplace_back(make_vec(dim, box.x_lo, box.x_hi), box.t_hi);
    out.emplace_back(make_vec(dim, box.x_hi, box.x_lo), box.t_lo);
    for (int i = 0; i < n; ++i) {
        const auto u = h.next();
        Vec x = Vec::Zero();
        for (int d = 0; d < dim; ++d) x[d] = box.x_lo + u[static_cast<std::size_t>(d)] * (box.x_hi - box.x_lo);
        out.emplace_back(x, box.t_lo + u[static_cast<std::size_t>(dim)] * (box.t_hi - box.t_lo));
    }
    return out;
}

/// Closed-form sup_p (w p - k|p|^m) for k > 0.
inline double power_conjugate(double w, double k, double m) {
    return (m - 1.0) * k * std::pow(std::abs(w) / (m * k), m / (m - 1.0));
}

}  // namespace detail

/// The power-norm family and its drift / degenerate / scalar-coefficient
/// variants. Derivatives are exact.
inline HamiltonianModel make_power_norm(const PowerNormParams& params) {
    const double m = params.m;
    if (!(m > 1.0)) throw InvalidModel("power-norm: exponent m must exceed 1, got " + std::to_string(m));
    if (params.dim != 1 && params.dim != 2) throw InvalidModel("power-norm: dimension must be 1 or 2");
    if (params.b && params.c) throw InvalidModel("power-norm: give either drift b or degenerate drift c, not both");

    const int dim = params.dim;
    const Vec diag = detail::project(dim, params.diag);
    const Mat D = diag.asDiagonal();
    const auto alpha = params.alpha;
    const auto f = params.f;
    const auto a = params.a.value_or(ScalarField::constant(1.0));
    const auto bfield = params.b;
    const auto cfield = params.c;
    const bool scalar_coefficient = params.a.has_value();

    // Sampled invariants: f >= 1 (except the pure scalar-coefficient form),
    // a >= 0, invertibility of A when coercive.
    double sup_A = 0.0;
    double sup_Ainv = 0.0;
    double sup_drift = 0.0;  // sup |A^{-T} b| or sup |c|
    double sup_b = 0.0;
    for (const auto& [x, t] : detail::sample_xt(dim, params.validation_box, params.validation_samples, 17)) {
        if (!scalar_coefficient && f.value(x, t) < 1.0)
            throw InvalidModel("power-norm: f(x,t) >= 1 required, found " + std::to_string(f.value(x, t)));
        if (a.value(x, t) < 0.0) throw InvalidModel("power-norm: coefficient a(x,t) must be nonnegative");
        const double al = alpha.value(x, t);
        const double amax = std::abs(al) * (dim == 1 ? std::abs(diag[0]) : diag.cwiseAbs().maxCoeff());
        const double amin = std::abs(al) * (dim == 1 ? std::abs(diag[0]) : diag.cwiseAbs().minCoeff());
        if (params.coercive && amin < 1e-12)
            throw InvalidModel("power-norm: coercive model needs invertible A, singular at x = (" +
                               std::to_string(x[0]) + ", " + std::to_string(x[1]) + "), t = " + std::to_string(t));
        sup_A = std::max(sup_A, amax);
        if (amin > 0.0) sup_Ainv = std::max(sup_Ainv, 1.0 / amin);
        if (bfield) {
            const Vec bv = detail::project(dim, bfield->value(x, t));
            sup_b = std::max(sup_b, bv.norm());
            if (amin > 0.0) sup_drift = std::max(sup_drift, bv.norm() / amin);
        }
        if (cfield) {
            const Vec cv = detail::project(dim, cfield->value(x, t));
            sup_drift = std::max(sup_drift, cv.norm());
            sup_b = std::max(sup_b, amax * cv.norm());
        }
    }
    if (bfield && !params.coercive)
        throw InvalidModel("power-norm-drift: the explicit-drift form needs invertible A; use the degenerate form b = A^T c");

    // b(x,t) and its derivatives. For the degenerate form b = A^T c = alpha*D*c.
    auto drift = [=](const Vec& x, double t) -> Vec {
        if (bfield) return detail::project(dim, bfield->value(x, t));
        if (cfield) return detail::project(dim, alpha.value(x, t) * (D * cfield->value(x, t)));
        return Vec::Zero();
    };
    auto drift_dt = [=](const Vec& x, double t) -> Vec {
        if (bfield) return detail::project(dim, bfield->dt(x, t));
        if (cfield)
            return detail::project(dim, alpha.dt(x, t) * (D * cfield->value(x, t)) +
                                            alpha.value(x, t) * (D * cfield->dt(x, t)));
        return Vec::Zero();
    };
    // Returns the matrix J with J(i, j) = d b_i / d x_j.
    auto drift_jac = [=](const Vec& x, double t) -> Mat {
        if (bfield) return bfield->jacobian(x, t);
        if (cfield) {
            const Vec cv = cfield->value(x, t);
            return (D * cv) * alpha.grad(x, t).transpose() + alpha.value(x, t) * D * cfield->jacobian(x, t);
        }
        return Mat::Zero();
    };

    HamiltonianModel model;
    model.dim = dim;
    model.coercive = params.coercive;

    model.eval_H = [=](const Vec& x, double t, const Vec& p) {
        const Vec q = alpha.value(x, t) * (D * p);
        return a.value(x, t) * std::pow(q.norm(), m) - drift(x, t).dot(p) - f.value(x, t);
    };
    model.eval_Hp = [=](const Vec& x, double t, const Vec& p) -> Vec {
        const double al = alpha.value(x, t);
        const Vec q = al * (D * p);
        const double n = q.norm();
        Vec g = -drift(x, t);
        if (n > 0.0) g += a.value(x, t) * m * std::pow(n, m - 2.0) * al * (D * q);
        return detail::project(dim, g);
    };

    const bool t_dep = alpha.depends_on_t() || f.depends_on_t() || a.depends_on_t() ||
                       (bfield && bfield->depends_on_t()) || (cfield && cfield->depends_on_t());
    const bool x_dep = alpha.depends_on_x() || f.depends_on_x() || a.depends_on_x() ||
                       (bfield && bfield->depends_on_x()) || (cfield && cfield->depends_on_x());
    if (t_dep) {
        model.eval_Ht = [=](const Vec& x, double t, const Vec& p) {
            const double al = alpha.value(x, t);
            const Vec Dp = D * p;
            const double n = std::abs(al) * Dp.norm();
            double r = a.dt(x, t) * std::pow(n, m);
            // d/dt |alpha D p|^m = m n^{m-2} alpha alpha_t |Dp|^2
            if (n > 0.0) r += a.value(x, t) * m * std::pow(n, m - 2.0) * al * alpha.dt(x, t) * Dp.squaredNorm();
            return r - drift_dt(x, t).dot(p) - f.dt(x, t);
        };
    }
    if (x_dep) {
        model.eval_Hx = [=](const Vec& x, double t, const Vec& p) -> Vec {
            const double al = alpha.value(x, t);
            const Vec Dp = D * p;
            const double n = std::abs(al) * Dp.norm();
            Vec g = a.grad(x, t) * std::pow(n, m);
            if (n > 0.0) g += a.value(x, t) * m * std::pow(n, m - 2.0) * al * Dp.squaredNorm() * alpha.grad(x, t);
            g -= drift_jac(x, t).transpose() * p;
            g -= f.grad(x, t);
            return detail::project(dim, g);
        };
    }

    // Structure constants.
    const double young = (m - 1.0) / m * std::pow(sup_drift, m / (m - 1.0));
    if (scalar_coefficient) {
        model.family = "scalar-coefficient";
        model.reference = "Example 4: a(x,t)|p|^m";
        model.phi = phi_linear(m - 1.0);
        model.c0 = 0.0;
        model.kappa = m / (m - 1.0);
    } else if (bfield || cfield) {
        model.family = bfield ? "power-norm-drift" : "degenerate-drift";
        model.reference = bfield ? "Example 2: |A p|^m - b.p - f" : "Example 3: |A p|^m - c.A p - f";
        // H <= (1 + 1/m)|Ap|^m + young - f and H_p.p - H = (m-1)|Ap|^m + f give
        // H_p.p - H >= m(m-1)/(m+1) (H - young).
        const double slope = m * (m - 1.0) / (m + 1.0);
        model.phi = phi_affine(slope, slope * young);
        model.c0 = model.phi->c0;
        model.kappa = (m * std::max(1.0, sup_A) + sup_b) / std::min(m - 1.0, 1.0);
    } else {
        model.family = "power-norm";
        model.reference = "Example 1: |A p|^m - f";
        model.phi = phi_linear(m - 1.0);
        model.c0 = 0.0;
        model.kappa = m / (m - 1.0) * std::max(1.0, sup_A);
    }
    if (params.kappa) model.kappa = *params.kappa;
    model.gamma = params.gamma;
    model.c1 = params.c1.value_or(0.0);
    model.c2 = params.c2.value_or(0.0);
    if (bfield || cfield)
        model.notes.push_back("Young constant C = " + std::to_string(young) + " (sup |A^-T b| or |c| = " +
                              std::to_string(sup_drift) + ")");
    if (sup_Ainv > 0.0)
        model.notes.push_back("sampled C_A = " + std::to_string(std::max(sup_A, sup_Ainv)));

    // Closed-form Legendre transform for 1-D autonomous instances.
    if (dim == 1 && !t_dep && !x_dep) {
        const Vec zero = Vec::Zero();
        const double k = a.value(zero, 0.0) * std::pow(std::abs(alpha.value(zero, 0.0) * diag[0]), m);
        const double bconst = drift(zero, 0.0)[0];
        const double fconst = f.value(zero, 0.0);
        if (k > 0.0)
            model.lagrangian = [=](double q) { return detail::power_conjugate(q + bconst, k, m) + fconst; };
    }
    return model;
}

/// H(p) = exp(|p|). The exact gap is H_p.p - H = H (ln H - 1). The kappa
/// bound |H_p| <= kappa (H_p.p - H) with kappa = 1 holds once ln H >= 2, so
/// the working threshold is c0 = e^2.
inline HamiltonianModel make_exponential(int dim = 1) {
    if (dim != 1 && dim != 2) throw InvalidModel("exponential: dimension must be 1 or 2");
    HamiltonianModel model;
    model.family = "exponential";
    model.reference = "Remark (ii): exp(|p|)";
    model.dim = dim;
    model.coercive = true;
    model.eval_H = [](const Vec&, double, const Vec& p) { return std::exp(p.norm()); };
    model.eval_Hp = [dim](const Vec&, double, const Vec& p) -> Vec {
        const double r = p.norm();
        if (r == 0.0) return Vec::Zero();
        return detail::project(dim, std::exp(r) / r * p);
    };
    model.c0 = std::exp(2.0);
    model.c1 = 0.0;
    model.kappa = 1.0;
    model.phi = phi_s_log_s(model.c0);
    model.notes.push_back(
        "phi(s) = s(ln s - 1) is positive for s > e only; the published form s ln(s - 1) with c0 = 2 "
        "does not match H_p.p - H = (|p| - 1)e^|p|");
    model.notes.push_back("c0 = e^2: below it |H_p| <= kappa (H_p.p - H) fails near |p| = 1 for every kappa");
    model.lagrangian = [](double q) {
        const double a = std::abs(q);
        return a > 1.0 ? a * std::log(a) - a : -1.0;
    };
    return model;
}

namespace detail {

/// Solves r ln(1 + r) = s for r >= 0.
inline double log_growth_radius(double s) {
    if (s <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::max(1.0, std::sqrt(s));
    while (hi * std::log1p(hi) < s) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * std::log1p(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// H(p) = |p| ln(1 + |p|), a Hamiltonian with only asymptotically linear phi.
inline HamiltonianModel make_log_growth(int dim = 1) {
    if (dim != 1 && dim != 2) throw InvalidModel("log-growth: dimension must be 1 or 2");
    HamiltonianModel model;
    model.family = "log-growth";
    model.reference = "Remark (iii): |p| ln(1 + |p|)";
    model.dim = dim;
    model.coercive = true;
    model.eval_H = [](const Vec&, double, const Vec& p) {
        const double r = p.norm();
        return r * std::log1p(r);
    };
    model.eval_Hp = [dim](const Vec&, double, const Vec& p) -> Vec {
        const double r = p.norm();
        if (r == 0.0) return Vec::Zero();
        return detail::project(dim, (std::log1p(r) + r / (1.0 + r)) / r * p);
    };
    // |H_p| <= H_p.p - H = r^2/(1+r) holds for r >= 3, i.e. H >= 3 ln 4.
    model.c0 = 3.0 * std::log(4.0);
    model.kappa = 1.0;
    PhiFunction phi;
    phi.eval = [](double s) {
        const double r = detail::log_growth_radius(s);
        return r * r / (1.0 + r);
    };
    phi.c0 = model.c0;
    phi.description = "r^2/(1+r) with r ln(1+r) = s";
    model.phi = phi;
    model.notes.push_back("the published chain sigma <= phi(sigma) <= sigma^(1-eps) is not asserted; only integrability is");
    return model;
}

/// Maps one Halton point to (x, t) in the box, a unit direction in p-space
/// and a radial fraction w in [0, 1).
template <class Point>
std::pair<Vec, double> unpack_ray_sample(int dim, const SampleBox& box, const Point& u, Vec& x, double& t) {
    x = Vec::Zero();
    for (int d = 0; d < dim; ++d) x[d] = box.x_lo + u[static_cast<std::size_t>(d)] * (box.x_hi - box.x_lo);
    t = box.t_lo + u[static_cast<std::size_t>(dim)] * (box.t_hi - box.t_lo);
    Vec dir;
    if (dim == 1) {
        dir = Vec(u[static_cast<std::size_t>(dim + 1)] < 0.5 ? -1.0 : 1.0, 0.0);
    } else {
        const double angle = 2.0 * std::numbers::pi * u[static_cast<std::size_t>(dim + 1)];
        dir = Vec(std::cos(angle), std::sin(angle));
    }
    return {dir, u[static_cast<std::size_t>(dim + 2)]};
}

/// Smallest radius r in [r_min, r_max] (up to bisection accuracy) with
/// H(x, t, r*dir) >= level, found by a 64-step sweep and bisection.
inline std::optional<double> first_crossing(const HamiltonianModel& model, const Vec& x, double t, const Vec& dir,
                                            double level, double r_min, double r_max) {
    auto H_at = [&](double r) { return model.H(x, t, r * dir); };
    if (H_at(r_min) >= level) return r_min;
    constexpr int sweep = 64;
    double lo = r_min;
    double hit = -1.0;
    for (int k = 1; k <= sweep; ++k) {
        const double rk = r_min + (r_max - r_min) * k / sweep;
        if (H_at(rk) >= level) {
            hit = rk;
            break;
        }
        lo = rk;
    }
    if (hit < 0.0) return std::nullopt;
    for (int it = 0; it < 80 && hit - lo > 1e-14 * hit; ++it) {
        const double mid = 0.5 * (lo + hit);
        (H_at(mid) >= level ? hit : lo) = mid;
    }
    return hit;
}

/// Up to n points (x, t, p) in the box with H(x,t,p) >= level. Coercive
/// models are sampled by locating the level crossing on each ray and spreading
/// the radius above it; others by rejection. |p| stays above kink_radius.
inline std::vector<SamplePoint> sample_level_set(const HamiltonianModel& model, double level, const SampleBox& box,
                                                 int n, std::uint64_t seed = 0) {
    std::vector<SamplePoint> out;
    if (n < 1) return out;
    out.reserve(static_cast<std::size_t>(n));
    const int dim = model.dim;
    const bool unconditional = level == -std::numeric_limits<double>::infinity();
    const long max_attempts = unconditional ? n : 50L * n;
    Halton h(seed);
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
        const auto u = h.next();
        SamplePoint s;
        const auto [dir, w] = unpack_ray_sample(dim, box, u, s.x, s.t);
        const double r_min = kink_radius * 1.0001;

        double r = r_min + w * (box.p_max - r_min);
        if (!unconditional && model.coercive) {
            const auto r_level = first_crossing(model, s.x, s.t, dir, level, r_min, box.p_max);
            if (!r_level) continue;
            r = *r_level + w * (box.p_max - *r_level);
        }
        s.p = r * dir;
        if (!unconditional && !(model.H(s.x, s.t, s.p) >= level)) continue;
        out.push_back(s);
    }
    return out;
}

/// Worst relative disagreement between the analytic derivatives and centered
/// finite differences (step 1e-6 (1 + |arg|)) over quasi-random samples.
struct DerivativeConsistency {
    double max_rel_Hp = 0.0;
    double max_rel_Ht = 0.0;
    double max_rel_Hx = 0.0;
    int samples = 0;
};

inline DerivativeConsistency check_derivatives(const HamiltonianModel& model, const SampleBox& box, int n,
                                               std::uint64_t seed = 0) {
    DerivativeConsistency out;
    const int dim = model.dim;
    auto rel = [](double exact, double approx, double scale) {
        return std::abs(exact - approx) / std::max({std::abs(exact), std::abs(approx), scale});
    };
    for (const auto& s : sample_level_set(model, -std::numeric_limits<double>::infinity(), box, n, seed)) {
        const double Hval = model.H(s.x, s.t, s.p);
        // Round-off in a centered difference is ~1e-10 |H|; measure against that scale.
        const double floor = 1e-4 * (1.0 + std::abs(Hval));
        if (model.eval_Hp) {
            const Vec g = model.eval_Hp(s.x, s.t, s.p);
            for (int i = 0; i < dim; ++i) {
                const double h = 1e-6 * (1.0 + s.p.norm());
                Vec e = Vec::Zero();
                e[i] = h;
                const double fd = (model.H(s.x, s.t, s.p + e) - model.H(s.x, s.t, s.p - e)) / (2.0 * h);
                out.max_rel_Hp = std::max(out.max_rel_Hp, rel(g[i], fd, floor));
            }
        }
        if (model.eval_Ht) {
            const double h = 1e-6 * (1.0 + std::abs(s.t));
            const double fd = (model.H(s.x, s.t + h, s.p) - model.H(s.x, s.t - h, s.p)) / (2.0 * h);
            out.max_rel_Ht = std::max(out.max_rel_Ht, rel(model.eval_Ht(s.x, s.t, s.p), fd, floor));
        }
        if (model.eval_Hx) {
            const Vec g = model.eval_Hx(s.x, s.t, s.p);
            for (int i = 0; i < dim; ++i) {
                const double h = 1e-6 * (1.0 + s.x.norm());
                Vec e = Vec::Zero();
                e[i] = h;
                const double fd = (model.H(s.x + e, s.t, s.p) - model.H(s.x - e, s.t, s.p)) / (2.0 * h);
                out.max_rel_Hx = std::max(out.max_rel_Hx, rel(g[i], fd, floor));
            }
        }
        ++out.samples;
    }
    return out;
}

}  // namespace hjreg
