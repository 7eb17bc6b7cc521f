#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hamiltonian.hpp"
#include "phi.hpp"
#include "quadrature.hpp"

namespace hjreg {

/// Constructive bound phi(s) >= a*s^b ("power") or a*s*(ln s - 1)
/// ("log-linear") fitted on [M, 4M], integrated analytically over (M, inf).
struct TailFit {
    std::string kind;
    double a = 0.0;
    double b = 0.0;
    double M = 0.0;
    double tail_bound = std::numeric_limits<double>::infinity();
};

struct FValue {
    double value = 0.0;
    double error_bound = 0.0;
    TailFit tail;
};

struct StructureTolerances {
    double quad_rel = 1e-13;
    /// Accept the tail once it is below this fraction of the accumulated integral.
    double tail_rel = 1e-13;
    /// Largest ln(M) tried before declaring the integral non-integrable.
    double max_log_cutoff = 700.0;
    double chunk = 4.0;
};

namespace detail {

inline double integrand_log(const PhiFunction& phi, double y) {
    const double v = phi(std::exp(y));
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError("phi(" + std::to_string(std::exp(y)) + ") = " + std::to_string(v) +
                          " is not positive; 1/(s phi(s)) cannot be integrated");
    return 1.0 / v;
}

inline TailFit fit_tail(const PhiFunction& phi, double M) {
    constexpr int n = 16;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> s(n), v(n);
    for (int k = 0; k < n; ++k) {
        s[k] = M * std::pow(4.0, static_cast<double>(k) / (n - 1));
        v[k] = phi(s[k]);
        if (!(v[k] > 0.0)) return {};
        const double lx = std::log(s[k]);
        const double ly = std::log(v[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    TailFit best;
    best.M = M;
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (b > 1e-9) {
        double a = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) a = std::min(a, v[k] / std::pow(s[k], b));
        const double tail = 2.0 / (a * b * std::pow(M, b));
        if (a > 0.0 && tail < best.tail_bound) best = {"power", a, b, M, tail};
    }
    if (std::log(M) > 1.5) {
        double a = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) a = std::min(a, v[k] / (s[k] * (std::log(s[k]) - 1.0)));
        // 2 int_M^inf ds / (a s^2 (ln s - 1)) <= 2 / (a M (ln M - 1))
        const double tail = 2.0 / (a * M * (std::log(M) - 1.0));
        if (a > 0.0 && tail < best.tail_bound) best = {"log-linear", a, 1.0, M, tail};
    }
    return best;
}

}  // namespace detail

/// F(tau) = 2 int_tau^inf ds / (s phi(s)). The integral is taken in ln s up to
/// a cutoff M, beyond which a fitted lower bound on phi bounds the remainder.
inline FValue compute_F(const PhiFunction& phi, double tau, const StructureTolerances& tol = {}) {
    if (!(tau > phi.c0) && !(tau == phi.c0 && phi(tau) > 0.0))
        throw OutOfDomain("F(tau) needs tau > c0 = " + std::to_string(phi.c0) + ", got " + std::to_string(tau));
    if (tau <= 0.0) throw OutOfDomain("F(tau) needs tau > 0");
    const auto f = [&](double y) { return detail::integrand_log(phi, y); };
    double y = std::log(tau);
    double total = 0.0;
    double error = 0.0;
    const double y_stop = std::max(tol.max_log_cutoff, y + 60.0);
    while (y < y_stop) {
        const double y_next = y + tol.chunk;
        const auto piece = quad::integrate(f, y, y_next, 1e-300, tol.quad_rel);
        if (!std::isfinite(piece.value)) throw DomainError("F: non-finite quadrature on [" + std::to_string(y) + ", " +
                                                           std::to_string(y_next) + "] in ln s");
        total += 2.0 * piece.value;
        error += 2.0 * piece.error;
        y = y_next;
        const auto fit = detail::fit_tail(phi, std::exp(y));
        if (fit.tail_bound <= tol.tail_rel * total) {
            FValue out;
            out.value = total + 0.5 * fit.tail_bound;
            out.error_bound = error + 0.5 * fit.tail_bound;
            out.tail = fit;
            return out;
        }
        if (y + tol.chunk > 709.0) break;
    }
    throw NonIntegrable("F: no tail bound with a positive growth exponent below ln M = " + std::to_string(y));
}

/// psi: inverse of r -> 2r + phi(2r) on r > c0/2, found by bisection.
inline double compute_psi(const PhiFunction& phi, double tau) {
    const double r0 = 0.5 * phi.c0;
    const auto g = [&](double r) { return 2.0 * r + phi(2.0 * r); };
    const double left = g(r0);
    if (!(tau > left))
        throw OutOfDomain("psi(tau) needs tau > c0 + phi(c0) = " + std::to_string(left) + ", got " +
                          std::to_string(tau));
    double lo = r0;
    double hi = std::max(1.0, 2.0 * r0);
    while (g(hi) < tau) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw DomainError("psi: bracket overflow");
    }
    for (int i = 0; i < 400 && hi - lo > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (g(mid) < tau ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct CappedEta {
    double value = 0.0;
    /// Set when the profile has c* = 0 and no cap exists.
    bool misuse = false;
};

/// phi together with F, eta = F^{-1}, psi, c* and t* = F(c*). eta lives on
/// (0, t*) when c* > 0 and on (0, F(c0)) otherwise.
class StructureProfile {
public:
    struct Node {
        double tau;
        double F;
    };

    StructureProfile(PhiFunction phi, double c_star, StructureTolerances tol = {})
        : phi_(std::move(phi)), c_star_(c_star), tol_(tol) {
        if (c_star_ < 0.0) throw OutOfDomain("c* must be nonnegative");
        if (c_star_ > 0.0 && c_star_ < phi_.c0)
            throw OutOfDomain("c* = " + std::to_string(c_star_) + " lies below c0 = " + std::to_string(phi_.c0));
        if (c_star_ == 0.0 && phi_.c0 > 0.0) throw OutOfDomain("c* = 0 requires c0 = 0");
        const double violation = first_monotonicity_violation(phi_);
        if (!std::isnan(violation))
            throw DomainError("phi is not nondecreasing and nonnegative near s = " + std::to_string(violation));

        const double left = c_star_ > 0.0 ? c_star_ : phi_.c0;
        left_finite_ = left > 0.0 && phi_(left) > 0.0;
        if (left_finite_) {
            left_ = left;
            left_F_ = compute_F(phi_, left_, tol_).value;
        } else {
            left_ = left;
            left_F_ = std::numeric_limits<double>::infinity();
        }
        t_star_ = c_star_ > 0.0 ? left_F_ : std::numeric_limits<double>::infinity();
        build_table();
    }

    const PhiFunction& phi() const { return phi_; }
    double c_star() const { return c_star_; }
    double t_star() const { return t_star_; }
    /// Right end of eta's domain: t* if c* > 0, F(c0) otherwise.
    double eta_domain_end() const { return left_F_; }
    const std::vector<Node>& table() const { return table_; }

    double F(double tau) const {
        if (tau < left_ || (tau == left_ && !left_finite_))
            throw OutOfDomain("F(" + std::to_string(tau) + ") outside the profile's range");
        return F_any(tau);
    }

    double psi(double tau) const { return compute_psi(phi_, tau); }

    double eta(double s) const {
        if (!(s > 0.0)) throw OutOfDomain("eta(s) needs s > 0");
        if (!(s < left_F_)) throw OutOfDomain("eta(" + std::to_string(s) + ") outside (0, " + std::to_string(left_F_) + ")");
        // Bracket [lo, hi] in tau with F(lo) >= s >= F(hi).
        double lo, hi, Flo, Fhi;
        const auto it = std::find_if(table_.begin(), table_.end(), [s](const Node& n) { return n.F > s; });
        if (it == table_.begin()) {
            // eta(s) lies above the largest tabulated tau.
            lo = hi = table_.front().tau;
            Flo = Fhi = table_.front().F;
            while (Fhi > s) {
                lo = hi;
                Flo = Fhi;
                hi *= 4.0;
                Fhi = compute_F(phi_, hi, tol_).value;
            }
        } else if (it == table_.end()) {
            // eta(s) lies between the left end and the smallest tabulated tau.
            hi = table_.back().tau;
            Fhi = table_.back().F;
            if (left_finite_) {
                lo = left_;
                Flo = left_F_;
            } else {
                while (true) {
                    const double cand = left_ + 0.5 * (hi - left_);
                    if (!(cand > left_ && cand < hi))
                        throw OutOfDomain("eta(" + std::to_string(s) + "): beyond the resolvable range near c0");
                    const double Fc = compute_F(phi_, cand, tol_).value;
                    if (Fc >= s) {
                        lo = cand;
                        Flo = Fc;
                        break;
                    }
                    hi = cand;
                    Fhi = Fc;
                }
            }
        } else {
            hi = (it - 1)->tau;
            Fhi = (it - 1)->F;
            lo = it->tau;
            Flo = it->F;
        }
        return solve_eta(s, lo, hi, Flo, Fhi);
    }

    /// max(eta(t), eta(t*/2)): the estimate usable on all of (0, T).
    CappedEta eta_capped(double t) const {
        if (c_star_ == 0.0) return {eta(t), true};
        const double half = 0.5 * t_star_;
        return {t <= half ? eta(t) : eta(half), false};
    }

private:
    // F on [tau, node.tau] from the stored node value.
    double F_local(double tau, const Node& above) const {
        const auto f = [this](double y) { return detail::integrand_log(phi_, y); };
        const auto piece = quad::integrate(f, std::log(tau), std::log(above.tau), 1e-300, 1e-14);
        return above.F + 2.0 * piece.value;
    }

    double F_any(double tau) const {
        if (tau >= table_.back().tau && tau <= table_.front().tau) {
            const auto it = std::lower_bound(table_.rbegin(), table_.rend(), tau,
                                             [](const Node& n, double v) { return n.tau < v; });
            if (it != table_.rend()) return F_local(tau, *it);
        }
        if (tau == left_) return left_F_;
        return compute_F(phi_, tau, tol_).value;
    }

    double solve_eta(double s, double lo, double hi, double Flo, double Fhi) const {
        if (Flo == s) return lo;
        if (Fhi == s) return hi;
        // Initial guess: interpolate F linearly in ln(tau) against ln(F).
        double tau = hi;
        if (std::isfinite(Flo) && Flo > 0.0 && Fhi > 0.0 && lo > 0.0) {
            const double w = (std::log(Flo) - std::log(s)) / (std::log(Flo) - std::log(Fhi));
            tau = std::exp(std::log(lo) + w * (std::log(hi) - std::log(lo)));
        } else {
            tau = 0.5 * (lo + hi);
        }
        for (int it = 0; it < 200; ++it) {
            const double Fv = F_any(tau);
            const double r = Fv - s;
            if (std::abs(r) <= 1e-14 * (1.0 + s)) return tau;
            (r > 0.0 ? lo : hi) = tau;
            if (hi - lo <= 4e-16 * hi) return tau;
            // Newton step with F'(tau) = -2 / (tau phi(tau)).
            double next = tau + r * tau * phi_(tau) / 2.0;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            tau = next;
        }
        return tau;
    }

    void build_table() {
        // Nodes run from large tau (small F) down to the left end.
        const double ratio = std::pow(2.0, 0.25);
        const double scale = std::isfinite(t_star_) ? t_star_ : 1.0;
        double top = left_finite_ ? left_ * ratio : 1.0;
        FValue Ftop = compute_F(phi_, top, tol_);
        while (Ftop.value > 1e-4 * scale) {
            top *= 4.0;
            Ftop = compute_F(phi_, top, tol_);
        }
        table_.push_back({top, Ftop.value});
        const auto f = [this](double y) { return detail::integrand_log(phi_, y); };
        const double stop_F = left_finite_ ? left_F_ : 1e4 * scale;
        double tau = top;
        double Fv = Ftop.value;
        while (true) {
            double next = tau / ratio;
            if (left_finite_ && next <= left_) next = left_;
            if (!left_finite_ && left_ > 0.0 && next <= left_) next = 0.5 * (tau + left_);
            if (!(next < tau)) break;
            const auto piece = quad::integrate(f, std::log(next), std::log(tau), 1e-300, 1e-14);
            Fv += 2.0 * piece.value;
            tau = next;
            if (left_finite_ && tau == left_) {
                table_.push_back({tau, left_F_});
                break;
            }
            table_.push_back({tau, Fv});
            if (Fv >= stop_F || table_.size() > 20000) break;
        }
    }

    PhiFunction phi_;
    double c_star_;
    StructureTolerances tol_;
    double left_ = 0.0;
    double left_F_ = 0.0;
    bool left_finite_ = false;
    double t_star_ = 0.0;
    std::vector<Node> table_;  // decreasing tau, increasing F
};

inline StructureProfile build_profile(PhiFunction phi, double c_star, StructureTolerances tol = {}) {
    return StructureProfile(std::move(phi), c_star, tol);
}

inline double invert_to_eta(const StructureProfile& profile, double s) { return profile.eta(s); }

/// Empirical phi: for each level s_j the minimum of H_p.p - H over sampled
/// points with H in [s_j, s_{j+1}), followed by the running minimum from the
/// right. Between levels the envelope is interpolated linearly; above the last
/// level it is extended by the power law through the last two values.
inline PhiFunction extract_empirical_phi(const HamiltonianModel& model, const std::vector<double>& levels,
                                         const SampleBox& box, int n, std::uint64_t seed = 0) {
    if (levels.empty()) throw std::invalid_argument("extract_empirical_phi: no levels");
    for (std::size_t j = 1; j < levels.size(); ++j)
        if (!(levels[j] > levels[j - 1])) throw std::invalid_argument("extract_empirical_phi: levels must increase");

    PhiFunction phi;
    phi.c0 = levels.front();
    phi.description = "empirical lower envelope of H_p.p - H";
    std::vector<std::optional<double>> raw(levels.size());
    const double r_min = kink_radius * 1.0001;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const double lo = levels[j];
        const double width = j + 1 < levels.size() ? levels[j + 1] - lo
                             : levels.size() > 1   ? levels[j] - levels[j - 1]
                                                   : 0.1 * (1.0 + std::abs(lo));
        const double hi = lo + width;
        Halton h(seed + 101 * (j + 1));
        int accepted = 0;
        const long max_attempts = 50L * n;
        for (long attempt = 0; attempt < max_attempts && accepted < n; ++attempt) {
            const auto u = h.next();
            Vec x;
            double t;
            const auto [dir, w] = unpack_ray_sample(model.dim, box, u, x, t);
            Vec p;
            if (model.coercive) {
                const auto r_lo = first_crossing(model, x, t, dir, lo, r_min, box.p_max);
                if (!r_lo) continue;
                auto r_hi = first_crossing(model, x, t, dir, hi, *r_lo, box.p_max);
                const double top = r_hi ? *r_hi : box.p_max;
                p = (*r_lo + w * (top - *r_lo)) * dir;
            } else {
                p = (r_min + w * (box.p_max - r_min)) * dir;
            }
            const double Hv = model.H(x, t, p);
            if (!(Hv >= lo && Hv < hi)) continue;
            const auto g = model.Hp_checked(x, t, p);
            if (!g) continue;
            const double gap = g->dot(p) - Hv;
            raw[j] = raw[j] ? std::min(*raw[j], gap) : gap;
            ++accepted;
        }
        if (!raw[j]) phi.unresolved_levels.push_back(lo);
    }
    std::optional<double> running;
    std::vector<std::pair<double, double>> env;
    for (std::size_t j = levels.size(); j-- > 0;) {
        if (!raw[j]) continue;
        running = running ? std::min(*running, *raw[j]) : *raw[j];
        env.emplace_back(levels[j], *running);
    }
    std::reverse(env.begin(), env.end());
    phi.samples = env;
    if (env.empty()) {
        phi.eval = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
        phi.monotone = false;
        return phi;
    }
    double slope = 0.0;
    if (env.size() >= 2) {
        const auto& [s1, v1] = env[env.size() - 2];
        const auto& [s2, v2] = env.back();
        if (v1 > 0.0 && v2 > 0.0) slope = std::max(0.0, std::log(v2 / v1) / std::log(s2 / s1));
    }
    phi.eval = [env, slope](double s) {
        if (s <= env.front().first) return env.front().second;
        if (s >= env.back().first) {
            const auto& [sl, vl] = env.back();
            return vl > 0.0 ? vl * std::pow(s / sl, slope) : vl;
        }
        const auto it = std::lower_bound(env.begin(), env.end(), s,
                                         [](const auto& e, double v) { return e.first < v; });
        const auto& [s1, v1] = *(it - 1);
        const auto& [s2, v2] = *it;
        return v1 + (v2 - v1) * (s - s1) / (s2 - s1);
    };
    return phi;
}

}  // namespace hjreg
