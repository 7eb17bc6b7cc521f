#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace hjreg {

/// Lower bound phi(s) <= (H_p.p - H) on the level sets {H >= s}, defined on
/// [c0, infinity). Must be nondecreasing and nonnegative there.
struct PhiFunction {
    std::function<double(double)> eval;
    double c0 = 0.0;
    bool monotone = true;
    std::string description;
    /// Levels (empirical phi only) whose sample bucket stayed empty.
    std::vector<double> unresolved_levels;
    /// Resolved (level, value) pairs backing an empirical phi.
    std::vector<std::pair<double, double>> samples;

    double operator()(double s) const { return eval(s); }
};

inline PhiFunction phi_linear(double slope, double c0 = 0.0) {
    PhiFunction phi;
    phi.eval = [slope](double s) { return slope * s; };
    phi.c0 = c0;
    phi.description = std::to_string(slope) + "*s";
    return phi;
}

/// slope*s - shift, starting where it vanishes (or at c0 if larger).
inline PhiFunction phi_affine(double slope, double shift) {
    PhiFunction phi;
    phi.eval = [slope, shift](double s) { return slope * s - shift; };
    phi.c0 = shift > 0.0 ? shift / slope : 0.0;
    phi.description = std::to_string(slope) + "*s - " + std::to_string(shift);
    return phi;
}

/// s*(ln s - 1): exact for H = exp(|p|).
inline PhiFunction phi_s_log_s(double c0) {
    PhiFunction phi;
    phi.eval = [](double s) { return s * (std::log(s) - 1.0); };
    phi.c0 = c0;
    phi.description = "s*(ln(s) - 1)";
    return phi;
}

/// Checks monotonicity and nonnegativity on a log-spaced ladder from c0 up to
/// c0 + span. Returns the first offending point, or NaN if none.
inline double first_monotonicity_violation(const PhiFunction& phi, double span = 1e6, int points = 400) {
    const double lo = phi.c0 > 0.0 ? phi.c0 : 1e-6;
    const double ratio = std::pow((lo + span) / lo, 1.0 / (points - 1));
    double prev = -std::numeric_limits<double>::infinity();
    double s = lo;
    for (int i = 0; i < points; ++i, s *= ratio) {
        const double v = phi(s);
        if (!(v >= 0.0) || v < prev - 1e-12 * std::abs(prev)) return s;
        prev = v;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace hjreg
