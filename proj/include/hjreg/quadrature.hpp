#pragma once

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace hjreg::quad {

struct Estimate {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double sum = f(c - dx) + f(c + dx);
        kronrod += wgk[j] * sum;
        if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b]. Stops
/// when the summed error estimate is below max(abs_tol, rel_tol*|value|).
template <class F>
Estimate integrate(const F& f, double a, double b, double abs_tol, double rel_tol,
                   int max_panels = 4000) {
    if (!(a <= b)) throw std::invalid_argument("integrate: a > b");
    Estimate est;
    if (a == b) {
        est.converged = true;
        return est;
    }
    std::priority_queue<detail::Panel> panels;
    auto first = detail::gauss_kronrod_15(f, a, b);
    est.evaluations = 15;
    double total = first.value;
    double error = first.error;
    panels.push(first);
    while (static_cast<int>(panels.size()) < max_panels) {
        if (!std::isfinite(total)) break;
        if (error <= std::max(abs_tol, rel_tol * std::abs(total))) {
            est.converged = true;
            break;
        }
        const auto worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        est.evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to drop the drift accumulated by incremental updates.
    double sum = 0.0;
    double err = 0.0;
    while (!panels.empty()) {
        sum += panels.top().value;
        err += panels.top().error;
        panels.pop();
    }
    est.value = sum;
    est.error = err;
    if (!est.converged) est.converged = std::isfinite(sum) && err <= std::max(abs_tol, rel_tol * std::abs(sum));
    return est;
}

}  // namespace hjreg::quad
