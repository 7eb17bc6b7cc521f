#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "types.hpp"

namespace hjreg {

/// Named scalar coefficient families a(x,t) with exact derivatives. These
/// stand in for an expression language in scenario files.
class ScalarField {
public:
    enum class Kind {
        constant,           // value
        quadratic,          // coef*|x|^2 + offset + time_slope*t
        separable,          // (coef*|x|^2 + offset) * (1 + time_rate*t)
        positive_squared,   // coef*max(x0, 0)^2
        quartic,            // offset + coef*|x|^4
        sine,               // (offset + amp*sin(freq*x0)) * (1 + time_rate*t)
    };

    ScalarField() = default;

    static ScalarField constant(double value) { return {Kind::constant, value, 0, 0, 0}; }
    static ScalarField quadratic(double coef, double offset, double time_slope) {
        return {Kind::quadratic, coef, offset, time_slope, 0};
    }
    static ScalarField separable(double coef, double offset, double time_rate) {
        return {Kind::separable, coef, offset, time_rate, 0};
    }
    static ScalarField positive_squared(double coef) { return {Kind::positive_squared, coef, 0, 0, 0}; }
    static ScalarField quartic(double coef, double offset) { return {Kind::quartic, coef, offset, 0, 0}; }
    static ScalarField sine(double offset, double amp, double freq, double time_rate) {
        return {Kind::sine, offset, amp, freq, time_rate};
    }

    Kind kind() const { return kind_; }
    std::array<double, 4> params() const { return {a_, b_, c_, d_}; }

    double value(const Vec& x, double t) const {
        switch (kind_) {
            case Kind::constant: return a_;
            case Kind::quadratic: return a_ * x.squaredNorm() + b_ + c_ * t;
            case Kind::separable: return (a_ * x.squaredNorm() + b_) * (1.0 + c_ * t);
            case Kind::positive_squared: {
                const double r = std::max(x[0], 0.0);
                return a_ * r * r;
            }
            case Kind::quartic: {
                const double r2 = x.squaredNorm();
                return b_ + a_ * r2 * r2;
            }
            case Kind::sine: return (a_ + b_ * std::sin(c_ * x[0])) * (1.0 + d_ * t);
        }
        return 0.0;
    }

    Vec grad(const Vec& x, double t) const {
        switch (kind_) {
            case Kind::constant: return Vec::Zero();
            case Kind::quadratic: return 2.0 * a_ * x;
            case Kind::separable: return 2.0 * a_ * (1.0 + c_ * t) * x;
            case Kind::positive_squared: return Vec(2.0 * a_ * std::max(x[0], 0.0), 0.0);
            case Kind::quartic: return 4.0 * a_ * x.squaredNorm() * x;
            case Kind::sine: return Vec(b_ * c_ * std::cos(c_ * x[0]) * (1.0 + d_ * t), 0.0);
        }
        return Vec::Zero();
    }

    double dt(const Vec& x, double /*t*/) const {
        switch (kind_) {
            case Kind::quadratic: return c_;
            case Kind::separable: return (a_ * x.squaredNorm() + b_) * c_;
            case Kind::sine: return (a_ + b_ * std::sin(c_ * x[0])) * d_;
            default: return 0.0;
        }
    }

    bool depends_on_t() const {
        switch (kind_) {
            case Kind::quadratic: return c_ != 0.0;
            case Kind::separable: return c_ != 0.0;
            case Kind::sine: return d_ != 0.0;
            default: return false;
        }
    }

    bool depends_on_x() const {
        switch (kind_) {
            case Kind::constant: return false;
            case Kind::quadratic:
            case Kind::separable:
            case Kind::positive_squared:
            case Kind::quartic: return a_ != 0.0;
            case Kind::sine: return b_ != 0.0 && c_ != 0.0;
        }
        return true;
    }

    std::string describe() const {
        const auto n = [](double v) {
            std::string s = std::to_string(v);
            s.erase(s.find_last_not_of('0') + 1);
            if (!s.empty() && s.back() == '.') s.pop_back();
            return s;
        };
        switch (kind_) {
            case Kind::constant: return n(a_);
            case Kind::quadratic: return n(a_) + "*|x|^2 + " + n(b_) + " + " + n(c_) + "*t";
            case Kind::separable: return "(" + n(a_) + "*|x|^2 + " + n(b_) + ")*(1 + " + n(c_) + "*t)";
            case Kind::positive_squared: return n(a_) + "*max(x1,0)^2";
            case Kind::quartic: return n(b_) + " + " + n(a_) + "*|x|^4";
            case Kind::sine: return "(" + n(a_) + " + " + n(b_) + "*sin(" + n(c_) + "*x1))*(1 + " + n(d_) + "*t)";
        }
        return "?";
    }

private:
    ScalarField(Kind k, double a, double b, double c, double d) : kind_(k), a_(a), b_(b), c_(c), d_(d) {}

    Kind kind_ = Kind::constant;
    double a_ = 0.0, b_ = 0.0, c_ = 0.0, d_ = 0.0;
};

/// Vector coefficient (b or c) given componentwise.
struct VectorField {
    std::array<ScalarField, 2> comp{};

    static VectorField constant(double b0, double b1 = 0.0) {
        return {{ScalarField::constant(b0), ScalarField::constant(b1)}};
    }

    Vec value(const Vec& x, double t) const { return Vec(comp[0].value(x, t), comp[1].value(x, t)); }
    Vec dt(const Vec& x, double t) const { return Vec(comp[0].dt(x, t), comp[1].dt(x, t)); }
    /// Jacobian: row i is grad of component i.
    Mat jacobian(const Vec& x, double t) const {
        Mat j;
        j.row(0) = comp[0].grad(x, t).transpose();
        j.row(1) = comp[1].grad(x, t).transpose();
        return j;
    }
    bool depends_on_t() const { return comp[0].depends_on_t() || comp[1].depends_on_t(); }
    bool depends_on_x() const { return comp[0].depends_on_x() || comp[1].depends_on_x(); }
    std::string describe() const { return "(" + comp[0].describe() + ", " + comp[1].describe() + ")"; }
};

}  // namespace hjreg
