#pragma once

// Named coefficient families and the problem bundle (f, g, phi, u0, sigma).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lbs/domain.hpp"
#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"

namespace lbs {

enum class Family { constant, linear, affine, sine, polynomial };
enum class Var { t, x, y };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::constant: return "constant";
        case Family::linear: return "linear";
        case Family::affine: return "affine";
        case Family::sine: return "sine";
        case Family::polynomial: return "polynomial";
    }
    return "?";
}

/// A coefficient function of (t, x, y, z). Families:
///   constant    c
///   linear      a_t t + a_x x + a_y y + sum_k a_z[k] z_k
///   affine      c + linear part
///   sine        offset + amp sin(freq v + phase), v one of t, x, y
///   polynomial  sum_k coeffs[k] v^k
class CoefficientFn {
public:
    CoefficientFn() = default;

    static CoefficientFn constant(double c) {
        CoefficientFn f;
        f.family_ = Family::constant;
        f.c_ = c;
        return f;
    }
    static CoefficientFn affine(double c, double a_t, double a_x, double a_y, std::vector<double> a_z = {}) {
        CoefficientFn f;
        f.family_ = Family::affine;
        f.c_ = c;
        f.a_t_ = a_t;
        f.a_x_ = a_x;
        f.a_y_ = a_y;
        f.a_z_ = std::move(a_z);
        return f;
    }
    static CoefficientFn linear(double a_t, double a_x, double a_y, std::vector<double> a_z = {}) {
        CoefficientFn f = affine(0.0, a_t, a_x, a_y, std::move(a_z));
        f.family_ = Family::linear;
        return f;
    }
    static CoefficientFn sine(Var v, double amp, double freq, double phase, double offset = 0.0) {
        CoefficientFn f;
        f.family_ = Family::sine;
        f.var_ = v;
        f.amp_ = amp;
        f.freq_ = freq;
        f.phase_ = phase;
        f.c_ = offset;
        return f;
    }
    static CoefficientFn polynomial(Var v, std::vector<double> coeffs) {
        CoefficientFn f;
        f.family_ = Family::polynomial;
        f.var_ = v;
        f.poly_ = std::move(coeffs);
        return f;
    }

    [[nodiscard]] Family family() const { return family_; }

    [[nodiscard]] double operator()(double t, double x, double y, std::span<const double> z = {}) const {
        switch (family_) {
            case Family::constant: return c_;
            case Family::linear:
            case Family::affine: {
                double v = c_ + a_t_ * t + a_x_ * x + a_y_ * y;
                const std::size_t n = std::min(z.size(), a_z_.size());
                for (std::size_t k = 0; k < n; ++k) v += a_z_[k] * z[k];
                return v;
            }
            case Family::sine: return c_ + amp_ * std::sin(freq_ * pick(t, x, y) + phase_);
            case Family::polynomial: {
                const double v = pick(t, x, y);
                double acc = 0.0;
                for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) acc = acc * v + *it;
                return acc;
            }
        }
        return 0.0;
    }

    /// Single-argument form used for u0 and sigma(x).
    [[nodiscard]] double operator()(double x) const { return (*this)(0.0, x, 0.0); }

    /// Analytic partial derivative in y.
    [[nodiscard]] double dy(double t, double x, double y) const {
        switch (family_) {
            case Family::constant: return 0.0;
            case Family::linear:
            case Family::affine: return a_y_;
            case Family::sine: return var_ == Var::y ? amp_ * freq_ * std::cos(freq_ * y + phase_) : 0.0;
            case Family::polynomial: {
                if (var_ != Var::y) return 0.0;
                double acc = 0.0;
                for (std::size_t k = poly_.size(); k-- > 1;) acc = acc * y + static_cast<double>(k) * poly_[k];
                return acc;
            }
        }
        (void)t;
        (void)x;
        return 0.0;
    }

    /// True when the function ignores x (then the Doss flow is x-independent).
    [[nodiscard]] bool independent_of_x() const {
        switch (family_) {
            case Family::constant: return true;
            case Family::linear:
            case Family::affine: return a_x_ == 0.0;
            case Family::sine: return var_ != Var::x || amp_ == 0.0;
            case Family::polynomial: return var_ != Var::x || poly_.size() <= 1;
        }
        return false;
    }

    [[nodiscard]] bool is_zero() const {
        switch (family_) {
            case Family::constant: return c_ == 0.0;
            case Family::linear:
            case Family::affine: {
                bool z = c_ == 0.0 && a_t_ == 0.0 && a_x_ == 0.0 && a_y_ == 0.0;
                for (double a : a_z_) z = z && a == 0.0;
                return z;
            }
            case Family::sine: return amp_ == 0.0 && c_ == 0.0;
            case Family::polynomial: {
                for (double a : poly_)
                    if (a != 0.0) return false;
                return true;
            }
        }
        return false;
    }

    /// Declared global Lipschitz constant in (x, y, z); infinity when the
    /// family is not globally Lipschitz.
    [[nodiscard]] double lipschitz() const {
        switch (family_) {
            case Family::constant: return 0.0;
            case Family::linear:
            case Family::affine: {
                double s = std::abs(a_x_) + std::abs(a_y_);
                for (double a : a_z_) s += std::abs(a);
                return s;
            }
            case Family::sine: return var_ == Var::t ? 0.0 : std::abs(amp_ * freq_);
            case Family::polynomial:
                if (poly_.size() <= 1) return 0.0;
                return poly_.size() == 2 && var_ != Var::t ? std::abs(poly_[1]) : std::numeric_limits<double>::infinity();
        }
        return 0.0;
    }

private:
    [[nodiscard]] double pick(double t, double x, double y) const {
        switch (var_) {
            case Var::t: return t;
            case Var::x: return x;
            case Var::y: return y;
        }
        return x;
    }

    Family family_ = Family::constant;
    Var var_ = Var::x;
    double c_ = 0.0;
    double a_t_ = 0.0, a_x_ = 0.0, a_y_ = 0.0;
    std::vector<double> a_z_;
    double amp_ = 0.0, freq_ = 0.0, phase_ = 0.0;
    std::vector<double> poly_;
};

/// Data of the boundary value problem
///   du/dt + L u + f(t, x, u, (u^1_k)) + g(t, x, u) dB/dt = 0   in Theta,
///   du/dn + phi(t, x, u) = 0                                   on the boundary,
///   u(T, .) = u0.
struct ProblemSpec {
    CoefficientFn f;
    CoefficientFn g;
    CoefficientFn phi;
    CoefficientFn u0;
    CoefficientFn sigma_coef = CoefficientFn::constant(1.0);
    LevyTriplet triplet;
    DomainSpec dom;
    double horizon = 1.0;
};

} // namespace lbs
