#pragma once

// The integro-differential generator
//   L phi(x) = m_1 s(x) phi_x + 1/2 sigma_L^2 s(x)^2 phi_xx
//              + sum_j lambda_j [phi(x + s(x) y_j) - phi(x) - phi_x s(x) y_j]
// (s = sigma_coef, sigma_L = Gaussian coefficient of the driver), the jump
// functionals phi^1_k, the Neumann trace and the A_{f,g} residual for smooth
// candidate fields.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lbs/doss_flow.hpp"
#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"
#include "lbs/registry.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

struct SmoothField {
    std::function<double(double, double)> fn;
    double h_t = 1e-5;       ///< absolute time step
    double h_x_rel = 1e-4;   ///< h_x = h_x_rel * max(1, |x|)

    [[nodiscard]] double operator()(double t, double x) const { return fn(t, x); }
    [[nodiscard]] double hx(double x) const { return h_x_rel * std::max(1.0, std::abs(x)); }
    /// Central time derivative at (t, x).
    [[nodiscard]] double dt_at(double t, double x) const { return (fn(t + h_t, x) - fn(t - h_t, x)) / (2.0 * h_t); }
};

/// Builds a SmoothField with the default steps h_t = 1e-5 T.
inline SmoothField make_field(std::function<double(double, double)> fn, double horizon = 1.0) {
    SmoothField f;
    f.fn = std::move(fn);
    f.h_t = 1e-5 * horizon;
    return f;
}

/// L applied to a function given its value, first and second x-derivatives at
/// x, and its values at the jump targets x + s(x) y_j (one per atom).
inline double l_op_from_derivatives(double center, double d1, double d2, std::span<const double> jump_values,
                                    const LevyTriplet& triplet, double sigma_x) {
    const double sg = triplet.sigma_gauss;
    double v = moment(triplet, 1) * sigma_x * d1 + 0.5 * sg * sg * sigma_x * sigma_x * d2;
    for (std::size_t j = 0; j < triplet.atoms.size(); ++j) {
        const auto& a = triplet.atoms[j];
        v += a.lambda * (jump_values[j] - center - d1 * sigma_x * a.y);
    }
    return v;
}

/// Same, from central-difference stencil values at x and x +- h.
inline double l_op_from_values(double center, double plus, double minus, double h, std::span<const double> jump_values,
                               const LevyTriplet& triplet, double sigma_x) {
    const double d1 = (plus - minus) / (2.0 * h);
    const double d2 = (plus - 2.0 * center + minus) / (h * h);
    return l_op_from_derivatives(center, d1, d2, jump_values, triplet, sigma_x);
}

/// L phi at (t, x) for an arbitrary callable x -> phi(t, x).
template <class Fx>
double l_op_x(Fx&& phi, const LevyTriplet& triplet, double sigma_x, double x, double h) {
    std::vector<double> jumps(triplet.atoms.size());
    for (std::size_t j = 0; j < jumps.size(); ++j) jumps[j] = phi(x + sigma_x * triplet.atoms[j].y);
    return l_op_from_values(phi(x), phi(x + h), phi(x - h), h, jumps, triplet, sigma_x);
}

inline double l_op(const SmoothField& field, const LevyTriplet& triplet, const CoefficientFn& sigma_coef, double t,
                   double x) {
    return l_op_x([&](double y) { return field(t, y); }, triplet, sigma_coef(x), x, field.hx(x));
}

/// phi^1_k(t, x) = sum_j lambda_j [phi(t, x + s(x) y_j) - phi(t, x)] p_k(y_j).
inline double phi1_k(const SmoothField& field, const OrthoBasis& basis, const LevyTriplet& triplet,
                     const CoefficientFn& sigma_coef, int k, double t, double x) {
    if (k < 1 || k > basis.effective_order) throw ArgumentError("phi1_k: index out of range");
    const double s = sigma_coef(x);
    const double base = field(t, x);
    double v = 0.0;
    for (const auto& a : triplet.atoms) v += a.lambda * (field(t, x + s * a.y) - base) * p_poly(basis, k, a.y);
    return v;
}

/// du/dn + phi(t, x, u) at a boundary point, with a second-order one-sided
/// difference along the inward normal.
inline double neumann_residual(const SmoothField& field, const ProblemSpec& spec, double t, double x_boundary) {
    if (!spec.dom.on_boundary(x_boundary)) throw ArgumentError("neumann_residual: point is not on the boundary");
    const double n = spec.dom.inward_normal(x_boundary);
    const double h = field.hx(x_boundary);
    const double u0 = field(t, x_boundary);
    const double u1 = field(t, x_boundary + n * h);
    const double u2 = field(t, x_boundary + 2.0 * n * h);
    const double du_dn = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h);
    return du_dn + spec.phi(t, x_boundary, u0);
}

/// For Psi(t, x) = eta(t, x, phi(t, x)) returns
///   A_{f,g}(Psi) + D_y eta(t, x, phi) d_t phi,
/// with A_{f,g}(Psi) = L Psi + f(t, x, Psi, (Psi^1_k)) - 1/2 g D_y g (t, x, Psi).
/// Psi^1_1 also carries the Brownian term c_{1,1} sigma_L^2 s(x) d_x Psi, as the
/// Z^(1) of the backward equation does.
/// The sign of the time-derivative term follows the backward equation
/// du/dt + Lu + f = 0, so smooth solutions of the g = 0 problem give zero.
inline double a_fg_residual(const SmoothField& field, const ProblemSpec& spec, const FlowEvaluator& ev,
                            const OrthoBasis& basis, double t, double x) {
    auto psi = [&](double xx) { return ev.solve_flow(t, xx, field(t, xx)); };
    const double s = spec.sigma_coef(x);
    const double h = field.hx(x);
    const double center = psi(x);
    std::vector<double> jumps(spec.triplet.atoms.size());
    for (std::size_t j = 0; j < jumps.size(); ++j) jumps[j] = psi(x + s * spec.triplet.atoms[j].y);
    const double l_psi = l_op_from_values(center, psi(x + h), psi(x - h), h, jumps, spec.triplet, s);

    std::vector<double> z(static_cast<std::size_t>(basis.effective_order), 0.0);
    for (int k = 1; k <= basis.effective_order; ++k) {
        double v = 0.0;
        for (std::size_t j = 0; j < jumps.size(); ++j) {
            const auto& a = spec.triplet.atoms[j];
            v += a.lambda * (jumps[j] - center) * p_poly(basis, k, a.y);
        }
        z[static_cast<std::size_t>(k - 1)] = v;
    }
    // Brownian covariation of Psi(X) with H^(1).
    if (!z.empty()) {
        const double sg = spec.triplet.sigma_gauss;
        z[0] += basis.c(1, 1) * sg * sg * s * (psi(x + h) - psi(x - h)) / (2.0 * h);
    }
    const double gdg = spec.g(t, x, center) * spec.g.dy(t, x, center);
    const double a = l_psi + spec.f(t, x, center, z) - 0.5 * gdg;
    const double phi_val = field(t, x);
    const double dyeta = ev.flow_derivatives(t, x, phi_val).dy;
    return a + dyeta * field.dt_at(t, x);
}

} // namespace lbs
