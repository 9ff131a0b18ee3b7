#pragma once

// Doss-Sussmann transformation: transformed coefficients f~ and phi~, the
// kernel theta^k, the (Y, Z) <-> (U, V) change of unknowns and numeric checks
// of the identities F = f~ and Phi = phi~ that make the transformed backward
// equation equivalent to the doubly stochastic one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lbs/doss_flow.hpp"
#include "lbs/errors.hpp"
#include "lbs/pide_operator.hpp"
#include "lbs/registry.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

/// theta^k(t, x, y, u) = [eta(t, x + s(x) u, y) - eta(t, x, y)] p_k(u).
inline double theta_k(const FlowEvaluator& ev, const OrthoBasis& basis, const CoefficientFn& sigma_coef, int k,
                      double t, double x, double y, double u) {
    if (k < 1 || k > basis.effective_order) throw ArgumentError("theta_k: index out of range");
    return (ev.solve_flow(t, x + sigma_coef(x) * u, y) - ev.solve_flow(t, x, y)) * p_poly(basis, k, u);
}

namespace detail {

inline void require_order(std::span<const double> z, const OrthoBasis& basis, const char* who) {
    if (z.size() != static_cast<std::size_t>(basis.effective_order))
        throw ArgumentError(std::string(who) + ": vector length must equal the Teugels order");
}

inline std::vector<double> jump_targets(const ProblemSpec& spec, double x) {
    const double s = spec.sigma_coef(x);
    std::vector<double> out(spec.triplet.atoms.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = x + s * spec.triplet.atoms[j].y;
    return out;
}

/// sum_j lambda_j [h_j - h_0 - slope s y_j] p_k(y_j) for k = 1..K.
inline std::vector<double> jump_projection(const ProblemSpec& spec, const OrthoBasis& basis, std::span<const double> h,
                                           double h0, double slope, double s) {
    std::vector<double> out(static_cast<std::size_t>(basis.effective_order), 0.0);
    for (int k = 1; k <= basis.effective_order; ++k) {
        double v = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) {
            const auto& a = spec.triplet.atoms[j];
            v += a.lambda * (h[j] - h0 - slope * s * a.y) * p_poly(basis, k, a.y);
        }
        out[static_cast<std::size_t>(k - 1)] = v;
    }
    return out;
}

}  // namespace detail

/// f~(t, x, y, z) = (1 / D_y eta) [ f(t, x, eta, (D_y eta z_k + s D_x eta 1{k=1} + I_k)_k)
///                  - 1/2 g D_y g (t, x, eta) + L_x eta + s D_xy eta (z_1 + I_1)
///                  + 1/2 D_yy eta sum_k |z_k + I_k|^2 ],
/// I_k = sum_j lambda_j theta^k(t, x, y, y_j), every eta-term at (t, x, y).
inline double f_tilde(const ProblemSpec& spec, const FlowEvaluator& ev, const OrthoBasis& basis, double t, double x,
                      double y, std::span<const double> z) {
    detail::require_order(z, basis, "f_tilde");
    const double s = spec.sigma_coef(x);
    const auto targets = detail::jump_targets(spec, x);
    std::vector<double> eta_j(targets.size());
    const FlowDerivatives d = ev.flow_derivatives(t, x, y, targets, eta_j);

    std::vector<double> theta(z.size(), 0.0);
    for (int k = 1; k <= basis.effective_order; ++k) {
        double v = 0.0;
        for (std::size_t j = 0; j < eta_j.size(); ++j)
            v += spec.triplet.atoms[j].lambda * (eta_j[j] - d.eta) * p_poly(basis, k, spec.triplet.atoms[j].y);
        theta[static_cast<std::size_t>(k - 1)] = v;
    }

    std::vector<double> zarg(z.size());
    double quad = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        zarg[k] = d.dy * z[k] + (k == 0 ? s * d.dx : 0.0) + theta[k];
        quad += (z[k] + theta[k]) * (z[k] + theta[k]);
    }
    const double lx_eta = l_op_from_derivatives(d.eta, d.dx, d.dxx, eta_j, spec.triplet, s);
    const double gdg = spec.g(t, x, d.eta) * spec.g.dy(t, x, d.eta);
    const double bracket = spec.f(t, x, d.eta, zarg) - 0.5 * gdg + lx_eta + s * d.dxy * (z[0] + theta[0]) + 0.5 * d.dyy * quad;
    return bracket / d.dy;
}

/// phi~(t, x, y) = (1 / D_y eta) [phi(t, x, eta) + D_x eta grad psi(x)], with
/// grad psi taken as the inward normal of the nearest boundary point.
inline double phi_tilde(const ProblemSpec& spec, const FlowEvaluator& ev, double t, double x, double y) {
    const FlowDerivatives d = ev.flow_derivatives(t, x, y);
    return (spec.phi(t, x, d.eta) + d.dx * spec.dom.inward_normal(x)) / d.dy;
}

struct TransformedPair {
    double value = 0.0;          ///< U (forward) or Y (backward)
    std::vector<double> martingale;  ///< V (forward) or Z (backward)
};

/// (Y, Z) -> (U, V): U = eps(s, X, Y),
/// V_k = D_y eps Z_k + s D_x eps 1{k=1} + sum_j lambda_j [eps(s, X + s y_j, Y) - U - D_x eps s y_j] p_k(y_j).
/// The eps-derivatives come from the eta-derivatives at (s, X, U).
inline TransformedPair transform_forward(const FlowEvaluator& ev, const OrthoBasis& basis, const ProblemSpec& spec,
                                         double s_time, double x, double y, std::span<const double> z) {
    detail::require_order(z, basis, "transform_forward");
    TransformedPair out;
    out.value = ev.inverse_flow(s_time, x, y);
    const InverseDerivatives e = invert_derivatives(ev.flow_derivatives(s_time, x, out.value));
    const double s = spec.sigma_coef(x);
    const auto targets = detail::jump_targets(spec, x);
    std::vector<double> eps_j(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) eps_j[j] = ev.inverse_flow(s_time, targets[j], y);
    const auto jumps = detail::jump_projection(spec, basis, eps_j, out.value, e.dx, s);
    out.martingale.resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) out.martingale[k] = e.dy * z[k] + (k == 0 ? s * e.dx : 0.0) + jumps[k];
    return out;
}

/// (U, V) -> (Y, Z): Y = eta(s, X, U),
/// Z_k = D_y eta V_k + s D_x eta 1{k=1} + sum_j lambda_j [eta(s, X + s y_j, U) - Y - D_x eta s y_j] p_k(y_j).
inline TransformedPair transform_backward(const FlowEvaluator& ev, const OrthoBasis& basis, const ProblemSpec& spec,
                                          double s_time, double x, double u, std::span<const double> v) {
    detail::require_order(v, basis, "transform_backward");
    const double s = spec.sigma_coef(x);
    const auto targets = detail::jump_targets(spec, x);
    std::vector<double> eta_j(targets.size());
    const FlowDerivatives d = ev.flow_derivatives(s_time, x, u, targets, eta_j);
    TransformedPair out;
    out.value = d.eta;
    const auto jumps = detail::jump_projection(spec, basis, eta_j, d.eta, d.dx, s);
    out.martingale.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out.martingale[k] = d.dy * v[k] + (k == 0 ? s * d.dx : 0.0) + jumps[k];
    return out;
}

/// Driver of the equation satisfied by U = eps(s, X, Y), written with the
/// eps-derivatives at (s, x, y) obtained by differencing the numerical inverse:
///   F = D_y eps f - m_1 s D_x eps - 1/2 D_yy eps |z|^2 - s D_xy eps z_1
///       - 1/2 sigma_L^2 s^2 D_xx eps - 1/2 D_y eps g D_y g
///       + sum_j lambda_j [eps(s, x + s y_j, y) - eps(s, x, y) - D_x eps s y_j].
inline double transformed_driver(const ProblemSpec& spec, const FlowEvaluator& ev, const OrthoBasis& basis,
                                 double s_time, double x, double y, std::span<const double> z) {
    detail::require_order(z, basis, "transformed_driver");
    const InverseDerivatives e = ev.inverse_derivatives_fd(s_time, x, y);
    const double s = spec.sigma_coef(x);
    const double sg = spec.triplet.sigma_gauss;
    double z2 = 0.0;
    for (double zk : z) z2 += zk * zk;
    const double eps0 = ev.inverse_flow(s_time, x, y);
    double jump = 0.0;
    for (const auto& a : spec.triplet.atoms)
        jump += a.lambda * (ev.inverse_flow(s_time, x + s * a.y, y) - eps0 - e.dx * s * a.y);
    return e.dy * spec.f(s_time, x, y, z) - moment(spec.triplet, 1) * s * e.dx - 0.5 * e.dyy * z2 - s * e.dxy * z[0] -
           0.5 * sg * sg * s * s * e.dxx - 0.5 * e.dy * spec.g(s_time, x, y) * spec.g.dy(s_time, x, y) + jump;
}

/// Largest violation of the inverse-function identities between the
/// eps-derivatives at (t, x, u = eta(t, x, y)), differenced from the numerical
/// inverse, and the eta-derivatives at (t, x, y):
///   eps(eta) = y,  D_y eps D_y eta = 1,  D_x eps = -D_y eps D_x eta,
///   D_yy eps = -D_yy eta (D_y eps)^3,
///   D_x eta (D_y eps)^2 D_yy eta - D_xy eps D_y eta = D_y eps D_xy eta,
///   -1/2 D_xx eps = D_xy eps D_x eta - 1/2 D_y eps D_yy eta (D_x eta D_y eps)^2 + 1/2 D_y eps D_xx eta.
inline double inverse_identity_residual(const FlowEvaluator& ev, double t, double x, double y) {
    const FlowDerivatives d = ev.flow_derivatives(t, x, y);
    const InverseDerivatives e = ev.inverse_derivatives_fd(t, x, d.eta);
    const double r[] = {
        std::abs(ev.inverse_flow(t, x, d.eta) - y),
        std::abs(e.dy * d.dy - 1.0),
        std::abs(e.dx + e.dy * d.dx),
        std::abs(e.dyy + d.dyy * e.dy * e.dy * e.dy),
        std::abs(d.dx * e.dy * e.dy * d.dyy - e.dxy * d.dy - e.dy * d.dxy),
        std::abs(-0.5 * e.dxx - (e.dxy * d.dx - 0.5 * e.dy * d.dyy * (d.dx * e.dy) * (d.dx * e.dy) + 0.5 * e.dy * d.dxx)),
    };
    double m = 0.0;
    for (double v : r) m = std::max(m, v);
    return m;
}

/// |F(s, X, Y, Z) - f~(s, X, U, V)| with (U, V) = transform_forward(Y, Z).
inline double check_f0_identity(const ProblemSpec& spec, const FlowEvaluator& ev, const OrthoBasis& basis,
                                double s_time, double x, double y, std::span<const double> z) {
    const double lhs = transformed_driver(spec, ev, basis, s_time, x, y, z);
    const TransformedPair uv = transform_forward(ev, basis, spec, s_time, x, y, z);
    return std::abs(lhs - f_tilde(spec, ev, basis, s_time, x, uv.value, uv.martingale));
}

/// |Phi(s, X, Y) - phi~(s, X, U)| with Phi = D_y eps phi - D_x eps grad psi.
inline double check_phi0_identity(const ProblemSpec& spec, const FlowEvaluator& ev, double s_time, double x, double y) {
    const InverseDerivatives e = ev.inverse_derivatives_fd(s_time, x, y);
    const double big_phi = e.dy * spec.phi(s_time, x, y) - e.dx * spec.dom.inward_normal(x);
    const double u = ev.inverse_flow(s_time, x, y);
    return std::abs(big_phi - phi_tilde(spec, ev, s_time, x, u));
}

} // namespace lbs
