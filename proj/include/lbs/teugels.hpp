#pragma once

// Teugels martingales: orthonormal polynomials q_{i-1} with respect to
//   mu(dx) = x^2 nu(dx) + sigma^2 delta_0(dx)
// and the martingales H^(i) = sum_k c_{i,k} (L^k_t - m_k t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"

namespace lbs {

/// Relative pivot below which a monomial is treated as dependent on the
/// previous ones (mu has finite support, so the family is finite).
inline constexpr double kPivotTolerance = 1e-12;

struct OrthoBasis {
    int requested_order = 0;
    int effective_order = 0;
    /// coeffs[i][k] is the coefficient of x^k in q_i (i.e. c_{i+1,k+1});
    /// row i has i + 1 entries and coeffs[i][i] > 0.
    std::vector<std::vector<double>> coeffs;
    std::uint64_t triplet_fingerprint = 0;
    double gram_residual = 0.0;  ///< max |<q_i, q_j>_mu - delta_ij| by direct quadrature

    /// c_{i,k} with the 1-based indexing 1 <= k <= i <= K_eff.
    [[nodiscard]] double c(int i, int k) const { return coeffs[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)]; }

    /// q_{i}(x), 0 <= i < K_eff.
    [[nodiscard]] double q(int i, double x) const {
        const auto& row = coeffs[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (auto it = row.rbegin(); it != row.rend(); ++it) acc = acc * x + *it;
        return acc;
    }
};

/// Moment matrix G_mn = <x^m, x^n>_mu, 0 <= m, n < K.
inline std::vector<double> moment_matrix(const LevyTriplet& t, int order) {
    const auto k = static_cast<std::size_t>(order);
    std::vector<double> g(k * k, 0.0);
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t n = 0; n < k; ++n) {
            double s = 0.0;
            for (const auto& a : t.atoms) s += a.lambda * std::pow(a.y, static_cast<int>(m + n + 2));
            g[m * k + n] = s;
        }
    g[0] += t.sigma_gauss * t.sigma_gauss;
    return g;
}

/// <p, q>_mu evaluated on the support of mu (independent of the moment matrix).
template <class F, class G>
double mu_inner(const LevyTriplet& t, F&& f, G&& g) {
    double s = t.sigma_gauss * t.sigma_gauss * f(0.0) * g(0.0);
    for (const auto& a : t.atoms) s += a.lambda * a.y * a.y * f(a.y) * g(a.y);
    return s;
}

inline double gram_residual(const OrthoBasis& b, const LevyTriplet& t) {
    double worst = 0.0;
    for (int i = 0; i < b.effective_order; ++i)
        for (int j = 0; j <= i; ++j) {
            const double ip = mu_inner(t, [&](double x) { return b.q(i, x); }, [&](double x) { return b.q(j, x); });
            worst = std::max(worst, std::abs(ip - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

/// Modified Gram-Schmidt (two passes) of 1, x, x^2, ... in the inner product
/// given by the moment matrix, truncated at the numerical rank of mu.
inline OrthoBasis build_basis(const LevyTriplet& t, int requested_order) {
    if (requested_order < 1) throw ArgumentError("build_basis: requested order must be >= 1");
    if (t.is_degenerate()) throw DegenerateDriverError();

    const auto k = static_cast<std::size_t>(requested_order);
    const auto g = moment_matrix(t, requested_order);
    auto inner = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            if (u[m] == 0.0) continue;
            for (std::size_t n = 0; n < k; ++n) s += u[m] * g[m * k + n] * v[n];
        }
        return s;
    };

    OrthoBasis basis;
    basis.requested_order = requested_order;
    basis.triplet_fingerprint = t.fingerprint();
    std::vector<std::vector<double>> q;  // dense length-k coefficient vectors
    double max_pivot = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
        const double own = g[m * k + m];
        if (!(own > 0.0)) break;
        std::vector<double> v(k, 0.0);
        v[m] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& qj : q) {
                const double proj = inner(v, qj);
                for (std::size_t n = 0; n < k; ++n) v[n] -= proj * qj[n];
            }
        const double norm2 = inner(v, v);
        const double pivot = norm2 / own;
        if (!(norm2 > 0.0) || (m > 0 && pivot < kPivotTolerance * max_pivot)) break;
        max_pivot = std::max(max_pivot, pivot);
        const double scale = 1.0 / std::sqrt(norm2);
        for (auto& c : v) c *= scale;
        q.push_back(std::move(v));
    }
    if (q.empty()) throw DegenerateDriverError();

    basis.effective_order = static_cast<int>(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) basis.coeffs.emplace_back(q[i].begin(), q[i].begin() + static_cast<std::ptrdiff_t>(i + 1));
    basis.gram_residual = gram_residual(basis, t);
    return basis;
}

/// p_i(x) = x q_{i-1}(x), 1 <= i <= K_eff.
inline double p_poly(const OrthoBasis& b, int i, double x) {
    if (i < 1 || i > b.effective_order) throw ArgumentError("p_poly: index out of range");
    return x * b.q(i - 1, x);
}

/// Per-step Teugels increments of one path, row-major [step][i].
struct TeugelsIncrements {
    std::size_t steps = 0;
    int order = 0;
    std::vector<double> dh;

    [[nodiscard]] std::span<const double> at(std::size_t step) const {
        return std::span<const double>(dh).subspan(step * static_cast<std::size_t>(order), static_cast<std::size_t>(order));
    }
};

/// Moments m_1..m_K used as compensators.
inline std::vector<double> compensators(const LevyTriplet& t, int order) {
    std::vector<double> m(static_cast<std::size_t>(order));
    for (int i = 1; i <= order; ++i) m[static_cast<std::size_t>(i - 1)] = moment(t, i);
    return m;
}

/// dH^(i) over one step from the compensated power-jump increments
/// dY^(k) = dL^k - m_k dt.
inline void step_increments(const LevyPath& path, std::size_t step, const OrthoBasis& b,
                            std::span<const double> m, std::span<double> out) {
    const int order = b.effective_order;
    const double dt = path.dt(step);
    double dy[64];
    if (order > 64) throw ArgumentError("teugels order above 64 is not supported");
    dy[0] = path.increment(step) - m[0] * dt;
    for (int k = 2; k <= order; ++k) {
        double s = 0.0;
        for (const auto& j : path.jumps_in_step(step)) s += std::pow(j.size, k);
        dy[k - 1] = s - m[static_cast<std::size_t>(k - 1)] * dt;
    }
    for (int i = 1; i <= order; ++i) {
        double h = 0.0;
        for (int k = 1; k <= i; ++k) h += b.c(i, k) * dy[k - 1];
        out[static_cast<std::size_t>(i - 1)] = h;
    }
}

inline TeugelsIncrements teugels_increments(const LevyPath& path, const OrthoBasis& b, const LevyTriplet& t) {
    if (b.triplet_fingerprint != t.fingerprint())
        throw ConsistencyError("teugels_increments: basis was built from a different triplet");
    if (path.sigma_gauss != t.sigma_gauss || path.drift_pathwise != t.drift_pathwise)
        throw ConsistencyError("teugels_increments: path was simulated from a different triplet");
    TeugelsIncrements inc;
    inc.steps = path.steps();
    inc.order = b.effective_order;
    inc.dh.resize(inc.steps * static_cast<std::size_t>(inc.order));
    const auto m = compensators(t, b.effective_order);
    for (std::size_t s = 0; s < inc.steps; ++s)
        step_increments(path, s, b, m,
                        std::span<double>(inc.dh).subspan(s * static_cast<std::size_t>(inc.order), static_cast<std::size_t>(inc.order)));
    return inc;
}

} // namespace lbs
