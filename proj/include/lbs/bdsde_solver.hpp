#pragma once

// Backward regression Monte Carlo for the reflected backward equations
//   Y_s = u0(X_T) + int f dr + int phi dA + int g dB - sum_k int Z^(k) dH^(k)
// (doubly stochastic, conditional on one Brownian path B) and for the
// transformed equation with (f~, phi~) and no B-integral.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lbs/cloud.hpp"
#include "lbs/coefficients.hpp"
#include "lbs/doss_flow.hpp"
#include "lbs/errors.hpp"
#include "lbs/parallel.hpp"
#include "lbs/regression.hpp"
#include "lbs/registry.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

struct SolverConfig {
    RegressionBasis reg;
    bool picard = false;
    std::size_t batches = 10;  ///< sub-clouds for the standard error; 0 disables
    unsigned threads = 1;
};

struct BDSDESolution {
    std::vector<double> grid;
    int order = 0;
    std::size_t n_paths = 0;
    DomainSpec dom;
    CoefficientFn terminal;
    std::vector<RegressionFit> y_fits;  ///< steps 0..N-1; step N is the terminal condition
    std::vector<RegressionFit> z_fits;  ///< steps 0..N-1, one target per k
    std::vector<std::vector<RegressionFit>> batch_y_fits;  ///< [batch][step]
    std::vector<double> mean_y;         ///< cloud mean of Y_i
    std::vector<double> mean_y_stderr;  ///< batch-means standard error of mean_y
    double sup_y = 0.0;                 ///< max_i max_p |Y_i(X_i^p)|
    double z_energy = 0.0;              ///< sum_i mean_p |Z_i(X_i^p)|^2 dt
    double max_condition = 0.0;

    [[nodiscard]] std::size_t steps() const { return grid.size() - 1; }

    [[nodiscard]] std::size_t step_index(double t) const {
        const std::size_t n = steps();
        const double h = (grid.back() - grid.front()) / static_cast<double>(n);
        const double r = (t - grid.front()) / h;
        const double k = std::round(r);
        if (k < 0.0 || k > static_cast<double>(n) || std::abs(r - k) > 1e-7)
            throw ArgumentError("time " + std::to_string(t) + " is not on the solver grid");
        return static_cast<std::size_t>(k);
    }

    /// Y_i(x) from the step-i regression (u0 at the terminal step).
    [[nodiscard]] double y_at(std::size_t i, double x) const { return i == steps() ? terminal(x) : y_fits[i](x); }
    [[nodiscard]] double z_at(std::size_t i, int k, double x) const {
        return z_fits[i](x, static_cast<std::size_t>(k - 1));
    }
};

struct FieldEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

namespace detail {

struct SweepResult {
    std::vector<RegressionFit> y_fits, z_fits;
    std::vector<double> mean_y;
    double sup_y = 0.0, z_energy = 0.0, max_condition = 0.0;
};

/// One backward sweep over paths offset, offset + stride, ...
/// driver(t, x, y, z), boundary(t, x, y), noise(t, x, y) with noise
/// multiplying the known increment db[i] (skipped when has_noise is false).
template <class Driver, class Boundary, class Noise>
SweepResult backward_sweep(const PathCloud& cloud, const ProblemSpec& spec, const SolverConfig& cfg, std::size_t offset,
                           std::size_t stride, Driver&& driver, Boundary&& boundary, Noise&& noise, bool has_noise,
                           std::span<const double> db) {
    const std::size_t N = cloud.n_steps;
    const std::size_t K = static_cast<std::size_t>(cloud.order);
    const std::size_t n = (cloud.n_paths - offset + stride - 1) / stride;
    auto path = [&](std::size_t m) { return offset + m * stride; };

    SweepResult out;
    out.y_fits.resize(N);
    out.z_fits.resize(N);
    out.mean_y.assign(N + 1, 0.0);

    std::vector<double> x_next(n), x_cur(n), u_next(n), u_cur(n), vt(n * K), ut(n), v_cur(n * K);
    {
        const auto xs = cloud.x_at(N);
        for (std::size_t m = 0; m < n; ++m) {
            x_next[m] = xs[path(m)];
            u_next[m] = spec.u0(x_next[m]);
        }
    }
    auto track = [&](std::size_t i, std::span<const double> u) {
        double s = 0.0;
        for (double v : u) {
            if (!std::isfinite(v)) throw SolverError("solver: non-finite Y at step " + std::to_string(i));
            out.sup_y = std::max(out.sup_y, std::abs(v));
            s += v;
        }
        out.mean_y[i] = s / static_cast<double>(u.size());
    };
    track(N, u_next);

    for (std::size_t i = N; i-- > 0;) {
        const double t0 = cloud.grid[i], t1 = cloud.grid[i + 1], dt = cloud.dt(i);
        const auto xs = cloud.x_at(i);
        const auto das = cloud.da_at(i);
        for (std::size_t m = 0; m < n; ++m) x_cur[m] = xs[path(m)];

        // Z regresses (U_{i+1} - E[U_{i+1} | X_i]) dH / dt; the centring leaves the
        // conditional mean unchanged and removes most of the variance.
        const RegressionFit centre = fit_regression(cfg.reg, spec.dom, x_cur, u_next, 1, cfg.threads);
        for (std::size_t m = 0; m < n; ++m) ut[m] = u_next[m] - centre(x_cur[m]);
        for (std::size_t k = 0; k < K; ++k) {
            const auto dh = cloud.dh_at(i, static_cast<int>(k + 1));
            for (std::size_t m = 0; m < n; ++m) vt[m * K + k] = ut[m] * dh[path(m)] / dt;
        }
        out.z_fits[i] = fit_regression(cfg.reg, spec.dom, x_cur, vt, K, cfg.threads);
        const RegressionFit& zf = out.z_fits[i];

        const double dbi = has_noise ? db[i] : 0.0;
        double z2 = 0.0;
        std::vector<double> z2_chunk(chunk_count(n), 0.0);
        parallel_chunks(n, cfg.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
            std::vector<double> z(K);
            double acc = 0.0;
            for (std::size_t m = b; m < e; ++m) {
                for (std::size_t k = 0; k < K; ++k) {
                    z[k] = zf(x_cur[m], k);
                    acc += z[k] * z[k];
                }
                std::copy(z.begin(), z.end(), v_cur.begin() + static_cast<std::ptrdiff_t>(m * K));
                double target = u_next[m] + driver(t1, x_next[m], u_next[m], std::span<const double>(z)) * dt;
                const double da = das[path(m)];
                if (da > 0.0) target += boundary(t1, x_next[m], u_next[m]) * da;
                if (has_noise) target += noise(t1, x_next[m], u_next[m]) * dbi;
                ut[m] = target;
            }
            z2_chunk[c] = acc;
        });
        for (double a : z2_chunk) z2 += a;
        out.z_energy += z2 / static_cast<double>(n) * dt;

        out.y_fits[i] = fit_regression(cfg.reg, spec.dom, x_cur, ut, 1, cfg.threads);

        if (cfg.picard) {
            const RegressionFit first = out.y_fits[i];
            parallel_chunks(n, cfg.threads, [&](std::size_t, std::size_t b, std::size_t e) {
                for (std::size_t m = b; m < e; ++m) {
                    const std::span<const double> z(v_cur.data() + m * K, K);
                    const double y = first(x_cur[m]);
                    double target = u_next[m] + driver(t0, x_cur[m], y, z) * dt;
                    const double da = das[path(m)];
                    if (da > 0.0) target += boundary(t1, x_next[m], u_next[m]) * da;
                    if (has_noise) target += noise(t1, x_next[m], u_next[m]) * dbi;
                    ut[m] = target;
                }
            });
            out.y_fits[i] = fit_regression(cfg.reg, spec.dom, x_cur, ut, 1, cfg.threads);
        }
        out.max_condition = std::max({out.max_condition, out.y_fits[i].condition_number, zf.condition_number});

        const RegressionFit& yf = out.y_fits[i];
        for (std::size_t m = 0; m < n; ++m) u_cur[m] = yf(x_cur[m]);
        track(i, u_cur);
        std::swap(u_next, u_cur);
        std::swap(x_next, x_cur);
    }
    if (!std::isfinite(out.z_energy)) throw SolverError("solver: non-finite Z energy");
    return out;
}

template <class Driver, class Boundary, class Noise>
BDSDESolution solve_generic(const PathCloud& cloud, const ProblemSpec& spec, const SolverConfig& cfg, Driver&& driver,
                            Boundary&& boundary, Noise&& noise, bool has_noise, std::span<const double> db) {
    if (cloud.n_steps == 0 || cloud.n_paths == 0) throw ArgumentError("solver: empty cloud");
    BDSDESolution sol;
    sol.grid = cloud.grid;
    sol.order = cloud.order;
    sol.n_paths = cloud.n_paths;
    sol.dom = spec.dom;
    sol.terminal = spec.u0;

    SweepResult full = backward_sweep(cloud, spec, cfg, 0, 1, driver, boundary, noise, has_noise, db);
    sol.y_fits = std::move(full.y_fits);
    sol.z_fits = std::move(full.z_fits);
    sol.mean_y = std::move(full.mean_y);
    sol.sup_y = full.sup_y;
    sol.z_energy = full.z_energy;
    sol.max_condition = full.max_condition;
    sol.mean_y_stderr.assign(cloud.n_steps + 1, 0.0);

    const std::size_t B = cfg.batches;
    if (B >= 2 && cloud.n_paths >= 2 * B) {
        std::vector<std::vector<double>> batch_means;
        for (std::size_t b = 0; b < B; ++b) {
            SweepResult r = backward_sweep(cloud, spec, cfg, b, B, driver, boundary, noise, has_noise, db);
            sol.batch_y_fits.push_back(std::move(r.y_fits));
            batch_means.push_back(std::move(r.mean_y));
        }
        for (std::size_t i = 0; i <= cloud.n_steps; ++i) {
            double mean = 0.0, var = 0.0;
            for (const auto& bm : batch_means) mean += bm[i];
            mean /= static_cast<double>(B);
            for (const auto& bm : batch_means) var += (bm[i] - mean) * (bm[i] - mean);
            var /= static_cast<double>(B - 1);
            sol.mean_y_stderr[i] = std::sqrt(var / static_cast<double>(B));
        }
    }
    return sol;
}

/// dB over each solver step of the cloud, read from the frozen path.
inline std::vector<double> solver_increments(const PathCloud& cloud, const BrownianPath& b) {
    std::vector<double> db(cloud.n_steps);
    for (std::size_t i = 0; i < cloud.n_steps; ++i) db[i] = b.at(cloud.grid[i + 1]) - b.at(cloud.grid[i]);
    return db;
}

}  // namespace detail

/// Transformed equation: driver f~, boundary term phi~, no B-integral.
inline BDSDESolution solve_gbsdel(const ProblemSpec& spec, const FlowEvaluator& ev, const OrthoBasis& basis,
                                  const PathCloud& cloud, const SolverConfig& cfg) {
    if (cloud.order != basis.effective_order) throw ConsistencyError("solve_gbsdel: cloud and basis orders differ");
    auto driver = [&](double t, double x, double y, std::span<const double> z) {
        return f_tilde(spec, ev, basis, t, x, y, z);
    };
    auto boundary = [&](double t, double x, double y) { return phi_tilde(spec, ev, t, x, y); };
    auto none = [](double, double, double) { return 0.0; };
    return detail::solve_generic(cloud, spec, cfg, driver, boundary, none, false, {});
}

/// Doubly stochastic equation conditional on the frozen path `b`.
inline BDSDESolution solve_gbdsdel(const ProblemSpec& spec, const BrownianPath& b, const OrthoBasis& basis,
                                   const PathCloud& cloud, const SolverConfig& cfg) {
    if (cloud.order != basis.effective_order) throw ConsistencyError("solve_gbdsdel: cloud and basis orders differ");
    auto driver = [&](double t, double x, double y, std::span<const double> z) { return spec.f(t, x, y, z); };
    auto boundary = [&](double t, double x, double y) { return spec.phi(t, x, y); };
    auto noise = [&](double t, double x, double y) { return spec.g(t, x, y); };
    const bool has_noise = !spec.g.is_zero();
    const std::vector<double> db = has_noise ? detail::solver_increments(cloud, b) : std::vector<double>{};
    return detail::solve_generic(cloud, spec, cfg, driver, boundary, noise, has_noise, db);
}

/// Reads Y at (t, x) with the batch-means standard error.
inline FieldEstimate estimate_field_value(const BDSDESolution& sol, double t, double x) {
    const std::size_t i = sol.step_index(t);
    if (!sol.dom.contains(x)) throw ArgumentError("estimate_field_value: x = " + std::to_string(x) + " outside domain");
    FieldEstimate e;
    e.value = sol.y_at(i, x);
    const std::size_t B = sol.batch_y_fits.size();
    if (i == sol.steps() || B < 2) return e;
    double mean = 0.0, var = 0.0;
    for (const auto& b : sol.batch_y_fits) mean += b[i](x);
    mean /= static_cast<double>(B);
    for (const auto& b : sol.batch_y_fits) var += (b[i](x) - mean) * (b[i](x) - mean);
    e.std_error = std::sqrt(var / static_cast<double>(B - 1) / static_cast<double>(B));
    return e;
}

} // namespace lbs
