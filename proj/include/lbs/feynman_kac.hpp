#pragma once

// Solution field u(t, x) = Y_t^{t,x}: Monte Carlo read-out, a Crank-Nicolson
// oracle for the deterministic case g = 0, and convergence sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "lbs/bdsde_solver.hpp"
#include "lbs/cloud.hpp"
#include "lbs/doss_flow.hpp"
#include "lbs/errors.hpp"
#include "lbs/registry.hpp"
#include "lbs/rng.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

/// Monte Carlo parameters shared by field evaluation and convergence sweeps.
struct McSetup {
    std::size_t n_paths = 10000;
    double dt = 1e-2;
    std::uint64_t seed = 1;
    int teugels_order = 2;
    SolverConfig solver;
};

struct SolutionField {
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    std::vector<double> values;     ///< [t][x]
    std::vector<double> std_error;  ///< [t][x]
    std::uint64_t seed = 0;
    std::string config_hash;

    [[nodiscard]] double at(std::size_t it, std::size_t ix) const { return values[it * x_grid.size() + ix]; }
    [[nodiscard]] double err(std::size_t it, std::size_t ix) const { return std_error[it * x_grid.size() + ix]; }
};

enum class FieldRoute { direct, transformed };

namespace detail {

inline void check_field_grids(const ProblemSpec& spec, const std::vector<double>& t_grid, const std::vector<double>& x_grid) {
    if (t_grid.empty() || x_grid.empty()) throw ArgumentError("field: empty grid");
    for (double t : t_grid)
        if (t < -1e-12 || t > spec.horizon + 1e-12) throw ArgumentError("field: t = " + std::to_string(t) + " outside [0, T]");
    for (double x : x_grid)
        if (!spec.dom.contains(x)) throw ArgumentError("field: x = " + std::to_string(x) + " outside the domain");
}

inline bool is_terminal(const ProblemSpec& spec, double t) { return std::abs(t - spec.horizon) <= 1e-12 * std::max(1.0, spec.horizon); }

}  // namespace detail

/// One stratified cloud per t-level started at that time; u(t, .) is read
/// from the step-0 regression. The direct route solves the doubly stochastic
/// equation on `brownian` (required when g is not zero); the transformed
/// route solves the equation on (f~, phi~) and maps U through eta.
inline SolutionField evaluate_field(const ProblemSpec& spec, const McSetup& setup, const std::vector<double>& t_grid,
                                    const std::vector<double>& x_grid,
                                    std::shared_ptr<const BrownianPath> brownian = nullptr,
                                    FieldRoute route = FieldRoute::direct, const FlowEvaluator* ev = nullptr) {
    detail::check_field_grids(spec, t_grid, x_grid);
    if (!spec.g.is_zero() && route == FieldRoute::direct && !brownian)
        throw ArgumentError("field: a Brownian path is required when g is not zero");
    if (route == FieldRoute::transformed && ev == nullptr) throw ArgumentError("field: transformed route needs a flow");
    for (double t : t_grid) {
        const double r = (spec.horizon - t) / setup.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
            throw ArgumentError("field: T - t = " + std::to_string(spec.horizon - t) + " is not a multiple of dt = " +
                                std::to_string(setup.dt));
    }
    const OrthoBasis basis = build_basis(spec.triplet, setup.teugels_order);
    const BrownianPath zero_path = linear_brownian(spec.horizon, spec.horizon, 0.0);

    SolutionField field;
    field.t_grid = t_grid;
    field.x_grid = x_grid;
    field.seed = setup.seed;
    field.values.assign(t_grid.size() * x_grid.size(), 0.0);
    field.std_error.assign(t_grid.size() * x_grid.size(), 0.0);
    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        const double t = t_grid[it];
        double* row = field.values.data() + it * x_grid.size();
        double* err = field.std_error.data() + it * x_grid.size();
        if (detail::is_terminal(spec, t)) {
            for (std::size_t ix = 0; ix < x_grid.size(); ++ix) row[ix] = spec.u0(x_grid[ix]);
            continue;
        }
        CloudConfig cc;
        cc.n_paths = setup.n_paths;
        cc.dt = setup.dt;
        cc.t0 = t;
        cc.seed = splitmix64(setup.seed + 0x9E3779B97F4A7C15ull * (it + 1));
        cc.initial = InitialLaw::stratified;
        cc.threads = setup.solver.threads;
        const PathCloud cloud = simulate_cloud(spec, basis, cc);
        const BDSDESolution sol = route == FieldRoute::direct
                                      ? solve_gbdsdel(spec, brownian ? *brownian : zero_path, basis, cloud, setup.solver)
                                      : solve_gbsdel(spec, *ev, basis, cloud, setup.solver);
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const FieldEstimate e = estimate_field_value(sol, t, x_grid[ix]);
            if (route == FieldRoute::direct) {
                row[ix] = e.value;
                err[ix] = e.std_error;
            } else {
                const FlowDerivatives d = ev->flow_derivatives(t, x_grid[ix], e.value);
                row[ix] = d.eta;
                err[ix] = e.std_error * std::abs(d.dy);
            }
        }
    }
    return field;
}

struct OracleConfig {
    std::size_t nx = 400;
    std::size_t nt = 400;
    bool clamp_jumps = true;  ///< jump targets outside [l, r] are projected onto the boundary
};

/// Crank-Nicolson solution of du/dt + L u + f(t, x, u, (u^1_k)) = 0 with
/// du/dn + phi(t, x, u) = 0 (inward normal) and u(T) = u0. The local part
/// (drift b~ s, diffusion 1/2 sigma_L^2 s^2) is implicit; jump sums, f and the
/// boundary data form an explicit source with one trapezoidal corrector.
/// The z-argument of f is u^1_k plus, for k = 1, the Brownian term
/// c_{1,1} sigma_L^2 s(x) du/dx.
inline SolutionField oracle_pide(const ProblemSpec& spec, const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                                 const OracleConfig& cfg = {}) {
    if (!spec.g.is_zero()) throw ArgumentError("oracle_pide: requires g = 0");
    if (cfg.nx < 4 || cfg.nt < 1) throw ConfigError("oracle_pide: need nx >= 4 and nt >= 1");
    detail::check_field_grids(spec, t_grid, x_grid);

    const std::size_t nx = cfg.nx, nt = cfg.nt;
    const double l = spec.dom.l, r = spec.dom.r, h = (r - l) / static_cast<double>(nx);
    const double T = spec.horizon, dt = T / static_cast<double>(nt);
    const auto& atoms = spec.triplet.atoms;
    const double sg = spec.triplet.sigma_gauss;

    std::vector<double> xs(nx + 1), a(nx + 1), b(nx + 1);
    for (std::size_t i = 0; i <= nx; ++i) {
        xs[i] = l + h * static_cast<double>(i);
        const double s = spec.sigma_coef(xs[i]);
        a[i] = 0.5 * sg * sg * s * s;
        b[i] = spec.triplet.drift_pathwise * s;
    }
    xs[nx] = r;

    OrthoBasis basis;
    const bool has_basis = !spec.triplet.is_degenerate();
    if (has_basis) basis = build_basis(spec.triplet, std::max<int>(1, static_cast<int>(atoms.size()) + 1));
    const std::size_t K = has_basis ? static_cast<std::size_t>(basis.effective_order) : 0;

    // Jump targets: interpolation cell, weight, and overshoot per (node, atom).
    struct Target {
        std::size_t cell;
        double w;
        double overshoot;
        double x;
    };
    std::vector<Target> targets((nx + 1) * atoms.size());
    std::vector<double> pk(atoms.size() * K);
    for (std::size_t j = 0; j < atoms.size(); ++j)
        for (std::size_t k = 0; k < K; ++k) pk[j * K + k] = p_poly(basis, static_cast<int>(k + 1), atoms[j].y);
    for (std::size_t i = 0; i <= nx; ++i) {
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const double raw = xs[i] + spec.sigma_coef(xs[i]) * atoms[j].y;
            if (!cfg.clamp_jumps && !spec.dom.contains(raw))
                throw RangeError("oracle_pide: jump target " + std::to_string(raw) +
                                 " leaves the grid; extend the domain by at least " +
                                 std::to_string(std::max(l - raw, raw - r)) + " or enable jump clamping");
            const double x = spec.dom.clamp(raw);
            const double pos = (x - l) / h;
            const std::size_t cell = std::min<std::size_t>(nx - 1, static_cast<std::size_t>(std::floor(pos)));
            targets[i * atoms.size() + j] = {cell, pos - static_cast<double>(cell), std::abs(raw - x), x};
        }
    }

    // Brownian covariation of u(X) with H^(1).
    const double gauss_z = K > 0 ? basis.c(1, 1) * sg * sg : 0.0;

    auto source = [&](double t, const std::vector<double>& u, std::vector<double>& s) {
        std::vector<double> z(K);
        const double phl = spec.phi(t, l, u[0]);
        const double phr = spec.phi(t, r, u[nx]);
        for (std::size_t i = 0; i <= nx; ++i) {
            double nonlocal = 0.0;
            std::fill(z.begin(), z.end(), 0.0);
            if (gauss_z != 0.0) {
                const double ux = i == 0 ? -phl : i == nx ? phr : (u[i + 1] - u[i - 1]) / (2.0 * h);
                z[0] = gauss_z * spec.sigma_coef(xs[i]) * ux;
            }
            for (std::size_t j = 0; j < atoms.size(); ++j) {
                const Target& tg = targets[i * atoms.size() + j];
                const double uj = (1.0 - tg.w) * u[tg.cell] + tg.w * u[tg.cell + 1];
                const double diff = atoms[j].lambda * (uj - u[i]);
                nonlocal += diff;
                for (std::size_t k = 0; k < K; ++k) z[k] += diff * pk[j * K + k];
                if (tg.overshoot > 0.0) nonlocal += atoms[j].lambda * spec.phi(t, tg.x, uj) * tg.overshoot;
            }
            s[i] = nonlocal + spec.f(t, xs[i], u[i], z);
        }
        s[0] += 2.0 * a[0] * phl / h - b[0] * phl;
        s[nx] += 2.0 * a[nx] * phr / h + b[nx] * phr;
    };

    // Tridiagonal local operator A.
    std::vector<double> lo(nx + 1, 0.0), di(nx + 1, 0.0), up(nx + 1, 0.0);
    const double h2 = h * h;
    for (std::size_t i = 1; i < nx; ++i) {
        lo[i] = a[i] / h2 - b[i] / (2.0 * h);
        di[i] = -2.0 * a[i] / h2;
        up[i] = a[i] / h2 + b[i] / (2.0 * h);
    }
    di[0] = -2.0 * a[0] / h2;
    up[0] = 2.0 * a[0] / h2;
    lo[nx] = 2.0 * a[nx] / h2;
    di[nx] = -2.0 * a[nx] / h2;

    auto apply_a = [&](const std::vector<double>& u, std::size_t i) {
        double v = di[i] * u[i];
        if (i > 0) v += lo[i] * u[i - 1];
        if (i < nx) v += up[i] * u[i + 1];
        return v;
    };
    // Solves (I - dt/2 A) x = rhs by the Thomas algorithm.
    std::vector<double> cp(nx + 1), dp(nx + 1);
    auto solve = [&](const std::vector<double>& rhs, std::vector<double>& out) {
        const double half = 0.5 * dt;
        double m = 1.0 - half * di[0];
        cp[0] = -half * up[0] / m;
        dp[0] = rhs[0] / m;
        for (std::size_t i = 1; i <= nx; ++i) {
            const double li = -half * lo[i];
            m = (1.0 - half * di[i]) - li * cp[i - 1];
            cp[i] = i < nx ? -half * up[i] / m : 0.0;
            dp[i] = (rhs[i] - li * dp[i - 1]) / m;
        }
        out[nx] = dp[nx];
        for (std::size_t i = nx; i-- > 0;) out[i] = dp[i] - cp[i] * out[i + 1];
    };

    std::vector<std::vector<double>> levels(nt + 1, std::vector<double>(nx + 1));
    for (std::size_t i = 0; i <= nx; ++i) levels[nt][i] = spec.u0(xs[i]);
    std::vector<double> s1(nx + 1), s0(nx + 1), rhs(nx + 1), pred(nx + 1);
    for (std::size_t n = nt; n-- > 0;) {
        const auto& un = levels[n + 1];
        const double t1 = dt * static_cast<double>(n + 1), t0 = dt * static_cast<double>(n);
        source(t1, un, s1);
        for (std::size_t i = 0; i <= nx; ++i) rhs[i] = un[i] + 0.5 * dt * apply_a(un, i) + dt * s1[i];
        solve(rhs, pred);
        source(t0, pred, s0);
        for (std::size_t i = 0; i <= nx; ++i) rhs[i] = un[i] + 0.5 * dt * apply_a(un, i) + 0.5 * dt * (s1[i] + s0[i]);
        solve(rhs, levels[n]);
    }

    auto interp_x = [&](const std::vector<double>& u, double x) {
        const double pos = (x - l) / h;
        const std::size_t c = std::min<std::size_t>(nx - 1, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
        const double w = pos - static_cast<double>(c);
        return (1.0 - w) * u[c] + w * u[c + 1];
    };
    SolutionField field;
    field.t_grid = t_grid;
    field.x_grid = x_grid;
    field.values.resize(t_grid.size() * x_grid.size());
    field.std_error.assign(t_grid.size() * x_grid.size(), 0.0);
    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        const double pos = std::clamp(t_grid[it] / dt, 0.0, static_cast<double>(nt));
        const std::size_t c = std::min<std::size_t>(nt - 1, static_cast<std::size_t>(std::floor(pos)));
        const double w = pos - static_cast<double>(c);
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const double x = x_grid[ix];
            const double v = detail::is_terminal(spec, t_grid[it])
                                 ? spec.u0(x)
                                 : (1.0 - w) * interp_x(levels[c], x) + w * interp_x(levels[c + 1], x);
            field.values[it * x_grid.size() + ix] = v;
        }
    }
    return field;
}

enum class SweepParameter { dt, n_paths, degree };

inline const char* sweep_parameter_name(SweepParameter p) {
    switch (p) {
        case SweepParameter::dt: return "dt";
        case SweepParameter::n_paths: return "n_paths";
        case SweepParameter::degree: return "degree";
    }
    return "?";
}

struct ConvergenceReport {
    SweepParameter parameter = SweepParameter::dt;
    std::vector<double> levels;
    std::vector<double> values;
    std::vector<double> std_errors;
    std::vector<double> errors;
    double reference = 0.0;
    double slope = std::numeric_limits<double>::quiet_NaN();  ///< least-squares slope of log error vs log level
};

/// Solves from the fixed start (0, x0) at every level. The error is
/// |Y_0 - reference| for dt and degree (reference = finest level, the last
/// one, when not finite) and the batch-means standard error for n_paths.
inline ConvergenceReport convergence_study(const ProblemSpec& spec, const McSetup& setup, SweepParameter parameter,
                                           const std::vector<double>& levels, double x0,
                                           double reference = std::numeric_limits<double>::quiet_NaN(),
                                           std::shared_ptr<const BrownianPath> brownian = nullptr) {
    if (levels.size() < 3) throw ArgumentError("convergence_study: need at least 3 levels");
    if (!spec.g.is_zero() && !brownian) throw ArgumentError("convergence_study: a Brownian path is required when g is not zero");
    const OrthoBasis basis = build_basis(spec.triplet, setup.teugels_order);
    const BrownianPath zero_path = linear_brownian(spec.horizon, spec.horizon, 0.0);

    ConvergenceReport rep;
    rep.parameter = parameter;
    rep.levels = levels;
    for (double level : levels) {
        McSetup s = setup;
        switch (parameter) {
            case SweepParameter::dt: s.dt = level; break;
            case SweepParameter::n_paths: s.n_paths = static_cast<std::size_t>(std::llround(level)); break;
            case SweepParameter::degree: s.solver.reg.degree = static_cast<int>(std::lround(level)); break;
        }
        CloudConfig cc;
        cc.n_paths = s.n_paths;
        cc.dt = s.dt;
        cc.seed = s.seed;
        cc.initial = InitialLaw::fixed;
        cc.x0 = x0;
        cc.threads = s.solver.threads;
        const PathCloud cloud = simulate_cloud(spec, basis, cc);
        const BDSDESolution sol = solve_gbdsdel(spec, brownian ? *brownian : zero_path, basis, cloud, s.solver);
        const FieldEstimate e = estimate_field_value(sol, 0.0, x0);
        rep.values.push_back(e.value);
        rep.std_errors.push_back(e.std_error);
    }
    rep.reference = std::isfinite(reference) ? reference : rep.values.back();
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double err = parameter == SweepParameter::n_paths ? rep.std_errors[i] : std::abs(rep.values[i] - rep.reference);
        rep.errors.push_back(err);
        if (err > 0.0 && levels[i] > 0.0) {
            lx.push_back(std::log(levels[i]));
            ly.push_back(std::log(err));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        if (sxx > 0.0) rep.slope = sxy / sxx;
    }
    return rep;
}

} // namespace lbs
