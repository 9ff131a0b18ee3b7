#pragma once

// Monte Carlo cloud of reflected paths stored step-major (structure of
// arrays) for the backward regression sweep.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lbs/domain.hpp"
#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"
#include "lbs/parallel.hpp"
#include "lbs/registry.hpp"
#include "lbs/rng.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

enum class InitialLaw { fixed, stratified };

struct CloudConfig {
    std::size_t n_paths = 10000;
    double dt = 1e-2;
    double t0 = 0.0;
    std::uint64_t seed = 1;
    InitialLaw initial = InitialLaw::fixed;
    double x0 = 0.0;  ///< used when initial == fixed
    unsigned threads = 1;
};

struct PathCloud {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    int order = 0;
    std::vector<double> grid;
    std::vector<double> x;   ///< [(n_steps + 1) x n_paths]
    std::vector<double> da;  ///< [n_steps x n_paths]
    std::vector<double> dh;  ///< [n_steps x order x n_paths]

    [[nodiscard]] double dt(std::size_t i) const { return grid[i + 1] - grid[i]; }
    [[nodiscard]] std::span<const double> x_at(std::size_t i) const {
        return std::span<const double>(x).subspan(i * n_paths, n_paths);
    }
    [[nodiscard]] std::span<const double> da_at(std::size_t i) const {
        return std::span<const double>(da).subspan(i * n_paths, n_paths);
    }
    /// dH^(k) over step i for every path, k = 1..order.
    [[nodiscard]] std::span<const double> dh_at(std::size_t i, int k) const {
        return std::span<const double>(dh).subspan((i * static_cast<std::size_t>(order) + static_cast<std::size_t>(k - 1)) * n_paths,
                                                   n_paths);
    }
};

/// Initial state of path p. Stratified: one uniform draw in each of the
/// n_paths equal cells of [l, r].
inline double initial_state(const CloudConfig& cfg, const DomainSpec& dom, std::size_t p) {
    if (cfg.initial == InitialLaw::fixed) return cfg.x0;
    Engine rng = make_engine(StreamSeed{cfg.seed, p, StreamKind::initial_state});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double w = (dom.r - dom.l) / static_cast<double>(cfg.n_paths);
    return dom.clamp(dom.l + w * (static_cast<double>(p) + u(rng)));
}

/// Simulates the cloud on [t0, spec.horizon]. Path p uses the Levy stream
/// (seed, p), so the cloud is independent of the thread count.
inline PathCloud simulate_cloud(const ProblemSpec& spec, const OrthoBasis& basis, const CloudConfig& cfg) {
    if (cfg.n_paths == 0) throw ConfigError("cloud: n_paths must be >= 1");
    if (cfg.initial == InitialLaw::fixed && !spec.dom.contains(cfg.x0))
        throw ArgumentError("cloud: x0 = " + std::to_string(cfg.x0) + " outside domain");
    const double horizon = spec.horizon - cfg.t0;
    PathCloud c;
    c.n_paths = cfg.n_paths;
    c.n_steps = step_count(horizon, cfg.dt);
    c.order = basis.effective_order;
    c.grid = uniform_grid(cfg.t0, horizon, c.n_steps);
    const std::size_t n = c.n_paths, N = c.n_steps, K = static_cast<std::size_t>(c.order);
    c.x.resize((N + 1) * n);
    c.da.resize(N * n);
    c.dh.resize(N * K * n);
    const auto m = compensators(spec.triplet, c.order);
    auto sigma = [&](double x) { return spec.sigma_coef(x); };

    parallel_chunks(n, cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> inc(K);
        for (std::size_t p = begin; p < end; ++p) {
            const double x0 = initial_state(cfg, spec.dom, p);
            const ReflectedPath path = simulate_reflected(spec.triplet, spec.dom, sigma, x0, cfg.t0, horizon, cfg.dt,
                                                          StreamSeed{cfg.seed, p, StreamKind::levy});
            for (std::size_t i = 0; i <= N; ++i) c.x[i * n + p] = path.x[i];
            for (std::size_t i = 0; i < N; ++i) {
                c.da[i * n + p] = path.a[i + 1] - path.a[i];
                step_increments(path.levy, i, basis, m, inc);
                for (std::size_t k = 0; k < K; ++k) c.dh[(i * K + k) * n + p] = inc[k];
            }
        }
    });
    return c;
}

} // namespace lbs
