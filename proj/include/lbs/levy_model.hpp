#pragma once

// Finite-activity Levy drivers: triplet, moments, exact jump-diffusion path
// simulation and power-jump processes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lbs/errors.hpp"
#include "lbs/rng.hpp"

namespace lbs {

struct JumpAtom {
    double y = 0.0;       ///< jump size, nonzero
    double lambda = 0.0;  ///< intensity, strictly positive
};

/// Levy triplet given through its pathwise decomposition
///   L_t = drift_pathwise * t + sigma_gauss * W_t + sum of atom jumps.
/// The Levy-Khintchine drift b is derived (compensation set |y| <= 1).
struct LevyTriplet {
    double drift_pathwise = 0.0;
    double sigma_gauss = 0.0;
    std::vector<JumpAtom> atoms;

    [[nodiscard]] double total_intensity() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.lambda;
        return s;
    }

    /// b in the Levy-Khintchine exponent, compensating jumps with |y| <= 1.
    [[nodiscard]] double levy_khintchine_drift() const {
        double b = drift_pathwise;
        for (const auto& a : atoms)
            if (std::abs(a.y) <= 1.0) b += a.lambda * a.y;
        return b;
    }

    [[nodiscard]] bool is_degenerate() const { return sigma_gauss == 0.0 && atoms.empty(); }

    /// Bit-level fingerprint; objects derived from a triplet carry it so that
    /// mismatched combinations are detected.
    [[nodiscard]] std::uint64_t fingerprint() const {
        std::uint64_t h = splitmix64(std::bit_cast<std::uint64_t>(drift_pathwise));
        h = splitmix64(h ^ std::bit_cast<std::uint64_t>(sigma_gauss));
        for (const auto& a : atoms) {
            h = splitmix64(h ^ std::bit_cast<std::uint64_t>(a.y));
            h = splitmix64(h ^ std::bit_cast<std::uint64_t>(a.lambda));
        }
        return h;
    }
};

/// Throws ConfigError naming the offending field (prefix is the config path,
/// e.g. "levy").
inline void validate_triplet(const LevyTriplet& t, const std::string& prefix = "levy") {
    if (!std::isfinite(t.drift_pathwise)) throw ConfigError(prefix + ".drift: must be finite");
    if (!std::isfinite(t.sigma_gauss) || t.sigma_gauss < 0.0)
        throw ConfigError(prefix + ".sigma: must be finite and >= 0");
    for (std::size_t j = 0; j < t.atoms.size(); ++j) {
        const std::string at = prefix + ".atoms[" + std::to_string(j) + "]";
        if (!std::isfinite(t.atoms[j].y) || t.atoms[j].y == 0.0)
            throw ConfigError(at + ".y: jump size must be finite and nonzero");
        if (!std::isfinite(t.atoms[j].lambda) || t.atoms[j].lambda <= 0.0)
            throw ConfigError(at + ".lambda: intensity must be finite and > 0");
    }
}

/// m_1 = E[L_1]; m_i = sum_j lambda_j y_j^i for i >= 2.
inline double moment(const LevyTriplet& t, int i) {
    if (i < 1) throw ArgumentError("moment: order must be >= 1");
    double m = (i == 1) ? t.drift_pathwise : 0.0;
    for (const auto& a : t.atoms) m += a.lambda * std::pow(a.y, i);
    return m;
}

struct Jump {
    double time = 0.0;
    double size = 0.0;
    std::size_t atom = 0;  ///< index into LevyTriplet::atoms
};

/// Discretized Levy path. Jumps are exact (time, size) marks; the Gaussian
/// part is stored as standard Brownian increments dW_i ~ N(0, dt).
struct LevyPath {
    std::vector<double> grid;                 ///< t_0 < ... < t_N
    std::vector<double> values;               ///< L at grid times, L_{t_0} = 0
    std::vector<Jump> jumps;                  ///< sorted by time
    std::vector<std::size_t> jump_offsets;    ///< jumps in (t_i, t_{i+1}] are [off[i], off[i+1])
    std::vector<double> brownian_increments;  ///< dW_i
    double drift_pathwise = 0.0;
    double sigma_gauss = 0.0;

    [[nodiscard]] std::size_t steps() const { return brownian_increments.size(); }
    [[nodiscard]] double dt(std::size_t i) const { return grid[i + 1] - grid[i]; }

    [[nodiscard]] std::span<const Jump> jumps_in_step(std::size_t i) const {
        return std::span<const Jump>(jumps).subspan(jump_offsets[i], jump_offsets[i + 1] - jump_offsets[i]);
    }

    /// Sum of jump sizes in (t_i, t_{i+1}].
    [[nodiscard]] double jump_sum(std::size_t i) const {
        double s = 0.0;
        for (const auto& j : jumps_in_step(i)) s += j.size;
        return s;
    }

    /// L_{t_{i+1}} - L_{t_i} rebuilt from the components.
    [[nodiscard]] double increment(std::size_t i) const {
        return drift_pathwise * dt(i) + sigma_gauss * brownian_increments[i] + jump_sum(i);
    }
};

/// Number of grid steps; throws ConfigError unless step divides horizon.
inline std::size_t step_count(double horizon, double step) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("step must be > 0");
    const double ratio = horizon / step;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("step " + std::to_string(step) + " does not divide horizon " + std::to_string(horizon));
    return static_cast<std::size_t>(n);
}

inline std::vector<double> uniform_grid(double t0, double horizon, std::size_t n) {
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = t0 + horizon * static_cast<double>(i) / static_cast<double>(n);
    g[n] = t0 + horizon;
    return g;
}

/// Simulates L on [t0, t0 + horizon]. Brownian increments are drawn first,
/// then each atom's Poisson clock by exponential inter-arrival times.
inline LevyPath simulate_path(const LevyTriplet& triplet, double horizon, double step, const StreamSeed& seed,
                              double t0 = 0.0) {
    const std::size_t n = step_count(horizon, step);
    Engine rng = make_engine(seed);

    LevyPath p;
    p.drift_pathwise = triplet.drift_pathwise;
    p.sigma_gauss = triplet.sigma_gauss;
    p.grid = uniform_grid(t0, horizon, n);
    p.brownian_increments.resize(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) p.brownian_increments[i] = std::sqrt(p.dt(i)) * normal(rng);

    for (std::size_t j = 0; j < triplet.atoms.size(); ++j) {
        std::exponential_distribution<double> wait(triplet.atoms[j].lambda);
        for (double tau = wait(rng); tau <= horizon; tau += wait(rng))
            p.jumps.push_back({t0 + tau, triplet.atoms[j].y, j});
    }
    std::stable_sort(p.jumps.begin(), p.jumps.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });

    p.jump_offsets.assign(n + 1, 0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        p.jump_offsets[i] = k;
        while (k < p.jumps.size() && (p.jumps[k].time <= p.grid[i + 1] || i + 1 == n)) ++k;
    }
    p.jump_offsets[n] = p.jumps.size();

    p.values.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) p.values[i + 1] = p.values[i] + p.increment(i);
    return p;
}

/// Power-jump process L^i at grid times: L^1 = L, L^i = sum (dL_s)^i.
inline std::vector<double> power_jump(const LevyPath& path, int i) {
    if (i < 1) throw ArgumentError("power_jump: order must be >= 1");
    if (i == 1) return path.values;
    std::vector<double> out(path.grid.size(), 0.0);
    for (std::size_t s = 0; s < path.steps(); ++s) {
        double acc = 0.0;
        for (const auto& j : path.jumps_in_step(s)) acc += std::pow(j.size, i);
        out[s + 1] = out[s] + acc;
    }
    return out;
}

} // namespace lbs
