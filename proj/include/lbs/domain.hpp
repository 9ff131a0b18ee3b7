#pragma once

// Reflected Levy-driven SDE on an interval [l, r] by Euler projection; the
// boundary local time A accumulates the projection distance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"

namespace lbs {

/// Theta = (l, r) described by psi(x) = (x - l)(r - x)/(r - l), which is
/// positive inside, zero on {l, r}, and has psi'(l) = +1, psi'(r) = -1.
struct DomainSpec {
    double l = 0.0;
    double r = 1.0;

    DomainSpec() = default;
    DomainSpec(double left, double right) : l(left), r(right) {
        if (!(left < right) || !std::isfinite(left) || !std::isfinite(right))
            throw ConfigError("domain: need finite l < r");
    }

    [[nodiscard]] double psi(double x) const { return (x - l) * (r - x) / (r - l); }
    [[nodiscard]] double grad_psi(double x) const { return (r + l - 2.0 * x) / (r - l); }
    [[nodiscard]] bool contains(double x) const { return x >= l && x <= r; }
    [[nodiscard]] bool on_boundary(double x) const { return x == l || x == r; }
    [[nodiscard]] double clamp(double x) const { return std::clamp(x, l, r); }
    [[nodiscard]] double boundary_distance(double x) const { return std::min(x - l, r - x); }
    /// Unit inward normal at the boundary point nearest to x.
    [[nodiscard]] double inward_normal(double x) const { return (x - l <= r - x) ? 1.0 : -1.0; }
};

struct ReflectedPath {
    std::vector<double> grid;
    std::vector<double> x;            ///< state at grid times, inside [l, r]
    std::vector<double> a;            ///< cumulative local time, a[0] = 0
    std::vector<char> boundary_flags; ///< per step: projection occurred
    std::vector<char> jump_flags;     ///< per step: at least one jump
    LevyPath levy;

    [[nodiscard]] std::size_t steps() const { return boundary_flags.size(); }
};

/// One Euler-projection step; returns the new state and writes the local time
/// increment (projection distance along the inward normal).
inline double project_step(const DomainSpec& dom, double x, double sigma_x, double dl, double& da, bool& hit) {
    const double trial = x + sigma_x * dl;
    const double next = dom.clamp(trial);
    da = std::abs(next - trial);
    hit = trial < dom.l || trial > dom.r;
    return next;
}

/// Reflects an already simulated Levy path started at x0.
template <class Sigma>
ReflectedPath reflect_path(LevyPath levy, const DomainSpec& dom, Sigma&& sigma_coef, double x0) {
    if (!dom.contains(x0)) throw ArgumentError("simulate_reflected: x0 = " + std::to_string(x0) + " outside domain");
    const std::size_t n = levy.steps();
    ReflectedPath p;
    p.grid = levy.grid;
    p.x.resize(n + 1);
    p.a.resize(n + 1);
    p.boundary_flags.resize(n);
    p.jump_flags.resize(n);
    p.x[0] = x0;
    p.a[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = 0.0;
        bool hit = false;
        p.x[i + 1] = project_step(dom, p.x[i], sigma_coef(p.x[i]), levy.increment(i), da, hit);
        p.a[i + 1] = p.a[i] + da;
        p.boundary_flags[i] = hit ? 1 : 0;
        p.jump_flags[i] = levy.jump_offsets[i + 1] > levy.jump_offsets[i] ? 1 : 0;
    }
    p.levy = std::move(levy);
    return p;
}

template <class Sigma>
ReflectedPath simulate_reflected(const LevyTriplet& triplet, const DomainSpec& dom, Sigma&& sigma_coef, double x0,
                                 double t0, double horizon, double step, const StreamSeed& seed) {
    if (!dom.contains(x0)) throw ArgumentError("simulate_reflected: x0 = " + std::to_string(x0) + " outside domain");
    return reflect_path(simulate_path(triplet, horizon, step, seed, t0), dom, sigma_coef, x0);
}

struct CouplingMoments {
    double separation = 0.0;
    double x_moment = 0.0;  ///< E[sup_s |X^x_s - X^x'_s|^4]
    double a_moment = 0.0;  ///< E[sup_s |A^x_s - A^x'_s|^4]
    double x_ratio = 0.0;   ///< x_moment / |x - x'|^4 (0 when x = x')
    double a_ratio = 0.0;
};

/// Runs both starting points on identical noise (same Levy path per index).
template <class Sigma>
CouplingMoments coupling_moments(const DomainSpec& dom, const LevyTriplet& triplet, Sigma&& sigma_coef, double x,
                                 double x2, std::size_t n_paths, double horizon, double step, std::uint64_t seed) {
    if (!dom.contains(x) || !dom.contains(x2)) throw ArgumentError("coupling check: start points outside domain");
    CouplingMoments out;
    out.separation = std::abs(x - x2);
    double sx = 0.0, sa = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const LevyPath levy = simulate_path(triplet, horizon, step, StreamSeed{seed, p, StreamKind::levy});
        double xa = x, xb = x2, aa = 0.0, ab = 0.0;
        double sup_x = std::abs(xa - xb), sup_a = 0.0;
        for (std::size_t i = 0; i < levy.steps(); ++i) {
            const double dl = levy.increment(i);
            double da = 0.0, db = 0.0;
            bool h = false;
            xa = project_step(dom, xa, sigma_coef(xa), dl, da, h);
            xb = project_step(dom, xb, sigma_coef(xb), dl, db, h);
            aa += da;
            ab += db;
            sup_x = std::max(sup_x, std::abs(xa - xb));
            sup_a = std::max(sup_a, std::abs(aa - ab));
        }
        sx += std::pow(sup_x, 4);
        sa += std::pow(sup_a, 4);
    }
    out.x_moment = sx / static_cast<double>(n_paths);
    out.a_moment = sa / static_cast<double>(n_paths);
    if (out.separation > 0.0) {
        const double d4 = std::pow(out.separation, 4);
        out.x_ratio = out.x_moment / d4;
        out.a_ratio = out.a_moment / d4;
    }
    return out;
}

struct CouplingReport {
    std::vector<CouplingMoments> sweep;
    bool passed = false;
};

/// Geometric sweep |x - x'| in {0.1, 0.05, 0.025} (x' placed inside the
/// domain). Passes when the fourth-moment ratio does not grow by more than
/// 50% relative to the widest separation as the separation shrinks.
template <class Sigma>
CouplingReport flux_coupling_check(const DomainSpec& dom, const LevyTriplet& triplet, Sigma&& sigma_coef, double x,
                                   std::size_t n_paths, double horizon, double step, std::uint64_t seed) {
    CouplingReport rep;
    for (double d : {0.1, 0.05, 0.025}) {
        const double x2 = dom.contains(x + d) ? x + d : x - d;
        rep.sweep.push_back(coupling_moments(dom, triplet, sigma_coef, x, x2, n_paths, horizon, step, seed));
    }
    const double base_x = rep.sweep.front().x_ratio;
    const double base_a = rep.sweep.front().a_ratio;
    rep.passed = true;
    for (const auto& c : rep.sweep) {
        if (!std::isfinite(c.x_ratio) || c.x_ratio > 1.5 * base_x + 1e-12) rep.passed = false;
        if (!std::isfinite(c.a_ratio) || c.a_ratio > 1.5 * base_a + 1e-12) rep.passed = false;
    }
    return rep;
}

} // namespace lbs
