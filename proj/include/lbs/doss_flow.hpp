#pragma once

// Stratonovich flow
//   eta(t, x, y) = y + int_t^T g(s, x, eta(s, x, y)) o dB_s
// integrated from the terminal datum at T down to t (Heun on the reversed
// axis), its y-inverse epsilon, and finite-difference partial derivatives.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"
#include "lbs/registry.hpp"
#include "lbs/rng.hpp"

namespace lbs {

/// One-dimensional Brownian path sampled on a uniform grid of [0, T].
struct BrownianPath {
    double horizon = 0.0;
    double step = 0.0;
    std::vector<double> values;  ///< B at grid times, values[0] = 0

    [[nodiscard]] std::size_t steps() const { return values.size() - 1; }
    [[nodiscard]] double at_index(std::size_t i) const { return values[i]; }

    /// B at a grid time; throws ArgumentError off the grid.
    [[nodiscard]] double at(double t) const { return values[index_of(t)]; }

    [[nodiscard]] std::size_t index_of(double t) const {
        const double r = t / step;
        const double n = std::round(r);
        if (n < 0.0 || n > static_cast<double>(steps()) || std::abs(r - n) > 1e-7)
            throw ArgumentError("time " + std::to_string(t) + " is not on the Brownian grid");
        return static_cast<std::size_t>(n);
    }
};

inline BrownianPath simulate_brownian(double horizon, double step, std::uint64_t seed) {
    const std::size_t n = step_count(horizon, step);
    BrownianPath b;
    b.horizon = horizon;
    b.step = horizon / static_cast<double>(n);
    b.values.assign(n + 1, 0.0);
    Engine rng = make_engine(StreamSeed{seed, 0, StreamKind::brownian});
    std::normal_distribution<double> normal(0.0, std::sqrt(b.step));
    for (std::size_t i = 0; i < n; ++i) b.values[i + 1] = b.values[i] + normal(rng);
    return b;
}

/// Brownian path whose increments are all zero except a prescribed total
/// B_T - B_t spread over [t, T]; used by closed-form tests.
inline BrownianPath linear_brownian(double horizon, double step, double slope) {
    const std::size_t n = step_count(horizon, step);
    BrownianPath b;
    b.horizon = horizon;
    b.step = horizon / static_cast<double>(n);
    b.values.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) b.values[i] = slope * b.step * static_cast<double>(i);
    return b;
}

struct FlowDerivatives {
    double eta = 0.0;
    double dy = 1.0;
    double dx = 0.0;
    double dyy = 0.0;
    double dxy = 0.0;
    double dxx = 0.0;
};

/// Partial derivatives of the inverse epsilon, evaluated at (t, x, eta(t, x, y)).
struct InverseDerivatives {
    double dy = 1.0;
    double dx = 0.0;
    double dyy = 0.0;
    double dxy = 0.0;
    double dxx = 0.0;
};

/// epsilon-derivatives from eta-derivatives through the inverse-function
/// identities (no differentiation of the numerical inverse).
inline InverseDerivatives invert_derivatives(const FlowDerivatives& d) {
    InverseDerivatives e;
    e.dy = 1.0 / d.dy;
    e.dx = -e.dy * d.dx;
    e.dyy = -e.dy * d.dyy / (d.dy * d.dy);
    e.dxy = -(e.dyy * d.dx * d.dy + e.dy * d.dxy) / d.dy;
    e.dxx = -(2.0 * e.dxy * d.dx + e.dyy * d.dx * d.dx + e.dy * d.dxx);
    return e;
}

class FlowEvaluator {
public:
    static constexpr double kYMax = 1e12;

    /// integration_step must be a multiple of the Brownian grid step and
    /// divide the horizon.
    FlowEvaluator(CoefficientFn g, std::shared_ptr<const BrownianPath> path, double integration_step)
        : g_(std::move(g)), path_(std::move(path)) {
        if (!path_) throw ConfigError("flow: missing Brownian path");
        const double m = integration_step / path_->step;
        const double mr = std::round(m);
        if (mr < 1.0 || std::abs(m - mr) > 1e-7)
            throw ConfigError("flow: integration step " + std::to_string(integration_step) +
                              " is not a multiple of the Brownian grid step " + std::to_string(path_->step));
        stride_ = static_cast<std::size_t>(mr);
        if (path_->steps() % stride_ != 0)
            throw ConfigError("flow: integration step " + std::to_string(integration_step) + " does not divide the horizon");
        h_ = path_->step * static_cast<double>(stride_);
        trivial_ = g_.is_zero();
    }

    [[nodiscard]] const CoefficientFn& g() const { return g_; }
    [[nodiscard]] const BrownianPath& brownian() const { return *path_; }
    [[nodiscard]] std::shared_ptr<const BrownianPath> brownian_ptr() const { return path_; }
    [[nodiscard]] double horizon() const { return path_->horizon; }
    [[nodiscard]] double integration_step() const { return h_; }
    [[nodiscard]] bool x_independent() const { return g_.independent_of_x(); }
    void set_cache_enabled(bool on) { cache_enabled_ = on; }

    /// Number of integration steps from T down to t; throws off-grid.
    [[nodiscard]] std::size_t steps_to(double t) const {
        const double r = (horizon() - t) / h_;
        const double n = std::round(r);
        if (t < -1e-12 || n < 0.0 || n * h_ > horizon() * (1 + 1e-12) + 1e-12 || std::abs(r - n) > 1e-6)
            throw ArgumentError("flow: time " + std::to_string(t) + " is not on the integration grid");
        return static_cast<std::size_t>(n);
    }

    /// eta(t, x, y) for a batch of points sharing t; ys holds y on entry and
    /// eta on exit.
    void solve_batch(double t, std::span<const double> xs, std::span<double> ys) const {
        if (trivial_) return;
        const std::size_t k_end = steps_to(t);
        const std::size_t top = path_->steps();
        for (std::size_t k = 0; k < k_end; ++k) {
            const std::size_t hi = top - k * stride_;
            const std::size_t lo = hi - stride_;
            const double s_hi = path_->step * static_cast<double>(hi);
            const double s_lo = path_->step * static_cast<double>(lo);
            const double db = path_->values[hi] - path_->values[lo];
            for (std::size_t p = 0; p < ys.size(); ++p) {
                const double y = ys[p];
                const double g0 = g_(s_hi, xs[p], y);
                const double g1 = g_(s_lo, xs[p], y + g0 * db);
                ys[p] = y + 0.5 * (g0 + g1) * db;
            }
        }
    }

    [[nodiscard]] double solve_flow(double t, double x, double y) const {
        if (trivial_) return y;
        const Key key{std::bit_cast<std::uint64_t>(t), std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y)};
        if (cache_enabled_) {
            std::lock_guard lock(cache_mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        double out = y;
        solve_batch(t, std::span<const double>(&x, 1), std::span<double>(&out, 1));
        if (cache_enabled_) {
            std::lock_guard lock(cache_mutex_);
            if (cache_.size() >= kCacheLimit) cache_.clear();
            cache_.emplace(key, out);
        }
        return out;
    }

    /// epsilon(t, x, u): the y solving eta(t, x, y) = u, by Newton steps with
    /// a bisection safeguard on a bracket found by expansion.
    [[nodiscard]] double inverse_flow(double t, double x, double u) const {
        if (trivial_) return u;
        auto eta = [&](double y) { return solve_flow(t, x, y); };
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u));

        double lo = u, hi = u;
        double f_lo = eta(lo) - u, f_hi = f_lo;
        if (std::abs(f_lo) <= tol) return u;
        double width = std::max(1.0, std::abs(f_lo));
        if (f_lo > 0.0) {
            while (f_lo > 0.0) {
                hi = lo;
                f_hi = f_lo;
                lo = u - width;
                if (std::abs(lo) > kYMax) throw RangeError("inverse_flow: no bracket within |y| <= 1e12");
                f_lo = eta(lo) - u;
                width *= 2.0;
            }
        } else {
            while (f_hi < 0.0) {
                lo = hi;
                f_lo = f_hi;
                hi = u + width;
                if (std::abs(hi) > kYMax) throw RangeError("inverse_flow: no bracket within |y| <= 1e12");
                f_hi = eta(hi) - u;
                width *= 2.0;
            }
        }
        if (f_lo == 0.0) return lo;
        if (f_hi == 0.0) return hi;

        double y = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        for (int iter = 0; iter < 200; ++iter) {
            const double fy = eta(y) - u;
            if (std::abs(fy) <= tol) return y;
            if (fy < 0.0) {
                lo = y;
            } else {
                hi = y;
            }
            const double h = 1e-6 * std::max(1.0, std::abs(y));
            const double slope = (eta(y + h) - eta(y - h)) / (2.0 * h);
            double next = (slope > 0.0) ? y - fy / slope : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const double ulp = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y));
            if (std::abs(next - y) <= ulp || hi - lo <= ulp) {
                y = next;
                break;
            }
            y = next;
        }
        if (std::abs(eta(y) - u) > 1e-10 * std::max(1.0, std::abs(u)))
            throw SolverError("inverse_flow: did not converge at u = " + std::to_string(u));
        return y;
    }

    /// Central differences with h_x = 1e-4 max(1, |x|), h_y = 1e-4 max(1, |y|).
    /// extra_x lists further points x' at which eta(t, x', y) is returned in
    /// extra_eta, computed in the same batch.
    [[nodiscard]] FlowDerivatives flow_derivatives(double t, double x, double y, std::span<const double> extra_x = {},
                                                   std::span<double> extra_eta = {}) const {
        FlowDerivatives d;
        if (trivial_) {
            d.eta = y;
            std::fill(extra_eta.begin(), extra_eta.end(), y);
            return d;
        }
        const double hx = kRelStep * std::max(1.0, std::abs(x));
        const double hy = kRelStep * std::max(1.0, std::abs(y));
        if (g_.independent_of_x()) {
            std::array<double, 3> xs{x, x, x};
            std::array<double, 3> ys{y, y + hy, y - hy};
            solve_batch(t, xs, ys);
            d.eta = ys[0];
            d.dy = (ys[1] - ys[2]) / (2.0 * hy);
            d.dyy = (ys[1] - 2.0 * ys[0] + ys[2]) / (hy * hy);
            std::fill(extra_eta.begin(), extra_eta.end(), d.eta);
            return d;
        }
        std::vector<double> xs{x, x, x, x + hx, x - hx, x + hx, x + hx, x - hx, x - hx};
        std::vector<double> ys{y, y + hy, y - hy, y, y, y + hy, y - hy, y + hy, y - hy};
        xs.insert(xs.end(), extra_x.begin(), extra_x.end());
        ys.resize(xs.size(), y);
        solve_batch(t, xs, ys);
        std::copy(ys.begin() + 9, ys.end(), extra_eta.begin());
        d.eta = ys[0];
        d.dy = (ys[1] - ys[2]) / (2.0 * hy);
        d.dyy = (ys[1] - 2.0 * ys[0] + ys[2]) / (hy * hy);
        d.dx = (ys[3] - ys[4]) / (2.0 * hx);
        d.dxx = (ys[3] - 2.0 * ys[0] + ys[4]) / (hx * hx);
        d.dxy = (ys[5] - ys[6] - ys[7] + ys[8]) / (4.0 * hx * hy);
        return d;
    }

    /// Derivatives of epsilon at (t, x, u) by central differences of the
    /// numerical inverse; independent of the inverse-function identities.
    [[nodiscard]] InverseDerivatives inverse_derivatives_fd(double t, double x, double u) const {
        InverseDerivatives e;
        if (trivial_) return e;
        const double hx = kRelStep * std::max(1.0, std::abs(x));
        const double hu = kRelStep * std::max(1.0, std::abs(u));
        auto eps = [&](double xx, double uu) { return inverse_flow(t, xx, uu); };
        const double c = eps(x, u);
        const double up = eps(x, u + hu), um = eps(x, u - hu);
        e.dy = (up - um) / (2.0 * hu);
        e.dyy = (up - 2.0 * c + um) / (hu * hu);
        if (g_.independent_of_x()) {
            e.dx = e.dxx = e.dxy = 0.0;
            return e;
        }
        const double xp = eps(x + hx, u), xm = eps(x - hx, u);
        e.dx = (xp - xm) / (2.0 * hx);
        e.dxx = (xp - 2.0 * c + xm) / (hx * hx);
        e.dxy = (eps(x + hx, u + hu) - eps(x + hx, u - hu) - eps(x - hx, u + hu) + eps(x - hx, u - hu)) / (4.0 * hx * hu);
        return e;
    }

    static constexpr double kRelStep = 1e-4;

private:
    struct Key {
        std::uint64_t t, x, y;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return static_cast<std::size_t>(splitmix64(splitmix64(k.t ^ splitmix64(k.x)) ^ k.y));
        }
    };
    static constexpr std::size_t kCacheLimit = 1u << 16;

    CoefficientFn g_;
    std::shared_ptr<const BrownianPath> path_;
    std::size_t stride_ = 1;
    double h_ = 0.0;
    bool trivial_ = false;
    bool cache_enabled_ = true;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<Key, double, KeyHash> cache_;
};

} // namespace lbs
