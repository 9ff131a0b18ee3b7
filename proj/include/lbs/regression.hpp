#pragma once

// Least-squares conditional expectation estimator on one time step:
// standardized monomials up to a given degree plus an optional
// boundary-distance feature, ridge-regularized normal equations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "lbs/domain.hpp"
#include "lbs/errors.hpp"
#include "lbs/parallel.hpp"

namespace lbs {

struct RegressionBasis {
    int degree = 4;
    bool boundary_feature = true;
    double ridge = 1e-8;  ///< relative to the largest diagonal entry of the Gram matrix
};

/// Fitted representation x -> sum_j beta_j phi_j(x) for one or more targets.
struct RegressionFit {
    int degree = 0;
    bool use_boundary = false;
    double center = 0.0, scale = 1.0;
    double bd_center = 0.0, bd_scale = 1.0;
    double l = 0.0, r = 1.0;
    double condition_number = 1.0;
    double ridge_used = 0.0;
    std::size_t n_features = 1;
    std::vector<double> beta;  ///< [target][feature]

    [[nodiscard]] std::size_t targets() const { return n_features ? beta.size() / n_features : 0; }

    void features(double x, double* out) const {
        const double z = (x - center) / scale;
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            out[k] = p;
            p *= z;
        }
        if (use_boundary) out[degree + 1] = (std::min(x - l, r - x) - bd_center) / bd_scale;
    }

    [[nodiscard]] double operator()(double x, std::size_t target = 0) const {
        double phi[32];
        features(x, phi);
        const double* b = beta.data() + target * n_features;
        double v = 0.0;
        for (std::size_t j = 0; j < n_features; ++j) v += b[j] * phi[j];
        return v;
    }
};

/// Fits every column of `targets` (row-major [sample][target], `n_targets`
/// columns) against the samples `xs`. Accumulation runs in fixed chunks and is
/// combined in chunk order, so the result is independent of `threads`.
inline RegressionFit fit_regression(const RegressionBasis& basis, const DomainSpec& dom, std::span<const double> xs,
                                    std::span<const double> targets, std::size_t n_targets, unsigned threads = 1) {
    const std::size_t n = xs.size();
    if (n == 0) throw SolverError("regression: empty sample");
    if (basis.degree < 0 || basis.degree > 16) throw ConfigError("regression: degree must be in [0, 16]");

    RegressionFit fit;
    fit.l = dom.l;
    fit.r = dom.r;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0, bd_mean = 0.0;
    for (double x : xs) {
        var += (x - mean) * (x - mean);
        bd_mean += dom.boundary_distance(x);
    }
    var /= static_cast<double>(n);
    bd_mean /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    const bool degenerate = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    fit.center = mean;
    fit.scale = degenerate ? 1.0 : sd;
    fit.degree = degenerate ? 0 : basis.degree;
    if (!degenerate && basis.boundary_feature) {
        double bd_var = 0.0;
        for (double x : xs) bd_var += (dom.boundary_distance(x) - bd_mean) * (dom.boundary_distance(x) - bd_mean);
        bd_var /= static_cast<double>(n);
        fit.use_boundary = std::sqrt(bd_var) > 1e-12 * std::max(1.0, std::abs(bd_mean));
        fit.bd_center = bd_mean;
        fit.bd_scale = fit.use_boundary ? std::sqrt(bd_var) : 1.0;
    }
    const std::size_t p = static_cast<std::size_t>(fit.degree) + 1 + (fit.use_boundary ? 1 : 0);
    fit.n_features = p;
    const std::size_t m = n_targets;

    const std::size_t chunks = chunk_count(n);
    std::vector<double> partial(chunks * (p * p + p * m), 0.0);
    parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double* gram = partial.data() + c * (p * p + p * m);
        double* rhs = gram + p * p;
        double phi[32];
        for (std::size_t s = begin; s < end; ++s) {
            fit.features(xs[s], phi);
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = a; b < p; ++b) gram[a * p + b] += phi[a] * phi[b];
                for (std::size_t t = 0; t < m; ++t) rhs[a * m + t] += phi[a] * targets[s * m + t];
            }
        }
    });

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < chunks; ++c) {
        const double* g = partial.data() + c * (p * p + p * m);
        const double* r = g + p * p;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += g[a * p + b];
            for (std::size_t t = 0; t < m; ++t) rhs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)) += r[a * m + t];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    gram *= inv_n;
    rhs *= inv_n;
    gram.triangularView<Eigen::StrictlyLower>() = gram.transpose().triangularView<Eigen::StrictlyLower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double ev_max = eig.eigenvalues().maxCoeff();
    const double ev_min = eig.eigenvalues().minCoeff();
    fit.condition_number = ev_min > 0.0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();

    double ridge = basis.ridge;
    if (ridge <= 0.0 && fit.condition_number > 1e10) ridge = 1e-8;
    const double lambda = ridge * gram.diagonal().maxCoeff();
    fit.ridge_used = lambda;
    // The intercept (feature 0) is not penalized, so constants are fitted exactly.
    gram.diagonal().tail(static_cast<Eigen::Index>(p) - 1).array() += lambda;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ev_min > 0.0 || (lambda > 0.0 && p > 1));
    Eigen::MatrixXd beta = ok ? Eigen::MatrixXd(ldlt.solve(rhs)) : Eigen::MatrixXd();
    if (!ok || !beta.allFinite()) {
        std::ostringstream msg;
        msg << "regression: rank-deficient design after ridge (condition number " << fit.condition_number
            << ", ridge " << lambda << ", samples " << n << ")";
        throw SolverError(msg.str());
    }
    fit.beta.resize(p * m);
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t a = 0; a < p; ++a)
            fit.beta[t * p + a] = beta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t));
    return fit;
}

} // namespace lbs
