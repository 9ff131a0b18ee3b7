#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lbs/regression.hpp"

using namespace lbs;

TEST(Regression, RecoversPolynomialTargets) {
    const DomainSpec dom(0.0, 2.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> xs(2000), ys(2 * xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = u(rng);
        ys[2 * i] = 1.0 - 2.0 * xs[i] + 0.5 * xs[i] * xs[i] * xs[i];
        ys[2 * i + 1] = 3.0;
    }
    RegressionBasis b;
    b.degree = 3;
    b.boundary_feature = false;
    b.ridge = 0.0;
    const RegressionFit fit = fit_regression(b, dom, xs, ys, 2);
    ASSERT_EQ(fit.targets(), 2u);
    for (double x : {0.0, 0.3, 1.1, 2.0}) {
        EXPECT_NEAR(fit(x, 0), 1.0 - 2.0 * x + 0.5 * x * x * x, 1e-8);
        EXPECT_NEAR(fit(x, 1), 3.0, 1e-10);
    }
    EXPECT_GE(fit.condition_number, 1.0);
}

TEST(Regression, DegenerateSampleFallsBackToMean) {
    const DomainSpec dom(0.0, 1.0);
    const std::vector<double> xs(100, 0.4);
    std::vector<double> ys(100);
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = static_cast<double>(i % 2);
    const RegressionFit fit = fit_regression(RegressionBasis{}, dom, xs, ys, 1);
    EXPECT_EQ(fit.degree, 0);
    EXPECT_NEAR(fit(0.4), 0.5, 1e-12);
    EXPECT_NEAR(fit(0.9), 0.5, 1e-12);
}

TEST(Regression, ThreadCountDoesNotChangeResult) {
    const DomainSpec dom(-1.0, 1.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.4);
    std::vector<double> xs(5000), ys(5000);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = std::clamp(n(rng), -1.0, 1.0);
        ys[i] = std::sin(xs[i]) + 0.1 * n(rng);
    }
    const RegressionFit a = fit_regression(RegressionBasis{}, dom, xs, ys, 1, 1);
    const RegressionFit b = fit_regression(RegressionBasis{}, dom, xs, ys, 1, 3);
    EXPECT_EQ(a.beta, b.beta);
}

TEST(Regression, EmptySampleIsAnError) {
    EXPECT_THROW((void)fit_regression(RegressionBasis{}, DomainSpec(0.0, 1.0), {}, {}, 1), SolverError);
}
