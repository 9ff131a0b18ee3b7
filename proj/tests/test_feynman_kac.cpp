#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lbs/feynman_kac.hpp"

using namespace lbs;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec heat(double horizon) {
    ProblemSpec s;
    s.triplet.sigma_gauss = 1.0;
    s.dom = DomainSpec(0.0, 1.0);
    s.horizon = horizon;
    s.f = CoefficientFn::constant(0.0);
    s.g = CoefficientFn::constant(0.0);
    s.phi = CoefficientFn::constant(0.0);
    s.u0 = CoefficientFn::sine(Var::x, 1.0, kPi, 0.5 * kPi);
    return s;
}

double heat_exact(double horizon, double t, double x) { return std::exp(-0.5 * kPi * kPi * (horizon - t)) * std::cos(kPi * x); }

}  // namespace

TEST(Field, ConstantTerminalValue) {
    ProblemSpec s = heat(0.5);
    s.u0 = CoefficientFn::constant(1.0);
    McSetup m;
    m.n_paths = 2000;
    m.dt = 0.05;
    const SolutionField f = evaluate_field(s, m, {0.0, 0.25, 0.5}, {0.0, 0.5, 1.0});
    for (double v : f.values) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Field, NeumannHeatAndSmoothness) {
    const double T = 0.05;
    const ProblemSpec s = heat(T);
    McSetup m;
    m.n_paths = 20000;
    m.dt = 2.5e-4;
    m.teugels_order = 1;
    std::vector<double> xs;
    for (int i = 1; i <= 9; ++i) xs.push_back(0.1 * i);
    const SolutionField f = evaluate_field(s, m, {0.0}, xs);
    const double sup = heat_exact(T, 0.0, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(f.at(0, i), heat_exact(T, 0.0, xs[i]), 3.0 * f.err(0, i) + 0.02 * sup) << "x = " << xs[i];

    std::vector<double> fine;
    for (int i = 0; i <= 100; ++i) fine.push_back(0.01 * i);
    const SolutionField g = evaluate_field(s, m, {0.0}, fine);
    for (std::size_t i = 0; i + 1 < fine.size(); ++i) {
        const double jump = std::abs(g.at(0, i + 1) - g.at(0, i));
        const double expected = std::abs(heat_exact(T, 0.0, fine[i + 1]) - heat_exact(T, 0.0, fine[i]));
        EXPECT_LE(jump - expected, 3.0 * (g.err(0, i) + g.err(0, i + 1)) + 1e-3);
    }
}

TEST(Field, RejectsBadGrids) {
    const ProblemSpec s = heat(0.5);
    McSetup m;
    m.n_paths = 100;
    m.dt = 0.1;
    EXPECT_THROW((void)evaluate_field(s, m, {0.05}, {0.5}), ArgumentError);
    EXPECT_THROW((void)evaluate_field(s, m, {0.0}, {1.5}), ArgumentError);
}

TEST(Oracle, HeatClosedForm) {
    const ProblemSpec s = heat(0.1);
    const std::vector<double> ts{0.0, 0.05, 0.1};
    std::vector<double> xs;
    for (int i = 0; i <= 10; ++i) xs.push_back(0.1 * i);
    const SolutionField f = oracle_pide(s, ts, xs, OracleConfig{400, 400, true});
    for (std::size_t it = 0; it < ts.size(); ++it)
        for (std::size_t ix = 0; ix < xs.size(); ++ix) EXPECT_NEAR(f.at(it, ix), heat_exact(0.1, ts[it], xs[ix]), 1e-4);
}

TEST(Oracle, LinearDriverIntegratingFactor) {
    const double alpha = 0.4;
    ProblemSpec s = heat(0.1);
    s.f = CoefficientFn::linear(0.0, 0.0, alpha);
    const std::vector<double> ts{0.0, 0.05};
    const std::vector<double> xs{0.0, 0.25, 0.5, 0.8, 1.0};
    const SolutionField f = oracle_pide(s, ts, xs, OracleConfig{400, 400, true});
    for (std::size_t it = 0; it < ts.size(); ++it)
        for (std::size_t ix = 0; ix < xs.size(); ++ix)
            EXPECT_NEAR(f.at(it, ix), std::exp(alpha * (0.1 - ts[it])) * heat_exact(0.1, ts[it], xs[ix]), 1e-4);
}

TEST(Oracle, JumpLeavingGridWithoutClamping) {
    ProblemSpec s = heat(0.1);
    s.triplet.atoms = {{0.5, 1.0}};
    EXPECT_THROW((void)oracle_pide(s, {0.0}, {0.5}, OracleConfig{100, 10, false}), RangeError);
    EXPECT_NO_THROW((void)oracle_pide(s, {0.0}, {0.5}, OracleConfig{100, 10, true}));
}

TEST(Oracle, RequiresNoNoise) {
    ProblemSpec s = heat(0.1);
    s.g = CoefficientFn::constant(0.1);
    EXPECT_THROW((void)oracle_pide(s, {0.0}, {0.5}), ArgumentError);
}

TEST(Oracle, AgreesWithMonteCarloOnJumpProblem) {
    ProblemSpec s;
    s.triplet.sigma_gauss = 1.0;
    s.triplet.atoms = {{1.0, 0.5}};
    s.dom = DomainSpec(0.0, 2.0);
    s.horizon = 0.25;
    s.sigma_coef = CoefficientFn::constant(0.5);
    s.f = CoefficientFn::affine(0.2, 0.0, 0.0, 0.1, {0.1});
    s.g = CoefficientFn::constant(0.0);
    s.phi = CoefficientFn::affine(0.0, 0.0, 1.5, 0.25);
    s.u0 = CoefficientFn::polynomial(Var::x, {0.0, 0.0, 1.0});
    McSetup m;
    m.n_paths = 20000;
    m.dt = 2.5e-3;
    const std::vector<double> xs{0.5, 1.0, 1.5};
    const SolutionField mc = evaluate_field(s, m, {0.0}, xs);
    const SolutionField fd = oracle_pide(s, {0.0}, xs, OracleConfig{400, 400, true});
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(mc.at(0, i), fd.at(0, i), 3.0 * mc.err(0, i) + 0.02 * std::abs(fd.at(0, i))) << "x = " << xs[i];
}

TEST(Convergence, NeedsThreeLevels) {
    McSetup m;
    EXPECT_THROW((void)convergence_study(heat(0.1), m, SweepParameter::dt, {0.1, 0.05}, 0.5), ArgumentError);
}

TEST(Convergence, ConstantProblemHasNoError) {
    ProblemSpec s = heat(0.1);
    s.u0 = CoefficientFn::constant(2.0);
    McSetup m;
    m.dt = 0.05;
    const ConvergenceReport r = convergence_study(s, m, SweepParameter::n_paths, {500, 1000, 2000}, 0.5);
    for (double e : r.errors) EXPECT_LE(e, 1e-10);
}

TEST(Convergence, ExplicitDriverIsFirstOrder) {
    ProblemSpec s = heat(1.0);
    s.u0 = CoefficientFn::constant(1.0);
    s.f = CoefficientFn::linear(0.0, 0.0, 1.0);
    McSetup m;
    m.n_paths = 200;
    const ConvergenceReport r = convergence_study(s, m, SweepParameter::dt, {0.1, 0.05, 0.025, 0.0125}, 0.5, std::exp(1.0));
    EXPECT_GE(r.slope, 0.8);
}

TEST(Convergence, MonteCarloRate) {
    const ProblemSpec s = heat(0.05);
    McSetup m;
    m.dt = 0.01;
    m.teugels_order = 1;
    const ConvergenceReport r = convergence_study(s, m, SweepParameter::n_paths, {1000, 4000, 16000, 64000}, 0.3);
    EXPECT_NEAR(r.slope, -0.5, 0.15);
}
