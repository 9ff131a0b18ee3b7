#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "lbs/pide_operator.hpp"

using namespace lbs;

namespace {

LevyTriplet make(double drift, double sigma, std::vector<JumpAtom> atoms = {}) {
    LevyTriplet t;
    t.drift_pathwise = drift;
    t.sigma_gauss = sigma;
    t.atoms = std::move(atoms);
    return t;
}

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST(LOp, LinearFunction) {
    const LevyTriplet t = make(0.2, 1.0, {{1.0, 0.5}, {-2.0, 0.3}});
    const auto sigma = CoefficientFn::constant(0.5);
    const SmoothField f = make_field([](double, double x) { return x; });
    EXPECT_NEAR(l_op(f, t, sigma, 0.0, 0.4), moment(t, 1) * 0.5, 1e-9);
}

TEST(LOp, ConstantFunction) {
    const SmoothField f = make_field([](double, double) { return 3.0; });
    EXPECT_NEAR(l_op(f, make(0.2, 1.0, {{1.0, 0.5}}), CoefficientFn::constant(1.0), 0.0, 0.4), 0.0, 1e-12);
}

TEST(LOp, QuadraticWithOneAtom) {
    const SmoothField f = make_field([](double, double x) { return x * x; });
    const LevyTriplet t = make(0.0, 1.0, {{1.0, 1.0}});
    for (double x : {-0.5, 0.0, 0.3, 2.0}) EXPECT_NEAR(l_op(f, t, CoefficientFn::constant(1.0), 0.0, x), 2.0 * x + 2.0, 1e-6);
}

TEST(Phi1, Cases) {
    const LevyTriplet t = make(0.0, 0.0, {{-1.0, 0.5}, {1.0, 0.5}});
    const OrthoBasis b = build_basis(t, 2);
    const auto one = CoefficientFn::constant(1.0);
    const SmoothField c = make_field([](double, double) { return 2.0; });
    const SmoothField lin = make_field([](double, double x) { return x; });
    EXPECT_EQ(phi1_k(c, b, t, one, 1, 0.0, 0.3), 0.0);
    EXPECT_NEAR(phi1_k(lin, b, t, one, 1, 0.0, 0.3), 1.0, 1e-14);
    const auto half = CoefficientFn::constant(0.5);
    for (int k = 1; k <= 2; ++k) {
        double expect = 0.0;
        for (const auto& a : t.atoms) expect += 0.5 * a.lambda * a.y * p_poly(b, k, a.y);
        EXPECT_NEAR(phi1_k(lin, b, t, half, k, 0.0, 0.3), expect, 1e-14);
    }
    EXPECT_THROW((void)phi1_k(lin, b, t, one, 3, 0.0, 0.3), ArgumentError);
}

TEST(Neumann, Residuals) {
    ProblemSpec s;
    s.dom = DomainSpec(0.0, 1.0);
    s.phi = CoefficientFn::constant(0.0);
    EXPECT_NEAR(neumann_residual(make_field([](double, double) { return 4.0; }), s, 0.0, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(neumann_residual(make_field([](double, double x) { return std::cos(kPi * x); }), s, 0.0, 0.0), 0.0, 1e-6);
    EXPECT_NEAR(neumann_residual(make_field([](double, double x) { return std::cos(kPi * x); }), s, 0.0, 1.0), 0.0, 1e-6);
    EXPECT_NEAR(neumann_residual(make_field([](double, double x) { return x; }), s, 0.0, 0.0), 1.0, 1e-9);
    EXPECT_NEAR(neumann_residual(make_field([](double, double x) { return x; }), s, 0.0, 1.0), -1.0, 1e-9);
    s.phi = CoefficientFn::constant(1.0);
    EXPECT_NEAR(neumann_residual(make_field([](double, double x) { return x; }), s, 0.0, 1.0), 0.0, 1e-9);
    EXPECT_THROW((void)neumann_residual(make_field([](double, double x) { return x; }), s, 0.0, 0.5), ArgumentError);
}

namespace {

struct Fixture {
    ProblemSpec spec;
    OrthoBasis basis;
    std::unique_ptr<FlowEvaluator> ev;

    explicit Fixture(CoefficientFn f) {
        spec.triplet = make(0.0, 1.0);
        spec.dom = DomainSpec(0.0, 1.0);
        spec.f = std::move(f);
        spec.g = CoefficientFn::constant(0.0);
        spec.phi = CoefficientFn::constant(0.0);
        spec.u0 = CoefficientFn::constant(0.0);
        basis = build_basis(spec.triplet, 1);
        ev = std::make_unique<FlowEvaluator>(spec.g, std::make_shared<const BrownianPath>(linear_brownian(1.0, 1e-2, 0.0)), 1e-2);
    }
};

}  // namespace

TEST(AfgResidual, ConstantField) {
    Fixture fx(CoefficientFn::constant(0.0));
    const SmoothField c = make_field([](double, double) { return 1.5; });
    EXPECT_NEAR(a_fg_residual(c, fx.spec, *fx.ev, fx.basis, 0.5, 0.4), 0.0, 1e-9);
}

TEST(AfgResidual, HeatSolution) {
    Fixture fx(CoefficientFn::constant(0.0));
    const SmoothField u = make_field([](double t, double x) { return std::exp(-0.5 * kPi * kPi * (1.0 - t)) * std::cos(kPi * x); });
    for (double t : {0.1, 0.5, 0.9})
        for (double x : {0.1, 0.35, 0.6, 0.85}) EXPECT_NEAR(a_fg_residual(u, fx.spec, *fx.ev, fx.basis, t, x), 0.0, 1e-6);
}

TEST(AfgResidual, LinearDriverSolution) {
    const double alpha = 0.3;
    Fixture fx(CoefficientFn::linear(0.0, 0.0, alpha));
    const SmoothField u = make_field([&](double t, double x) {
        return std::exp((alpha - 0.5 * kPi * kPi) * (1.0 - t)) * std::cos(kPi * x);
    });
    for (double t : {0.2, 0.7})
        for (double x : {0.2, 0.5, 0.8}) EXPECT_NEAR(a_fg_residual(u, fx.spec, *fx.ev, fx.basis, t, x), 0.0, 1e-6);
}

TEST(AfgResidual, GradientDependentDriver) {
    // u = x: L u = 0 and z_1 = u_x = 1, so f = z_1 - 1 vanishes.
    Fixture fx(CoefficientFn::affine(-1.0, 0.0, 0.0, 0.0, {1.0}));
    const SmoothField u = make_field([](double, double x) { return x; });
    EXPECT_NEAR(a_fg_residual(u, fx.spec, *fx.ev, fx.basis, 0.5, 0.4), 0.0, 1e-8);
}
