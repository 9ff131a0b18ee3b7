#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "lbs/doss_flow.hpp"
#include "lbs/errors.hpp"

using namespace lbs;

namespace {

std::shared_ptr<const BrownianPath> path(double step = 1e-3, std::uint64_t seed = 21) {
    return std::make_shared<const BrownianPath>(simulate_brownian(1.0, step, seed));
}

}  // namespace

TEST(Brownian, GridAccess) {
    const auto b = path();
    EXPECT_EQ(b->values.front(), 0.0);
    EXPECT_EQ(b->steps(), 1000u);
    EXPECT_THROW((void)b->at(0.00037), ArgumentError);
}

TEST(Flow, ZeroNoiseIsIdentity) {
    const FlowEvaluator ev(CoefficientFn::constant(0.0), path(), 1e-3);
    EXPECT_EQ(ev.solve_flow(0.2, 0.3, 1.7), 1.7);
    EXPECT_EQ(ev.inverse_flow(0.2, 0.3, 1.7), 1.7);
    const FlowDerivatives d = ev.flow_derivatives(0.2, 0.3, 1.7);
    EXPECT_EQ(d.dy, 1.0);
    EXPECT_EQ(d.dx, 0.0);
    EXPECT_EQ(d.dyy, 0.0);
}

TEST(Flow, AdditiveNoise) {
    const auto b = path();
    const double c = 0.7;
    const FlowEvaluator ev(CoefficientFn::constant(c), b, 1e-3);
    for (double t : {0.0, 0.25, 0.5, 0.999, 1.0}) {
        const double shift = c * (b->at(1.0) - b->at(t));
        EXPECT_NEAR(ev.solve_flow(t, 0.1, 2.0), 2.0 + shift, 1e-12);
        EXPECT_NEAR(ev.inverse_flow(t, 0.1, 2.0), 2.0 - shift, 1e-12);
        const FlowDerivatives d = ev.flow_derivatives(t, 0.1, 2.0);
        EXPECT_NEAR(d.dy, 1.0, 1e-8);
        EXPECT_NEAR(d.dx, 0.0, 1e-8);
        EXPECT_NEAR(d.dyy, 0.0, 1e-6);
    }
}

TEST(Flow, LinearNoiseIsStratonovichExponential) {
    const auto b = path(1e-4, 22);
    const FlowEvaluator ev(CoefficientFn::linear(0.0, 0.0, 1.0), b, 1e-4);
    for (double t : {0.0, 0.3, 0.75}) {
        const double g = std::exp(b->at(1.0) - b->at(t));
        for (double y : {-1.0, 0.5, 2.0}) EXPECT_NEAR(ev.solve_flow(t, 0.4, y), y * g, 1e-3);
        const FlowDerivatives d = ev.flow_derivatives(t, 0.4, 1.0);
        EXPECT_NEAR(d.dy, g, 1e-3);
        EXPECT_NEAR(d.dyy, 0.0, 1e-3);
    }
}

TEST(Flow, RoundTripOnGrid) {
    const auto b = path(1e-3, 23);
    const FlowEvaluator ev(CoefficientFn::affine(0.05, 0.0, 0.1, 0.3), b, 1e-3);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            for (int k = 0; k < 10; ++k) {
                const double t = 0.1 * i, x = -1.0 + 0.2 * j, y = -2.0 + 0.4 * k;
                worst = std::max(worst, std::abs(ev.inverse_flow(t, x, ev.solve_flow(t, x, y)) - y));
            }
    EXPECT_LE(worst, 1e-8);
}

TEST(Flow, InverseDerivativeIdentities) {
    const auto b = path(1e-3, 24);
    const FlowEvaluator ev(CoefficientFn::affine(0.0, 0.0, 0.2, 0.3), b, 1e-3);
    const FlowDerivatives d = ev.flow_derivatives(0.2, 0.5, 0.8);
    const InverseDerivatives e = invert_derivatives(d);
    EXPECT_NEAR(e.dy * d.dy, 1.0, 1e-14);
    EXPECT_NEAR(e.dx + e.dy * d.dx, 0.0, 1e-14);
    const InverseDerivatives fd = ev.inverse_derivatives_fd(0.2, 0.5, d.eta);
    EXPECT_NEAR(fd.dy, e.dy, 1e-6);
    EXPECT_NEAR(fd.dx, e.dx, 1e-6);
}

TEST(Flow, IntegrationStepMustAlign) {
    EXPECT_THROW(FlowEvaluator(CoefficientFn::constant(1.0), path(1e-3), 1.5e-3), ConfigError);
    const FlowEvaluator ev(CoefficientFn::constant(1.0), path(1e-3), 2e-3);
    EXPECT_THROW((void)ev.solve_flow(0.001, 0.0, 0.0), ArgumentError);
}
