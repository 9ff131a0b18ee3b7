#include <gtest/gtest.h>

#include <cmath>

#include "lbs/errors.hpp"
#include "lbs/levy_model.hpp"

using namespace lbs;

namespace {

LevyTriplet make(double drift, double sigma, std::vector<JumpAtom> atoms) {
    LevyTriplet t;
    t.drift_pathwise = drift;
    t.sigma_gauss = sigma;
    t.atoms = std::move(atoms);
    return t;
}

// Hand-built path on the grid {0, 0.5, 1} with jumps (0.3, 2) and (0.7, -1).
LevyPath two_jump_path() {
    LevyPath p;
    p.grid = {0.0, 0.5, 1.0};
    p.brownian_increments = {0.0, 0.0};
    p.jumps = {{0.3, 2.0, 0}, {0.7, -1.0, 1}};
    p.jump_offsets = {0, 1, 2};
    p.values = {0.0, 2.0, 1.0};
    return p;
}

}  // namespace

TEST(Moment, SingleAtomSecondMoment) {
    EXPECT_DOUBLE_EQ(moment(make(0.0, 1.0, {{1.0, 1.0}}), 2), 1.0);
}

TEST(Moment, TwoAtomThirdMoment) {
    EXPECT_DOUBLE_EQ(moment(make(0.0, 0.0, {{-1.0, 0.5}, {2.0, 0.25}}), 3), 1.5);
}

TEST(Moment, NoJumps) {
    const LevyTriplet t = make(0.5, 1.0, {});
    EXPECT_DOUBLE_EQ(moment(t, 1), 0.5);
    EXPECT_DOUBLE_EQ(moment(t, 2), 0.0);
}

TEST(Moment, RejectsOrderZero) {
    EXPECT_THROW((void)moment(make(0.0, 1.0, {}), 0), ArgumentError);
}

TEST(Triplet, ValidationNamesOffendingAtom) {
    try {
        validate_triplet(make(0.0, 1.0, {{1.0, -0.5}}));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("levy.atoms[0].lambda"), std::string::npos);
    }
    EXPECT_THROW(validate_triplet(make(0.0, -1.0, {})), ConfigError);
}

TEST(PowerJump, SecondAndThirdPowers) {
    const LevyPath p = two_jump_path();
    EXPECT_DOUBLE_EQ(power_jump(p, 2).back(), 5.0);
    EXPECT_DOUBLE_EQ(power_jump(p, 3).back(), 7.0);
}

TEST(PowerJump, FirstPowerIsThePath) {
    const LevyPath p = two_jump_path();
    EXPECT_EQ(power_jump(p, 1), p.values);
}

TEST(SimulatePath, BrownianIncrementVariance) {
    const LevyTriplet t = make(0.0, 1.0, {});
    const double step = 1e-3;
    const LevyPath p = simulate_path(t, 100.0, step, StreamSeed{3, 0, StreamKind::levy});
    ASSERT_EQ(p.steps(), 100000u);
    double s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < p.steps(); ++i) {
        const double d = p.increment(i);
        s2 += d * d;
        s4 += d * d * d * d;
    }
    const double n = static_cast<double>(p.steps());
    const double var = s2 / n;
    const double se = std::sqrt((s4 / n - var * var) / n);
    EXPECT_NEAR(var, step, 3.0 * se);
}

TEST(SimulatePath, PoissonJumpCount) {
    const LevyTriplet t = make(0.0, 0.0, {{1.0, 2.0}});
    const std::size_t n = 100000;
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        total += static_cast<double>(simulate_path(t, 1.0, 1.0, StreamSeed{5, p, StreamKind::levy}).jumps.size());
    EXPECT_NEAR(total / n, 2.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(SimulatePath, TerminalMeanMatchesFirstMoment) {
    const LevyTriplet t = make(0.3, 0.5, {{1.0, 0.7}, {-2.0, 0.2}});
    const std::size_t n = 100000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double v = simulate_path(t, 1.0, 0.25, StreamSeed{8, p, StreamKind::levy}).values.back();
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, moment(t, 1), 3.0 * se);
}

TEST(SimulatePath, DeterministicPerStream) {
    const LevyTriplet t = make(0.1, 1.0, {{1.0, 1.0}});
    const LevyPath a = simulate_path(t, 1.0, 0.01, StreamSeed{9, 4, StreamKind::levy});
    const LevyPath b = simulate_path(t, 1.0, 0.01, StreamSeed{9, 4, StreamKind::levy});
    const LevyPath c = simulate_path(t, 1.0, 0.01, StreamSeed{9, 5, StreamKind::levy});
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
}

TEST(SimulatePath, StepMustDivideHorizon) {
    EXPECT_THROW((void)simulate_path(make(0.0, 1.0, {}), 1.0, 0.3, StreamSeed{}), ConfigError);
}
