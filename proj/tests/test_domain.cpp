#include <gtest/gtest.h>

#include <cmath>

#include "lbs/domain.hpp"
#include "lbs/errors.hpp"

using namespace lbs;

namespace {

LevyTriplet make(double drift, double sigma, std::vector<JumpAtom> atoms = {}) {
    LevyTriplet t;
    t.drift_pathwise = drift;
    t.sigma_gauss = sigma;
    t.atoms = std::move(atoms);
    return t;
}

const auto unit = [](double) { return 1.0; };

}  // namespace

TEST(Domain, Geometry) {
    const DomainSpec d(0.0, 2.0);
    EXPECT_DOUBLE_EQ(d.psi(1.0), 0.5);
    EXPECT_DOUBLE_EQ(d.psi(0.0), 0.0);
    EXPECT_DOUBLE_EQ(d.inward_normal(0.0), 1.0);
    EXPECT_DOUBLE_EQ(d.inward_normal(2.0), -1.0);
    EXPECT_DOUBLE_EQ(d.grad_psi(0.0), 1.0);
    EXPECT_DOUBLE_EQ(d.grad_psi(2.0), -1.0);
    EXPECT_THROW(DomainSpec(1.0, 1.0), ConfigError);
}

TEST(Reflection, ZeroDriverStaysPut) {
    const ReflectedPath p = simulate_reflected(make(0.0, 0.0), DomainSpec(0.0, 1.0), unit, 0.5, 0.0, 1.0, 0.01, StreamSeed{});
    for (double x : p.x) EXPECT_EQ(x, 0.5);
    for (double a : p.a) EXPECT_EQ(a, 0.0);
}

TEST(Reflection, RampSticksAtUpperBoundary) {
    const double dt = 1e-3;
    const ReflectedPath p = simulate_reflected(make(1.0, 0.0), DomainSpec(0.0, 1.0), unit, 0.5, 0.0, 1.0, dt, StreamSeed{});
    EXPECT_NEAR(p.a.back(), 0.5, dt);
    EXPECT_DOUBLE_EQ(p.x.back(), 1.0);
    for (std::size_t i = 0; i < p.x.size(); ++i)
        if (p.grid[i] <= 0.5 - dt) EXPECT_EQ(p.a[i], 0.0);
}

TEST(Reflection, ContainmentAndMonotoneLocalTime) {
    const DomainSpec dom(0.0, 1.0);
    const LevyTriplet t = make(0.0, 1.0, {{0.8, 1.0}, {-0.8, 1.0}});
    std::size_t outside = 0, decreasing = 0, samples = 0;
    for (std::size_t k = 0; k < 1000; ++k) {
        const ReflectedPath p = simulate_reflected(t, dom, unit, 0.5, 0.0, 1.0, 0.01, StreamSeed{11, k, StreamKind::levy});
        for (std::size_t i = 0; i < p.x.size(); ++i) {
            ++samples;
            if (!dom.contains(p.x[i])) ++outside;
            if (i > 0 && p.a[i] < p.a[i - 1]) ++decreasing;
        }
    }
    EXPECT_EQ(samples, 1000u * 101u);
    EXPECT_EQ(outside, 0u);
    EXPECT_EQ(decreasing, 0u);
}

TEST(Reflection, LocalTimeGrowsOnlyOnBoundary) {
    const DomainSpec dom(0.0, 1.0);
    const ReflectedPath p = simulate_reflected(make(0.0, 1.0), dom, unit, 0.5, 0.0, 2.0, 0.01, StreamSeed{12, 0, StreamKind::levy});
    for (std::size_t i = 0; i < p.steps(); ++i)
        if (p.a[i + 1] > p.a[i]) EXPECT_TRUE(dom.on_boundary(p.x[i + 1]));
}

TEST(Reflection, RejectsStartOutside) {
    EXPECT_THROW((void)simulate_reflected(make(0.0, 1.0), DomainSpec(0.0, 1.0), unit, 1.5, 0.0, 1.0, 0.1, StreamSeed{}),
                 ArgumentError);
}

TEST(Coupling, IdenticalStartsGiveZero) {
    const CouplingMoments m = coupling_moments(DomainSpec(0.0, 1.0), make(0.0, 1.0), unit, 0.4, 0.4, 100, 1.0, 0.01, 1);
    EXPECT_EQ(m.x_moment, 0.0);
    EXPECT_EQ(m.a_moment, 0.0);
}

TEST(Coupling, TranslationWithoutNoise) {
    const CouplingMoments m = coupling_moments(DomainSpec(0.0, 1.0), make(0.0, 0.0), unit, 0.4, 0.6, 10, 1.0, 0.01, 1);
    EXPECT_NEAR(m.x_ratio, 1.0, 1e-12);
}

TEST(Coupling, NoBlowUpAsSeparationShrinks) {
    const CouplingReport r = flux_coupling_check(DomainSpec(0.0, 1.0), make(0.0, 1.0), unit, 0.5, 2000, 1.0, 0.01, 7);
    EXPECT_TRUE(r.passed);
    ASSERT_EQ(r.sweep.size(), 3u);
}
