#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "perorbit/errors.hpp"
#include "perorbit/ivp.hpp"
#include "perorbit/models.hpp"
#include "perorbit/polar.hpp"
#include "test_support.hpp"

using namespace perorbit;
using perorbit::testing::kPi;

namespace {

PlanarSystem linear_system(double a11, double a12, double a21, double a22) {
    PlanarSystem s;
    s.name = "linear";
    s.F = [=](double x, double y) { return a11 * x + a12 * y; };
    s.G = [=](double x, double y) { return a21 * x + a22 * y; };
    s.F_x = [=](double, double) { return a11; };
    s.F_y = [=](double, double) { return a12; };
    s.G_x = [=](double, double) { return a21; };
    s.G_y = [=](double, double) { return a22; };
    return s;
}

LimitCycle circle(double radius, std::size_t n = 256) {
    LimitCycle c;
    c.r = GridFunction::constant(2 * kPi, n, radius);
    c.xi = radius;
    return c;
}

// closed form of the Van der Pol polar right-hand side
double vdp_closed_form(double th, double r) {
    const double num = 2 * r * (1 - std::cos(2 * th)) * (2 - r * r * (1 + std::cos(2 * th)));
    const double den = 8 - 2 * (2 - r * r) * std::sin(2 * th) + r * r * std::sin(4 * th);
    return num / den;
}

// Return time to the positive x half-axis (from above) starting at (x, 0).
double return_time(const PlanarSystem& s, double x, double t_max) {
    VectorField f = [&s](double, std::span<const double> z, std::span<double> dz) {
        dz[0] = s.F(z[0], z[1]);
        dz[1] = s.G(z[0], z[1]);
    };
    IvpOptions opts;
    opts.tol = 1e-11;
    const std::array<double, 2> start{x, 0.0};
    const auto traj = integrate_ivp(f, 0.0, start, t_max, opts);
    const int n = 20000;
    double prev = traj.value(t_max * 0.25, 1);
    for (int i = n / 4 + 1; i <= n; ++i) {
        const double t = t_max * i / n, y = traj.value(t, 1);
        if (prev > 0 && y <= 0 && traj.value(t, 0) > 0) {
            double lo = t_max * (i - 1) / n, hi = t;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                (traj.value(mid, 1) > 0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = y;
    }
    return -1.0;
}

std::vector<PolarProblem> all_polar() {
    return {to_polar(van_der_pol()), to_polar(selkov(0.08, 0.6)), to_polar(predator_prey(0.5, 1, 0.1)),
            to_polar(modified_van_der_pol()), regularize(to_polar(modified_van_der_pol()), 3, 1e-4)};
}

}  // namespace

TEST(ToPolar, LinearCenterHasZeroRightHandSide) {
    const auto p = to_polar(linear_system(0, 1, -1, 0));
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> th(0, 2 * kPi), r(0, 5);
    for (int i = 0; i < 50; ++i) {
        const double a = th(rng), b = r(rng);
        EXPECT_NEAR(p.g(a, b), 0.0, 1e-14);
        EXPECT_NEAR(p.g_r(a, b), 0.0, 1e-14);
    }
}

TEST(ToPolar, RadialFieldIsSingularEverywhere) {
    const auto p = to_polar(linear_system(-1, 0, 0, -1));
    for (double th : {0.0, 0.7, 2.0, 4.5}) {
        EXPECT_EQ(p.denominator(th, 1.0), 0.0);
        EXPECT_FALSE(std::abs(p.g(th, 1.0)) <= 1e4);
    }
    const auto problem = p.periodic(64);
    EXPECT_FALSE(max_abs_g(problem, 1.0, GridFunction::constant(2 * kPi, 64, 0.0)) <= 1e4);
}

TEST(ToPolar, VanDerPolMatchesClosedForm) {
    const auto p = to_polar(van_der_pol());
    EXPECT_NEAR(p.g(kPi / 4, 1.0), vdp_closed_form(kPi / 4, 1.0), 1e-14);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> th(0, 2 * kPi), r(0.05, 2.5);
    for (int i = 0; i < 200; ++i) {
        const double a = th(rng), b = r(rng);
        const double expected = vdp_closed_form(a, b);
        EXPECT_NEAR(p.g(a, b), expected, 1e-10 * (1 + std::abs(expected)));
        // symmetry under theta -> theta + pi
        EXPECT_NEAR(p.g(a + kPi, b), p.g(a, b), 1e-9 * (1 + std::abs(expected)));
    }
}

TEST(ToPolar, RestPointMismatch) {
    auto s = van_der_pol();
    s.x0 = 1.0;
    EXPECT_THROW(to_polar(s), RestPointMismatch);
}

TEST(ToPolar, ZeroAtOriginForAllModels) {
    for (const auto& p : all_polar()) {
        for (int k = 0; k < 256; ++k) EXPECT_LE(std::abs(p.g(2 * kPi * k / 256, 0.0)), 1e-10);
        // the removable limit is continuous
        EXPECT_LE(std::abs(p.g(0.3, 1e-9)), 1e-7);
    }
}

TEST(ToPolar, RadialDerivativeMatchesFiniteDifferences) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> th(0, 2 * kPi), rr(0.05, 0.6);
    for (const auto& p : all_polar()) {
        for (int i = 0; i < 100; ++i) {
            const double a = th(rng), r = rr(rng), h = 1e-6;
            const double fd = (p.g(a, r + h) - p.g(a, r - h)) / (2 * h);
            if (!std::isfinite(fd) || std::abs(p.g(a, r)) > 50) continue;
            EXPECT_NEAR(p.g_r(a, r), fd, 1e-5 * (1 + std::abs(fd)));
        }
        // limit at r = 0 agrees with a small-r quotient
        const double a = 1.1;
        EXPECT_NEAR(p.g_r(a, 0.0), p.g(a, 1e-7) / 1e-7, 1e-4 * (1 + std::abs(p.g_r(a, 0.0))));
    }
}

TEST(Regularize, Substitution) {
    // stable spiral x' = -x - y, y' = x - y has g(theta, r) = r
    const auto spiral = to_polar(linear_system(-1, -1, 1, -1));
    EXPECT_NEAR(spiral.g(0.4, 1.0), 1.0, 1e-14);
    const auto reg = regularize(spiral, 3, 1e-4);
    EXPECT_NEAR(reg.g(0.4, 1.0), 1.0 / (1.0 + 1e-4), 1e-14);
    EXPECT_NEAR(reg.g(0.4, 0.0), 0.0, 1e-15);
    const auto center = regularize(to_polar(linear_system(0, 1, -1, 0)), 2, 0.5);
    EXPECT_NEAR(center.g(1.0, 2.0), 0.0, 1e-14);
    EXPECT_THROW(regularize(spiral, 0, 1e-4), std::invalid_argument);
    EXPECT_THROW(regularize(spiral, 3, 0.0), std::invalid_argument);
}

TEST(Regularize, BoundedNearSingularities) {
    const int m = 3;
    const double eps = 1e-4;
    const auto p = regularize(to_polar(modified_van_der_pol()), m, eps);
    const double bound = std::pow(eps, -1.0 / (2 * m));
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> th(0, 2 * kPi), r(0, 6);
    for (int i = 0; i < 2000; ++i) EXPECT_LE(std::abs(p.g(th(rng), r(rng))), bound);
}

TEST(CyclePeriod, LinearCenters) {
    EXPECT_NEAR(cycle_period(linear_system(0, 1, -1, 0), circle(1.0)), 2 * kPi, 1e-12);
    EXPECT_NEAR(cycle_period(linear_system(0, 2, -2, 0), circle(1.0)), kPi, 1e-12);
    EXPECT_THROW(cycle_period(linear_system(-1, 0, 0, -1), circle(1.0)), AngularStall);
}

TEST(VerifyCycle, LinearCenterCircle) {
    const auto s = linear_system(0, 1, -1, 0);
    auto c = circle(1.5);
    c.time_period = cycle_period(s, c);
    for (auto dir : {Direction::Forward, Direction::Backward}) {
        const auto v = verify_cycle(s, c, dir);
        EXPECT_LE(v.return_gap, 1e-8);
        EXPECT_LE(v.drift, 1e-8);
    }
}

TEST(VerifyCycle, DetectsCorruptedCycle) {
    const auto s = linear_system(0, 1, -1, 0);
    auto c = circle(1.5);
    c.time_period = cycle_period(s, c);
    std::vector<double> bumped(c.r.samples().begin(), c.r.samples().end());
    for (std::size_t k = 64; k < 128; ++k) bumped[k] *= 1.1;
    c.r = GridFunction(2 * kPi, bumped);
    EXPECT_GT(verify_cycle(s, c, Direction::Forward).drift, 0.1);
}

TEST(LimitCycles, VanDerPol) {
    const auto polar = to_polar(van_der_pol());
    const auto search = search_limit_cycles(polar, 0.05, 2.4, 0.05);
    EXPECT_EQ(search.curve.termination, Termination::SingularityGuard);
    ASSERT_TRUE(search.curve.stopped_at.has_value());
    EXPECT_GT(*search.curve.stopped_at, 2.15);
    EXPECT_LT(*search.curve.stopped_at, 2.35);
    ASSERT_EQ(search.cycles.size(), 1u);
    const auto& c = search.cycles[0];
    EXPECT_GT(c.xi, 2.0);
    EXPECT_LT(c.xi, 2.1);
    EXPECT_EQ(c.stability, Stability::Stable);
    EXPECT_GT(c.r.min(), 0.0);
    EXPECT_LE(c.verification.return_gap, 1e-3 * c.r.max());
    const double oracle = return_time(polar.system(), c.r[0], 2.0 * c.time_period);
    EXPECT_NEAR(c.time_period, oracle, 0.01 * oracle);
    // symmetry of the cycle under theta -> theta + pi
    const std::size_t n = c.r.size();
    double asym = 0.0;
    for (std::size_t k = 0; k < n / 2; ++k) asym = std::max(asym, std::abs(c.r[k + n / 2] - c.r[k]));
    EXPECT_LE(asym, 1e-4 * c.r.max());
}

TEST(LimitCycles, RegularizationBarelyMovesVanDerPolRoot) {
    const auto polar = to_polar(van_der_pol());
    const auto plain = search_limit_cycles(polar, 1.8, 2.2, 0.05);
    const auto reg = search_limit_cycles(regularize(polar, 3, 1e-4), 1.8, 2.2, 0.05);
    ASSERT_EQ(plain.cycles.size(), 1u);
    ASSERT_EQ(reg.cycles.size(), 1u);
    EXPECT_TRUE(reg.cycles[0].polished);
    EXPECT_NEAR(plain.cycles[0].xi, reg.cycles[0].xi, 1e-3);
    // the regularized curve's own root sits close by
    ASSERT_EQ(reg.roots.size(), 1u);
    EXPECT_NEAR(plain.roots[0].xi0, reg.roots[0].xi0, 1e-2);
}

TEST(LimitCycles, Selkov) {
    const double a = 0.08, b = 0.6;
    const auto cycles = find_limit_cycles(to_polar(selkov(a, b)), 0.05, 3.0, 0.05);
    ASSERT_EQ(cycles.size(), 1u);
    EXPECT_NEAR(cycles[0].xi, 0.64, 0.02);
    EXPECT_LE(cycles[0].r.max(), selkov_trapping_bound(a, b));
    EXPECT_LE(cycles[0].verification.return_gap, 1e-3 * cycles[0].r.max());
}

TEST(LimitCycles, ModifiedVanDerPolRegularized) {
    const auto polar = regularize(to_polar(modified_van_der_pol()), 3, 1e-4);
    const auto cycles = find_limit_cycles(polar, 0.05, 6.0, 0.05);
    ASSERT_EQ(cycles.size(), 2u);
    EXPECT_EQ(cycles[0].stability, Stability::Stable);
    EXPECT_EQ(cycles[1].stability, Stability::Unstable);
    for (const auto& c : cycles) EXPECT_LE(c.verification.return_gap, 1e-3 * c.r.max());
}

TEST(LimitCycles, PredatorPreyTangentialRoot) {
    CycleSearchOptions opts;
    opts.continuation.grid_n = 512;
    const auto search = search_limit_cycles(to_polar(predator_prey(0.5, 1, 0.1)), 0.05, 1.0, 0.01, opts);
    for (const auto& p : search.curve.points) {
        if (p.xi < 0.2) {
            EXPECT_LT(p.mu, 0.0);
        }
    }
    ASSERT_GE(search.roots.size(), 1u);
    EXPECT_EQ(search.roots[0].mu_slope_sign, Crossing::Degenerate);
    EXPECT_NEAR(search.roots[0].xi0, 0.345, 0.01);
}

TEST(LimitCycles, RequiresPositiveStart) {
    EXPECT_THROW(find_limit_cycles(to_polar(van_der_pol()), 0.0, 1.0, 0.1), std::invalid_argument);
}

TEST(LimitCycles, PolarCurvesAreMonotoneInXi) {
    for (const auto& polar : {to_polar(van_der_pol()), to_polar(selkov(0.08, 0.6))}) {
        const auto p = polar.periodic();
        const auto curve = trace_curve(p, 0.05, 3.0, 0.05);
        ASSERT_GT(curve.points.size(), 10u);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            for (std::size_t k = 0; k < a.U.size(); ++k) {
                EXPECT_LT(a.xi + a.U[k], b.xi + b.U[k]) << polar.system().name << " xi=" << b.xi;
            }
        }
    }
}

TEST(LimitCycles, RootProfileSolvesUnforcedEquation) {
    const auto polar = to_polar(van_der_pol());
    const auto p = polar.periodic();
    const auto search = search_limit_cycles(polar, 0.05, 2.4, 0.05);
    ASSERT_FALSE(search.roots.empty());
    for (const auto& root : search.roots) {
        auto pt = solve_at_xi(p, root.xi0);
        EXPECT_LE(std::abs(pt.mu), 1e-6);
        pt.mu = 0.0;
        const double rmax = (pt.U.shifted(pt.xi)).max_abs();
        EXPECT_LE(verify_point(p, pt).max_deviation, 1e-4 * rmax);
    }
}
