#include <gtest/gtest.h>

#include <cmath>

#include "perorbit/continuation.hpp"
#include "perorbit/errors.hpp"
#include "test_support.hpp"

using namespace perorbit;
using perorbit::testing::kPi;

namespace {

PeriodicProblem autonomous(PeriodicField g, PeriodicField gu, double T = 1.0) {
    return PeriodicProblem(std::move(g), std::move(gu), T);
}

PeriodicProblem linear_with_sine(std::size_t n = 256) {
    auto e = GridFunction::sample(1.0, n, [](double t) { return std::sin(2 * kPi * t); });
    return PeriodicProblem([](double, double u) { return u; }, [](double, double) { return 1.0; }, 1.0, e,
                           std::nullopt, n);
}

void expect_profile_near(const GridFunction& a, const GridFunction& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], tol);
}

}  // namespace

TEST(NewtonStep, LinearAutonomousIsExactInOneStep) {
    const auto p = autonomous([](double, double u) { return u; }, [](double, double) { return 1.0; });
    const auto r = newton_step(p, 3.0, GridFunction::constant(1.0, 128, 0.0));
    EXPECT_NEAR(r.mu, 3.0, 1e-12);
    EXPECT_LE(r.U.max_abs(), 1e-12);
}

TEST(NewtonStep, QuadraticFromExactSolution) {
    const auto p = autonomous([](double, double u) { return u * u; }, [](double, double u) { return 2 * u; });
    const auto r = newton_step(p, 2.0, GridFunction::constant(1.0, 128, 0.0));
    EXPECT_NEAR(r.mu, 4.0, 1e-12);
    EXPECT_LE(r.U.max_abs(), 1e-12);
}

TEST(NewtonStep, LinearForcedMatchesLinearSolver) {
    const auto p = linear_with_sine();
    const auto r = newton_step(p, 0.0, GridFunction::constant(1.0, 256, 0.0));
    EXPECT_NEAR(r.mu, 0.0, 1e-10);
    // oracle: the periodic response of U' + U = sin(2 pi t)
    const auto oracle = solve_linear_periodic(GridFunction::constant(1.0, 256, 1.0), p.e(), 1.0);
    expect_profile_near(r.U, oracle.y, 1e-9);
    const double w = 2 * kPi;
    for (std::size_t k = 0; k < r.U.size(); ++k) {
        const double t = r.U.node(k);
        EXPECT_NEAR(r.U[k], (std::sin(w * t) - w * std::cos(w * t)) / (1 + w * w), 1e-8);
    }
}

TEST(NewtonStep, ResonantLinearizationFails) {
    // g_u = cos(u) vanishes at u = pi/2
    const auto p = autonomous([](double, double u) { return std::sin(u); }, [](double, double u) { return std::cos(u); });
    EXPECT_THROW(newton_step(p, kPi / 2, GridFunction::constant(1.0, 64, 0.0)), NewtonLinearFailure);
}

TEST(SolveAtXi, AutonomousLogistic) {
    const auto p = autonomous([](double, double u) { return u - u * u; }, [](double, double u) { return 1 - 2 * u; });
    const auto pt = solve_at_xi(p, 0.3);
    EXPECT_NEAR(pt.mu, 0.21, 1e-12);
    EXPECT_LE(pt.U.max_abs(), 1e-12);
    EXPECT_LE(pt.residual, 1e-10);
    EXPECT_GE(pt.newton_iters, 1);
}

TEST(SolveAtXi, LinearProfileIndependentOfXi) {
    const auto p = linear_with_sine();
    const auto a = solve_at_xi(p, 5.0);
    const auto b = solve_at_xi(p, 0.0);
    EXPECT_NEAR(a.mu, 5.0, 1e-10);
    expect_profile_near(a.U, b.U, 1e-9);
    const auto oracle = solve_linear_periodic(GridFunction::constant(1.0, 256, 1.0), p.e(), 1.0);
    expect_profile_near(a.U, oracle.y, 1e-9);
}

TEST(SolveAtXi, WarmStartIndependence) {
    auto a = GridFunction::sample(1.0, 256, [](double t) { return 2.0 + 0.5 * std::sin(2 * kPi * t); });
    const auto p = PeriodicProblem([a](double t, double u) { return u * u - a(t) * u; },
                                   [a](double t, double u) { return 2 * u - a(t); }, 1.0);
    const auto prev = solve_at_xi(p, 0.6);
    const auto cold = solve_at_xi(p, 0.65);
    const auto warm = solve_at_xi(p, 0.65, prev.U);
    EXPECT_NEAR(cold.mu, warm.mu, 1e-7);
    expect_profile_near(cold.U, warm.U, 1e-7);
}

TEST(SolveAtXi, FailureCarriesResidual) {
    const auto p = autonomous([](double, double u) { return std::sin(u); }, [](double, double u) { return std::cos(u); });
    try {
        solve_at_xi(p, kPi / 2);
        FAIL() << "expected NewtonFail";
    } catch (const NewtonFail& ex) {
        EXPECT_TRUE(ex.singular());
    }
}

TEST(TraceCurve, CubicAutonomous) {
    const auto p = autonomous([](double, double u) { return u * u * u; }, [](double, double u) { return 3 * u * u; });
    const auto curve = trace_curve(p, -1.0, 1.0, 0.1);
    EXPECT_EQ(curve.termination, Termination::RangeDone);
    ASSERT_GE(curve.points.size(), 21u);
    for (const auto& pt : curve.points) {
        EXPECT_NEAR(pt.mu, pt.xi * pt.xi * pt.xi, 1e-8 * (1 + std::abs(pt.mu)));
        EXPECT_LE(pt.U.max_abs(), 1e-8);
    }
    EXPECT_NEAR(curve.points.back().xi, 1.0, 1e-12);
    for (std::size_t i = 1; i < curve.points.size(); ++i) EXPECT_GT(curve.points[i].xi, curve.points[i - 1].xi);
}

TEST(TraceCurve, DescendingDirection) {
    const auto p = autonomous([](double, double u) { return u; }, [](double, double) { return 1.0; });
    const auto curve = trace_curve(p, 1.0, -1.0, -0.25);
    EXPECT_EQ(curve.termination, Termination::RangeDone);
    ASSERT_EQ(curve.points.size(), 9u);
    for (std::size_t i = 1; i < curve.points.size(); ++i) EXPECT_LT(curve.points[i].xi, curve.points[i - 1].xi);
}

TEST(TraceCurve, BlowUpCap) {
    const auto p = autonomous([](double, double u) { return std::pow(u, 7); },
                              [](double, double u) { return 7 * std::pow(u, 6); });
    ContinuationOptions opts;
    opts.mu_cap = 1e3;
    const auto curve = trace_curve(p, 1.0, 10.0, 0.5, opts);
    EXPECT_EQ(curve.termination, Termination::BlowUp);
    EXPECT_LT(curve.points.back().xi, std::pow(1e3, 1.0 / 7.0));
    EXPECT_GT(curve.points.back().xi, 2.5);
    ASSERT_TRUE(curve.stopped_at.has_value());
}

TEST(TraceCurve, StepHalvingSkipsResonantPoint) {
    // sin(u) has g_u = 0 at pi/2; landing exactly there fails and the step is halved.
    const auto p = autonomous([](double, double u) { return std::sin(u); }, [](double, double u) { return std::cos(u); });
    const double start = kPi / 2 - 0.2;
    const auto curve = trace_curve(p, start, start + 0.6, 0.2);
    EXPECT_EQ(curve.termination, Termination::RangeDone);
    bool halved = false;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const double d = curve.points[i].xi - curve.points[i - 1].xi;
        if (std::abs(d - 0.1) < 1e-12) halved = true;
    }
    EXPECT_TRUE(halved);
}

TEST(TraceCurve, InvalidDirection) {
    const auto p = autonomous([](double, double u) { return u; }, [](double, double) { return 1.0; });
    EXPECT_THROW(trace_curve(p, 0.0, 1.0, -0.1), std::invalid_argument);
    EXPECT_THROW(trace_curve(p, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(FindRoots, LogisticRoots) {
    const auto p = autonomous([](double, double u) { return u * (1 - u); }, [](double, double u) { return 1 - 2 * u; });
    const auto curve = trace_curve(p, -0.5, 1.5, 0.1);
    const auto roots = find_roots(curve, p);
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[0].xi0, 0.0, 1e-8);
    EXPECT_NEAR(roots[1].xi0, 1.0, 1e-8);
    EXPECT_EQ(roots[0].mu_slope_sign, Crossing::NegToPos);
    EXPECT_EQ(roots[0].stability, Stability::Stable);
    EXPECT_EQ(roots[1].mu_slope_sign, Crossing::PosToNeg);
    EXPECT_EQ(roots[1].stability, Stability::Unstable);
    for (const auto& r : roots) EXPECT_LE(std::abs(r.refined.mu), 1e-8);
}

TEST(FindRoots, TangentialZeroIsDegenerate) {
    // mu(xi) = -(xi - 0.5)^2 touches zero without crossing
    const auto p = autonomous([](double, double u) { return -(u - 0.5) * (u - 0.5); },
                              [](double, double u) { return -2 * (u - 0.5); });
    const auto curve = trace_curve(p, 0.13, 0.93, 0.1);
    const auto roots = find_roots(curve, p);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_EQ(roots[0].mu_slope_sign, Crossing::Degenerate);
    EXPECT_EQ(roots[0].stability, Stability::Undetermined);
    EXPECT_NEAR(roots[0].xi0, 0.5, 1e-4);
}

TEST(ClassifyStability, SignPatterns) {
    const auto lin = autonomous([](double, double u) { return u; }, [](double, double) { return 1.0; });
    const auto roots = find_roots(trace_curve(lin, -1.0, 1.0, 0.3), lin);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_EQ(classify_stability(roots[0]), Stability::Stable);

    const auto neg = autonomous([](double, double u) { return -u; }, [](double, double) { return -1.0; });
    const auto nroots = find_roots(trace_curve(neg, -1.0, 1.0, 0.3), neg);
    ASSERT_EQ(nroots.size(), 1u);
    EXPECT_EQ(classify_stability(nroots[0]), Stability::Unstable);

    RootRecord degenerate{0.345, Crossing::Degenerate, Stability::Undetermined, nroots[0].refined};
    EXPECT_EQ(classify_stability(degenerate), Stability::Undetermined);
}

TEST(FindFold, ConstantHarvesting) {
    const double a = 3.0;
    const auto p = PeriodicProblem([a](double, double u) { return u * u - a * u; },
                                   [a](double, double u) { return 2 * u - a; }, 1.0, std::nullopt,
                                   GridFunction::constant(1.0, 256, -1.0));
    const auto curve = trace_curve(p, 0.2, 2.8, 0.1);
    for (const auto& pt : curve.points) EXPECT_NEAR(pt.mu, a * pt.xi - pt.xi * pt.xi, 1e-9);
    const auto fold = find_fold(curve, p);
    EXPECT_NEAR(fold.xi_star, a / 2, 1e-5);
    EXPECT_NEAR(fold.mu0, a * a / 4, 1e-9);
}

TEST(FindFold, MonotoneCurveHasNoInteriorMax) {
    const auto p = autonomous([](double, double u) { return u; }, [](double, double) { return 1.0; });
    EXPECT_THROW(find_fold(trace_curve(p, 0.0, 1.0, 0.1), p), NoInteriorMax);
}

TEST(VerifyPoint, ConstantAndLinearPoints) {
    const auto p = autonomous([](double, double u) { return u - u * u; }, [](double, double u) { return 1 - 2 * u; });
    const auto v = verify_point(p, solve_at_xi(p, 0.3));
    EXPECT_LE(v.max_deviation, 1e-9);
    EXPECT_LE(v.mean_deviation, 1e-9);

    const auto lin = linear_with_sine();
    const auto vl = verify_point(lin, solve_at_xi(lin, 2.0));
    EXPECT_LE(vl.max_deviation, 1e-7);
    EXPECT_LE(vl.mean_deviation, 1e-7);
}

TEST(VerifyPoint, DetectsWrongProfile) {
    const auto lin = linear_with_sine();
    auto pt = solve_at_xi(lin, 2.0);
    pt.mu += 0.01;
    EXPECT_GT(verify_point(lin, pt).max_deviation, 1e-4);
}

TEST(CurveProperties, MonotoneWirtingerAndVerified) {
    auto a = GridFunction::sample(1.0, 256, [](double t) { return 2.0 + 0.8 * std::sin(2 * kPi * t); });
    auto e = GridFunction::sample(1.0, 256, [](double t) { return 0.3 * std::cos(2 * kPi * t); });
    const auto p = PeriodicProblem([a](double t, double u) { return u * u * u / 3.0 - a(t) * u; },
                                   [a](double t, double u) { return u * u - a(t); }, 1.0, e);
    const auto curve = trace_curve(p, -2.0, 2.0, 0.1);
    ASSERT_EQ(curve.termination, Termination::RangeDone);
    const double w2 = 4 * kPi * kPi;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& pt = curve.points[i];
        EXPECT_LE(std::abs(periodic_quadrature(pt.U)), 1e-8 * (1 + pt.U.max_abs()));
        if (pt.U.max_abs() > 1e-10) {
            EXPECT_GE(wirtinger_ratio(pt.U), w2 - 1e-6);
        }
        const auto v = verify_point(p, pt);
        double umax = 0.0;
        for (std::size_t k = 0; k < pt.U.size(); ++k) umax = std::max(umax, std::abs(pt.xi + pt.U[k]));
        EXPECT_LE(v.max_deviation, 1e-5 * (1 + umax)) << "xi=" << pt.xi;
        if (i > 0) {
            const auto& prev = curve.points[i - 1];
            for (std::size_t k = 0; k < pt.U.size(); ++k) EXPECT_LT(prev.xi + prev.U[k], pt.xi + pt.U[k]);
        }
    }
}

TEST(CurveProperties, AutonomousCollapse) {
    struct Case {
        PeriodicField g, gu;
        double lo, hi;
    };
    const std::vector<Case> cases = {
        {[](double, double u) { return u * u * u - u; }, [](double, double u) { return 3 * u * u - 1; }, 0.7, 2.0},
        {[](double, double u) { return std::sin(u) + 2 * u; }, [](double, double u) { return std::cos(u) + 2; }, -3, 3},
        {[](double, double u) { return std::exp(u); }, [](double, double u) { return std::exp(u); }, -2, 2},
    };
    for (const auto& c : cases) {
        const auto p = autonomous(c.g, c.gu, 2.0);
        const auto curve = trace_curve(p, c.lo, c.hi, 0.1);
        ASSERT_EQ(curve.termination, Termination::RangeDone);
        for (const auto& pt : curve.points) {
            const double g = c.g(0.0, pt.xi);
            EXPECT_LE(pt.U.max_abs(), 1e-8);
            EXPECT_LE(std::abs(pt.mu - g), 1e-8 * (1 + std::abs(g))) << "xi=" << pt.xi;
        }
    }
}
