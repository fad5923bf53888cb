#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "perorbit/errors.hpp"
#include "perorbit/models.hpp"
#include "test_support.hpp"

using namespace perorbit;
using perorbit::testing::kPi;

namespace {

void expect_partials_match(const PlanarSystem& s, double lo_x, double hi_x, double lo_y, double hi_y) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y);
    auto check = [](double exact, double fd) { EXPECT_NEAR(exact, fd, 1e-6 * (1.0 + std::abs(exact))); };
    for (int i = 0; i < 100; ++i) {
        const double x = ux(rng), y = uy(rng), h = 1e-5;
        check(s.F_x(x, y), (s.F(x + h, y) - s.F(x - h, y)) / (2 * h));
        check(s.F_y(x, y), (s.F(x, y + h) - s.F(x, y - h)) / (2 * h));
        check(s.G_x(x, y), (s.G(x + h, y) - s.G(x - h, y)) / (2 * h));
        check(s.G_y(x, y), (s.G(x, y + h) - s.G(x, y - h)) / (2 * h));
    }
}

void expect_rest_point(const PlanarSystem& s) {
    const double scale = 1.0 + std::abs(s.x0) + std::abs(s.y0);
    EXPECT_LE(std::abs(s.F(s.x0, s.y0)), 1e-10 * scale) << s.name;
    EXPECT_LE(std::abs(s.G(s.x0, s.y0)), 1e-10 * scale) << s.name;
}

}  // namespace

TEST(VanDerPol, FieldValues) {
    const auto s = van_der_pol();
    EXPECT_EQ(s.F(0, 0), 0.0);
    EXPECT_EQ(s.G(0, 0), 0.0);
    EXPECT_EQ(s.F(1, 1), 1.0);
    EXPECT_EQ(s.G(1, 1), -1.0);
}

TEST(Selkov, RestPointAndSummedField) {
    const auto s = selkov(0.08, 0.6);
    EXPECT_DOUBLE_EQ(s.x0, 0.6);
    EXPECT_NEAR(s.y0, 0.6 / 0.44, 1e-15);
    EXPECT_LE(std::abs(s.F(s.x0, s.y0)), 1e-12);
    EXPECT_LE(std::abs(s.G(s.x0, s.y0)), 1e-12);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 20; ++i) {
        const double x = u(rng), y = u(rng);
        EXPECT_NEAR(s.F(x, y) + s.G(x, y), 0.6 - x, 1e-12);
    }
}

TEST(Selkov, Condition) {
    EXPECT_TRUE(selkov_condition(0.08, 0.6));
    EXPECT_FALSE(selkov_condition(1, 1));
    EXPECT_TRUE(selkov_condition(0.001, 0.3));
}

TEST(Selkov, TrappingBound) {
    EXPECT_NEAR(selkov_trapping_bound(1, 1), std::sqrt(1.25), 1e-15);
    // rest point inside the trapping region
    const double a = 0.08, b = 0.6;
    const auto s = selkov(a, b);
    EXPECT_GT(s.x0, 0.0);
    EXPECT_GT(s.y0, 0.0);
    EXPECT_LE(s.y0, b / a);
    EXPECT_LE(s.x0 + s.y0, b + b / a);
}

TEST(PredatorPrey, RestPoint) {
    const auto s = predator_prey(0.5, 1.0, 0.1);
    EXPECT_NEAR(s.x0, 0.05 / 0.9, 1e-15);
    EXPECT_NEAR(s.y0, (1 - s.x0) * (0.5 + s.x0), 1e-15);
    EXPECT_NEAR(s.x0, 0.0556, 1e-4);
    EXPECT_NEAR(s.y0, 0.5247, 1e-4);
    EXPECT_LE(std::abs(s.F(s.x0, s.y0)), 1e-10);
    EXPECT_LE(std::abs(s.G(s.x0, s.y0)), 1e-10);
}

TEST(PredatorPrey, RejectsNoPositiveRestPoint) {
    EXPECT_THROW(predator_prey(0.5, 0.1, 0.1), DegenerateParameters);
    EXPECT_THROW(predator_prey(0.5, 0.05, 0.1), DegenerateParameters);
    EXPECT_THROW(predator_prey(-0.5, 1.0, 0.1), DegenerateParameters);
}

TEST(ModifiedVanDerPol, DampingSigns) {
    const auto s = modified_van_der_pol();
    // G_y is minus the damping coefficient
    EXPECT_NEAR(s.G_y(0, 0), 0.36, 1e-15);
    EXPECT_NEAR(s.G_y(2, 0), -0.6, 1e-15);
    EXPECT_NEAR(s.G_y(4, 0), 4.2, 1e-14);
    EXPECT_EQ(s.F(0, 0), 0.0);
    EXPECT_EQ(s.G(0, 0), 0.0);
}

TEST(Models, RestPointsVanish) {
    for (const auto& s : {van_der_pol(), selkov(0.08, 0.6), selkov(0.001, 0.3), predator_prey(0.5, 1, 0.1),
                          predator_prey(0.3, 2, 0.5), modified_van_der_pol()}) {
        expect_rest_point(s);
    }
}

TEST(Models, PartialsMatchFiniteDifferences) {
    expect_partials_match(van_der_pol(), -3, 3, -3, 3);
    expect_partials_match(selkov(0.08, 0.6), 0, 3, 0, 3);
    expect_partials_match(predator_prey(0.5, 1, 0.1), 0, 2, 0, 2);
    expect_partials_match(modified_van_der_pol(), -4, 4, -4, 4);
}

TEST(FishingProblem, ConstantRateIsAutonomousParabola) {
    const double a = 2.5;
    const auto p = fishing_problem(constant_fishing(a));
    const auto curve = trace_curve(p, 0.1, 2.4, 0.1);
    ASSERT_EQ(curve.termination, Termination::RangeDone);
    for (const auto& pt : curve.points) {
        EXPECT_NEAR(pt.mu, a * pt.xi - pt.xi * pt.xi, 1e-8);
        EXPECT_LE(pt.U.max_abs(), 1e-8);
    }
    const auto fold = find_fold(curve, p);
    EXPECT_NEAR(fold.mu0, a * a / 4, 1e-8);
    EXPECT_NEAR(fold.xi_star, a / 2, 1e-5);
}

TEST(FishingProblem, RejectsInvalidModels) {
    auto m = fishing_p10(0.2);
    m.f = GridFunction::sample(1.0, 256, [](double t) { return std::sin(2 * kPi * t); });
    EXPECT_THROW(fishing_problem(m), DegenerateParameters);
    EXPECT_THROW(fishing_problem(constant_fishing(-1.0)), DegenerateParameters);
}

TEST(FishingProblem, P10PointPassesReintegration) {
    const auto p = fishing_problem(fishing_p10(0.2));
    const auto pt = solve_at_xi(p, 1.0);
    double umax = 0.0;
    for (std::size_t k = 0; k < pt.U.size(); ++k) umax = std::max(umax, std::abs(pt.xi + pt.U[k]));
    EXPECT_LE(verify_point(p, pt).max_deviation, 1e-5 * (1 + umax));
    EXPECT_GT(pt.U.max_abs(), 1e-3);
}

TEST(FishingReport, ConstantRateIsTight) {
    const auto r = fishing_report(constant_fishing(2.0));
    EXPECT_NEAR(r.mu0, 1.0, 1e-6);
    EXPECT_NEAR(r.xi_star, 1.0, 1e-5);
    EXPECT_NEAR(r.take, 1.0, 1e-6);
    EXPECT_NEAR(r.bound_p6, 1.0, 1e-12);
    EXPECT_NEAR(r.bound_p7, 1.0, 1e-12);
    EXPECT_TRUE(r.bound_satisfied_p6);
}

TEST(FishingReport, VaryingShapeBeatsConstantEffort) {
    const auto shaped = fishing_report(fishing_p10(0.2));
    const auto flat = fishing_report(fishing_p10(0.0));
    EXPECT_NEAR(shaped.mu0, 8.9955, 0.01);
    EXPECT_NEAR(flat.mu0, 8.9818, 0.01);
    EXPECT_GT(shaped.take, flat.take);
    for (const auto* r : {&shaped, &flat}) {
        EXPECT_LE(r->take, r->bound_p6 + 1e-6);
        EXPECT_TRUE(r->bound_satisfied_p6);
        EXPECT_NEAR(r->bound_p6, 0.25 * (36 + 0.08), 1e-9);
        EXPECT_NEAR(r->bound_p7, 9.0, 1e-12);
    }
}

TEST(FishingReport, TakeBoundedForRandomModels) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const double a0 = 1.0 + 3.0 * u(rng), a1 = 2.0 * u(rng), b = 0.9 * u(rng), phase = 2 * kPi * u(rng);
        FishingModel m{GridFunction::sample(1.0, 256, [=](double t) { return a0 + a1 * std::sin(2 * kPi * t); }),
                       GridFunction::sample(1.0, 256, [=](double t) { return 1.0 + b * std::cos(2 * kPi * t + phase); }),
                       1.0};
        const auto r = fishing_report(m);
        EXPECT_LE(r.take, r.bound_p6 + 1e-6) << "trial " << trial;
        const double w2 = 4 * kPi * kPi;
        for (const auto& pt : r.curve.points) {
            if (pt.U.max_abs() > 1e-10) {
                EXPECT_GE(wirtinger_ratio(pt.U), w2 - 1e-6);
            }
        }
    }
}
