#pragma once

#include <optional>

#include "perorbit/continuation.hpp"
#include "perorbit/grid.hpp"
#include "perorbit/polar.hpp"

namespace perorbit {

PlanarSystem van_der_pol();

/// x' = -x + a y + x^2 y, y' = b - a y - x^2 y.
PlanarSystem selkov(double a, double b);
bool selkov_condition(double a, double b);
/// Largest distance from the rest point to a corner of the trapping region.
double selkov_trapping_bound(double a, double b);

/// Holling type II predator-prey system. Throws DegenerateParameters when m <= d.
PlanarSystem predator_prey(double a, double m, double d);

/// Van der Pol with damping 0.04 (x^2 - 1)(9 - x^2).
PlanarSystem modified_van_der_pol();

/// u' = u (a(t) - u) - mu f(t).
struct FishingModel {
    GridFunction a;
    GridFunction f;
    double period = 1.0;

    /// Checks int a > 0 and f > 0. Throws DegenerateParameters.
    void validate() const;
};

FishingModel constant_fishing(double a, double period = 1.0, std::size_t n = kDefaultGridSize);
/// a(t) = a0 + a1 sin(2 pi t), f(t) = 1 + b sin(2 pi t), period 1.
FishingModel fishing_p10(double b, double a0 = 6.0, double a1 = 0.4, std::size_t n = kDefaultGridSize);

/// g(t, u) = u^2 - a(t) u, j = -f, e = 0.
PeriodicProblem fishing_problem(const FishingModel& model);

struct FishingReport {
    double mu0 = 0.0;
    double xi_star = 0.0;
    double take = 0.0;
    double bound_p6 = 0.0;
    double bound_p7 = 0.0;
    bool bound_satisfied_p6 = false;
    bool bound_satisfied_p7 = false;
    SolutionCurve curve;
};

struct FishingOptions {
    ContinuationOptions continuation;
    /// Defaults: [0.1 A, 1.5 A] with step A / 100, A the mean of a.
    std::optional<double> xi_lo, xi_hi, dxi;
};

/// Traces the fishing curve, locates its fold and evaluates the take bounds. Throws NoInteriorMax.
FishingReport fishing_report(const FishingModel& model, const FishingOptions& options = {});

}  // namespace perorbit
