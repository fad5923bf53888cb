#pragma once

#include <functional>
#include <optional>

#include "perorbit/grid.hpp"

namespace perorbit {

/// A T-periodic coefficient evaluated at arbitrary t.
using Coefficient = std::function<double(double)>;

struct LinearSolverOptions {
    /// Tolerance of the inner initial value problems.
    double ivp_tol = 1e-12;
    /// Relative threshold on |y2(T) - 1| below which the operator is declared resonant.
    double resonance_threshold = 1e-10;
    /// Relative threshold on |int L^{-1}[j]| for the constrained variants.
    double denominator_threshold = 1e-12;
};

struct LinearPeriodicResult {
    GridFunction y;
    /// Set only by the constrained (zero-average) variants.
    std::optional<double> mu;
    /// |y2(T) - 1|, the distance from resonance.
    double conditioning = 0.0;
};

/// T-periodic solution of y' + b(t) y = f(t) by superposition of two initial value
/// problems, sampled onto an n-point grid. Throws Resonance when int b ~ 0.
LinearPeriodicResult solve_linear_periodic(const Coefficient& b, const Coefficient& f, double period, std::size_t n,
                                           const LinearSolverOptions& options = {});
LinearPeriodicResult solve_linear_periodic(const GridFunction& b, const GridFunction& f, double period,
                                           const LinearSolverOptions& options = {});

/// Finds mu so that y' + b y = mu + f has a zero-average T-periodic solution.
LinearPeriodicResult solve_with_mu(const GridFunction& b, const GridFunction& f, double period,
                                   const LinearSolverOptions& options = {});

/// Finds mu so that y' + b y = mu j + f has a zero-average T-periodic solution.
/// Throws Resonance or DegenerateDenominator.
LinearPeriodicResult solve_with_mu_shaped(const Coefficient& b, const Coefficient& j, const Coefficient& f,
                                          double period, std::size_t n, const LinearSolverOptions& options = {});
LinearPeriodicResult solve_with_mu_shaped(const GridFunction& b, const GridFunction& j, const GridFunction& f,
                                          double period, const LinearSolverOptions& options = {});

/// Grid defect max |y' + b y - rhs| with y' from fourth-order centered differences.
double linear_defect(const GridFunction& y, const Coefficient& b, const Coefficient& rhs);

}  // namespace perorbit
