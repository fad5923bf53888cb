#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "perorbit/grid.hpp"
#include "perorbit/linear_periodic.hpp"

namespace perorbit {

using PeriodicField = std::function<double(double t, double u)>;

/// u' + g(t, u) = mu * j(t) + e(t) with T-periodic g, e, j and int e = 0.
class PeriodicProblem {
public:
    /// e defaults to 0 and j to 1. g and g_u are evaluated with t reduced modulo T.
    PeriodicProblem(PeriodicField g, PeriodicField g_u, double period, std::optional<GridFunction> e = std::nullopt,
                    std::optional<GridFunction> j = std::nullopt, std::size_t n = kDefaultGridSize);

    double g(double t, double u) const { return g_(reduce(t), u); }
    double g_u(double t, double u) const { return g_u_(reduce(t), u); }
    const GridFunction& e() const noexcept { return e_; }
    const GridFunction& j() const noexcept { return j_; }
    double period() const noexcept { return period_; }

    /// Singularity guard: a profile is rejected when max |g| on the grid exceeds
    /// cap * (1 + |xi|). Zero disables the guard.
    double singularity_cap = 0.0;
    /// Re-integration guard: a point is rejected as singular when verify_point
    /// deviates by more than verify_guard * min(1, max|u|). Zero disables it.
    double verify_guard = 0.0;
    std::string descriptor;

private:
    double reduce(double t) const noexcept;

    PeriodicField g_, g_u_;
    double period_;
    GridFunction e_, j_;
};

struct ContinuationOptions {
    std::size_t grid_n = kDefaultGridSize;
    /// Newton stops when max|V_{m+1} - V_m| <= newton_tol * (1 + |xi| + max|V_{m+1}|).
    double newton_tol = 1e-10;
    int max_iters = 12;
    int max_halvings = 6;
    double mu_cap = 1e6;
    double u_cap = 1e6;
    double root_tol = 1e-8;
    /// A sign change counts as a tangency when mu on one side turns back toward
    /// zero while staying below tangency_tol * max|mu| of the curve.
    double tangency_tol = 1e-2;
    int max_root_evals = 30;
    double fold_tol = 1e-6;
    /// Tolerance of the re-integration used by verify_point.
    double verify_tol = 1e-11;
    LinearSolverOptions linear;
};

struct CurvePoint {
    double xi = 0.0;
    double mu = 0.0;
    GridFunction U;
    int newton_iters = 0;
    /// Relative size of the last Newton update.
    double residual = 0.0;
};

enum class Termination { RangeDone, BlowUp, NewtonFail, SingularityGuard };

struct SolutionCurve {
    std::vector<CurvePoint> points;
    Termination termination = Termination::RangeDone;
    /// The xi at which continuation stopped, when it stopped early.
    std::optional<double> stopped_at;
    std::string descriptor;
};

enum class Crossing { NegToPos, PosToNeg, Degenerate };
enum class Stability { Stable, Unstable, Undetermined };

struct RootRecord {
    double xi0 = 0.0;
    Crossing mu_slope_sign = Crossing::Degenerate;
    Stability stability = Stability::Undetermined;
    CurvePoint refined;
};

struct NewtonUpdate {
    GridFunction U;
    double mu;
};

struct FoldPoint {
    double xi_star;
    double mu0;
    CurvePoint point;
};

struct PointVerification {
    double max_deviation;
    double mean_deviation;
};

const char* to_string(Termination t) noexcept;
const char* to_string(Crossing c) noexcept;
const char* to_string(Stability s) noexcept;

/// One Newton update for U' + g(t, xi + U) = mu j + e about the zero-mean iterate V.
/// Throws NewtonLinearFailure.
NewtonUpdate newton_step(const PeriodicProblem& problem, double xi, const GridFunction& V,
                         const LinearSolverOptions& options = {});

/// Newton iteration to tolerance from `init`. Throws NewtonFail.
CurvePoint solve_at_xi(const PeriodicProblem& problem, double xi, const GridFunction& init,
                       const ContinuationOptions& options = {});
CurvePoint solve_at_xi(const PeriodicProblem& problem, double xi, const ContinuationOptions& options = {});

/// Marches xi from xi_start toward xi_end in steps of dxi, halving the step on
/// Newton failures. Failures are recorded in the termination reason.
SolutionCurve trace_curve(const PeriodicProblem& problem, double xi_start, double xi_end, double dxi,
                          const ContinuationOptions& options = {});

/// Sign changes of mu along the curve, refined by safeguarded secant iteration on
/// full re-solves, plus tangential zeros (near-zero extrema of mu). Throws RefinementFail.
std::vector<RootRecord> find_roots(const SolutionCurve& curve, const PeriodicProblem& problem,
                                   const ContinuationOptions& options = {});

/// Stability of the periodic solution at a root from the sign pattern of mu.
Stability classify_stability(const RootRecord& root) noexcept;

/// Golden-section search for the maximum of mu(xi). Throws NoInteriorMax.
FoldPoint find_fold(const SolutionCurve& curve, const PeriodicProblem& problem,
                    const ContinuationOptions& options = {});

/// Re-integrates u' = mu j + e - g(t, u) from u(0) = xi + U(0) over one period.
PointVerification verify_point(const PeriodicProblem& problem, const CurvePoint& point,
                               const ContinuationOptions& options = {});

/// max over grid nodes of |g(t, xi + U(t))|.
double max_abs_g(const PeriodicProblem& problem, double xi, const GridFunction& U);

}  // namespace perorbit
