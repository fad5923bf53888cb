#pragma once

#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "perorbit/continuation.hpp"
#include "perorbit/grid.hpp"

namespace perorbit {

using PlanarScalar = std::function<double(double x, double y)>;

/// x' = F(x, y), y' = G(x, y) with a rest point and exact first partials.
struct PlanarSystem {
    PlanarScalar F, G;
    PlanarScalar F_x, F_y, G_x, G_y;
    double x0 = 0.0;
    double y0 = 0.0;
    std::string name;
};

/// Throws RestPointMismatch when (F, G) does not vanish at the declared rest point.
void check_rest_point(const PlanarSystem& system);

struct Regularization {
    int m = 3;
    double eps = 1e-4;
};

/// dr/dtheta + g(theta, r) = mu about the rest point of a planar system.
class PolarProblem {
public:
    explicit PolarProblem(PlanarSystem system);

    /// Polar right-hand side, regularized when a regularization is set.
    double g(double theta, double r) const;
    double g_r(double theta, double r) const;
    /// Unregularized polar right-hand side.
    double raw_g(double theta, double r) const;
    double raw_g_r(double theta, double r) const;
    /// x G - y F in rest-point coordinates; zeros are the singular set of g.
    double denominator(double theta, double r) const;
    /// d theta / dt.
    double angular_speed(double theta, double r) const;

    const PlanarSystem& system() const noexcept { return system_; }
    const std::optional<Regularization>& regularization() const noexcept { return reg_; }
    void set_regularization(std::optional<Regularization> reg);

    /// The 2 pi periodic continuation problem with e = 0, j = 1 and both guards armed.
    PeriodicProblem periodic(std::size_t n = kDefaultGridSize, double g_cap = 1e4, double verify_guard = 1e-4) const;

private:
    struct Pieces {
        double N, D, dN, dD;
    };
    Pieces pieces(double theta, double r) const;

    PlanarSystem system_;
    std::optional<Regularization> reg_;
};

PolarProblem to_polar(const PlanarSystem& system);
PolarProblem regularize(const PolarProblem& polar, int m, double eps);

struct CycleVerification {
    double return_gap = 0.0;
    double drift = 0.0;
};

struct LimitCycle {
    double x0 = 0.0;
    double y0 = 0.0;
    /// r(theta) on the 2 pi grid.
    GridFunction r = GridFunction::constant(2.0 * std::numbers::pi, kMinGridSize, 1.0);
    double xi = 0.0;
    double mu_residual = 0.0;
    double time_period = 0.0;
    /// Stability in time (for the planar flow).
    Stability stability = Stability::Undetermined;
    Crossing crossing = Crossing::Degenerate;
    /// True when a regularized root was re-solved on the unregularized equation.
    bool polished = false;
    /// Verification in the stability-appropriate direction.
    CycleVerification verification;
    double verify_residual = 0.0;
};

enum class Direction { Forward, Backward };

struct CycleSearchOptions {
    ContinuationOptions continuation;
    double g_cap = 1e4;
    /// Points whose re-integration drifts by more than this (relative) end the curve.
    double verify_guard = 1e-4;
    double verify_tol = 1e-10;
    /// Number of periods integrated by the perturbation probe for tangential roots.
    int probe_periods = 6;
    double probe_offset = 0.02;
};

struct CycleSearch {
    SolutionCurve curve;
    std::vector<RootRecord> roots;
    std::vector<LimitCycle> cycles;
};

/// Traces mu(xi) on [xi_min, xi_max] and turns each root into a limit cycle.
CycleSearch search_limit_cycles(const PolarProblem& polar, double xi_min, double xi_max, double dxi,
                                const CycleSearchOptions& options = {});
std::vector<LimitCycle> find_limit_cycles(const PolarProblem& polar, double xi_min, double xi_max, double dxi,
                                          const CycleSearchOptions& options = {});

/// Time needed to go once around the cycle. Throws AngularStall.
double cycle_period(const PlanarSystem& system, const LimitCycle& cycle);

/// Integrates the planar system over one period from the theta = 0 point of the cycle.
CycleVerification verify_cycle(const PlanarSystem& system, const LimitCycle& cycle, Direction direction,
                               double tol = 1e-10);

/// Radial distance of a planar point from the cycle, measured along its polar ray.
double radial_offset(const LimitCycle& cycle, double x, double y);

}  // namespace perorbit
