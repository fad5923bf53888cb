#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace perorbit {

using VectorField = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
using ScalarField = std::function<double(double t, double y)>;

struct IvpOptions {
    /// Relative and absolute local error tolerance per step.
    double tol = 1e-9;
    /// Any |y_i| above this bound is reported as NonFiniteState.
    double state_bound = 1e12;
    std::size_t max_steps = 2'000'000;
    /// Zero selects the initial step automatically.
    double initial_step = 0.0;
};

/// Dense solution of an initial value problem over [t0, t1] (or [t1, t0]).
class IvpTrajectory {
public:
    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t accepted_steps() const noexcept { return accepted_; }
    std::size_t rejected_steps() const noexcept { return rejected_; }

    std::span<const double> initial_state() const noexcept { return y0_; }
    std::span<const double> final_state() const noexcept { return y1_; }

    /// Interpolated state; t is clamped to the integration interval.
    std::vector<double> state(double t) const;
    double value(double t, std::size_t component = 0) const;

    /// Evaluates one component at each time in `times`.
    void sample(std::span<const double> times, std::size_t component, std::span<double> out) const;

private:
    friend IvpTrajectory integrate_ivp(const VectorField&, double, std::span<const double>, double,
                                       const IvpOptions&);
    std::size_t locate(double t) const noexcept;
    double eval_segment(std::size_t seg, double t, std::size_t component) const noexcept;

    double t0_ = 0.0, t1_ = 0.0;
    std::size_t dim_ = 0;
    std::size_t accepted_ = 0, rejected_ = 0;
    std::vector<double> y0_, y1_;
    std::vector<double> seg_t_, seg_h_;
    std::vector<double> rcont_;  // 5 * dim_ coefficients per segment
};

/// Adaptive Dormand-Prince 5(4) integration with continuous output.
/// Supports t1 < t0. Throws StepSizeUnderflow or NonFiniteState.
IvpTrajectory integrate_ivp(const VectorField& rhs, double t0, std::span<const double> y0, double t1,
                            const IvpOptions& options = {});

IvpTrajectory integrate_ivp(const ScalarField& rhs, double t0, double y0, double t1,
                            const IvpOptions& options = {});

}  // namespace perorbit
