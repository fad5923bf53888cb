#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace perorbit {

inline constexpr std::size_t kDefaultGridSize = 256;
inline constexpr std::size_t kMinGridSize = 16;

/// A periodic scalar function sampled on the uniform grid t_k = k*period/N.
///
/// Evaluation between nodes uses a local cubic Hermite interpolant whose node
/// slopes come from fourth-order centered differences, so the interpolant is
/// C1 and fourth-order accurate for smooth data. Arguments are reduced modulo
/// the period before evaluation.
class GridFunction {
public:
    GridFunction(double period, std::vector<double> samples);

    /// Samples f at the N grid nodes.
    static GridFunction sample(double period, std::size_t n, const std::function<double(double)>& f);
    static GridFunction constant(double period, std::size_t n, double value);

    double period() const noexcept { return period_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double spacing() const noexcept { return period_ / static_cast<double>(samples_.size()); }
    double node(std::size_t k) const noexcept { return spacing() * static_cast<double>(k); }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t k) const noexcept { return samples_[k]; }

    double operator()(double t) const noexcept;
    /// Derivative of the interpolant.
    double derivative(double t) const noexcept;

    double max_abs() const noexcept;
    double min() const noexcept;
    double max() const noexcept;

    /// Node-wise arithmetic; both operands must share period and size.
    GridFunction operator+(const GridFunction& other) const;
    GridFunction operator-(const GridFunction& other) const;
    GridFunction operator*(const GridFunction& other) const;
    GridFunction operator*(double s) const;
    GridFunction shifted(double c) const;

private:
    double reduce(double t, std::size_t& k, double& s) const noexcept;

    double period_;
    std::vector<double> samples_;
    std::vector<double> slopes_;
};

/// Periodic trapezoid rule: (period/N) * sum of samples.
double periodic_quadrature(const GridFunction& f);
double mean(const GridFunction& f);
GridFunction zero_mean(const GridFunction& f);

/// Fourth-order centered difference derivative on the periodic grid.
std::vector<double> grid_derivative(const GridFunction& f);

/// (int f'^2) / (int f^2) for a zero-mean periodic f. Wirtinger's inequality
/// bounds this from below by (2*pi/period)^2.
double wirtinger_ratio(const GridFunction& f);

}  // namespace perorbit
