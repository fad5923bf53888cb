#include "perorbit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "perorbit/errors.hpp"

namespace perorbit {

namespace {

std::vector<double> centered_slopes(std::span<const double> y, double h) {
    const std::size_t n = y.size();
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ym2 = y[(k + n - 2) % n];
        const double ym1 = y[(k + n - 1) % n];
        const double yp1 = y[(k + 1) % n];
        const double yp2 = y[(k + 2) % n];
        d[k] = (ym2 - 8.0 * ym1 + 8.0 * yp1 - yp2) / (12.0 * h);
    }
    return d;
}

void require_compatible(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size() || a.period() != b.period()) {
        throw std::invalid_argument("grid functions differ in period or size");
    }
}

}  // namespace

GridFunction::GridFunction(double period, std::vector<double> samples)
    : period_(period), samples_(std::move(samples)) {
    if (!(period_ > 0.0) || !std::isfinite(period_)) {
        throw std::invalid_argument("grid period must be positive and finite");
    }
    if (samples_.size() < kMinGridSize) {
        throw std::invalid_argument("grid needs at least " + std::to_string(kMinGridSize) + " samples");
    }
    for (double v : samples_) {
        if (!std::isfinite(v)) throw std::invalid_argument("grid sample is not finite");
    }
    slopes_ = centered_slopes(samples_, spacing());
}

GridFunction GridFunction::sample(double period, std::size_t n, const std::function<double(double)>& f) {
    std::vector<double> s(n);
    const double h = period / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = f(h * static_cast<double>(k));
    return GridFunction(period, std::move(s));
}

GridFunction GridFunction::constant(double period, std::size_t n, double value) {
    return GridFunction(period, std::vector<double>(n, value));
}

double GridFunction::reduce(double t, std::size_t& k, double& s) const noexcept {
    double r = std::fmod(t, period_);
    if (r < 0.0) r += period_;
    const double h = spacing();
    double x = r / h;
    double fl = std::floor(x);
    auto idx = static_cast<std::size_t>(fl);
    if (idx >= samples_.size()) {
        idx = 0;
        fl = 0.0;
        x = 0.0;
    }
    k = idx;
    s = x - fl;
    return h;
}

double GridFunction::operator()(double t) const noexcept {
    std::size_t k;
    double s;
    const double h = reduce(t, k, s);
    const std::size_t k1 = (k + 1) % samples_.size();
    const double y0 = samples_[k], y1 = samples_[k1];
    const double m0 = slopes_[k] * h, m1 = slopes_[k1] * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
}

double GridFunction::derivative(double t) const noexcept {
    std::size_t k;
    double s;
    const double h = reduce(t, k, s);
    const std::size_t k1 = (k + 1) % samples_.size();
    const double y0 = samples_[k], y1 = samples_[k1];
    const double m0 = slopes_[k] * h, m1 = slopes_[k1] * h;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * m1) / h;
}

double GridFunction::max_abs() const noexcept {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::min() const noexcept { return *std::min_element(samples_.begin(), samples_.end()); }
double GridFunction::max() const noexcept { return *std::max_element(samples_.begin(), samples_.end()); }

GridFunction GridFunction::operator+(const GridFunction& other) const {
    require_compatible(*this, other);
    std::vector<double> s(samples_);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += other.samples_[k];
    return GridFunction(period_, std::move(s));
}

GridFunction GridFunction::operator-(const GridFunction& other) const {
    require_compatible(*this, other);
    std::vector<double> s(samples_);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] -= other.samples_[k];
    return GridFunction(period_, std::move(s));
}

GridFunction GridFunction::operator*(const GridFunction& other) const {
    require_compatible(*this, other);
    std::vector<double> s(samples_);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] *= other.samples_[k];
    return GridFunction(period_, std::move(s));
}

GridFunction GridFunction::operator*(double c) const {
    std::vector<double> s(samples_);
    for (double& v : s) v *= c;
    return GridFunction(period_, std::move(s));
}

GridFunction GridFunction::shifted(double c) const {
    std::vector<double> s(samples_);
    for (double& v : s) v += c;
    return GridFunction(period_, std::move(s));
}

double periodic_quadrature(const GridFunction& f) {
    double sum = 0.0;
    for (double v : f.samples()) sum += v;
    return f.spacing() * sum;
}

double mean(const GridFunction& f) { return periodic_quadrature(f) / f.period(); }

GridFunction zero_mean(const GridFunction& f) { return f.shifted(-mean(f)); }

std::vector<double> grid_derivative(const GridFunction& f) { return centered_slopes(f.samples(), f.spacing()); }

double wirtinger_ratio(const GridFunction& f) {
    const double scale = f.max_abs();
    if (std::abs(mean(f)) > 1e-8 * scale) {
        throw std::invalid_argument("wirtinger_ratio requires a zero-mean function");
    }
    double num = 0.0, den = 0.0;
    const auto d = grid_derivative(f);
    for (std::size_t k = 0; k < f.size(); ++k) {
        num += d[k] * d[k];
        den += f[k] * f[k];
    }
    num *= f.spacing();
    den *= f.spacing();
    if (den <= 1e-30) throw DegenerateInput("wirtinger_ratio of a numerically zero function");
    return num / den;
}

}  // namespace perorbit
