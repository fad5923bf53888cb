#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "perorbit/grid.hpp"

namespace perorbit::testing {

inline constexpr double kPi = std::numbers::pi;

/// Random trigonometric polynomial c0 + sum_k (a_k sin + b_k cos)(2 pi k t / T).
struct TrigPoly {
    double period = 1.0;
    double c0 = 0.0;
    std::vector<double> a, b;

    double operator()(double t) const {
        double v = c0;
        const double w = 2.0 * kPi / period;
        for (std::size_t k = 0; k < a.size(); ++k) {
            v += a[k] * std::sin(w * double(k + 1) * t) + b[k] * std::cos(w * double(k + 1) * t);
        }
        return v;
    }
    double derivative(double t) const {
        double v = 0.0;
        const double w = 2.0 * kPi / period;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double wk = w * double(k + 1);
            v += wk * (a[k] * std::cos(wk * t) - b[k] * std::sin(wk * t));
        }
        return v;
    }
    GridFunction grid(std::size_t n = kDefaultGridSize) const {
        return GridFunction::sample(period, n, [this](double t) { return (*this)(t); });
    }
};

inline TrigPoly random_trig(std::mt19937& rng, double period, double c0, int harmonics, double amp) {
    std::uniform_real_distribution<double> u(-amp, amp);
    TrigPoly p;
    p.period = period;
    p.c0 = c0;
    for (int k = 0; k < harmonics; ++k) {
        const double decay = 1.0 / double(k + 1);
        p.a.push_back(u(rng) * decay);
        p.b.push_back(u(rng) * decay);
    }
    return p;
}

}  // namespace perorbit::testing
