#include "perorbit/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "perorbit/errors.hpp"

namespace perorbit {

PlanarSystem van_der_pol() {
    PlanarSystem s;
    s.name = "van-der-pol";
    s.F = [](double, double y) { return y; };
    s.G = [](double x, double y) { return -(x * x - 1.0) * y - x; };
    s.F_x = [](double, double) { return 0.0; };
    s.F_y = [](double, double) { return 1.0; };
    s.G_x = [](double x, double y) { return -2.0 * x * y - 1.0; };
    s.G_y = [](double x, double) { return 1.0 - x * x; };
    return s;
}

PlanarSystem selkov(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DegenerateParameters("selkov needs a > 0 and b > 0");
    PlanarSystem s;
    s.name = "selkov";
    s.F = [a](double x, double y) { return -x + a * y + x * x * y; };
    s.G = [a, b](double x, double y) { return b - a * y - x * x * y; };
    s.F_x = [](double x, double y) { return -1.0 + 2.0 * x * y; };
    s.F_y = [a](double x, double) { return a + x * x; };
    s.G_x = [](double x, double y) { return -2.0 * x * y; };
    s.G_y = [a](double x, double) { return -a - x * x; };
    s.x0 = b;
    s.y0 = b / (a + b * b);
    return s;
}

bool selkov_condition(double a, double b) {
    return a * a + 2.0 * a * b * b + a + std::pow(b, 4) - b * b < 0.0;
}

double selkov_trapping_bound(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DegenerateParameters("selkov needs a > 0 and b > 0");
    const double x0 = b, y0 = b / (a + b * b);
    const std::array<std::array<double, 2>, 4> corners{{{0.0, 0.0}, {0.0, b / a}, {b, b / a}, {b + b / a, 0.0}}};
    double bound = 0.0;
    for (const auto& c : corners) bound = std::max(bound, std::hypot(c[0] - x0, c[1] - y0));
    return bound;
}

PlanarSystem predator_prey(double a, double m, double d) {
    if (!(a > 0.0) || !(m > 0.0) || !(d > 0.0)) throw DegenerateParameters("predator-prey needs a, m, d > 0");
    if (m <= d) throw DegenerateParameters("predator-prey needs m > d for a positive rest point");
    PlanarSystem s;
    s.name = "predator-prey";
    s.F = [a, m](double x, double y) { return x * (1.0 - x) - m * x * y / (a + x); };
    s.G = [a, m, d](double x, double y) { return -d * y + m * x * y / (a + x); };
    s.F_x = [a, m](double x, double y) { return 1.0 - 2.0 * x - m * a * y / ((a + x) * (a + x)); };
    s.F_y = [a, m](double x, double) { return -m * x / (a + x); };
    s.G_x = [a, m](double x, double y) { return m * a * y / ((a + x) * (a + x)); };
    s.G_y = [a, m, d](double x, double) { return -d + m * x / (a + x); };
    s.x0 = a * d / (m - d);
    s.y0 = (1.0 - s.x0) * (a + s.x0) / m;
    return s;
}

PlanarSystem modified_van_der_pol() {
    PlanarSystem s;
    s.name = "modified-vdp";
    s.F = [](double, double y) { return y; };
    s.G = [](double x, double y) { return -0.04 * (x * x - 1.0) * (9.0 - x * x) * y - x; };
    s.F_x = [](double, double) { return 0.0; };
    s.F_y = [](double, double) { return 1.0; };
    // d/dx of (x^2 - 1)(9 - x^2) = 2x (10 - 2x^2)
    s.G_x = [](double x, double y) { return -0.04 * 2.0 * x * (10.0 - 2.0 * x * x) * y - 1.0; };
    s.G_y = [](double x, double) { return -0.04 * (x * x - 1.0) * (9.0 - x * x); };
    return s;
}

void FishingModel::validate() const {
    if (!(period > 0.0)) throw DegenerateParameters("fishing period must be positive");
    if (std::abs(a.period() - period) > 1e-12 * period || std::abs(f.period() - period) > 1e-12 * period) {
        throw DegenerateParameters("a and f must share the model period");
    }
    if (a.size() != f.size()) throw DegenerateParameters("a and f must use the same grid");
    if (!(periodic_quadrature(a) > 0.0)) throw DegenerateParameters("growth rate a must have positive integral");
    if (!(f.min() > 0.0)) throw DegenerateParameters("fishing shape f must be positive");
}

FishingModel constant_fishing(double a, double period, std::size_t n) {
    return FishingModel{GridFunction::constant(period, n, a), GridFunction::constant(period, n, 1.0), period};
}

FishingModel fishing_p10(double b, double a0, double a1, std::size_t n) {
    constexpr double w = 2.0 * std::numbers::pi;
    return FishingModel{GridFunction::sample(1.0, n, [=](double t) { return a0 + a1 * std::sin(w * t); }),
                        GridFunction::sample(1.0, n, [=](double t) { return 1.0 + b * std::sin(w * t); }), 1.0};
}

PeriodicProblem fishing_problem(const FishingModel& model) {
    model.validate();
    const GridFunction a = model.a;
    PeriodicProblem p([a](double t, double u) { return u * u - a(t) * u; },
                      [a](double t, double u) { return 2.0 * u - a(t); }, model.period, std::nullopt, model.f * -1.0,
                      model.a.size());
    p.descriptor = "fishing";
    return p;
}

FishingReport fishing_report(const FishingModel& model, const FishingOptions& options) {
    const auto problem = fishing_problem(model);
    const double A = mean(model.a);
    const double lo = options.xi_lo.value_or(0.1 * A);
    const double hi = options.xi_hi.value_or(1.5 * A);
    const double step = options.dxi.value_or((hi - lo) / 100.0);
    auto cont = options.continuation;
    cont.grid_n = model.a.size();

    FishingReport report;
    report.curve = trace_curve(problem, lo, hi, step, cont);
    const auto fold = find_fold(report.curve, problem, cont);
    report.mu0 = fold.mu0;
    report.xi_star = fold.xi_star;
    report.take = fold.mu0 * periodic_quadrature(model.f);
    report.bound_p6 = 0.25 * periodic_quadrature(model.a * model.a);
    report.bound_p7 = 0.25 * A * A * model.period;
    report.bound_satisfied_p6 = report.take <= report.bound_p6 + 1e-6;
    report.bound_satisfied_p7 = report.take <= report.bound_p7 + 1e-6;
    return report;
}

}  // namespace perorbit
