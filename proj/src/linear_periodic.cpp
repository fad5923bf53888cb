#include "perorbit/linear_periodic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "perorbit/errors.hpp"
#include "perorbit/ivp.hpp"

namespace perorbit {

namespace {

// Homogeneous solution y2 (y2(start) = 1) and forced solutions y1_i (y1_i(start) = 0),
// sampled on the grid. The integration runs in the direction in which y2 decays so
// that the superposition never subtracts two exponentially large quantities.
struct Fundamental {
    std::vector<double> y2;
    std::vector<std::vector<double>> y1;
    double y2_end = 0.0;
    std::vector<double> y1_end;
};

Fundamental integrate_fundamental(const Coefficient& b, const std::vector<const Coefficient*>& forcings,
                                  double period, std::size_t n, double tol) {
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    if (n < kMinGridSize) throw std::invalid_argument("grid too small");
    const double h = period / static_cast<double>(n);
    std::vector<double> nodes(n);
    double int_b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        nodes[k] = h * static_cast<double>(k);
        int_b += b(nodes[k]);
    }
    int_b *= h;
    const bool forward = int_b >= 0.0;
    const std::size_t m = forcings.size();

    VectorField rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
        const double bt = b(t);
        dy[0] = -bt * y[0];
        for (std::size_t i = 0; i < m; ++i) dy[1 + i] = (*forcings[i])(t) - bt * y[1 + i];
    };
    std::vector<double> init(m + 1, 0.0);
    init[0] = 1.0;
    IvpOptions opts;
    opts.tol = tol;
    opts.state_bound = 1e200;
    const double t_start = forward ? 0.0 : period;
    const double t_end = forward ? period : 0.0;
    const IvpTrajectory traj = integrate_ivp(rhs, t_start, init, t_end, opts);

    Fundamental out;
    out.y2.resize(n);
    traj.sample(nodes, 0, out.y2);
    out.y1.assign(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i) traj.sample(nodes, 1 + i, out.y1[i]);
    const auto fin = traj.final_state();
    out.y2_end = fin[0];
    out.y1_end.assign(fin.begin() + 1, fin.end());
    if (!forward) {
        // node 0 coincides with the end point; use the exact final state there
        out.y2[0] = fin[0];
        for (std::size_t i = 0; i < m; ++i) out.y1[i][0] = fin[1 + i];
    }
    return out;
}

double trapezoid(const std::vector<double>& v, double h) {
    double s = 0.0;
    for (double x : v) s += x;
    return s * h;
}

Coefficient as_coefficient(const GridFunction& g) {
    return [&g](double t) { return g(t); };
}

void require_period(const GridFunction& g, double period) {
    if (std::abs(g.period() - period) > 1e-12 * period) {
        throw std::invalid_argument("grid function period does not match the problem period");
    }
}

}  // namespace

LinearPeriodicResult solve_linear_periodic(const Coefficient& b, const Coefficient& f, double period, std::size_t n,
                                           const LinearSolverOptions& options) {
    const Fundamental fund = integrate_fundamental(b, {&f}, period, n, options.ivp_tol);
    const double cond = std::abs(fund.y2_end - 1.0);
    if (cond < options.resonance_threshold * (1.0 + std::abs(fund.y1_end[0]))) throw Resonance(cond);
    const double c = fund.y1_end[0] / (1.0 - fund.y2_end);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = fund.y1[0][k] + c * fund.y2[k];
    return {GridFunction(period, std::move(y)), std::nullopt, cond};
}

LinearPeriodicResult solve_linear_periodic(const GridFunction& b, const GridFunction& f, double period,
                                           const LinearSolverOptions& options) {
    require_period(b, period);
    require_period(f, period);
    return solve_linear_periodic(as_coefficient(b), as_coefficient(f), period, b.size(), options);
}

LinearPeriodicResult solve_with_mu_shaped(const Coefficient& b, const Coefficient& j, const Coefficient& f,
                                          double period, std::size_t n, const LinearSolverOptions& options) {
    const Fundamental fund = integrate_fundamental(b, {&f, &j}, period, n, options.ivp_tol);
    const double h = period / static_cast<double>(n);
    const double y2e = fund.y2_end, yfe = fund.y1_end[0], yje = fund.y1_end[1];
    const double cond = std::abs(y2e - 1.0);
    if (cond < options.resonance_threshold * (1.0 + std::max(std::abs(yfe), std::abs(yje)))) throw Resonance(cond);

    const double q2 = trapezoid(fund.y2, h);
    const double qf = trapezoid(fund.y1[0], h);
    const double qj = trapezoid(fund.y1[1], h);

    // int L^{-1}[j] must stay away from zero, otherwise j cannot move the mean.
    const double cj = yje / (1.0 - y2e);
    double max_lj = 0.0;
    for (std::size_t k = 0; k < n; ++k) max_lj = std::max(max_lj, std::abs(fund.y1[1][k] + cj * fund.y2[k]));
    const double int_lj = qj + cj * q2;
    if (!(std::abs(int_lj) >= options.denominator_threshold * period * max_lj) || max_lj == 0.0) {
        throw DegenerateDenominator("integral of L^{-1}[j] vanishes; the forcing shape cannot adjust the mean");
    }

    // Bordered 2x2 system for (mu, c): periodicity and zero mean. Equivalent to
    // mu = -int L^{-1}[f] / int L^{-1}[j] but stays well conditioned near resonance.
    const double a11 = yje, a12 = y2e - 1.0, r1 = -yfe;
    const double a21 = qj, a22 = q2, r2 = -qf;
    const double det = a11 * a22 - a12 * a21;
    const double mu = (r1 * a22 - a12 * r2) / det;
    const double c = (a11 * r2 - a21 * r1) / det;
    if (!std::isfinite(mu) || !std::isfinite(c)) {
        throw DegenerateDenominator("bordered system for mu is singular");
    }
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = fund.y1[0][k] + mu * fund.y1[1][k] + c * fund.y2[k];
    return {GridFunction(period, std::move(y)), mu, cond};
}

LinearPeriodicResult solve_with_mu_shaped(const GridFunction& b, const GridFunction& j, const GridFunction& f,
                                          double period, const LinearSolverOptions& options) {
    require_period(b, period);
    require_period(j, period);
    require_period(f, period);
    return solve_with_mu_shaped(as_coefficient(b), as_coefficient(j), as_coefficient(f), period, b.size(), options);
}

LinearPeriodicResult solve_with_mu(const GridFunction& b, const GridFunction& f, double period,
                                   const LinearSolverOptions& options) {
    require_period(b, period);
    require_period(f, period);
    const Coefficient one = [](double) { return 1.0; };
    return solve_with_mu_shaped(as_coefficient(b), one, as_coefficient(f), period, b.size(), options);
}

double linear_defect(const GridFunction& y, const Coefficient& b, const Coefficient& rhs) {
    const auto dy = grid_derivative(y);
    double worst = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double t = y.node(k);
        worst = std::max(worst, std::abs(dy[k] + b(t) * y[k] - rhs(t)));
    }
    return worst;
}

}  // namespace perorbit
