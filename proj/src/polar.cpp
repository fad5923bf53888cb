#include "perorbit/polar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "perorbit/errors.hpp"
#include "perorbit/ivp.hpp"

namespace perorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double regularized(double g, const Regularization& reg) {
    if (!std::isfinite(g)) return std::isnan(g) ? g : 0.0;
    const double p = std::pow(g, 2 * reg.m);
    if (!std::isfinite(p)) return 0.0;
    return g / (1.0 + reg.eps * p);
}

double regularized_derivative(double g, double g_r, const Regularization& reg) {
    if (!std::isfinite(g)) return std::isnan(g) ? g : 0.0;
    const double p = std::pow(g, 2 * reg.m);
    if (!std::isfinite(p)) return 0.0;
    const double q = 1.0 + reg.eps * p;
    return g_r * (1.0 + (1.0 - 2.0 * reg.m) * reg.eps * p) / (q * q);
}

VectorField planar_field(const PlanarSystem& s) {
    return [&s](double, std::span<const double> z, std::span<double> dz) {
        dz[0] = s.F(z[0], z[1]);
        dz[1] = s.G(z[0], z[1]);
    };
}

}  // namespace

void check_rest_point(const PlanarSystem& s) {
    if (!s.F || !s.G || !s.F_x || !s.F_y || !s.G_x || !s.G_y) {
        throw std::invalid_argument("planar system needs F, G and their partials");
    }
    const double f = s.F(s.x0, s.y0), g = s.G(s.x0, s.y0);
    // local field scale from the Jacobian and a unit probe
    double scale = std::abs(s.F_x(s.x0, s.y0)) + std::abs(s.F_y(s.x0, s.y0)) + std::abs(s.G_x(s.x0, s.y0)) +
                   std::abs(s.G_y(s.x0, s.y0));
    for (const auto& [dx, dy] : std::array<std::pair<double, double>, 4>{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}}) {
        const double fx = s.F(s.x0 + 0.1 * dx, s.y0 + 0.1 * dy), gx = s.G(s.x0 + 0.1 * dx, s.y0 + 0.1 * dy);
        if (std::isfinite(fx) && std::isfinite(gx)) scale = std::max(scale, std::max(std::abs(fx), std::abs(gx)));
    }
    const double tol = 1e-8 * (1.0 + scale);
    if (!(std::abs(f) <= tol && std::abs(g) <= tol)) {
        throw RestPointMismatch("field does not vanish at the declared rest point (" + std::to_string(s.x0) + ", " +
                                std::to_string(s.y0) + ")");
    }
}

PolarProblem::PolarProblem(PlanarSystem system) : system_(std::move(system)) { check_rest_point(system_); }

PolarProblem::Pieces PolarProblem::pieces(double theta, double r) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double x = r * c, y = r * s;
    const double X = system_.x0 + x, Y = system_.y0 + y;
    const double F = system_.F(X, Y), G = system_.G(X, Y);
    const double Fr = system_.F_x(X, Y) * c + system_.F_y(X, Y) * s;
    const double Gr = system_.G_x(X, Y) * c + system_.G_y(X, Y) * s;
    return {x * F + y * G, x * G - y * F, c * F + s * G + x * Fr + y * Gr, c * G - s * F + x * Gr - y * Fr};
}

double PolarProblem::raw_g(double theta, double r) const {
    if (r == 0.0) return 0.0;
    const auto p = pieces(theta, r);
    return -r * p.N / p.D;
}

double PolarProblem::raw_g_r(double theta, double r) const {
    if (r == 0.0) {
        // limit through the Jacobian at the rest point: g ~ -r (v.Jv)/(v x Jv)
        const double c = std::cos(theta), s = std::sin(theta);
        const double a = system_.F_x(system_.x0, system_.y0), b = system_.F_y(system_.x0, system_.y0);
        const double cc = system_.G_x(system_.x0, system_.y0), d = system_.G_y(system_.x0, system_.y0);
        const double jx = a * c + b * s, jy = cc * c + d * s;
        return -(c * jx + s * jy) / (c * jy - s * jx);
    }
    const auto p = pieces(theta, r);
    return -(p.N / p.D + r * (p.dN * p.D - p.N * p.dD) / (p.D * p.D));
}

double PolarProblem::g(double theta, double r) const {
    const double v = raw_g(theta, r);
    return reg_ ? regularized(v, *reg_) : v;
}

double PolarProblem::g_r(double theta, double r) const {
    const double v = raw_g_r(theta, r);
    return reg_ ? regularized_derivative(raw_g(theta, r), v, *reg_) : v;
}

double PolarProblem::denominator(double theta, double r) const { return pieces(theta, r).D; }

double PolarProblem::angular_speed(double theta, double r) const {
    if (r == 0.0) {
        const double c = std::cos(theta), s = std::sin(theta);
        const double jx = system_.F_x(system_.x0, system_.y0) * c + system_.F_y(system_.x0, system_.y0) * s;
        const double jy = system_.G_x(system_.x0, system_.y0) * c + system_.G_y(system_.x0, system_.y0) * s;
        return c * jy - s * jx;
    }
    return pieces(theta, r).D / (r * r);
}

void PolarProblem::set_regularization(std::optional<Regularization> reg) {
    if (reg && (reg->m < 1 || !(reg->eps > 0.0))) throw std::invalid_argument("regularization needs m >= 1, eps > 0");
    reg_ = reg;
}

PeriodicProblem PolarProblem::periodic(std::size_t n, double g_cap, double verify_guard) const {
    auto self = std::make_shared<PolarProblem>(*this);
    PeriodicProblem p([self](double t, double r) { return self->g(t, r); },
                      [self](double t, double r) { return self->g_r(t, r); }, kTwoPi, std::nullopt, std::nullopt, n);
    p.singularity_cap = g_cap;
    p.verify_guard = verify_guard;
    p.descriptor = system_.name.empty() ? "polar" : system_.name;
    if (reg_) p.descriptor += " (regularized m=" + std::to_string(reg_->m) + ")";
    return p;
}

PolarProblem to_polar(const PlanarSystem& system) { return PolarProblem(system); }

PolarProblem regularize(const PolarProblem& polar, int m, double eps) {
    PolarProblem out = polar;
    out.set_regularization(Regularization{m, eps});
    return out;
}

double radial_offset(const LimitCycle& cycle, double x, double y) {
    const double dx = x - cycle.x0, dy = y - cycle.y0;
    double phi = std::atan2(dy, dx);
    if (phi < 0.0) phi += kTwoPi;
    return std::hypot(dx, dy) - cycle.r(phi);
}

double cycle_period(const PlanarSystem& system, const LimitCycle& cycle) {
    const auto& r = cycle.r;
    if (std::abs(r.period() - kTwoPi) > 1e-12) throw std::invalid_argument("cycle must be sampled over [0, 2 pi)");
    std::vector<double> inv(r.size());
    double sign = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double th = r.node(k), c = std::cos(th), s = std::sin(th);
        const double x = r[k] * c, y = r[k] * s;
        const double F = system.F(cycle.x0 + x, cycle.y0 + y), G = system.G(cycle.x0 + x, cycle.y0 + y);
        const double w = (x * G - y * F) / (x * x + y * y);
        if (!(std::abs(w) >= 1e-10)) throw AngularStall("angular speed vanishes at theta=" + std::to_string(th));
        if (sign == 0.0) sign = w > 0 ? 1.0 : -1.0;
        if (w * sign < 0.0) throw AngularStall("angular speed changes sign at theta=" + std::to_string(th));
        inv[k] = 1.0 / std::abs(w);
    }
    return periodic_quadrature(GridFunction(kTwoPi, std::move(inv)));
}

CycleVerification verify_cycle(const PlanarSystem& system, const LimitCycle& cycle, Direction direction,
                               double tol) {
    if (!(cycle.time_period > 0.0)) throw std::invalid_argument("cycle has no time period");
    const std::array<double, 2> start{cycle.x0 + cycle.r[0], cycle.y0};
    const double t1 = direction == Direction::Forward ? cycle.time_period : -cycle.time_period;
    IvpOptions opts;
    opts.tol = tol;
    const auto traj = integrate_ivp(planar_field(system), 0.0, start, t1, opts);
    const auto end = traj.final_state();
    CycleVerification v;
    v.return_gap = std::hypot(end[0] - start[0], end[1] - start[1]);
    constexpr int samples = 512;
    for (int i = 0; i <= samples; ++i) {
        const double t = t1 * i / samples;
        v.drift = std::max(v.drift, std::abs(radial_offset(cycle, traj.value(t, 0), traj.value(t, 1))));
    }
    return v;
}

namespace {

// Mean angular speed along the cycle; negative for clockwise rotation.
double mean_angular_speed(const PolarProblem& polar, const GridFunction& r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) sum += polar.angular_speed(r.node(k), r[k]);
    return sum / static_cast<double>(r.size());
}

// Whether a point displaced radially by `offset` (relative) moves toward the cycle
// over several periods. Returns nullopt when the probe escapes.
std::optional<bool> probe_side(const PlanarSystem& system, const LimitCycle& cycle, double offset, int periods,
                               double tol) {
    const double r0 = cycle.r[0] * (1.0 + offset);
    const std::array<double, 2> start{cycle.x0 + r0, cycle.y0};
    IvpOptions opts;
    opts.tol = tol;
    try {
        const auto traj = integrate_ivp(planar_field(system), 0.0, start, periods * cycle.time_period, opts);
        const auto end = traj.final_state();
        const double d0 = std::abs(offset) * cycle.r[0];
        return std::abs(radial_offset(cycle, end[0], end[1])) < d0;
    } catch (const NonFiniteState&) {
        return false;
    } catch (const StepSizeUnderflow&) {
        return std::nullopt;
    }
}

Stability probe_stability(const PlanarSystem& system, const LimitCycle& cycle, const CycleSearchOptions& options) {
    const auto inner = probe_side(system, cycle, -options.probe_offset, options.probe_periods, options.verify_tol);
    const auto outer = probe_side(system, cycle, options.probe_offset, options.probe_periods, options.verify_tol);
    if (!inner || !outer) return Stability::Undetermined;
    if (*inner && *outer) return Stability::Stable;
    if (!*inner && !*outer) return Stability::Unstable;
    return Stability::Undetermined;
}

// Secant iteration on the unregularized mu(xi), started from a regularized root.
std::optional<CurvePoint> polish_root(const PeriodicProblem& raw, const CurvePoint& start,
                                      const ContinuationOptions& o) {
    try {
        CurvePoint p0 = solve_at_xi(raw, start.xi, start.U, o);
        CurvePoint p1 = solve_at_xi(raw, start.xi + 1e-4 * (1.0 + start.xi), p0.U, o);
        for (int it = 0; it < o.max_root_evals; ++it) {
            if (std::abs(p1.mu) <= o.root_tol) return p1;
            const double d = p1.mu - p0.mu;
            if (d == 0.0) return std::nullopt;
            const double x2 = p1.xi - p1.mu * (p1.xi - p0.xi) / d;
            if (std::abs(x2 - start.xi) > 0.05 * (1.0 + start.xi)) return std::nullopt;
            p0 = std::move(p1);
            p1 = solve_at_xi(raw, x2, p0.U, o);
        }
    } catch (const NewtonFail&) {
    }
    return std::nullopt;
}

Stability flip(Stability s) {
    switch (s) {
        case Stability::Stable: return Stability::Unstable;
        case Stability::Unstable: return Stability::Stable;
        default: return s;
    }
}

}  // namespace

CycleSearch search_limit_cycles(const PolarProblem& polar, double xi_min, double xi_max, double dxi,
                                const CycleSearchOptions& options) {
    if (!(xi_min > 0.0)) throw std::invalid_argument("cycle search needs xi_min > 0");
    const auto problem = polar.periodic(options.continuation.grid_n, options.g_cap, options.verify_guard);
    CycleSearch out;
    out.curve = trace_curve(problem, xi_min, xi_max, dxi, options.continuation);
    if (out.curve.points.size() < 2) return out;
    out.roots = find_roots(out.curve, problem, options.continuation);
    const auto& system = polar.system();
    std::optional<PeriodicProblem> raw;
    if (polar.regularization()) {
        PolarProblem unregularized = polar;
        unregularized.set_regularization(std::nullopt);
        raw = unregularized.periodic(options.continuation.grid_n, options.g_cap, options.verify_guard);
    }
    for (const auto& root : out.roots) {
        LimitCycle cycle;
        cycle.x0 = system.x0;
        cycle.y0 = system.y0;
        const CurvePoint* point = &root.refined;
        std::optional<CurvePoint> polished;
        if (raw) polished = polish_root(*raw, root.refined, options.continuation);
        if (polished) {
            point = &*polished;
            cycle.polished = true;
        }
        cycle.r = point->U.shifted(point->xi);
        if (!(cycle.r.min() > 0.0)) continue;
        cycle.xi = point->xi;
        cycle.mu_residual = point->mu;
        cycle.crossing = root.mu_slope_sign;
        try {
            cycle.time_period = cycle_period(system, cycle);
        } catch (const AngularStall&) {
            continue;
        }
        const Stability theta_stability = classify_stability(root);
        if (root.mu_slope_sign == Crossing::Degenerate) {
            cycle.stability = probe_stability(system, cycle, options);
        } else {
            cycle.stability = mean_angular_speed(polar, cycle.r) < 0.0 ? flip(theta_stability) : theta_stability;
        }
        try {
            if (cycle.stability == Stability::Undetermined) {
                const auto f = verify_cycle(system, cycle, Direction::Forward, options.verify_tol);
                const auto b = verify_cycle(system, cycle, Direction::Backward, options.verify_tol);
                cycle.verification = f.return_gap <= b.return_gap ? f : b;
            } else {
                const auto dir = cycle.stability == Stability::Stable ? Direction::Forward : Direction::Backward;
                cycle.verification = verify_cycle(system, cycle, dir, options.verify_tol);
            }
            cycle.verify_residual = cycle.verification.return_gap;
        } catch (const Error&) {
            cycle.verify_residual = std::numeric_limits<double>::infinity();
            cycle.verification.return_gap = cycle.verify_residual;
            cycle.verification.drift = cycle.verify_residual;
        }
        out.cycles.push_back(std::move(cycle));
    }
    return out;
}

std::vector<LimitCycle> find_limit_cycles(const PolarProblem& polar, double xi_min, double xi_max, double dxi,
                                          const CycleSearchOptions& options) {
    return search_limit_cycles(polar, xi_min, xi_max, dxi, options).cycles;
}

}  // namespace perorbit
