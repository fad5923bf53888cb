#include "perorbit/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "perorbit/errors.hpp"
#include "perorbit/ivp.hpp"

namespace perorbit {

namespace {

GridFunction zero_grid(double period, std::size_t n) { return GridFunction::constant(period, n, 0.0); }

bool exceeds_guard(const PeriodicProblem& problem, double xi, const GridFunction& U) {
    if (problem.singularity_cap <= 0.0) return false;
    const double g = max_abs_g(problem, xi, U);
    return !(g <= problem.singularity_cap * (1.0 + std::abs(xi)));
}

bool passes_verify_guard(const PeriodicProblem& problem, const CurvePoint& p, const ContinuationOptions& options) {
    if (problem.verify_guard <= 0.0) return true;
    try {
        const auto v = verify_point(problem, p, options);
        double umax = 0.0;
        for (std::size_t k = 0; k < p.U.size(); ++k) umax = std::max(umax, std::abs(p.xi + p.U[k]));
        return v.max_deviation <= problem.verify_guard * std::min(1.0, umax);
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

PeriodicProblem::PeriodicProblem(PeriodicField g, PeriodicField g_u, double period, std::optional<GridFunction> e,
                                 std::optional<GridFunction> j, std::size_t n)
    : g_(std::move(g)),
      g_u_(std::move(g_u)),
      period_(period),
      e_(e ? std::move(*e) : zero_grid(period, n)),
      j_(j ? std::move(*j) : GridFunction::constant(period, n, 1.0)) {
    if (!(period_ > 0.0)) throw std::invalid_argument("period must be positive");
    if (!g_ || !g_u_) throw std::invalid_argument("g and g_u must be callable");
    if (std::abs(e_.period() - period_) > 1e-12 * period_ || std::abs(j_.period() - period_) > 1e-12 * period_) {
        throw std::invalid_argument("e and j must share the problem period");
    }
    if (std::abs(periodic_quadrature(e_)) > 1e-10 * period_ * (1.0 + e_.max_abs())) {
        throw std::invalid_argument("forcing e must have zero average");
    }
}

double PeriodicProblem::reduce(double t) const noexcept {
    double r = std::fmod(t, period_);
    if (r < 0.0) r += period_;
    return r;
}

const char* to_string(Termination t) noexcept {
    switch (t) {
        case Termination::RangeDone: return "RangeDone";
        case Termination::BlowUp: return "BlowUp";
        case Termination::NewtonFail: return "NewtonFail";
        case Termination::SingularityGuard: return "SingularityGuard";
    }
    return "?";
}

const char* to_string(Crossing c) noexcept {
    switch (c) {
        case Crossing::NegToPos: return "NegToPos";
        case Crossing::PosToNeg: return "PosToNeg";
        case Crossing::Degenerate: return "Degenerate";
    }
    return "?";
}

const char* to_string(Stability s) noexcept {
    switch (s) {
        case Stability::Stable: return "Stable";
        case Stability::Unstable: return "Unstable";
        case Stability::Undetermined: return "Undetermined";
    }
    return "?";
}

double max_abs_g(const PeriodicProblem& problem, double xi, const GridFunction& U) {
    double m = 0.0;
    for (std::size_t k = 0; k < U.size(); ++k) {
        const double v = std::abs(problem.g(U.node(k), xi + U[k]));
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, v);
    }
    return m;
}

NewtonUpdate newton_step(const PeriodicProblem& problem, double xi, const GridFunction& V,
                         const LinearSolverOptions& options) {
    const Coefficient b = [&](double t) { return problem.g_u(t, xi + V(t)); };
    const Coefficient j = [&](double t) { return problem.j()(t); };
    const Coefficient f = [&](double t) {
        const double v = V(t);
        const double u = xi + v;
        return problem.e()(t) - problem.g(t, u) + problem.g_u(t, u) * v;
    };
    try {
        auto res = solve_with_mu_shaped(b, j, f, problem.period(), V.size(), options);
        return {std::move(res.y), *res.mu};
    } catch (const Resonance& ex) {
        throw NewtonLinearFailure(ex.what());
    } catch (const DegenerateDenominator& ex) {
        throw NewtonLinearFailure(ex.what());
    } catch (const NonFiniteState& ex) {
        throw NewtonLinearFailure(ex.what());
    } catch (const StepSizeUnderflow& ex) {
        throw NewtonLinearFailure(ex.what());
    } catch (const std::invalid_argument& ex) {
        // non-finite samples while building the grid result
        throw NewtonLinearFailure(ex.what());
    }
}

CurvePoint solve_at_xi(const PeriodicProblem& problem, double xi, const GridFunction& init,
                       const ContinuationOptions& options) {
    GridFunction V = zero_mean(init);
    double residual = std::numeric_limits<double>::infinity();
    bool singular = false;
    for (int it = 1; it <= options.max_iters; ++it) {
        if (exceeds_guard(problem, xi, V)) singular = true;
        NewtonUpdate upd = [&] {
            try {
                return newton_step(problem, xi, V, options.linear);
            } catch (const NewtonLinearFailure& ex) {
                throw NewtonFail(std::string("linear solve failed: ") + ex.what(), residual, true);
            }
        }();
        double diff = 0.0;
        for (std::size_t k = 0; k < V.size(); ++k) diff = std::max(diff, std::abs(upd.U[k] - V[k]));
        residual = diff / (1.0 + std::abs(xi) + upd.U.max_abs());
        if (std::abs(upd.mu) > options.mu_cap || upd.U.max_abs() > options.u_cap) {
            throw NewtonFail("Newton iterate left the capped region", residual, singular, true);
        }
        V = std::move(upd.U);
        if (residual <= options.newton_tol) {
            return CurvePoint{xi, upd.mu, std::move(V), it, residual};
        }
    }
    if (exceeds_guard(problem, xi, V)) singular = true;
    throw NewtonFail("Newton did not converge at xi=" + std::to_string(xi), residual, singular);
}

CurvePoint solve_at_xi(const PeriodicProblem& problem, double xi, const ContinuationOptions& options) {
    return solve_at_xi(problem, xi, zero_grid(problem.period(), options.grid_n), options);
}

SolutionCurve trace_curve(const PeriodicProblem& problem, double xi_start, double xi_end, double dxi,
                          const ContinuationOptions& options) {
    if (dxi == 0.0 || !std::isfinite(dxi)) throw std::invalid_argument("dxi must be nonzero");
    if ((xi_end - xi_start) * dxi < 0.0) throw std::invalid_argument("dxi points away from xi_end");

    SolutionCurve curve;
    curve.descriptor = problem.descriptor;
    const double dir = dxi > 0 ? 1.0 : -1.0;
    const double slack = 1e-9 * std::abs(dxi);

    // Rejected points are retried with a shorter step; Stop ends the curve.
    enum class Verdict { Accepted, Rejected, Stop };
    auto accept = [&](CurvePoint&& p) {
        if (std::abs(p.mu) > options.mu_cap || p.U.max_abs() > options.u_cap) {
            curve.termination = Termination::BlowUp;
            curve.stopped_at = p.xi;
            return Verdict::Stop;
        }
        if (exceeds_guard(problem, p.xi, p.U)) {
            curve.termination = Termination::SingularityGuard;
            curve.stopped_at = p.xi;
            return Verdict::Stop;
        }
        if (!passes_verify_guard(problem, p, options)) return Verdict::Rejected;
        curve.points.push_back(std::move(p));
        return Verdict::Accepted;
    };
    const NewtonFail unverified("point failed the re-integration guard", 0.0, true);

    auto fail = [&](double xi, const NewtonFail& ex) {
        if (ex.singular()) {
            curve.termination = Termination::SingularityGuard;
        } else if (ex.capped()) {
            curve.termination = Termination::BlowUp;
        } else {
            curve.termination = Termination::NewtonFail;
        }
        curve.stopped_at = xi;
    };

    try {
        const Verdict v = accept(solve_at_xi(problem, xi_start, options));
        if (v == Verdict::Stop) return curve;
        if (v == Verdict::Rejected) {
            fail(xi_start, unverified);
            return curve;
        }
    } catch (const NewtonFail& ex) {
        fail(xi_start, ex);
        return curve;
    }

    while (dir * (xi_end - curve.points.back().xi) > slack) {
        const CurvePoint& last = curve.points.back();
        double step = dxi;
        bool done = false;
        std::optional<NewtonFail> failure;
        for (int halving = 0; halving <= options.max_halvings; ++halving, step *= 0.5) {
            double target = last.xi + step;
            if (dir * (target - xi_end) > -slack) target = xi_end;
            try {
                CurvePoint p = solve_at_xi(problem, target, last.U, options);
                const Verdict v = accept(std::move(p));
                if (v == Verdict::Stop) return curve;
                if (v == Verdict::Accepted) {
                    done = true;
                    break;
                }
                failure = unverified;
            } catch (const NewtonFail& ex) {
                failure = ex;
            }
        }
        if (!done) {
            fail(last.xi + step * 2.0, *failure);
            return curve;
        }
    }
    curve.termination = Termination::RangeDone;
    return curve;
}

namespace {

// Illinois-modified regula falsi on a bracket [a, b] with mu(a) * mu(b) < 0.
CurvePoint refine_root(const PeriodicProblem& problem, const CurvePoint& pa, const CurvePoint& pb,
                       const ContinuationOptions& options) {
    double a = pa.xi, fa = pa.mu, b = pb.xi, fb = pb.mu;
    const GridFunction* warm = &pa.U;
    std::optional<CurvePoint> best;
    int side = 0;
    for (int evals = 0; evals < options.max_root_evals; ++evals) {
        double x = (a * fb - b * fa) / (fb - fa);
        if (!(x > std::min(a, b) && x < std::max(a, b))) x = 0.5 * (a + b);
        CurvePoint p = solve_at_xi(problem, x, *warm, options);
        const double fx = p.mu;
        best = std::move(p);
        warm = &best->U;
        if (std::abs(fx) <= options.root_tol) return std::move(*best);
        if ((fx < 0) == (fa < 0)) {
            a = x;
            fa = fx;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = x;
            fb = fx;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 1e-14 * (1.0 + std::abs(a))) return std::move(*best);
    }
    throw RefinementFail("root refinement did not converge in " + std::to_string(options.max_root_evals) +
                         " evaluations");
}

// Golden-section search maximizing sign * mu on [a, b].
CurvePoint golden_extremum(const PeriodicProblem& problem, double a, double b, double sign, const GridFunction& warm,
                           const ContinuationOptions& options) {
    constexpr double inv_phi = 0.6180339887498949;
    if (a > b) std::swap(a, b);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    CurvePoint p1 = solve_at_xi(problem, x1, warm, options);
    CurvePoint p2 = solve_at_xi(problem, x2, p1.U, options);
    while (b - a > options.fold_tol) {
        if (sign * p1.mu >= sign * p2.mu) {
            b = x2;
            x2 = x1;
            p2 = std::move(p1);
            x1 = b - inv_phi * (b - a);
            p1 = solve_at_xi(problem, x1, p2.U, options);
        } else {
            a = x1;
            x1 = x2;
            p1 = std::move(p2);
            x2 = a + inv_phi * (b - a);
            p2 = solve_at_xi(problem, x2, p1.U, options);
        }
    }
    CurvePoint& best = sign * p1.mu >= sign * p2.mu ? p1 : p2;
    return solve_at_xi(problem, 0.5 * (a + b), best.U, options);
}

// Walks from index `start` in direction `step` while mu keeps its sign. True when
// |mu| turns back toward zero inside that stretch without exceeding `limit`.
bool tangential_side(const std::vector<const CurvePoint*>& pts, std::size_t start, int step, double limit) {
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
    const double sign = pts[start]->mu > 0 ? 1.0 : -1.0;
    double peak = 0.0;
    bool turned = false;
    for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(start); k >= 0 && k < n; k += step) {
        const double m = pts[static_cast<std::size_t>(k)]->mu * sign;
        if (m <= 0.0) break;
        if (m < peak) turned = true;
        peak = std::max(peak, m);
        if (peak > limit) return false;
    }
    return turned;
}

}  // namespace

std::vector<RootRecord> find_roots(const SolutionCurve& curve, const PeriodicProblem& problem,
                                   const ContinuationOptions& options) {
    if (curve.points.size() < 2) throw std::invalid_argument("find_roots needs at least two curve points");
    // work in increasing xi regardless of tracing direction
    std::vector<const CurvePoint*> pts;
    for (const auto& p : curve.points) pts.push_back(&p);
    if (pts.front()->xi > pts.back()->xi) std::reverse(pts.begin(), pts.end());

    std::vector<RootRecord> roots;
    auto sign_of = [](double v) { return (v > 0) - (v < 0); };
    double mu_scale = 0.0;
    for (const auto* p : pts) mu_scale = std::max(mu_scale, std::abs(p->mu));
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const CurvePoint& pa = *pts[i];
        const CurvePoint& pb = *pts[i + 1];
        const int sa = sign_of(pa.mu), sb = sign_of(pb.mu);
        if (sa == 0) {
            // exact zero at a stored point: classify from its neighbours
            const int left = i > 0 ? sign_of(pts[i - 1]->mu) : -sb;
            if (i == 0 && sb == 0) continue;
            Crossing c = (left < 0 && sb > 0) ? Crossing::NegToPos
                         : (left > 0 && sb < 0) ? Crossing::PosToNeg
                                                : Crossing::Degenerate;
            RootRecord r{pa.xi, c, Stability::Undetermined, pa};
            r.stability = classify_stability(r);
            roots.push_back(std::move(r));
            continue;
        }
        if (sb == 0 || sa == sb) continue;
        CurvePoint refined = refine_root(problem, pa, pb, options);
        Crossing c = sa < 0 ? Crossing::NegToPos : Crossing::PosToNeg;
        if (tangential_side(pts, i, -1, mu_scale * options.tangency_tol) ||
            tangential_side(pts, i + 1, 1, mu_scale * options.tangency_tol)) {
            c = Crossing::Degenerate;
        }
        RootRecord r{refined.xi, c, Stability::Undetermined, std::move(refined)};
        r.stability = classify_stability(r);
        roots.push_back(std::move(r));
    }
    if (pts.size() >= 2 && sign_of(pts.back()->mu) == 0 && pts.size() > 1) {
        const CurvePoint& last = *pts.back();
        RootRecord r{last.xi, Crossing::Degenerate, Stability::Undetermined, last};
        roots.push_back(std::move(r));
    }

    // Tangential zeros: an interior extremum of mu that approaches zero without a sign change.
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double m0 = pts[i - 1]->mu, m1 = pts[i]->mu, m2 = pts[i + 1]->mu;
        const bool neg_max = m1 < 0 && m0 < m1 && m2 < m1;
        const bool pos_min = m1 > 0 && m0 > m1 && m2 > m1;
        if (!neg_max && !pos_min) continue;
        const double sign = neg_max ? 1.0 : -1.0;
        CurvePoint ext = golden_extremum(problem, pts[i - 1]->xi, pts[i + 1]->xi, sign, pts[i]->U, options);
        if (std::abs(ext.mu) <= options.root_tol) {
            RootRecord r{ext.xi, Crossing::Degenerate, Stability::Undetermined, std::move(ext)};
            roots.push_back(std::move(r));
        }
    }
    std::sort(roots.begin(), roots.end(), [](const RootRecord& x, const RootRecord& y) { return x.xi0 < y.xi0; });
    return roots;
}

Stability classify_stability(const RootRecord& root) noexcept {
    switch (root.mu_slope_sign) {
        case Crossing::NegToPos: return Stability::Stable;
        case Crossing::PosToNeg: return Stability::Unstable;
        case Crossing::Degenerate: return Stability::Undetermined;
    }
    return Stability::Undetermined;
}

FoldPoint find_fold(const SolutionCurve& curve, const PeriodicProblem& problem, const ContinuationOptions& options) {
    const auto& pts = curve.points;
    if (pts.size() < 3) throw NoInteriorMax("curve too short to contain an interior maximum");
    std::size_t imax = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].mu > pts[imax].mu) imax = i;
    }
    if (imax == 0 || imax + 1 == pts.size()) {
        throw NoInteriorMax("mu attains its maximum at an end of the traced range");
    }
    CurvePoint p = golden_extremum(problem, pts[imax - 1].xi, pts[imax + 1].xi, 1.0, pts[imax].U, options);
    const double xi = p.xi, mu = p.mu;
    return FoldPoint{xi, mu, std::move(p)};
}

PointVerification verify_point(const PeriodicProblem& problem, const CurvePoint& point,
                               const ContinuationOptions& options) {
    const double mu = point.mu, xi = point.xi;
    ScalarField rhs = [&](double t, double u) { return mu * problem.j()(t) + problem.e()(t) - problem.g(t, u); };
    IvpOptions opts;
    opts.tol = options.verify_tol;
    const IvpTrajectory traj = integrate_ivp(rhs, 0.0, xi + point.U[0], problem.period(), opts);
    const std::size_t n = point.U.size();
    double max_dev = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = traj.value(point.U.node(k));
        max_dev = std::max(max_dev, std::abs(u - (xi + point.U[k])));
        sum += u;
    }
    max_dev = std::max(max_dev, std::abs(traj.final_state()[0] - (xi + point.U[0])));
    const double avg = sum / static_cast<double>(n);
    return {max_dev, std::abs(avg - xi)};
}

}  // namespace perorbit
