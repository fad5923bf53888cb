#include "perorbit/ivp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "perorbit/errors.hpp"

namespace perorbit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

void check_state(std::span<const double> y, double bound, double t) {
    for (double v : y) {
        if (!std::isfinite(v) || std::abs(v) > bound) throw NonFiniteState(t);
    }
}

double error_norm(std::span<const double> err, std::span<const double> y0, std::span<const double> y1,
                  double tol) {
    double sum = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

}  // namespace

std::size_t IvpTrajectory::locate(double t) const noexcept {
    const bool forward = t1_ >= t0_;
    // seg_t_ is monotone in the integration direction
    auto it = forward ? std::upper_bound(seg_t_.begin(), seg_t_.end(), t)
                      : std::upper_bound(seg_t_.begin(), seg_t_.end(), t, std::greater<>());
    std::size_t idx = static_cast<std::size_t>(it - seg_t_.begin());
    return idx == 0 ? 0 : std::min(idx - 1, seg_t_.size() - 1);
}

double IvpTrajectory::eval_segment(std::size_t seg, double t, std::size_t i) const noexcept {
    const double theta = (t - seg_t_[seg]) / seg_h_[seg];
    const double theta1 = 1.0 - theta;
    const double* r = &rcont_[seg * 5 * dim_];
    return r[i] + theta * (r[dim_ + i] +
                           theta1 * (r[2 * dim_ + i] + theta * (r[3 * dim_ + i] + theta1 * r[4 * dim_ + i])));
}

double IvpTrajectory::value(double t, std::size_t component) const {
    if (component >= dim_) throw std::out_of_range("trajectory component");
    const double lo = std::min(t0_, t1_), hi = std::max(t0_, t1_);
    t = std::clamp(t, lo, hi);
    if (t == t1_) return y1_[component];
    if (t == t0_ || seg_t_.empty()) return y0_[component];
    return eval_segment(locate(t), t, component);
}

std::vector<double> IvpTrajectory::state(double t) const {
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = value(t, i);
    return out;
}

void IvpTrajectory::sample(std::span<const double> times, std::size_t component, std::span<double> out) const {
    if (out.size() != times.size()) throw std::invalid_argument("sample: size mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) out[k] = value(times[k], component);
}

IvpTrajectory integrate_ivp(const VectorField& rhs, double t0, std::span<const double> y0, double t1,
                            const IvpOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("integrate_ivp: tol must be positive");
    const std::size_t n = y0.size();
    if (n == 0) throw std::invalid_argument("integrate_ivp: empty state");

    IvpTrajectory traj;
    traj.t0_ = t0;
    traj.t1_ = t1;
    traj.dim_ = n;
    traj.y0_.assign(y0.begin(), y0.end());
    check_state(traj.y0_, options.state_bound, t0);
    if (t1 == t0) {
        traj.y1_ = traj.y0_;
        return traj;
    }

    const double span = std::abs(t1 - t0);
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double tol = options.tol;
    const double h_min = span * 1e-12;

    std::vector<double> y(traj.y0_), ynew(n), ytmp(n), err(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

    double t = t0;
    rhs(t, y, k1);
    check_state(k1, std::numeric_limits<double>::max(), t);

    double h = std::abs(options.initial_step);
    if (h == 0.0) {
        // Starting step heuristic from Hairer & Wanner.
        double dn0 = 0.0, dn1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = tol + tol * std::abs(y[i]);
            dn0 += (y[i] / sc) * (y[i] / sc);
            dn1 += (k1[i] / sc) * (k1[i] / sc);
        }
        dn0 = std::sqrt(dn0 / n);
        dn1 = std::sqrt(dn1 / n);
        double h0 = (dn0 < 1e-10 || dn1 < 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + dir * h0 * k1[i];
        rhs(t + dir * h0, ytmp, k2);
        double dn2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = tol + tol * std::abs(y[i]);
            const double v = (k2[i] - k1[i]) / sc;
            dn2 += v * v;
        }
        dn2 = std::sqrt(dn2 / n) / h0;
        const double dmax = std::max(dn1, dn2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min(h, span);

    // A collapsing step on a state far above its start is a finite-time blow-up.
    double y0_scale = 1.0;
    for (double v : traj.y0_) y0_scale = std::max(y0_scale, std::abs(v));
    auto underflow = [&](double at, double step) {
        double ymax = 0.0;
        for (double v : y) ymax = std::max(ymax, std::abs(v));
        if (ymax > 1e6 * y0_scale) throw NonFiniteState(at);
        throw StepSizeUnderflow(at, step);
    };

    bool last_rejected = false;
    std::size_t steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > options.max_steps) throw Error("integrate_ivp: step budget exhausted");
        bool final_step = false;
        if (h >= std::abs(t1 - t) * (1.0 - 1e-12)) {
            h = std::abs(t1 - t);
            final_step = true;
        }
        if (h < h_min && !final_step) underflow(t, h);
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        rhs(t + c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double tnew = final_step ? t1 : t + hs;
        rhs(tnew, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(tnew, ynew, k7);

        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            if (!std::isfinite(ynew[i]) || !std::isfinite(err[i]) || !std::isfinite(k7[i])) finite = false;
        }
        const double enorm = finite ? error_norm(err, y, ynew, tol) : std::numeric_limits<double>::infinity();

        if (enorm <= 1.0) {
            check_state(ynew, options.state_bound, tnew);
            traj.seg_t_.push_back(t);
            traj.seg_h_.push_back(tnew - t);
            const std::size_t base = traj.rcont_.size();
            traj.rcont_.resize(base + 5 * n);
            double* r = &traj.rcont_[base];
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = hs * k1[i] - ydiff;
                r[i] = y[i];
                r[n + i] = ydiff;
                r[2 * n + i] = bspl;
                r[3 * n + i] = ydiff - hs * k7[i] - bspl;
                r[4 * n + i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            ++traj.accepted_;
            t = tnew;
            y.swap(ynew);
            k1.swap(k7);
            double fac = enorm == 0.0 ? 5.0 : 0.9 * std::pow(enorm, -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h *= fac;
            last_rejected = false;
        } else {
            ++traj.rejected_;
            const double fac = std::isfinite(enorm) ? std::max(0.2, 0.9 * std::pow(enorm, -0.2)) : 0.2;
            h *= fac;
            last_rejected = true;
            if (h < h_min) {
                if (!finite) throw NonFiniteState(t);
                underflow(t, h);
            }
        }
    }
    traj.t1_ = t1;
    traj.y1_ = y;
    return traj;
}

IvpTrajectory integrate_ivp(const ScalarField& rhs, double t0, double y0, double t1, const IvpOptions& options) {
    VectorField field = [&rhs](double t, std::span<const double> y, std::span<double> dy) { dy[0] = rhs(t, y[0]); };
    const double init[1] = {y0};
    return integrate_ivp(field, t0, init, t1, options);
}

}  // namespace perorbit
