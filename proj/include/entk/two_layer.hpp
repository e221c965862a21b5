#pragma once

#include "entk/types.hpp"

#include <cmath>
#include <vector>

namespace entk {

// Exact solutions for the two-layer linear network on whitened data. These
// are the highest-precision oracles in the repo, so integration is RK4.

// The GD error ODE appears in two forms: the appendix derivation carries both
// layer contributions (rate 2 H_y), the main-text statement carries one. The
// appendix form is the default; the other is kept for comparison.
enum class TwoLayerGdForm { Appendix, MainText };

struct TwoLayerPoint {
    double t;
    double delta;   // projected error norm
    double a;       // <gtilde h> projection
    double h_y;     // task-projected feature kernel
    double gtilde;  // gradient/pseudo-gradient scalar
};

struct TwoLayerTrajectory {
    std::vector<TwoLayerPoint> points;
    double a_star = 0.0;        // fixed point of a (FA)
    double h_y_infinity = 1.0;  // asymptotic H_y
};

namespace detail {
template <typename F>
double rk4_step(F&& rhs, double x, double dt) {
    const double k1 = rhs(x);
    const double k2 = rhs(x + 0.5 * dt * k1);
    const double k3 = rhs(x + 0.5 * dt * k2);
    const double k4 = rhs(x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}
}  // namespace detail

// --------------------------------------------------------------------------
// GD: dDelta/dt = -2 sqrt(1 + g0^2 (y - Delta)^2) Delta (appendix form),
// H_y from the conservation law H_y^2 = 1 + g0^2 (y - Delta)^2.
// --------------------------------------------------------------------------
inline TwoLayerTrajectory solve_gd(double gamma0, double y, const TimeGrid& grid,
                                   TwoLayerGdForm form = TwoLayerGdForm::Appendix) {
    if (!(gamma0 > 0.0)) throw DomainError("solve_gd: gamma0 > 0 required");
    grid.validate();
    const double rate_factor = (form == TwoLayerGdForm::Appendix) ? 2.0 : 1.0;
    auto hy = [&](double d) { return std::sqrt(1.0 + gamma0 * gamma0 * (y - d) * (y - d)); };
    auto rhs = [&](double d) { return -rate_factor * hy(d) * d; };

    TwoLayerTrajectory out;
    out.points.reserve(grid.steps_T);
    double delta = y;
    for (int k = 0; k < grid.steps_T; ++k) {
        const double h = hy(delta);
        out.points.push_back({grid.time(k), delta, gamma0 * (y - delta), h, h});
        if (k + 1 < grid.steps_T) delta = detail::rk4_step(rhs, delta, grid.dt);
    }
    out.h_y_infinity = std::sqrt(1.0 + gamma0 * gamma0 * y * y);
    out.a_star = gamma0 * std::abs(y);
    return out;
}

// --------------------------------------------------------------------------
// rho-FA: da/dt = g0 y - a^3/2 - (1+rho) a, with
//   Delta = y - (a^3/2 + (1+rho) a)/g0,  H_y = 1 + a^2,  Gtilde = rho + a^2/2.
// Fixed point: smallest positive root of a^3/2 + (1+rho) a = g0 y.
// --------------------------------------------------------------------------
inline double fa_fixed_point(double gamma0, double rho, double y) {
    const double target = gamma0 * std::abs(y);
    if (target == 0.0) return 0.0;
    auto F = [&](double a) { return 0.5 * a * a * a + (1.0 + rho) * a - target; };
    auto dF = [&](double a) { return 1.5 * a * a + (1.0 + rho); };
    double a = std::min(target / (1.0 + rho), std::cbrt(2.0 * target));
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
        const double f = F(a);
        if (std::abs(f) < 1e-14 * std::max(1.0, target)) {
            ok = true;
            break;
        }
        a -= f / dF(a);
    }
    if (!ok || !(a >= 0.0) || std::abs(F(a)) > 1e-12 * std::max(1.0, target)) {
        // bisection fallback on the analytic bracket
        double lo = 0.0, hi = std::cbrt(2.0 * target) + target;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (F(mid) > 0.0 ? hi : lo) = mid;
        }
        a = 0.5 * (lo + hi);
    }
    return a;
}

inline TwoLayerTrajectory solve_rho_fa(double gamma0, double rho, double y,
                                       const TimeGrid& grid) {
    if (!(gamma0 > 0.0)) throw DomainError("solve_rho_fa: gamma0 > 0 required");
    if (rho < 0.0 || rho > 1.0) throw DomainError("solve_rho_fa: rho in [0,1] required");
    grid.validate();
    const double sign = (y >= 0.0) ? 1.0 : -1.0;  // a -> -a symmetry
    const double ay = std::abs(y);
    auto rhs = [&](double a) { return gamma0 * ay - 0.5 * a * a * a - (1.0 + rho) * a; };

    TwoLayerTrajectory out;
    out.points.reserve(grid.steps_T);
    double a = 0.0;
    for (int k = 0; k < grid.steps_T; ++k) {
        const double delta = ay - (0.5 * a * a * a + (1.0 + rho) * a) / gamma0;
        out.points.push_back({grid.time(k), sign * delta, sign * a, 1.0 + a * a,
                              rho + 0.5 * a * a});
        if (k + 1 < grid.steps_T) a = detail::rk4_step(rhs, a, grid.dt);
    }
    out.a_star = fa_fixed_point(gamma0, rho, y);
    out.h_y_infinity = 1.0 + out.a_star * out.a_star;
    return out;
}

// --------------------------------------------------------------------------
// Hebb: per-sample decoupled system on whitened data,
//   dDelta/dt = -[H + g0 (y - Delta) Delta] Delta,  dH/dt = 2 g0 Delta^2 H.
// --------------------------------------------------------------------------
struct HebbSampleTrajectory {
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<double> h;
};

inline std::vector<HebbSampleTrajectory> solve_hebb(double gamma0, const Vec& y,
                                                    const TimeGrid& grid) {
    if (!(gamma0 > 0.0)) throw DomainError("solve_hebb: gamma0 > 0 required");
    grid.validate();
    std::vector<HebbSampleTrajectory> out(y.size());
    for (Eigen::Index mu = 0; mu < y.size(); ++mu) {
        const double ymu = y(mu);
        double delta = ymu, h = 1.0;
        auto& tr = out[mu];
        tr.t.reserve(grid.steps_T);
        for (int k = 0; k < grid.steps_T; ++k) {
            tr.t.push_back(grid.time(k));
            tr.delta.push_back(delta);
            tr.h.push_back(h);
            if (k + 1 == grid.steps_T) break;
            // coupled 2-D RK4
            auto fd = [&](double d, double hh) {
                return -(hh + gamma0 * (ymu - d) * d) * d;
            };
            auto fh = [&](double d, double hh) { return 2.0 * gamma0 * d * d * hh; };
            const double dt = grid.dt;
            const double k1d = fd(delta, h), k1h = fh(delta, h);
            const double k2d = fd(delta + 0.5 * dt * k1d, h + 0.5 * dt * k1h);
            const double k2h = fh(delta + 0.5 * dt * k1d, h + 0.5 * dt * k1h);
            const double k3d = fd(delta + 0.5 * dt * k2d, h + 0.5 * dt * k2h);
            const double k3h = fh(delta + 0.5 * dt * k2d, h + 0.5 * dt * k2h);
            const double k4d = fd(delta + dt * k3d, h + dt * k3h);
            const double k4h = fh(delta + dt * k3d, h + dt * k3h);
            delta += dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
            h += dt / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
        }
    }
    return out;
}

// Feature-kernel movement Delta H_y(infinity) as a function of gamma0,
// evaluated from the exact fixed points (no integration needed).
struct FeatureMovementRow {
    double gamma0;
    double delta_h_gd;
    double delta_h_fa0;
    double delta_h_fa1;
};

inline std::vector<FeatureMovementRow> feature_movement_sweep(const std::vector<double>& gammas,
                                                              double y) {
    std::vector<FeatureMovementRow> rows;
    rows.reserve(gammas.size());
    for (double g : gammas) {
        FeatureMovementRow r;
        r.gamma0 = g;
        r.delta_h_gd = std::sqrt(1.0 + g * g * y * y) - 1.0;
        const double a0 = fa_fixed_point(g, 0.0, y);
        const double a1 = fa_fixed_point(g, 1.0, y);
        r.delta_h_fa0 = a0 * a0;
        r.delta_h_fa1 = a1 * a1;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace entk
