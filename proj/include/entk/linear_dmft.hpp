#pragma once

#include "entk/dataset.hpp"
#include "entk/metrics.hpp"
#include "entk/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace entk {

// Sampling-free DMFT closure for deep linear networks: the fields are linear
// combinations of the Gaussian sources, so all kernels follow from matrix
// algebra on the (P*T) x (P*T) grid.

struct LinearClosureConfig {
    double damping_beta = 0.6;
    double tol = 1e-9;
    int max_iters = 300;
};

struct LinearClosureState {
    int L = 0, P = 0, T = 0;
    double dt = 0.0;
    std::vector<Mat> H;   // l = 0..L, feature kernels (H[0] = K^x tiled)
    std::vector<Mat> G;   // l = 1..L+1 at index l-1 (G[L] = ones)
    std::vector<Mat> Gt;  // full gradient/pseudo-gradient kernels, same indexing
    std::vector<Vec> c;   // FA rank-one helpers, l = 1..L at index l-1
    std::vector<Vec> d;   // FA: Gt^l row profile, l = 1..L+1 at index l-1
    std::vector<Mat> A, B, C, D;  // response tensors, l = 1..L at index l-1
    Mat f, Delta;                 // P x T
    ConvergenceReport report;
};

namespace lindetail {

// dt-weighted strictly causal operator: op(X)[(mu t),(nu s)] = dt X [s < t].
inline Mat causal_op(const Mat& x, int P, int T, double dt) {
    Mat out = Mat::Zero(P * T, P * T);
    for (int mu = 0; mu < P; ++mu)
        for (int t = 0; t < T; ++t)
            for (int nu = 0; nu < P; ++nu)
                for (int s = 0; s < t; ++s)
                    out(mu * T + t, nu * T + s) = dt * x(mu * T + t, nu * T + s);
    return out;
}

// Same with the error factor: dt X(a,b) Delta(nu, s) [s < t].
inline Mat causal_op_delta(const Mat& x, const Mat& delta, int P, int T, double dt) {
    Mat out = Mat::Zero(P * T, P * T);
    for (int mu = 0; mu < P; ++mu)
        for (int t = 0; t < T; ++t)
            for (int nu = 0; nu < P; ++nu)
                for (int s = 0; s < t; ++s)
                    out(mu * T + t, nu * T + s) =
                        dt * x(mu * T + t, nu * T + s) * delta(nu, s);
    return out;
}

// Tensor-level masked product X(a,b) Delta(nu,s) [s < t] (no dt weight).
inline Mat mask_delta(const Mat& x, const Mat& delta, int P, int T) {
    Mat out = Mat::Zero(P * T, P * T);
    for (int mu = 0; mu < P; ++mu)
        for (int t = 0; t < T; ++t)
            for (int nu = 0; nu < P; ++nu)
                for (int s = 0; s < t; ++s)
                    out(mu * T + t, nu * T + s) =
                        x(mu * T + t, nu * T + s) * delta(nu, s);
    return out;
}

// Discrete Jacobian -> functional response kernel: divide by dt, keep the
// strictly causal part.
inline Mat unfold(const Mat& m, int P, int T, double dt) {
    Mat out = Mat::Zero(P * T, P * T);
    for (int mu = 0; mu < P; ++mu)
        for (int t = 0; t < T; ++t)
            for (int nu = 0; nu < P; ++nu)
                for (int s = 0; s < t; ++s)
                    out(mu * T + t, nu * T + s) = m(mu * T + t, nu * T + s) / dt;
    return out;
}

// Unit-lower-triangular solve X = E^{-1} Y (E = I - strictly lower part).
inline Mat solve_resolvent(const Mat& e, const Mat& y, const std::string& where) {
    Mat x = e.triangularView<Eigen::Lower>().solve(y);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e12)
        throw SolverError("linear closure: resolvent blow-up in " + where +
                          " (reduce dt or gamma0)");
    return x;
}

inline void check_finite(const Mat& m, const std::string& where) {
    if (!m.allFinite() || m.cwiseAbs().maxCoeff() > 1e12)
        throw SolverError("linear closure: divergence in " + where +
                          " (reduce dt or gamma0)");
}

inline double damp_update(Mat& cur, const Mat& estimate, double beta) {
    const double base = cur.norm();
    const Mat updated = (1.0 - beta) * cur + beta * estimate;
    const double change = (updated - cur).norm() / (base + 1e-12);
    cur = updated;
    return change;
}

// Euler prediction dynamics from equal-time eNTK values.
inline void predict(const std::vector<Mat>& h, const std::vector<Mat>& gt, const Vec& y,
                    int P, int T, double dt, Mat& f, Mat& delta) {
    const int L = static_cast<int>(h.size()) - 1;
    f.setZero(P, T);
    delta.resize(P, T);
    Vec cur = Vec::Zero(P);
    for (int k = 0; k < T; ++k) {
        f.col(k) = cur;
        delta.col(k) = y - cur;
        if (k + 1 == T) break;
        Mat kk = Mat::Zero(P, P);
        for (int l = 0; l <= L; ++l)
            for (int mu = 0; mu < P; ++mu)
                for (int nu = 0; nu < P; ++nu)
                    kk(mu, nu) += gt[l](mu * T + k, nu * T + k) * h[l](mu * T + k, nu * T + k);
        cur += dt * (kk * delta.col(k));
    }
}

}  // namespace lindetail

inline LinearClosureState linear_closure_init(const Dataset& ds, int L, const TimeGrid& grid) {
    LinearClosureState st;
    st.L = L;
    st.P = static_cast<int>(ds.P());
    st.T = grid.steps_T;
    st.dt = grid.dt;
    const Mat h0 = TwoTime::tiled(ds.input_kernel, st.T).mat();
    const int n = st.P * st.T;
    st.H.assign(L + 1, h0);
    st.H[0] = h0;
    st.G.assign(L + 1, Mat::Ones(n, n));
    st.Gt.assign(L + 1, Mat::Ones(n, n));
    st.A.assign(L, Mat::Zero(n, n));
    st.B.assign(L, Mat::Zero(n, n));
    st.C.assign(L, Mat::Zero(n, n));
    st.D.assign(L, Mat::Zero(n, n));
    return st;
}

// ---------------------------------------------------------------------------
// GD closure (gtilde == g):
//   h = u + g0 (A^{l-1} + H^{l-1}_D) g,   g = r + g0 (B^l + G^{l+1}_D) h.
// ---------------------------------------------------------------------------
inline LinearClosureState linear_gd_closure(const Dataset& ds, double gamma0, int L,
                                            const TimeGrid& grid,
                                            const LinearClosureConfig& cfg = {}) {
    using namespace lindetail;
    grid.validate();
    if (!(gamma0 >= 0.0)) throw DomainError("linear_gd_closure: gamma0 >= 0 required");
    LinearClosureState st = linear_closure_init(ds, L, grid);
    const int P = st.P, T = st.T, n = P * T;
    const double dt = grid.dt;
    const Mat eye = Mat::Identity(n, n);

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);

        std::vector<Mat> h_new(L + 1), g_new(L + 1), a_new(L, Mat::Zero(n, n)),
            b_new(L, Mat::Zero(n, n));
        h_new[0] = st.H[0];
        g_new[L] = st.G[L];
        std::vector<Mat> m1(L + 1), m2(L + 1);
        for (int l = 1; l <= L; ++l) {
            Mat m1l = causal_op_delta(st.H[l - 1], st.Delta, P, T, dt);
            if (l >= 2) m1l += causal_op(st.A[l - 2], P, T, dt);
            m1[l] = gamma0 * m1l;
            Mat m2l = causal_op_delta(st.Gt[l], st.Delta, P, T, dt);  // Gt^{l+1} at idx l
            if (l <= L - 1) m2l += causal_op(st.B[l - 1], P, T, dt);
            m2[l] = gamma0 * m2l;
        }
        for (int l = 1; l <= L; ++l) {
            const Mat e = eye - m1[l] * m2[l];
            const Mat p_inv_m1 = solve_resolvent(e, m1[l], "H layer " + std::to_string(l));
            // H^l = E^{-1} (H^{l-1} + M1 G^{l+1} M1^T) E^{-T}
            Mat core = st.H[l - 1] + m1[l] * st.G[l] * m1[l].transpose();
            Mat x = solve_resolvent(e, core, "H layer " + std::to_string(l));
            h_new[l] = solve_resolvent(e, x.transpose(), "H layer " + std::to_string(l))
                           .transpose();
            check_finite(h_new[l], "H layer " + std::to_string(l));
            if (l <= L - 1 && gamma0 > 0.0) a_new[l - 1] = unfold(p_inv_m1, P, T, dt) / gamma0;
        }
        for (int l = L; l >= 1; --l) {
            const Mat fmat = eye - m2[l] * m1[l];
            Mat core = st.G[l] + m2[l] * st.H[l - 1] * m2[l].transpose();
            Mat x = solve_resolvent(fmat, core, "G layer " + std::to_string(l));
            g_new[l - 1] = solve_resolvent(fmat, x.transpose(), "G layer " + std::to_string(l))
                               .transpose();
            check_finite(g_new[l - 1], "G layer " + std::to_string(l));
            if (l >= 2 && gamma0 > 0.0) {
                const Mat q_inv_m2 = solve_resolvent(fmat, m2[l], "B layer " + std::to_string(l));
                b_new[l - 2] = unfold(q_inv_m2, P, T, dt) / gamma0;
            }
        }

        double residual = 0.0;
        const double beta = cfg.damping_beta;
        for (int l = 1; l <= L; ++l) {
            residual = std::max(residual, damp_update(st.H[l], h_new[l], beta));
            residual = std::max(residual, damp_update(st.G[l - 1], g_new[l - 1], beta));
            st.Gt[l - 1] = st.G[l - 1];  // GD identity
            if (l <= L - 1) {
                damp_update(st.A[l - 1], a_new[l - 1], beta);
                damp_update(st.B[l - 1], b_new[l - 1], beta);
            }
        }
        st.report.iterations = iter;
        st.report.final_residual = residual;
        st.report.residual_history.push_back(residual);
        st.report.loss_history.push_back(0.5 * st.Delta.col(T - 1).squaredNorm());
        if (residual < cfg.tol) {
            st.report.converged = true;
            break;
        }
    }
    predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);
    return st;
}

// ---------------------------------------------------------------------------
// FA-family closure. Gtildetilde^l = 1 1^T is rank one, so the update to H is
// a rank-one correction H^l = H^{l-1} + g0^2 c^l c^l^T with
//   c^l = (C^{l-1} + H^{l-1}_D) 1,  d^l = rho d^{l+1} + g0^2 (B^l + Gt^{l+1}_D) c^l,
//   C^l = rho (C^{l-1} + H^{l-1}_D),  B^{l-1} = B^l + Gt^{l+1} Delta   (A = D = 0).
// DFA is the rho = 0 instance.
// ---------------------------------------------------------------------------
inline LinearClosureState linear_fa_closure(const Dataset& ds, double gamma0, double rho, int L,
                                            const TimeGrid& grid,
                                            const LinearClosureConfig& cfg = {}) {
    using namespace lindetail;
    grid.validate();
    if (rho < 0.0 || rho > 1.0) throw DomainError("linear_fa_closure: rho in [0,1]");
    LinearClosureState st = linear_closure_init(ds, L, grid);
    const int P = st.P, T = st.T, n = P * T;
    const double dt = grid.dt;

    st.c.assign(L, Vec::Zero(n));
    st.d.assign(L + 1, Vec::Ones(n));
    for (int l = 1; l <= L; ++l) st.d[l - 1] = std::pow(rho, L + 1 - l) * Vec::Ones(n);
    for (int l = 1; l <= L; ++l)
        st.Gt[l - 1] = st.d[l - 1] * Eigen::RowVectorXd::Ones(n);  // Gt(a,b) = d(a)

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);

        // forward chain: C recursion, c vectors, rank-one H updates
        std::vector<Mat> c_resp_new(L, Mat::Zero(n, n));
        std::vector<Mat> h_new(L + 1);
        std::vector<Vec> c_new(L);
        h_new[0] = st.H[0];
        for (int l = 1; l <= L; ++l) {
            Mat base = mask_delta(st.H[l - 1], st.Delta, P, T);
            if (l >= 2) base += st.C[l - 2];
            c_new[l - 1] = dt * base * Vec::Ones(n);  // (C^{l-1} + H_D) integrated against 1
            if (l <= L - 1) c_resp_new[l - 1] = rho * base;
            h_new[l] = st.H[l - 1] + gamma0 * gamma0 * c_new[l - 1] * c_new[l - 1].transpose();
            check_finite(h_new[l], "H layer " + std::to_string(l));
        }
        // backward chain: B recursion, d updates, plus G for reporting
        std::vector<Mat> b_new(L, Mat::Zero(n, n));
        std::vector<Vec> d_new(L + 1, Vec::Ones(n));
        std::vector<Mat> g_new(L + 1);
        g_new[L] = st.G[L];
        for (int l = L; l >= 1; --l) {
            // Gt^{l+1} tensor has rows d^{l+1}
            if (l <= L - 1) {
                Mat gt_next_masked = Mat::Zero(n, n);
                for (int mu = 0; mu < P; ++mu)
                    for (int t = 0; t < T; ++t)
                        for (int nu = 0; nu < P; ++nu)
                            for (int s = 0; s < t; ++s)
                                gt_next_masked(mu * T + t, nu * T + s) =
                                    st.d[l + 1](mu * T + t) * st.Delta(nu, s);
                b_new[l - 1] = st.B[l] + gt_next_masked;  // B^l = B^{l+1} + Gt^{l+2}_Delta
            }
            // M2 = g0 (op(B^l) + op_Delta(Gt^{l+1}))
            Mat m2 = causal_op(l <= L - 1 ? st.B[l - 1] : Mat(Mat::Zero(n, n)), P, T, dt);
            {
                Mat gt_next = st.d[l] * Eigen::RowVectorXd::Ones(n);  // Gt^{l+1} rows d^{l+1}
                m2 += causal_op_delta(gt_next, st.Delta, P, T, dt);
            }
            m2 *= gamma0;
            d_new[l - 1] = rho * st.d[l] + gamma0 * m2 * c_new[l - 1];
            check_finite(d_new[l - 1], "d layer " + std::to_string(l));
            // G^l = G^{l+1} + M2 H^l M2^T + rho g0 (M2 c d^{l+1 T} + d^{l+1} c^T M2^T)
            const Vec m2c = m2 * c_new[l - 1];
            g_new[l - 1] = st.G[l] + m2 * h_new[l] * m2.transpose() +
                           rho * gamma0 * (m2c * st.d[l].transpose() +
                                           st.d[l] * m2c.transpose());
            check_finite(g_new[l - 1], "G layer " + std::to_string(l));
        }

        double residual = 0.0;
        const double beta = cfg.damping_beta;
        for (int l = 1; l <= L; ++l) {
            residual = std::max(residual, damp_update(st.H[l], h_new[l], beta));
            residual = std::max(residual, damp_update(st.G[l - 1], g_new[l - 1], beta));
            Vec dcur = st.d[l - 1];
            const Vec dupd = (1.0 - beta) * dcur + beta * d_new[l - 1];
            residual = std::max(residual, (dupd - dcur).norm() / (dcur.norm() + 1e-12));
            st.d[l - 1] = dupd;
            st.c[l - 1] = c_new[l - 1];
            st.Gt[l - 1] = st.d[l - 1] * Eigen::RowVectorXd::Ones(n);
            if (l <= L - 1) {
                damp_update(st.C[l - 1], c_resp_new[l - 1], beta);
                damp_update(st.B[l - 1], b_new[l - 1], beta);
            }
        }
        st.report.iterations = iter;
        st.report.final_residual = residual;
        st.report.residual_history.push_back(residual);
        st.report.loss_history.push_back(0.5 * st.Delta.col(T - 1).squaredNorm());
        if (residual < cfg.tol) {
            st.report.converged = true;
            break;
        }
    }
    predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);
    return st;
}

// ---------------------------------------------------------------------------
// Hebb closure: gtilde(s) = Delta(s) h(s), so h solves a resolvent equation
// in H^{l-1} Delta^2 and Gt^l(t,s) = Delta(s) <g(t) h(s)>.
// ---------------------------------------------------------------------------
inline LinearClosureState linear_hebb_closure(const Dataset& ds, double gamma0, int L,
                                              const TimeGrid& grid,
                                              const LinearClosureConfig& cfg = {}) {
    using namespace lindetail;
    grid.validate();
    LinearClosureState st = linear_closure_init(ds, L, grid);
    const int P = st.P, T = st.T, n = P * T;
    const double dt = grid.dt;
    const Mat eye = Mat::Identity(n, n);
    for (int l = 1; l <= L; ++l) st.Gt[l - 1].setZero();

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);
        const Mat delta2 = st.Delta.cwiseProduct(st.Delta);

        std::vector<Mat> h_new(L + 1), gt_new(L, Mat::Zero(n, n)), g_new(L + 1),
            b_new(L, Mat::Zero(n, n)), d_new(L, Mat::Zero(n, n));
        std::vector<Mat> p_res(L + 1);
        h_new[0] = st.H[0];
        g_new[L] = st.G[L];
        for (int l = 1; l <= L; ++l) {
            const Mat mh = gamma0 * causal_op_delta(st.H[l - 1], delta2, P, T, dt);
            const Mat e = eye - mh;
            p_res[l] = solve_resolvent(e, eye, "Hebb H layer " + std::to_string(l));
            h_new[l] = p_res[l] * st.H[l - 1] * p_res[l].transpose();
            check_finite(h_new[l], "Hebb H layer " + std::to_string(l));
        }
        for (int l = L; l >= 1; --l) {
            Mat m2 = causal_op_delta(st.Gt[l], st.Delta, P, T, dt);  // Gt^{l+1}
            if (l <= L - 1) m2 += causal_op(st.B[l - 1], P, T, dt);
            m2 *= gamma0;
            const Mat cross = m2 * h_new[l];  // <g h^T>
            for (int mu = 0; mu < P; ++mu)
                for (int t = 0; t < T; ++t)
                    for (int nu = 0; nu < P; ++nu)
                        for (int s = 0; s < T; ++s)
                            gt_new[l - 1](mu * T + t, nu * T + s) =
                                st.Delta(nu, s) * cross(mu * T + t, nu * T + s);
            g_new[l - 1] = st.G[l] + m2 * h_new[l] * m2.transpose();
            check_finite(g_new[l - 1], "Hebb G layer " + std::to_string(l));
            if (l >= 2 && gamma0 > 0.0) {
                b_new[l - 2] = unfold(m2 * p_res[l], P, T, dt) / gamma0;
                Mat dj = p_res[l] - eye;  // strictly causal part of dh/du
                for (int a = 0; a < n; ++a) dj.row(a) *= st.Delta(a / T, a % T);
                d_new[l - 2] = unfold(dj, P, T, dt) / gamma0;
            }
        }

        double residual = 0.0;
        const double beta = cfg.damping_beta;
        for (int l = 1; l <= L; ++l) {
            residual = std::max(residual, damp_update(st.H[l], h_new[l], beta));
            residual = std::max(residual, damp_update(st.G[l - 1], g_new[l - 1], beta));
            residual = std::max(residual, damp_update(st.Gt[l - 1], gt_new[l - 1], beta));
            if (l <= L - 1) {
                damp_update(st.B[l - 1], b_new[l - 1], beta);
                damp_update(st.D[l - 1], d_new[l - 1], beta);
            }
        }
        st.report.iterations = iter;
        st.report.final_residual = residual;
        st.report.residual_history.push_back(residual);
        st.report.loss_history.push_back(0.5 * st.Delta.col(T - 1).squaredNorm());
        if (residual < cfg.tol) {
            st.report.converged = true;
            break;
        }
    }
    predict(st.H, st.Gt, ds.targets, P, T, dt, st.f, st.Delta);
    return st;
}

// Dispatch on the rule tag. DFA maps onto the rho = 0 FA structure.
inline LinearClosureState linear_closure(const Dataset& ds, const RuleSpec& rule, double gamma0,
                                         int L, const TimeGrid& grid,
                                         const LinearClosureConfig& cfg = {}) {
    rule.validate();
    switch (rule.tag) {
        case Rule::GD:
            return linear_gd_closure(ds, gamma0, L, grid, cfg);
        case Rule::RhoFA:
            return linear_fa_closure(ds, gamma0, rule.rho_value(), L, grid, cfg);
        case Rule::DFA:
            return linear_fa_closure(ds, gamma0, 0.0, L, grid, cfg);
        case Rule::Hebb:
            return linear_hebb_closure(ds, gamma0, L, grid, cfg);
        default:
            throw DomainError("linear_closure: unsupported rule " +
                              std::string(to_string(rule.tag)));
    }
}

// Task-projected feature kernel overlap y^T H^l(t,t) y / |y|^2 per time.
inline Vec h_task_overlap(const LinearClosureState& st, const Vec& y, int layer) {
    const Mat& h = st.H.at(layer);
    Vec out(st.T);
    for (int k = 0; k < st.T; ++k) {
        Mat hk(st.P, st.P);
        for (int mu = 0; mu < st.P; ++mu)
            for (int nu = 0; nu < st.P; ++nu) hk(mu, nu) = h(mu * st.T + k, nu * st.T + k);
        out(k) = y.dot(hk * y) / y.squaredNorm();
    }
    return out;
}

}  // namespace entk
