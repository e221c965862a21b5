#pragma once

#include "entk/activation.hpp"
#include "entk/dataset.hpp"
#include "entk/lazy.hpp"
#include "entk/metrics.hpp"
#include "entk/rng.hpp"
#include "entk/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace entk {

using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// SolverConfig for the alternating Monte-Carlo saddle-point solver.
// ---------------------------------------------------------------------------
struct SolverConfig {
    int samples_S = 2000;
    double damping_beta = 0.6;
    int max_iters = 50;
    double tol = 1e-3;          // relative Frobenius change, max over kernels
    double jitter = 1e-10;      // covariance factorization jitter
    std::uint64_t seed = 0;
    bool estimate_responses = true;  // no-op at L = 1 where all responses vanish

    void validate() const {
        if (samples_S < 2) throw DomainError("SolverConfig: S >= 2 required");
        if (!(damping_beta > 0.0) || damping_beta > 1.0)
            throw DomainError("SolverConfig: beta in (0,1] required");
        if (!(tol > 0.0)) throw DomainError("SolverConfig: tol > 0 required");
        if (max_iters < 1) throw DomainError("SolverConfig: max_iters >= 1 required");
    }
};

// ---------------------------------------------------------------------------
// Covariance factorization: Cholesky with jitter escalation, then eigenvalue
// clipping at zero. Returns F with F F^T ~= Sigma.
// ---------------------------------------------------------------------------
inline Mat factor_covariance(const Mat& sigma_in, double jitter, const std::string& where) {
    const Eigen::Index n = sigma_in.rows();
    if (!sigma_in.allFinite())
        throw SolverError("factor_covariance: non-finite covariance in " + where);
    Mat sigma = 0.5 * (sigma_in + sigma_in.transpose());
    Eigen::LLT<Mat> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    for (double j : {jitter, 10.0 * jitter, 100.0 * jitter}) {
        llt.compute(sigma + j * Mat::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    if (es.info() != Eigen::Success)
        throw SolverError("factor_covariance: eigendecomposition failed in " + where);
    Vec lam = es.eigenvalues().cwiseMax(0.0);
    if (!lam.allFinite())
        throw SolverError("factor_covariance: covariance indefinite after clipping in " + where);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

// Deterministic Gram product A B^T / S summed over fixed-width sample blocks;
// the block boundaries do not depend on the thread count, so results are
// identical under any parallelism degree.
inline Mat deterministic_gram(const Mat& a, const Mat& b) {
    const Eigen::Index n = a.rows(), S = a.cols();
    if (b.rows() != n || b.cols() != S) throw ShapeError("deterministic_gram: shape mismatch");
    constexpr Eigen::Index kBlock = 64;
    const Eigen::Index nblocks = (S + kBlock - 1) / kBlock;
    std::vector<Mat> partial(nblocks);
    parallel_for(0, nblocks, [&](std::int64_t bi) {
        const Eigen::Index lo = bi * kBlock;
        const Eigen::Index w = std::min(kBlock, S - lo);
        partial[bi].noalias() = a.middleCols(lo, w) * b.middleCols(lo, w).transpose();
    });
    Mat out = Mat::Zero(n, n);
    for (Eigen::Index bi = 0; bi < nblocks; ++bi) out += partial[bi];
    return out / static_cast<double>(S);
}

// ---------------------------------------------------------------------------
// Per-layer Gaussian sources for S samples (columns), flat index mu*T + t.
// ---------------------------------------------------------------------------
struct LayerSources {
    Mat u;      // n x S, always
    Mat r;      // n x S, always
    Mat v;      // n x S, RhoFA with rho > 0
    Mat zeta;   // n x S, RhoFA with rho < 1
    Vec dfa_z;  // S, DFA static broadcast source
    Mat gates;  // P x S, GLN gate variables m ~ N(0, K^x)
};

inline LayerSources sample_sources(const KernelSet& kernels, const RuleSpec& rule, int layer,
                                   int S, RngStream rng, double jitter) {
    const int n = kernels.P * kernels.T;
    const std::string tag = "layer " + std::to_string(layer);
    LayerSources src;

    const Mat fu = factor_covariance(kernels.Phi(layer - 1).mat(), jitter, tag + " u-source");
    src.u.noalias() = fu * rng.child(1).normal_mat(n, S);

    const bool need_v = rule.tag == Rule::RhoFA && rule.rho_value() > 0.0;
    const bool need_zeta = rule.tag == Rule::RhoFA && rule.rho_value() < 1.0;

    if (need_v) {
        // joint (r, v) block with cross-covariance Gtilde^{l+1}
        Mat gplus(2 * n, 2 * n);
        gplus.topLeftCorner(n, n) = kernels.G(layer + 1).mat();
        gplus.topRightCorner(n, n) = kernels.Gt(layer + 1).mat();
        gplus.bottomLeftCorner(n, n) = kernels.Gt(layer + 1).mat().transpose();
        gplus.bottomRightCorner(n, n) = kernels.Gtt(layer + 1).mat();
        const Mat f = factor_covariance(gplus, jitter, tag + " (r,v)-source");
        const Mat rv = f * rng.child(2).normal_mat(2 * n, S);
        src.r = rv.topRows(n);
        src.v = rv.bottomRows(n);
    } else {
        const Mat fr = factor_covariance(kernels.G(layer + 1).mat(), jitter, tag + " r-source");
        src.r.noalias() = fr * rng.child(2).normal_mat(n, S);
    }
    if (need_zeta) {
        const Mat fz =
            factor_covariance(kernels.Gtt(layer + 1).mat(), jitter, tag + " zeta-source");
        src.zeta.noalias() = fz * rng.child(3).normal_mat(n, S);
    }
    if (rule.tag == Rule::DFA) src.dfa_z = rng.child(4).normal_vec(S);
    if (rule.tag == Rule::GLN) {
        const Mat kx = kernels.Phi(0).slice(0, 0);
        const Mat fg = factor_covariance(kx, jitter, tag + " gate-source");
        src.gates.noalias() = fg * rng.child(5).normal_mat(kernels.P, S);
    }
    return src;
}

// ---------------------------------------------------------------------------
// Layer integration context: everything the single-site field equations need.
// ---------------------------------------------------------------------------
struct LayerContext {
    int layer = 1, L = 1, P = 1, T = 1;
    double gamma0 = 1.0, dt = 0.01, rho = 0.0;
    Activation act = Activation::Linear;
    Rule rule = Rule::GD;
    const TwoTime* phi_prev = nullptr;  // Phi^{l-1}
    const TwoTime* gt_next = nullptr;   // Gtilde^{l+1}
    const TwoTime* a_prev = nullptr;    // A^{l-1}, null at l = 1
    const TwoTime* c_prev = nullptr;    // C^{l-1}, null at l = 1
    const TwoTime* b_cur = nullptr;     // B^l, null at l = L
    const TwoTime* d_cur = nullptr;     // D^l, null at l = L
    const Mat* delta = nullptr;         // P x T
};

inline LayerContext make_layer_context(int layer, const NetworkConfig& config,
                                       const RuleSpec& rule, const TimeGrid& grid,
                                       const KernelSet& kernels, const ResponseSet& resp,
                                       const Mat& delta) {
    LayerContext ctx;
    ctx.layer = layer;
    ctx.L = config.depth_L;
    ctx.P = kernels.P;
    ctx.T = kernels.T;
    ctx.gamma0 = config.gamma0;
    ctx.dt = grid.dt;
    ctx.rho = rule.rho_value();
    ctx.act = config.activation;
    ctx.rule = rule.tag;
    ctx.phi_prev = &kernels.Phi(layer - 1);
    ctx.gt_next = &kernels.Gt(layer + 1);
    if (layer >= 2) {
        ctx.a_prev = &resp.A[layer - 2];
        ctx.c_prev = &resp.C[layer - 2];
    }
    if (layer <= ctx.L - 1) {
        ctx.b_cur = &resp.B[layer - 1];
        ctx.d_cur = &resp.D[layer - 1];
    }
    ctx.delta = &delta;
    return ctx;
}

// Batched per-layer trajectories, one column per sample, flat index mu*T + t.
struct LayerBatch {
    Mat h, z, g, gt, phi;  // n x S
    Mat wt;                // n x S, RhoFA pseudo pre-gradient field
};

// Spec-facing view of one sample's trajectories.
struct FieldSample {
    Mat h, z, g, gt;  // P x T each
};

namespace detail {

inline Mat reshape_col(const Mat& batch, int col, int P, int T) {
    Mat out(P, T);
    for (int mu = 0; mu < P; ++mu)
        for (int t = 0; t < T; ++t) out(mu, t) = batch(mu * T + t, col);
    return out;
}

// Single-sample forward Euler integration of the single-site field equations
// with left-Riemann memory integrals.
inline void integrate_one(const LayerContext& ctx, const LayerSources& src, int i,
                          double* hcol, double* zcol, double* gcol, double* gtcol,
                          double* phicol, double* wtcol) {
    const int P = ctx.P, T = ctx.T;
    const double g0 = ctx.gamma0, dt = ctx.dt;
    const Mat& delta = *ctx.delta;
    const bool gln = ctx.rule == Rule::GLN;
    const double sq = std::sqrt(std::max(0.0, 1.0 - ctx.rho * ctx.rho));

    auto idx = [T](int mu, int t) { return mu * T + t; };
    std::vector<double> gate(gln ? P : 0);
    if (gln)
        for (int mu = 0; mu < P; ++mu) gate[mu] = phi_dot(ctx.act, src.gates(mu, i));

    for (int k = 0; k < T; ++k) {
        // h(mu, k)
        for (int mu = 0; mu < P; ++mu) {
            double mem = 0.0;
            for (int j = 0; j < k; ++j) {
                for (int nu = 0; nu < P; ++nu) {
                    const double gt_j = gtcol[idx(nu, j)];
                    double coef = (*ctx.phi_prev)(mu, k, nu, j) * delta(nu, j) * gt_j;
                    if (ctx.a_prev) coef += (*ctx.a_prev)(mu, k, nu, j) * gcol[idx(nu, j)];
                    if (ctx.c_prev) coef += (*ctx.c_prev)(mu, k, nu, j) * gt_j;
                    mem += coef;
                }
            }
            hcol[idx(mu, k)] = src.u(idx(mu, k), i) + g0 * dt * mem;
        }
        // z(mu, k)
        for (int mu = 0; mu < P; ++mu) {
            double mem = 0.0;
            for (int j = 0; j < k; ++j) {
                for (int nu = 0; nu < P; ++nu) {
                    double coef = (*ctx.gt_next)(mu, k, nu, j) * delta(nu, j);
                    if (ctx.b_cur) coef += (*ctx.b_cur)(mu, k, nu, j);
                    mem += coef * phicol[idx(nu, j)];
                }
            }
            zcol[idx(mu, k)] = src.r(idx(mu, k), i) + g0 * dt * mem;
        }
        // g, gtilde, phi(h)
        for (int mu = 0; mu < P; ++mu) {
            const int a = idx(mu, k);
            const double h = hcol[a];
            double pv, pd;
            if (gln) {
                pv = gate[mu] * h;
                pd = gate[mu];
            } else {
                pv = phi(ctx.act, h);
                pd = phi_dot(ctx.act, h);
            }
            phicol[a] = pv;
            gcol[a] = pd * zcol[a];
            switch (ctx.rule) {
                case Rule::GD:
                case Rule::GLN:
                    gtcol[a] = gcol[a];
                    break;
                case Rule::RhoFA: {
                    double mem = 0.0;
                    if (ctx.d_cur) {
                        for (int j = 0; j < k; ++j)
                            for (int nu = 0; nu < P; ++nu)
                                mem += (*ctx.d_cur)(mu, k, nu, j) * phicol[idx(nu, j)];
                    }
                    double w = ctx.rho * g0 * dt * mem;
                    if (src.v.size() > 0) w += ctx.rho * src.v(a, i);
                    if (src.zeta.size() > 0) w += sq * src.zeta(a, i);
                    wtcol[a] = w;
                    gtcol[a] = pd * w;
                    break;
                }
                case Rule::DFA:
                    gtcol[a] = pd * src.dfa_z(i);
                    break;
                case Rule::Hebb:
                    gtcol[a] = delta(mu, k) * pv;
                    break;
                default:
                    throw DomainError("integrate_fields: rule has no DMFT description");
            }
            if (!std::isfinite(hcol[a]) || !std::isfinite(zcol[a]) || !std::isfinite(gtcol[a]))
                throw SolverError("integrate_fields: NaN at layer " + std::to_string(ctx.layer) +
                                  ", sample " + std::to_string(i) + ", mu " + std::to_string(mu) +
                                  ", step " + std::to_string(k));
        }
    }
}

}  // namespace detail

inline LayerBatch integrate_fields(const LayerContext& ctx, const LayerSources& src, int S) {
    const int n = ctx.P * ctx.T;
    LayerBatch batch;
    batch.h.resize(n, S);
    batch.z.resize(n, S);
    batch.g.resize(n, S);
    batch.gt.resize(n, S);
    batch.phi.resize(n, S);
    const bool fa = ctx.rule == Rule::RhoFA;
    if (fa) batch.wt.resize(n, S);
    parallel_for(0, S, [&](std::int64_t i) {
        detail::integrate_one(ctx, src, static_cast<int>(i), batch.h.col(i).data(),
                              batch.z.col(i).data(), batch.g.col(i).data(),
                              batch.gt.col(i).data(), batch.phi.col(i).data(),
                              fa ? batch.wt.col(i).data() : nullptr);
    });
    return batch;
}

inline FieldSample extract_sample(const LayerBatch& batch, int i, int P, int T) {
    return FieldSample{detail::reshape_col(batch.h, i, P, T), detail::reshape_col(batch.z, i, P, T),
                       detail::reshape_col(batch.g, i, P, T),
                       detail::reshape_col(batch.gt, i, P, T)};
}

// ---------------------------------------------------------------------------
// Kernel estimation: MC moments of the integrated fields.
// ---------------------------------------------------------------------------
struct LayerKernelEstimate {
    Mat phi, g, gt, gtt;  // n x n
};

inline LayerKernelEstimate estimate_kernels(const LayerBatch& batch) {
    if (batch.phi.cols() < 2) throw DomainError("estimate_kernels: S >= 2 required");
    LayerKernelEstimate est;
    est.phi = deterministic_gram(batch.phi, batch.phi);
    est.g = deterministic_gram(batch.g, batch.g);
    // For GD/GLN the gt field holds the same values as g, so this estimate is
    // bitwise equal to est.g.
    est.gt = deterministic_gram(batch.g, batch.gt);
    est.gtt = deterministic_gram(batch.gt, batch.gt);
    return est;
}

// ---------------------------------------------------------------------------
// Response estimation by pathwise forward sensitivities: linearize the exact
// discrete field map around each sample and advance the Jacobian rows in
// time. Estimators divide by dt to convert the discrete Jacobian into the
// functional response kernel, and by gamma0 per the DMFT convention.
// ---------------------------------------------------------------------------
enum class SourceKind { U, R, V };

namespace detail {

// Sensitivities of one sample's fields to one source kind. Outputs are n x n
// row-major matrices; row (mu*T + t), column = perturbed source index.
inline void sensitivities_one(const LayerContext& ctx, const LayerSources& src,
                              const LayerBatch& batch, int i, SourceKind kind, RMat& sh,
                              RMat& sg, RMat& sgt) {
    const int P = ctx.P, T = ctx.T, n = P * T;
    const double g0 = ctx.gamma0, dt = ctx.dt;
    const Mat& delta = *ctx.delta;
    const bool gln = ctx.rule == Rule::GLN;
    auto idx = [T](int mu, int t) { return mu * T + t; };

    sh.setZero(n, n);
    sg.setZero(n, n);
    sgt.setZero(n, n);
    RMat sz = RMat::Zero(n, n);
    RMat swt;
    if (ctx.rule == Rule::RhoFA) swt.setZero(n, n);

    std::vector<double> gate(gln ? P : 0);
    if (gln)
        for (int mu = 0; mu < P; ++mu) gate[mu] = phi_dot(ctx.act, src.gates(mu, i));

    for (int k = 0; k < T; ++k) {
        for (int mu = 0; mu < P; ++mu) {
            const int a = idx(mu, k);
            auto row_h = sh.row(a);
            for (int j = 0; j < k; ++j) {
                for (int nu = 0; nu < P; ++nu) {
                    const int b = idx(nu, j);
                    double cg = ctx.a_prev ? (*ctx.a_prev)(mu, k, nu, j) : 0.0;
                    double cgt = (*ctx.phi_prev)(mu, k, nu, j) * delta(nu, j);
                    if (ctx.c_prev) cgt += (*ctx.c_prev)(mu, k, nu, j);
                    if (cg != 0.0) row_h += g0 * dt * cg * sg.row(b);
                    if (cgt != 0.0) row_h += g0 * dt * cgt * sgt.row(b);
                }
            }
            if (kind == SourceKind::U) row_h(a) += 1.0;
        }
        for (int mu = 0; mu < P; ++mu) {
            const int a = idx(mu, k);
            auto row_z = sz.row(a);
            for (int j = 0; j < k; ++j) {
                for (int nu = 0; nu < P; ++nu) {
                    const int b = idx(nu, j);
                    double coef = (*ctx.gt_next)(mu, k, nu, j) * delta(nu, j);
                    if (ctx.b_cur) coef += (*ctx.b_cur)(mu, k, nu, j);
                    if (coef == 0.0) continue;
                    const double pd =
                        gln ? gate[nu] : phi_dot(ctx.act, batch.h(b, i));
                    if (pd != 0.0) row_z += g0 * dt * coef * pd * sh.row(b);
                }
            }
            if (kind == SourceKind::R) row_z(a) += 1.0;
        }
        if (ctx.rule == Rule::RhoFA) {
            for (int mu = 0; mu < P; ++mu) {
                const int a = idx(mu, k);
                auto row_w = swt.row(a);
                if (ctx.d_cur) {
                    for (int j = 0; j < k; ++j)
                        for (int nu = 0; nu < P; ++nu) {
                            const int b = idx(nu, j);
                            const double coef = (*ctx.d_cur)(mu, k, nu, j);
                            if (coef == 0.0) continue;
                            const double pd = phi_dot(ctx.act, batch.h(b, i));
                            if (pd != 0.0) row_w += ctx.rho * g0 * dt * coef * pd * sh.row(b);
                        }
                }
                if (kind == SourceKind::V && src.v.size() > 0) row_w(a) += ctx.rho;
            }
        }
        for (int mu = 0; mu < P; ++mu) {
            const int a = idx(mu, k);
            const double h = batch.h(a, i);
            const double pd = gln ? gate[mu] : phi_dot(ctx.act, h);
            const double pdd = gln ? 0.0 : phi_ddot(ctx.act, h);
            sg.row(a) = pd * sz.row(a);
            if (pdd != 0.0) sg.row(a) += pdd * batch.z(a, i) * sh.row(a);
            switch (ctx.rule) {
                case Rule::GD:
                case Rule::GLN:
                    sgt.row(a) = sg.row(a);
                    break;
                case Rule::RhoFA:
                    sgt.row(a) = pd * swt.row(a);
                    if (pdd != 0.0) sgt.row(a) += pdd * batch.wt(a, i) * sh.row(a);
                    break;
                case Rule::DFA:
                    if (pdd != 0.0)
                        sgt.row(a) = pdd * src.dfa_z(i) * sh.row(a);
                    else
                        sgt.row(a).setZero();
                    break;
                case Rule::Hebb:
                    sgt.row(a) = delta(mu, k) * pd * sh.row(a);
                    break;
                default:
                    break;
            }
        }
    }
}

}  // namespace detail

// What a layer's sensitivity pass produces for the ResponseSet update.
struct LayerResponseEstimate {
    bool has_a = false, has_b = false, has_c = false, has_d = false;
    TwoTime a, b, c, d;
};

inline LayerResponseEstimate estimate_responses(const LayerContext& ctx, const LayerSources& src,
                                                const LayerBatch& batch, int S) {
    const int P = ctx.P, T = ctx.T, n = P * T;
    LayerResponseEstimate out;
    const Rule rule = ctx.rule;
    const bool want_b = ctx.layer >= 2;                       // produces B^{l-1}, D^{l-1}
    const bool want_a = ctx.layer <= ctx.L - 1 &&
                        (rule == Rule::GD || rule == Rule::GLN);  // A vanishes for FA/DFA/Hebb
    const bool want_c = ctx.layer <= ctx.L - 1 && rule == Rule::RhoFA && ctx.rho > 0.0;
    if (!(want_a || want_b || want_c)) return out;

    struct Acc {
        Mat a, b, d, c;
    };
    constexpr int kBlock = 16;
    const int nblocks = (S + kBlock - 1) / kBlock;
    std::vector<Acc> partial(nblocks);

    parallel_for(0, nblocks, [&](std::int64_t bi) {
        Acc acc;
        if (want_a) acc.a = Mat::Zero(n, n);
        if (want_b) {
            acc.b = Mat::Zero(n, n);
            acc.d = Mat::Zero(n, n);
        }
        if (want_c) acc.c = Mat::Zero(n, n);
        RMat sh, sg, sgt;
        for (int i = static_cast<int>(bi) * kBlock;
             i < std::min(S, static_cast<int>(bi + 1) * kBlock); ++i) {
            if (want_b) {
                detail::sensitivities_one(ctx, src, batch, i, SourceKind::U, sh, sg, sgt);
                acc.b += sg;
                acc.d += sgt;
            }
            if (want_a) {
                detail::sensitivities_one(ctx, src, batch, i, SourceKind::R, sh, sg, sgt);
                for (int a_i = 0; a_i < n; ++a_i) {
                    const double pd = (rule == Rule::GLN)
                                          ? phi_dot(ctx.act, src.gates(a_i / T, i))
                                          : phi_dot(ctx.act, batch.h(a_i, i));
                    acc.a.row(a_i) += pd * sh.row(a_i);
                }
            }
            if (want_c) {
                detail::sensitivities_one(ctx, src, batch, i, SourceKind::V, sh, sg, sgt);
                for (int a_i = 0; a_i < n; ++a_i)
                    acc.c.row(a_i) += phi_dot(ctx.act, batch.h(a_i, i)) * sh.row(a_i);
            }
        }
        partial[bi] = std::move(acc);
    });

    const double scale = 1.0 / (S * ctx.gamma0 * ctx.dt);
    auto reduce = [&](Mat Acc::*field) {
        Mat sum = Mat::Zero(n, n);
        for (const Acc& acc : partial)
            if ((acc.*field).size() > 0) sum += acc.*field;
        TwoTime t(P, T);
        t.mat() = sum * scale;
        t.enforce_causality();  // strict: drop any s >= t content
        return t;
    };
    if (want_a) {
        out.a = reduce(&Acc::a);
        out.has_a = true;
    }
    if (want_b) {
        out.b = reduce(&Acc::b);
        out.d = reduce(&Acc::d);
        out.has_b = true;
        out.has_d = true;
        if (rule == Rule::GD || rule == Rule::GLN) out.d = out.b;  // gtilde == g code path
    }
    if (want_c) {
        out.c = reduce(&Acc::c);
        out.has_c = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Initial kernel guess: lazy static kernels tiled over (t,s); the correct
// gamma0 -> 0 fixed point, per-rule Gtilde/Gtildetilde boundary values.
// ---------------------------------------------------------------------------
inline KernelSet initial_kernels(const Dataset& ds, const NetworkConfig& config,
                                 const RuleSpec& rule, const TimeGrid& grid) {
    const int L = config.depth_L, T = grid.steps_T;
    const int P = static_cast<int>(ds.P());
    KernelSet k(L, P, T, ds.input_kernel);
    const LazyKernelStack st = lazy_kernel_stack(ds.input_kernel, L, config.activation);

    if (rule.tag == Rule::GLN) {
        Mat gk = Mat::Ones(P, P);
        for (int l = 1; l <= L; ++l) {
            gk = gk.cwiseProduct(st.gate_kernel);  // gate_kernel^l
            k.Phi(l) = TwoTime::tiled(gk.cwiseProduct(ds.input_kernel), T);
        }
        Mat gcur = Mat::Ones(P, P);
        for (int l = L; l >= 1; --l) {
            gcur = gcur.cwiseProduct(st.gate_kernel);
            k.G(l) = TwoTime::tiled(gcur, T);
            k.Gt(l) = k.G(l);
            k.Gtt(l) = k.G(l);
        }
        return k;
    }

    for (int l = 1; l <= L; ++l) k.Phi(l) = TwoTime::tiled(st.Phi(l), T);
    for (int l = 1; l <= L; ++l) k.G(l) = TwoTime::tiled(st.G(l), T);
    switch (rule.tag) {
        case Rule::GD:
            for (int l = 1; l <= L; ++l) {
                k.Gt(l) = k.G(l);
                k.Gtt(l) = k.G(l);
            }
            break;
        case Rule::RhoFA: {
            const double rho = rule.rho_value();
            for (int l = 1; l <= L; ++l) {
                k.Gt(l) = TwoTime::tiled(std::pow(rho, L + 1 - l) * st.G(l), T);
                k.Gtt(l) = k.G(l);  // <gtilde gtilde> = G at initialization
            }
            break;
        }
        case Rule::DFA:
            for (int l = 1; l <= L; ++l) {
                k.Gt(l) = TwoTime(P, T);  // zero
                k.Gtt(l) = TwoTime::tiled(nngp_layer(st.Phi(l - 1), config.activation).phidot, T);
            }
            break;
        case Rule::Hebb:
            for (int l = 1; l <= L; ++l) {
                k.Gt(l) = TwoTime(P, T);
                k.Gtt(l) = TwoTime(P, T);  // estimated for reporting only
            }
            break;
        default:
            throw DomainError("initial_kernels: rule has no DMFT description");
    }
    return k;
}

// ---------------------------------------------------------------------------
// Prediction dynamics from the equal-time eNTK of the current kernels.
// ---------------------------------------------------------------------------
inline void predict_from_kernels(const KernelSet& kernels, const Vec& y, const TimeGrid& grid,
                                 Mat& f, Mat& delta) {
    const int P = kernels.P, T = kernels.T;
    f.setZero(P, T);
    delta.resize(P, T);
    Vec cur = Vec::Zero(P);
    for (int k = 0; k < T; ++k) {
        f.col(k) = cur;
        delta.col(k) = y - cur;
        if (k + 1 == T) break;
        Mat kk = Mat::Zero(P, P);
        for (int l = 0; l <= kernels.L; ++l) {
            for (int mu = 0; mu < P; ++mu)
                for (int nu = 0; nu < P; ++nu)
                    kk(mu, nu) += kernels.Gt(l + 1)(mu, k, nu, k) * kernels.Phi(l)(mu, k, nu, k);
        }
        cur += grid.dt * (kk * delta.col(k));
    }
}

// ---------------------------------------------------------------------------
// The alternating Monte-Carlo solver (outer loop).
// ---------------------------------------------------------------------------
inline DmftState solve(const Dataset& ds, const NetworkConfig& config, const RuleSpec& rule,
                       const TimeGrid& grid, const SolverConfig& scfg) {
    config.validate();
    rule.validate();
    grid.validate();
    scfg.validate();
    if (rule.tag == Rule::NodePerturb)
        throw DomainError("dmft solve: node perturbation has no DMFT counterpart");
    const int L = config.depth_L, T = grid.steps_T;
    const int P = static_cast<int>(ds.P());
    const int S = scfg.samples_S;

    DmftState state;
    state.kernels = initial_kernels(ds, config, rule, grid);
    state.responses = ResponseSet(L, P, T);
    state.report.rank_deficiency_warning = (scfg.damping_beta >= 1.0 && S < P * T);

    RngStream root = RngStream(scfg.seed).child(0x646d6674ull);
    const double beta = scfg.damping_beta;

    auto damp_into = [&](TwoTime& cur, const Mat& estimate, double& residual) {
        const double base = cur.mat().norm();
        const Mat updated = (1.0 - beta) * cur.mat() + beta * estimate;
        const double change = (updated - cur.mat()).norm() / (base + 1e-12);
        residual = std::max(residual, change);
        cur.mat() = updated;
    };

    for (int iter = 1; iter <= scfg.max_iters; ++iter) {
        predict_from_kernels(state.kernels, ds.targets, grid, state.f, state.Delta);

        std::vector<LayerKernelEstimate> kest(L);
        std::vector<LayerResponseEstimate> rest(L);
        for (int l = 1; l <= L; ++l) {
            RngStream lrng = root.child(static_cast<std::uint64_t>(iter)).child(l);
            const LayerSources src =
                sample_sources(state.kernels, rule, l, S, lrng, scfg.jitter);
            const LayerContext ctx =
                make_layer_context(l, config, rule, grid, state.kernels, state.responses,
                                   state.Delta);
            const LayerBatch batch = integrate_fields(ctx, src, S);
            kest[l - 1] = estimate_kernels(batch);
            if (L >= 2 && scfg.estimate_responses && config.gamma0 > 0.0)
                rest[l - 1] = estimate_responses(ctx, src, batch, S);
        }

        double residual = 0.0;
        for (int l = 1; l <= L; ++l) {
            damp_into(state.kernels.Phi(l), kest[l - 1].phi, residual);
            damp_into(state.kernels.G(l), kest[l - 1].g, residual);
            damp_into(state.kernels.Gt(l), kest[l - 1].gt, residual);
            damp_into(state.kernels.Gtt(l), kest[l - 1].gtt, residual);
        }
        double resp_residual = 0.0;  // responses are damped but do not gate convergence
        for (int l = 1; l <= L; ++l) {
            const LayerResponseEstimate& re = rest[l - 1];
            if (re.has_a) damp_into(state.responses.A[l - 1], re.a.mat(), resp_residual);
            if (re.has_c) damp_into(state.responses.C[l - 1], re.c.mat(), resp_residual);
            if (re.has_b) damp_into(state.responses.B[l - 2], re.b.mat(), resp_residual);
            if (re.has_d) damp_into(state.responses.D[l - 2], re.d.mat(), resp_residual);
        }

        state.report.iterations = iter;
        state.report.final_residual = residual;
        state.report.residual_history.push_back(residual);
        state.report.loss_history.push_back(0.5 * state.Delta.col(T - 1).squaredNorm());
        if (residual < scfg.tol) {
            state.report.converged = true;
            break;
        }
    }

    predict_from_kernels(state.kernels, ds.targets, grid, state.f, state.Delta);
    state.entk = entk_contract(state.kernels);
    return state;
}

}  // namespace entk
