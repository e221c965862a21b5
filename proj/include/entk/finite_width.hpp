#pragma once

#include "entk/activation.hpp"
#include "entk/dataset.hpp"
#include "entk/metrics.hpp"
#include "entk/rng.hpp"
#include "entk/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace entk {

// ---------------------------------------------------------------------------
// Params: forward weights plus rule-specific frozen auxiliaries.
//   W0: N x D, W[l-1]: N x N for l = 1..L-1, wL: N.
//   RhoFA: effective feedback fa_W[l-1] = rho W^l(0) + sqrt(1-rho^2) Wtilde,
//          plus the readout feedback vector fa_w; never updated.
//   DFA: one frozen broadcast vector per layer. GLN: frozen gate matrices.
// ---------------------------------------------------------------------------
struct Params {
    NetworkConfig config;
    RuleSpec rule;
    Mat W0;
    std::vector<Mat> W;   // l = 1..L-1
    Vec wL;
    std::vector<Mat> fa_W;  // RhoFA, l = 1..L-1
    Vec fa_w;               // RhoFA readout feedback
    std::vector<Vec> dfa_z;   // DFA, l = 1..L
    std::vector<Mat> gln_M;   // GLN, l = 1..L (N x D)
};

inline Params init_network(const NetworkConfig& config, const RuleSpec& rule, int input_dim) {
    config.validate();
    rule.validate();
    const int L = config.depth_L, N = config.width_N, D = input_dim;
    Params p;
    p.config = config;
    p.rule = rule;

    RngStream root(config.seed);
    p.W0 = root.child(1).normal_mat(N, D);
    p.W.reserve(std::max(0, L - 1));
    for (int l = 1; l < L; ++l) p.W.push_back(root.child(100 + l).normal_mat(N, N));
    p.wL = root.child(2).normal_vec(N);

    switch (rule.tag) {
        case Rule::RhoFA: {
            const double rho = rule.rho_value();
            const double c = std::sqrt(1.0 - rho * rho);
            p.fa_W.reserve(std::max(0, L - 1));
            for (int l = 1; l < L; ++l)
                p.fa_W.push_back(rho * p.W[l - 1] + c * root.child(200 + l).normal_mat(N, N));
            p.fa_w = rho * p.wL + c * root.child(201).normal_vec(N);
            break;
        }
        case Rule::DFA:
            p.dfa_z.reserve(L);
            for (int l = 1; l <= L; ++l) p.dfa_z.push_back(root.child(300 + l).normal_vec(N));
            break;
        case Rule::GLN:
            p.gln_M.reserve(L);
            for (int l = 1; l <= L; ++l) p.gln_M.push_back(root.child(400 + l).normal_mat(N, D));
            break;
        default:
            break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Forward pass. For GLN the layer feature is the gated preactivation
// gate(m^l) .* h^l with gate = phidot of the network activation, and the same
// gate plays the role of phidot on the backward pass.
// ---------------------------------------------------------------------------
struct ForwardState {
    std::vector<Mat> h;        // preactivations, N x P, l = 1..L
    std::vector<Mat> feat;     // layer features entering the next layer
    std::vector<Mat> featdot;  // derivative factor used on backward passes
    Vec f_raw;                 // P, uncentered outputs
};

inline ForwardState forward(const Params& p, const Dataset& ds) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const Eigen::Index P = ds.P(), D = ds.D();
    if (p.W0.cols() != D) throw ShapeError("forward: dataset dimension != W0 columns");
    const Activation act = p.config.activation;
    const bool gln = p.rule.tag == Rule::GLN;

    ForwardState fs;
    fs.h.resize(L);
    fs.feat.resize(L);
    fs.featdot.resize(L);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));

    Mat cur = p.W0 * ds.inputs.transpose() * inv_sqrt_d;  // h^1, N x P
    for (int l = 1; l <= L; ++l) {
        fs.h[l - 1] = cur;
        Mat& fval = fs.feat[l - 1];
        Mat& fdot = fs.featdot[l - 1];
        fval.resize(N, P);
        fdot.resize(N, P);
        if (gln) {
            const Mat m = p.gln_M[l - 1] * ds.inputs.transpose() * inv_sqrt_d;
            for (Eigen::Index j = 0; j < P; ++j)
                for (int i = 0; i < N; ++i) {
                    const double gate = phi_dot(act, m(i, j));
                    fdot(i, j) = gate;
                    fval(i, j) = gate * cur(i, j);
                }
        } else {
            for (Eigen::Index j = 0; j < P; ++j)
                for (int i = 0; i < N; ++i) {
                    fval(i, j) = phi(act, cur(i, j));
                    fdot(i, j) = phi_dot(act, cur(i, j));
                }
        }
        if (l < L) cur = p.W[l - 1] * fval * inv_sqrt_n;
    }
    fs.f_raw = fs.feat[L - 1].transpose() * p.wL / (p.config.gamma0 * N);
    return fs;
}

// True gradients g^l = gamma0 N df/dh^l, recursive backward with current
// weights; base case through the readout.
inline std::vector<Mat> backward_true(const Params& p, const ForwardState& fs) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<Mat> g(L);
    g[L - 1] = fs.featdot[L - 1].array().colwise() * p.wL.array();
    for (int l = L - 1; l >= 1; --l)
        g[l - 1] = fs.featdot[l - 1].cwiseProduct(p.W[l - 1].transpose() * g[l] * inv_sqrt_n);
    return g;
}

// Rule-specific pseudo-gradients. NodePerturb is handled by its own op.
inline std::vector<Mat> pseudo_gradients(const RuleSpec& rule, const Params& p,
                                         const ForwardState& fs, const Vec& delta) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<Mat> gt(L);
    switch (rule.tag) {
        case Rule::GD:
        case Rule::GLN: {
            // exact backward through current weights (GLN gates live in featdot)
            gt[L - 1] = fs.featdot[L - 1].array().colwise() * p.wL.array();
            for (int l = L - 1; l >= 1; --l)
                gt[l - 1] =
                    fs.featdot[l - 1].cwiseProduct(p.W[l - 1].transpose() * gt[l] * inv_sqrt_n);
            break;
        }
        case Rule::RhoFA: {
            gt[L - 1] = fs.featdot[L - 1].array().colwise() * p.fa_w.array();
            for (int l = L - 1; l >= 1; --l)
                gt[l - 1] = fs.featdot[l - 1].cwiseProduct(p.fa_W[l - 1].transpose() * gt[l] *
                                                           inv_sqrt_n);
            break;
        }
        case Rule::DFA:
            for (int l = 1; l <= L; ++l)
                gt[l - 1] = fs.featdot[l - 1].array().colwise() * p.dfa_z[l - 1].array();
            break;
        case Rule::Hebb:
            for (int l = 1; l <= L; ++l)
                gt[l - 1] = fs.feat[l - 1].array().rowwise() * delta.transpose().array();
            break;
        case Rule::NodePerturb:
            throw DomainError("pseudo_gradients: NodePerturb handled by node_perturb_step");
    }
    return gt;
}

// ---------------------------------------------------------------------------
// Node perturbation: correlate Gaussian perturbations of h^{l+1} with their
// first-order loss change to estimate the true left vector g^{l+1}.
//   ghat = (1 / sigma^2 K) sum_k eps_k (eps_k . g)
// ---------------------------------------------------------------------------
inline Vec node_perturb_estimate(const Vec& g, int K, double sigma, RngStream& rng) {
    if (K < 1 || !(sigma > 0.0)) throw DomainError("node_perturb_estimate: K >= 1, sigma > 0");
    Vec ghat = Vec::Zero(g.size());
    for (int k = 0; k < K; ++k) {
        Vec eps = sigma * rng.normal_vec(g.size());
        ghat += eps * eps.dot(g);
    }
    return ghat / (sigma * sigma * K);
}

struct NodePerturbResult {
    std::vector<double> snr;  // per hidden layer l = 1..L
    double mean_snr = 0.0;
    std::vector<Mat> ghat;  // estimated left vectors per layer (N x P)
};

// Estimate every hidden layer's left vector from K perturbations per sample;
// records the per-entry SNR |g| / |ghat - g| averaged over samples.
inline NodePerturbResult node_perturb_left_vectors(const std::vector<Mat>& g, int K,
                                                   double sigma, RngStream& rng) {
    NodePerturbResult res;
    const int L = static_cast<int>(g.size());
    res.snr.resize(L, 0.0);
    res.ghat.resize(L);
    for (int lv = 1; lv <= L; ++lv) {
        const Eigen::Index P = g[lv - 1].cols();
        Mat ghat(g[lv - 1].rows(), P);
        double snr_acc = 0.0;
        for (Eigen::Index mu = 0; mu < P; ++mu) {
            RngStream sub = rng.child(static_cast<std::uint64_t>(lv) * 1000003u + mu);
            ghat.col(mu) = node_perturb_estimate(g[lv - 1].col(mu), K, sigma, sub);
            const double err = (ghat.col(mu) - g[lv - 1].col(mu)).norm();
            snr_acc += err > 0.0 ? g[lv - 1].col(mu).norm() / err : 0.0;
        }
        res.ghat[lv - 1] = ghat;
        res.snr[lv - 1] = snr_acc / static_cast<double>(P);
    }
    double acc = 0.0;
    for (double s : res.snr) acc += s;
    res.mean_snr = L > 0 ? acc / L : 0.0;
    return res;
}

// One explicit-Euler training step with node-perturbation estimates of every
// hidden-layer left vector; the readout keeps its delta rule.
inline NodePerturbResult node_perturb_step(Params& p, const Dataset& ds, int K, double sigma,
                                           double dt, RngStream& rng,
                                           const Vec* delta_in = nullptr) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const double g0 = p.config.gamma0;
    ForwardState fs = forward(p, ds);
    std::vector<Mat> g = backward_true(p, fs);
    const Vec delta = delta_in ? *delta_in : Vec(ds.targets - fs.f_raw);

    NodePerturbResult res = node_perturb_left_vectors(g, K, sigma, rng);
    for (int lv = 1; lv <= L; ++lv) {
        const Mat scaled = res.ghat[lv - 1] * delta.asDiagonal();
        if (lv == 1) {
            p.W0 += dt * g0 / std::sqrt(static_cast<double>(ds.D())) * scaled * ds.inputs;
        } else {
            p.W[lv - 2] += dt * g0 / std::sqrt(static_cast<double>(N)) * scaled *
                           fs.feat[lv - 2].transpose();
        }
    }
    p.wL += dt * g0 * fs.feat[L - 1] * delta;
    return res;
}

// ---------------------------------------------------------------------------
// Training driver: explicit Euler on Eqs of motion, online measurement.
// ---------------------------------------------------------------------------
struct KernelSnapshot {
    int step = 0;
    double time = 0.0;
    std::vector<Mat> phi;     // l = 0..L (phi[0] = K^x)
    std::vector<Mat> g;       // l = 1..L+1 at index l-1 (g[L] = ones)
    std::vector<Mat> gtilde;  // same indexing
    Mat entk;                 // equal-time eNTK
    Vec preact_sample;        // subsample of h^L for the first input
};

struct TrainTrace {
    std::vector<double> time, loss, alignment, corr;
    std::vector<int> corr_skipped;
    Mat f;  // P x T (centered outputs if enabled)
    std::vector<KernelSnapshot> snapshots;
    Params final_params;
};

struct TrainConfig {
    std::vector<int> snapshot_steps;
    // Measure against the frozen initial function: f(t) - f(0). Matches the
    // infinite-width description where f(0) = 0, and removes the
    // O(1/(gamma0 sqrt(N))) initialization offset at finite width.
    bool center_output = true;
    double divergence_guard = 1e6;
    int preact_sample_size = 512;
};

namespace detail {

inline KernelSnapshot measure_snapshot(const Params& p, const Dataset& ds,
                                       const ForwardState& fs, const std::vector<Mat>& g,
                                       const std::vector<Mat>& gt, int step, double time,
                                       int preact_n) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const Eigen::Index P = ds.P();
    const double inv_n = 1.0 / static_cast<double>(N);
    KernelSnapshot snap;
    snap.step = step;
    snap.time = time;
    snap.phi.resize(L + 1);
    snap.g.resize(L + 1);
    snap.gtilde.resize(L + 1);
    snap.phi[0] = ds.input_kernel;
    for (int l = 1; l <= L; ++l) {
        snap.phi[l] = fs.feat[l - 1].transpose() * fs.feat[l - 1] * inv_n;
        snap.g[l - 1] = g[l - 1].transpose() * g[l - 1] * inv_n;
        snap.gtilde[l - 1] = g[l - 1].transpose() * gt[l - 1] * inv_n;
    }
    snap.g[L] = Mat::Ones(P, P);
    snap.gtilde[L] = Mat::Ones(P, P);
    snap.entk = entk_contract_static(snap.phi, snap.gtilde);
    const int m = std::min(preact_n, N);
    snap.preact_sample = fs.h[L - 1].col(0).head(m);
    return snap;
}

}  // namespace detail

inline TrainTrace train(const Params& params, const Dataset& ds, const TimeGrid& grid,
                        const TrainConfig& cfg = TrainConfig{}) {
    grid.validate();
    Params p = params;
    const int L = p.config.depth_L, N = p.config.width_N, T = grid.steps_T;
    const double g0 = p.config.gamma0, dt = grid.dt;
    const Eigen::Index P = ds.P();
    const double inv_n = 1.0 / static_cast<double>(N);
    const bool node_perturb = p.rule.tag == Rule::NodePerturb;
    RngStream np_rng = RngStream(p.config.seed).child(0x6e70ull);

    TrainTrace trace;
    trace.f.resize(P, T);
    trace.time.reserve(T);
    trace.loss.reserve(T);

    Vec f0 = Vec::Zero(P);
    if (cfg.center_output) f0 = forward(p, ds).f_raw;

    std::size_t snap_cursor = 0;
    std::vector<int> snaps = cfg.snapshot_steps;
    std::sort(snaps.begin(), snaps.end());

    for (int k = 0; k < T; ++k) {
        ForwardState fs = forward(p, ds);
        const Vec f = fs.f_raw - f0;
        const Vec delta = ds.targets - f;
        const double loss = 0.5 * delta.squaredNorm();
        if (!(loss < cfg.divergence_guard))
            throw SolverError("train: loss exceeded divergence guard at step " +
                              std::to_string(k) + " (dt too large?)");

        std::vector<Mat> g = backward_true(p, fs);
        std::vector<Mat> gt;
        if (node_perturb) {
            RngStream step_rng = np_rng.child(static_cast<std::uint64_t>(k));
            gt = node_perturb_left_vectors(g, p.rule.perturb_count.value(),
                                           p.rule.perturb_scale.value(), step_rng)
                     .ghat;
        } else {
            gt = pseudo_gradients(p.rule, p, fs, delta);
        }

        // trace row
        std::vector<Mat> phis(L + 1), gts(L + 1);
        phis[0] = ds.input_kernel;
        for (int l = 1; l <= L; ++l) {
            phis[l] = fs.feat[l - 1].transpose() * fs.feat[l - 1] * inv_n;
            gts[l - 1] = g[l - 1].transpose() * gt[l - 1] * inv_n;
        }
        gts[L] = Mat::Ones(P, P);
        const Mat entk = entk_contract_static(phis, gts);
        trace.time.push_back(grid.time(k));
        trace.loss.push_back(loss);
        trace.f.col(k) = f;
        trace.alignment.push_back(kernel_task_alignment(entk, ds.targets));
        const CorrelationResult corr = grad_pseudograd_correlation(g, gt);
        trace.corr.push_back(corr.value);
        trace.corr_skipped.push_back(corr.skipped);

        while (snap_cursor < snaps.size() && snaps[snap_cursor] == k) {
            trace.snapshots.push_back(detail::measure_snapshot(p, ds, fs, g, gt, k,
                                                               grid.time(k),
                                                               cfg.preact_sample_size));
            ++snap_cursor;
        }

        if (k + 1 == T) break;
        // d/dt wL = g0 sum_mu phi(h^L_mu) Delta_mu  (delta rule)
        p.wL += dt * g0 * fs.feat[L - 1] * delta;
        // d/dt W^l = g0/sqrt(N) sum_mu Delta_mu gtilde^{l+1}_mu phi(h^l_mu)^T
        for (int l = 1; l < L; ++l)
            p.W[l - 1] += dt * g0 / std::sqrt(static_cast<double>(N)) *
                          (gt[l] * delta.asDiagonal()) * fs.feat[l - 1].transpose();
        // d/dt W^0 = g0/sqrt(D) sum_mu Delta_mu gtilde^1_mu x_mu^T
        p.W0 += dt * g0 / std::sqrt(static_cast<double>(ds.D())) *
                (gt[0] * delta.asDiagonal()) * ds.inputs;
    }
    trace.final_params = std::move(p);
    return trace;
}

}  // namespace entk
