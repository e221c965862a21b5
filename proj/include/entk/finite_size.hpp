#pragma once

#include "entk/activation.hpp"
#include "entk/rng.hpp"
#include "entk/types.hpp"

#include <cmath>
#include <vector>

namespace entk {

// ---------------------------------------------------------------------------
// Next-to-leading-order fluctuation theory for the single-sample K^x = 1
// kernels at initialization: Cov(Phi^l, Phi^l') = V_phi min(l,l') / N and
// Cov(G^l, G^l') = V_g min(L+1-l, L+1-l') / N (Brownian covariance pattern).
// ---------------------------------------------------------------------------
struct NloConstants {
    double v_phi;
    double v_g;
};

inline NloConstants nlo_constants(Activation act) {
    switch (act) {
        case Activation::Linear: return {2.0, 2.0};
        case Activation::ReluNormalized: return {5.0, 5.0};
        default:
            throw DomainError("nlo_constants: closed form only for linear/relu_normalized");
    }
}

struct NloPrediction {
    double v_phi = 0.0, v_g = 0.0;
    int width_n = 0;
    Mat cov_phi;  // L x L
    Mat cov_g;    // L x L
};

inline NloPrediction nlo_prediction(Activation act, int L, int N) {
    if (L < 1 || N < 1) throw DomainError("nlo_prediction: L, N >= 1 required");
    const NloConstants c = nlo_constants(act);
    NloPrediction pred;
    pred.v_phi = c.v_phi;
    pred.v_g = c.v_g;
    pred.width_n = N;
    pred.cov_phi.resize(L, L);
    pred.cov_g.resize(L, L);
    for (int a = 1; a <= L; ++a)
        for (int b = 1; b <= L; ++b) {
            pred.cov_phi(a - 1, b - 1) = c.v_phi * std::min(a, b) / static_cast<double>(N);
            pred.cov_g(a - 1, b - 1) =
                c.v_g * std::min(L + 1 - a, L + 1 - b) / static_cast<double>(N);
        }
    return pred;
}

// ---------------------------------------------------------------------------
// Ensemble estimator: R random networks on a single unit-norm input, scalar
// kernels Phi^l = |phi(h^l)|^2 / N and G^l = |g^l|^2 / N per layer. Weight
// matrices are regenerated from counter streams on the backward pass instead
// of being stored.
// ---------------------------------------------------------------------------
struct EnsembleCovariance {
    Mat phi_samples;  // R x L
    Mat g_samples;    // R x L
    Mat cov_phi;      // L x L sample covariance
    Mat cov_g;
    Mat se_phi;  // standard errors of the covariance entries
    Mat se_g;
};

namespace fsdetail {

inline void single_input_kernels(Activation act, int L, int N, RngStream net, double* phi_out,
                                 double* g_out) {
    // h^1 iid N(0,1): the D = 1, x = 1 realization of K^x = 1.
    std::vector<Vec> h(L);
    h[0] = net.child(0).normal_vec(N);
    Vec feat(N);
    for (int l = 1; l <= L; ++l) {
        const Vec& cur = h[l - 1];
        for (int i = 0; i < N; ++i) feat(i) = phi(act, cur(i));
        phi_out[l - 1] = feat.squaredNorm() / N;
        if (l == L) break;
        RngStream wrng = net.child(l);
        Vec nxt(N);
        const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j)
                acc += wrng.normal_at(static_cast<std::uint64_t>(i) * N + j) * feat(j);
            nxt(i) = acc * inv_sqrt_n;
        }
        h[l] = nxt;
    }
    // backward: g^L = phidot(h^L) .* w, g^l = phidot(h^l) .* (W^l)^T g^{l+1} / sqrt(N)
    Vec g(N);
    {
        RngStream wl = net.child(1000);
        for (int i = 0; i < N; ++i) g(i) = phi_dot(act, h[L - 1](i)) * wl.normal_at(i);
    }
    g_out[L - 1] = g.squaredNorm() / N;
    for (int l = L - 1; l >= 1; --l) {
        RngStream wrng = net.child(l);  // same stream as the forward W^l
        Vec z(N);
        const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j)
                acc += wrng.normal_at(static_cast<std::uint64_t>(j) * N + i) * g(j);
            z(i) = acc * inv_sqrt_n;
        }
        for (int i = 0; i < N; ++i) g(i) = phi_dot(act, h[l - 1](i)) * z(i);
        g_out[l - 1] = g.squaredNorm() / N;
    }
}

}  // namespace fsdetail

inline EnsembleCovariance ensemble_kernel_covariance(Activation act, int L, int N, int R,
                                                     std::uint64_t seed) {
    if (R < 2) throw DomainError("ensemble_kernel_covariance: R >= 2 required");
    if (L < 1 || N < 1) throw DomainError("ensemble_kernel_covariance: L, N >= 1 required");
    EnsembleCovariance out;
    out.phi_samples.resize(R, L);
    out.g_samples.resize(R, L);
    RngStream root = RngStream(seed).child(0x656e73ull);
    parallel_for(0, R, [&](std::int64_t rep) {
        std::vector<double> pv(L), gv(L);
        fsdetail::single_input_kernels(act, L, N, root.child(rep), pv.data(), gv.data());
        for (int l = 0; l < L; ++l) {
            out.phi_samples(rep, l) = pv[l];
            out.g_samples(rep, l) = gv[l];
        }
    });

    auto sample_cov = [R](const Mat& s) {
        const Mat centered = s.rowwise() - s.colwise().mean();
        return Mat(centered.transpose() * centered / (R - 1.0));
    };
    out.cov_phi = sample_cov(out.phi_samples);
    out.cov_g = sample_cov(out.g_samples);
    // Gaussian-theory standard error of a sample covariance entry.
    auto cov_se = [R](const Mat& cov) {
        Mat se(cov.rows(), cov.cols());
        for (Eigen::Index a = 0; a < cov.rows(); ++a)
            for (Eigen::Index b = 0; b < cov.cols(); ++b)
                se(a, b) = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) /
                                     (R - 1.0));
        return se;
    };
    out.se_phi = cov_se(out.cov_phi);
    out.se_g = cov_se(out.cov_g);
    return out;
}

// ---------------------------------------------------------------------------
// Log-log OLS slope of squared errors against width.
// ---------------------------------------------------------------------------
struct ScalingFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
};

inline ScalingFit width_scaling_fit(const std::vector<double>& widths,
                                    const std::vector<double>& sq_errors) {
    const std::size_t n = widths.size();
    if (n != sq_errors.size()) throw ShapeError("width_scaling_fit: size mismatch");
    if (n < 4) throw DomainError("width_scaling_fit: need >= 4 widths");
    double wmin = widths[0], wmax = widths[0];
    for (double w : widths) {
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
    }
    if (!(wmin > 0.0) || wmax / wmin < 8.0)
        throw DomainError("width_scaling_fit: widths must span >= 8x");
    for (double e : sq_errors)
        if (!(e > 0.0)) throw DomainError("width_scaling_fit: nonpositive measurement");

    Vec x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i) = std::log(widths[i]);
        y(i) = std::log(sq_errors[i]);
    }
    const double xbar = x.mean(), ybar = y.mean();
    const double sxx = (x.array() - xbar).square().sum();
    const double sxy = ((x.array() - xbar) * (y.array() - ybar)).sum();
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y(i) - (fit.intercept + fit.slope * x(i));
        ssr += r * r;
    }
    fit.stderr_slope = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
    return fit;
}

}  // namespace entk
