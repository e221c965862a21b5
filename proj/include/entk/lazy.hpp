#pragma once

#include "entk/activation.hpp"
#include "entk/dataset.hpp"
#include "entk/metrics.hpp"
#include "entk/types.hpp"

#include <cmath>
#include <vector>

namespace entk {

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (physicists' weight e^{-x^2}) via Golub-Welsch.
// Degree 40 reaches ~1e-8 on the smooth tanh integrands used here.
// ---------------------------------------------------------------------------
struct GaussHermite {
    Vec nodes;
    Vec weights;

    explicit GaussHermite(int degree = 40) {
        Mat J = Mat::Zero(degree, degree);
        for (int k = 1; k < degree; ++k) {
            const double b = std::sqrt(k / 2.0);
            J(k - 1, k) = b;
            J(k, k - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(J);
        nodes = es.eigenvalues();
        weights.resize(degree);
        const double sqrt_pi = std::sqrt(3.14159265358979323846264338327950288);
        for (int k = 0; k < degree; ++k) {
            const double v0 = es.eigenvectors()(0, k);
            weights(k) = sqrt_pi * v0 * v0;
        }
    }
};

namespace detail {
inline const GaussHermite& gh40() {
    static const GaussHermite q(40);
    return q;
}

// E[f(a) g(b)] for (a,b) ~ N(0, [[qa, c*sqrt(qa qb)],[., qb]]) by tensor GH.
template <typename F, typename G>
double gauss_pair_expect(F&& f, G&& g, double qa, double qb, double c) {
    const GaussHermite& q = gh40();
    const double sa = std::sqrt(2.0 * qa), sb = std::sqrt(2.0 * qb);
    const double croot = std::sqrt(std::max(0.0, 1.0 - c * c));
    double acc = 0.0;
    for (int i = 0; i < q.nodes.size(); ++i) {
        const double a = sa * q.nodes(i);
        const double fa = f(a);
        double inner = 0.0;
        for (int j = 0; j < q.nodes.size(); ++j) {
            const double b = sb * (c * q.nodes(i) + croot * q.nodes(j));
            inner += q.weights(j) * g(b);
        }
        acc += q.weights(i) * fa * inner;
    }
    const double pi = 3.14159265358979323846264338327950288;
    return acc / pi;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// NNGP layer map: (Phi^{l-1}) -> (Phi^l, Phidot^l) where
//   Phi^l    = <phi(u) phi(u)^T>,  u ~ N(0, Phi^{l-1})
//   Phidot^l = <phidot(u) phidot(u)^T>.
// relu_normalized uses the closed-form arccos kernel; tanh uses quadrature.
// ---------------------------------------------------------------------------
struct NngpLayer {
    Mat phi;
    Mat phidot;
};

inline NngpLayer nngp_layer(const Mat& phi_prev, Activation act) {
    const Eigen::Index P = phi_prev.rows();
    if (phi_prev.cols() != P) throw ShapeError("nngp_layer: square input required");
    const double min_eig = min_eigenvalue_sym(phi_prev);
    if (min_eig < -1e-8)
        throw DomainError("nngp_layer: input kernel not PSD (min eig " +
                          std::to_string(min_eig) + ")");

    NngpLayer out;
    out.phi.resize(P, P);
    out.phidot.resize(P, P);
    const double pi = 3.14159265358979323846264338327950288;

    switch (act) {
        case Activation::Linear:
            out.phi = phi_prev;
            out.phidot = Mat::Ones(P, P);
            break;
        case Activation::ReluNormalized:
            for (Eigen::Index mu = 0; mu < P; ++mu) {
                for (Eigen::Index nu = 0; nu < P; ++nu) {
                    const double qm = phi_prev(mu, mu), qn = phi_prev(nu, nu);
                    const double denom = std::sqrt(qm * qn);
                    if (!(denom > 0.0)) {
                        out.phi(mu, nu) = 0.0;
                        out.phidot(mu, nu) = (mu == nu) ? 0.0 : 0.0;
                        continue;
                    }
                    // clamp correlation to [-1,1]; absorbs 1e-12 rounding
                    double c = phi_prev(mu, nu) / denom;
                    c = std::min(1.0, std::max(-1.0, c));
                    const double theta = std::acos(c);
                    out.phi(mu, nu) = denom * (std::sin(theta) + (pi - theta) * c) / pi;
                    out.phidot(mu, nu) = (pi - theta) / pi;
                }
            }
            break;
        case Activation::Tanh:
            for (Eigen::Index mu = 0; mu < P; ++mu) {
                for (Eigen::Index nu = 0; nu < P; ++nu) {
                    const double qm = phi_prev(mu, mu), qn = phi_prev(nu, nu);
                    const double denom = std::sqrt(std::max(qm * qn, 0.0));
                    double c = denom > 0.0 ? phi_prev(mu, nu) / denom : 0.0;
                    c = std::min(1.0, std::max(-1.0, c));
                    out.phi(mu, nu) = detail::gauss_pair_expect(
                        [](double h) { return std::tanh(h); },
                        [](double h) { return std::tanh(h); }, qm, qn, c);
                    out.phidot(mu, nu) = detail::gauss_pair_expect(
                        [](double h) { const double t = std::tanh(h); return 1.0 - t * t; },
                        [](double h) { const double t = std::tanh(h); return 1.0 - t * t; },
                        qm, qn, c);
                }
            }
            break;
    }
    return out;
}

// Backward recursion G^l = G^{l+1} .* Phidot^l.
inline Mat gradient_layer(const Mat& g_next, const Mat& phidot) {
    if (g_next.rows() != phidot.rows() || g_next.cols() != phidot.cols())
        throw ShapeError("gradient_layer: shape mismatch");
    return g_next.cwiseProduct(phidot);
}

// ---------------------------------------------------------------------------
// LazyKernelStack: static kernels of the gamma0 -> 0 limit.
//   phi[l], l = 0..L (phi[0] = K^x); phidot[l], l = 1..L;
//   g[l], l = 1..L+1 stored at g[l-1] (g[L] = ones).
// ---------------------------------------------------------------------------
struct LazyKernelStack {
    int L = 0;
    std::vector<Mat> phi;
    std::vector<Mat> phidot;
    std::vector<Mat> g;
    Mat gate_kernel;  // <gate(m_mu) gate(m_nu)>, GLN only

    const Mat& Phi(int l) const { return phi.at(l); }
    const Mat& Phidot(int l) const { return phidot.at(l - 1); }
    const Mat& G(int l) const { return g.at(l - 1); }
};

inline LazyKernelStack lazy_kernel_stack(const Mat& input_kernel, int L, Activation act) {
    if (L < 1) throw DomainError("lazy_kernel_stack: L >= 1 required");
    LazyKernelStack st;
    st.L = L;
    st.phi.resize(L + 1);
    st.phidot.resize(L);
    st.phi[0] = input_kernel;
    for (int l = 1; l <= L; ++l) {
        NngpLayer nl = nngp_layer(st.phi[l - 1], act);
        st.phi[l] = nl.phi;
        st.phidot[l - 1] = nl.phidot;
    }
    const Eigen::Index P = input_kernel.rows();
    st.g.resize(L + 1);
    st.g[L] = Mat::Ones(P, P);
    for (int l = L; l >= 1; --l) st.g[l - 1] = gradient_layer(st.g[l], st.phidot[l - 1]);

    // GLN gate kernel: gates m ~ N(0, K^x), gate nonlinearity = phidot of the
    // network activation, so the gate kernel is the phidot integral on K^x.
    st.gate_kernel = nngp_layer(input_kernel, act).phidot;
    return st;
}

// ---------------------------------------------------------------------------
// Lazy eNTK per rule (static kernels at initialization):
//   GD:    sum_l G^{l+1} .* Phi^l
//   r-FA:  sum_l rho^{L-l} G^{l+1} .* Phi^l
//   DFA:   Phi^L            Hebb: Phi^L
//   GLN:   gate_kernel^{.L} .* K^x
// ---------------------------------------------------------------------------
inline Mat lazy_entk(const RuleSpec& rule, const LazyKernelStack& st) {
    rule.validate();
    const Eigen::Index P = st.phi[0].rows();
    Mat out = Mat::Zero(P, P);
    switch (rule.tag) {
        case Rule::GD:
            for (int l = 0; l <= st.L; ++l) out += st.G(l + 1).cwiseProduct(st.Phi(l));
            break;
        case Rule::RhoFA: {
            const double rho = rule.rho_value();
            for (int l = 0; l <= st.L; ++l)
                out += std::pow(rho, st.L - l) * st.G(l + 1).cwiseProduct(st.Phi(l));
            break;
        }
        case Rule::DFA:
        case Rule::Hebb:
            out = st.Phi(st.L);
            break;
        case Rule::GLN: {
            Mat gk = Mat::Ones(P, P);
            for (int l = 0; l < st.L; ++l) gk = gk.cwiseProduct(st.gate_kernel);
            out = gk.cwiseProduct(st.phi[0]);
            break;
        }
        default:
            throw DomainError("lazy_entk: rule has no lazy kernel");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lazy prediction dynamics f(t) = (I - exp(-K t)) y via eigendecomposition,
// with an Euler fallback (flagged) if the decomposition fails.
// ---------------------------------------------------------------------------
struct LazyPrediction {
    Mat f;  // P x T
    bool used_euler_fallback = false;
};

inline LazyPrediction lazy_predict(const Mat& K, const Vec& y, const TimeGrid& grid) {
    grid.validate();
    if (K.rows() != K.cols() || K.rows() != y.size())
        throw ShapeError("lazy_predict: K must be P x P matching y");
    const Eigen::Index P = y.size();
    LazyPrediction out;
    out.f.resize(P, grid.steps_T);

    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()));
    if (es.info() == Eigen::Success) {
        const Mat& Q = es.eigenvectors();
        const Vec lam = es.eigenvalues();
        const Vec yq = Q.transpose() * y;
        for (int k = 0; k < grid.steps_T; ++k) {
            const double t = grid.time(k);
            Vec fq(P);
            for (Eigen::Index i = 0; i < P; ++i) fq(i) = (1.0 - std::exp(-lam(i) * t)) * yq(i);
            out.f.col(k) = Q * fq;
        }
        return out;
    }
    out.used_euler_fallback = true;
    Vec f = Vec::Zero(P);
    for (int k = 0; k < grid.steps_T; ++k) {
        out.f.col(k) = f;
        f += grid.dt * (K * (y - f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Angle sweep: two-point construction with K^x = [[1, cos t],[cos t, 1]];
// emits the off-diagonal lazy eNTK entry per angle (raw and K(theta)/K(0)).
// ---------------------------------------------------------------------------
struct AngleSweepRow {
    double theta;
    double k_raw;
    double k_normalized;
};

inline std::vector<AngleSweepRow> angle_sweep(const RuleSpec& rule, int L, Activation act,
                                              const std::vector<double>& thetas) {
    std::vector<AngleSweepRow> rows;
    rows.reserve(thetas.size());
    // K(0): evaluate at theta = 0 where off-diagonal equals the diagonal.
    Mat k0x = Mat::Ones(2, 2);
    const Mat K0 = lazy_entk(rule, lazy_kernel_stack(k0x, L, act));
    const double knorm = K0(0, 1);
    for (double th : thetas) {
        Mat kx(2, 2);
        kx << 1.0, std::cos(th), std::cos(th), 1.0;
        const Mat K = lazy_entk(rule, lazy_kernel_stack(kx, L, act));
        rows.push_back({th, K(0, 1), knorm != 0.0 ? K(0, 1) / knorm : 0.0});
    }
    return rows;
}

}  // namespace entk
