#pragma once

#include "entk/types.hpp"

#include <cmath>

namespace entk {

// eNTK contraction K(t,s) = sum_{l=0..L} Gtilde^{l+1}(t,s) . Phi^l(t,s)
// (elementwise over (mu,t,nu,s)), with boundaries Gtilde^{L+1} = 1 and
// Phi^0 = K^x baked into the KernelSet.
inline TwoTime entk_contract(const KernelSet& k) {
    if (k.L < 1) throw ShapeError("entk_contract: empty kernel set");
    TwoTime out(k.P, k.T);
    for (int l = 0; l <= k.L; ++l) {
        const TwoTime& gt = k.Gt(l + 1);
        const TwoTime& ph = k.Phi(l);
        gt.check_same_grid(ph, "entk_contract");
        out.mat() += gt.mat().cwiseProduct(ph.mat());
    }
    return out;
}

// Equal-time eNTK from static P x P kernels (used by trainers / lazy module):
// K = sum_l gtilde[l+1] .* phi[l], inputs indexed as in KernelSet.
inline Mat entk_contract_static(const std::vector<Mat>& phi, const std::vector<Mat>& gtilde) {
    if (phi.size() < 2 || gtilde.size() + 1 != phi.size() + 1)
        throw ShapeError("entk_contract_static: need phi[0..L] and gtilde[1..L+1]");
    const Eigen::Index P = phi[0].rows();
    Mat out = Mat::Zero(P, P);
    const std::size_t L = phi.size() - 1;
    for (std::size_t l = 0; l <= L; ++l) {
        if (phi[l].rows() != P || gtilde[l].rows() != P)
            throw ShapeError("entk_contract_static: P mismatch");
        out += gtilde[l].cwiseProduct(phi[l]);
    }
    return out;
}

// Kernel-task alignment A(K, y y^T) = y^T K y / (|K|_F |y|^2).
inline double kernel_task_alignment(const Mat& K, const Vec& y) {
    if (K.rows() != K.cols() || K.rows() != y.size())
        throw ShapeError("kernel_task_alignment: K must be P x P matching y");
    const double kf = K.norm();
    const double yn = y.squaredNorm();
    if (!(kf > 0.0) || !(yn > 0.0))
        throw DomainError("kernel_task_alignment: zero-norm input");
    return y.dot(K * y) / (kf * yn);
}

// Mean cosine similarity between gradients and pseudo-gradients over layers
// and samples. Zero-norm pairs are skipped and counted (dead relu units).
struct CorrelationResult {
    double value = 0.0;
    int skipped = 0;
    int used = 0;
};

inline CorrelationResult grad_pseudograd_correlation(const std::vector<Mat>& g,
                                                     const std::vector<Mat>& gt) {
    if (g.size() != gt.size())
        throw ShapeError("grad_pseudograd_correlation: layer count mismatch");
    CorrelationResult res;
    double acc = 0.0;
    for (std::size_t l = 0; l < g.size(); ++l) {
        if (g[l].rows() != gt[l].rows() || g[l].cols() != gt[l].cols())
            throw ShapeError("grad_pseudograd_correlation: shape mismatch at layer " +
                             std::to_string(l + 1));
        for (Eigen::Index mu = 0; mu < g[l].cols(); ++mu) {
            const double ng = g[l].col(mu).norm();
            const double nt = gt[l].col(mu).norm();
            if (!(ng > 0.0) || !(nt > 0.0)) {
                ++res.skipped;
                continue;
            }
            acc += g[l].col(mu).dot(gt[l].col(mu)) / (ng * nt);
            ++res.used;
        }
    }
    res.value = res.used > 0 ? acc / res.used : 0.0;
    return res;
}

// Smallest eigenvalue of the symmetrized matrix; PSD checks compare against a
// small negative tolerance.
inline double min_eigenvalue_sym(const Mat& K) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()),
                                          Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace entk
