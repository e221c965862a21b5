#pragma once

// Test-side oracles, independent of the library implementation paths they
// check: brute-force contractions, Monte-Carlo Gaussian integrals,
// finite differences, Richardson extrapolation.

#include "entk/rng.hpp"
#include "entk/types.hpp"

#include <cmath>
#include <functional>

namespace oracle {

using entk::Mat;
using entk::RngStream;
using entk::TwoTime;
using entk::Vec;

// Naive loop eNTK contraction over layer list (independent of entk_contract).
inline TwoTime naive_contract(const std::vector<TwoTime>& gtilde,
                              const std::vector<TwoTime>& phi) {
    const int P = phi[0].P(), T = phi[0].T();
    TwoTime out(P, T);
    for (std::size_t l = 0; l < phi.size(); ++l)
        for (int mu = 0; mu < P; ++mu)
            for (int t = 0; t < T; ++t)
                for (int nu = 0; nu < P; ++nu)
                    for (int s = 0; s < T; ++s)
                        out(mu, t, nu, s) += gtilde[l](mu, t, nu, s) * phi[l](mu, t, nu, s);
    return out;
}

// MC estimate of E[f(u1) g(u2)] for (u1,u2) zero-mean Gaussian with
// variances q1,q2 and correlation c.
inline double mc_pair_moment(const std::function<double(double)>& f,
                             const std::function<double(double)>& g, double q1, double q2,
                             double c, long draws, std::uint64_t seed) {
    RngStream rng(seed);
    const double s1 = std::sqrt(q1), s2 = std::sqrt(q2);
    const double cr = std::sqrt(std::max(0.0, 1.0 - c * c));
    double acc = 0.0;
    for (long i = 0; i < draws; ++i) {
        double z1, z2;
        rng.normal_pair(static_cast<std::uint64_t>(i), z1, z2);
        acc += f(s1 * z1) * g(s2 * (c * z1 + cr * z2));
    }
    return acc / static_cast<double>(draws);
}

// MC estimate of E[f(u)] for u ~ N(0, q).
inline double mc_moment(const std::function<double(double)>& f, double q, long draws,
                        std::uint64_t seed) {
    RngStream rng(seed);
    const double s = std::sqrt(q);
    double acc = 0.0;
    for (long i = 0; i < draws; ++i) acc += f(s * rng.normal_at(i));
    return acc / static_cast<double>(draws);
}

// Gauss-Legendre nodes/weights on [-1,1] via the Jacobi matrix.
struct GaussLegendre {
    std::vector<double> nodes, weights;
    explicit GaussLegendre(int degree) {
        Mat j = Mat::Zero(degree, degree);
        for (int k = 1; k < degree; ++k) {
            const double b = k / std::sqrt(4.0 * k * k - 1.0);
            j(k - 1, k) = b;
            j(k, k - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(j);
        for (int k = 0; k < degree; ++k) {
            nodes.push_back(es.eigenvalues()(k));
            const double v0 = es.eigenvectors()(0, k);
            weights.push_back(2.0 * v0 * v0);
        }
    }
};

// Independent quadrature for E[f(a) g(b)] over the correlated bivariate
// normal: composite Gauss-Legendre in (a,b) space with panels split at zero,
// so axis-aligned kinks (relu) are integrated exactly panel-by-panel.
inline double quad_pair_moment(const std::function<double(double)>& f,
                               const std::function<double(double)>& g, double q1, double q2,
                               double c) {
    static const GaussLegendre gl(24);
    const double s1 = std::sqrt(q1), s2 = std::sqrt(q2);
    c = std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, c));
    const double det = 1.0 - c * c;
    const double norm = 1.0 / (2.0 * 3.14159265358979323846 * s1 * s2 * std::sqrt(det));
    // panel edges: split at 0 and grade outward to 8 sigma
    const std::vector<double> edges{-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0};
    double acc = 0.0;
    for (std::size_t pa = 0; pa + 1 < edges.size(); ++pa) {
        const double a0 = edges[pa] * s1, a1 = edges[pa + 1] * s1;
        for (std::size_t pb = 0; pb + 1 < edges.size(); ++pb) {
            const double b0 = edges[pb] * s2, b1 = edges[pb + 1] * s2;
            double panel = 0.0;
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double a = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * gl.nodes[i];
                const double fa = f(a);
                if (fa == 0.0) continue;
                double inner = 0.0;
                for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                    const double b = 0.5 * (b0 + b1) + 0.5 * (b1 - b0) * gl.nodes[k];
                    const double za = a / s1, zb = b / s2;
                    const double expo = -(za * za - 2.0 * c * za * zb + zb * zb) / (2.0 * det);
                    inner += gl.weights[k] * g(b) * std::exp(expo);
                }
                panel += gl.weights[i] * fa * inner;
            }
            acc += panel * 0.25 * (a1 - a0) * (b1 - b0);
        }
    }
    return acc * norm;
}

// Ordinary least squares slope of y against x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double xb = 0, yb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        xb += x[i];
        yb += y[i];
    }
    xb /= n;
    yb /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xb) * (x[i] - xb);
        sxy += (x[i] - xb) * (y[i] - yb);
    }
    return sxy / sxx;
}

inline double rel_l2(const Vec& a, const Vec& b) { return (a - b).norm() / b.norm(); }

inline double rel_frob(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

}  // namespace oracle
