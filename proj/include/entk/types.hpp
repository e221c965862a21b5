#pragma once

#include "entk/activation.hpp"
#include "entk/common.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace entk {

// ---------------------------------------------------------------------------
// Dataset: inputs X (P x D), targets y (P), input kernel K^x = X X^T / D.
// ---------------------------------------------------------------------------
struct Dataset {
    Mat inputs;        // P x D
    Vec targets;       // P
    Mat input_kernel;  // P x P
    bool whitened = false;

    Dataset() = default;
    Dataset(Mat X, Vec y, bool whitened_flag = false)
        : inputs(std::move(X)), targets(std::move(y)), whitened(whitened_flag) {
        if (inputs.rows() != targets.size())
            throw ShapeError("Dataset: inputs rows != targets size");
        if (inputs.cols() < 1) throw DomainError("Dataset: D must be >= 1");
        input_kernel = inputs * inputs.transpose() / static_cast<double>(inputs.cols());
        if (whitened) {
            const double dev =
                (input_kernel - Mat::Identity(P(), P())).cwiseAbs().maxCoeff();
            if (dev > 1e-10)
                throw DomainError("Dataset: whitened flag set but K^x differs from I by " +
                                  std::to_string(dev));
        }
    }

    Eigen::Index P() const { return inputs.rows(); }
    Eigen::Index D() const { return inputs.cols(); }
};

// ---------------------------------------------------------------------------
// NetworkConfig
// ---------------------------------------------------------------------------
struct NetworkConfig {
    int depth_L = 1;       // hidden layers
    int width_N = 1000;
    double gamma0 = 1.0;   // richness
    Activation activation = Activation::ReluNormalized;
    std::uint64_t seed = 0;

    void validate() const {
        if (depth_L < 1) throw DomainError("NetworkConfig: L >= 1 required");
        if (width_N < 1) throw DomainError("NetworkConfig: N >= 1 required");
        if (!(gamma0 > 0.0)) throw DomainError("NetworkConfig: gamma0 > 0 required");
    }
};

// ---------------------------------------------------------------------------
// RuleSpec: tagged learning-rule descriptor.
// ---------------------------------------------------------------------------
enum class Rule { GD, RhoFA, DFA, GLN, Hebb, NodePerturb };

inline const char* to_string(Rule r) {
    switch (r) {
        case Rule::GD: return "GD";
        case Rule::RhoFA: return "RhoFA";
        case Rule::DFA: return "DFA";
        case Rule::GLN: return "GLN";
        case Rule::Hebb: return "Hebb";
        case Rule::NodePerturb: return "NodePerturb";
    }
    return "?";
}

inline Rule rule_from_string(const std::string& s) {
    if (s == "GD") return Rule::GD;
    if (s == "RhoFA") return Rule::RhoFA;
    if (s == "DFA") return Rule::DFA;
    if (s == "GLN") return Rule::GLN;
    if (s == "Hebb") return Rule::Hebb;
    if (s == "NodePerturb") return Rule::NodePerturb;
    throw DomainError("unknown rule: " + s);
}

struct RuleSpec {
    Rule tag = Rule::GD;
    std::optional<double> rho;           // RhoFA only
    std::optional<int> perturb_count;    // NodePerturb only
    std::optional<double> perturb_scale; // NodePerturb only

    static RuleSpec gd() { return RuleSpec{Rule::GD, {}, {}, {}}; }
    static RuleSpec rho_fa(double rho) { return RuleSpec{Rule::RhoFA, rho, {}, {}}; }
    static RuleSpec dfa() { return RuleSpec{Rule::DFA, {}, {}, {}}; }
    static RuleSpec gln() { return RuleSpec{Rule::GLN, {}, {}, {}}; }
    static RuleSpec hebb() { return RuleSpec{Rule::Hebb, {}, {}, {}}; }
    static RuleSpec node_perturb(int k, double sigma) {
        return RuleSpec{Rule::NodePerturb, {}, k, sigma};
    }

    void validate() const {
        if (tag == Rule::RhoFA) {
            if (!rho) throw DomainError("RuleSpec: RhoFA requires rho");
            if (*rho < 0.0 || *rho > 1.0) throw DomainError("RuleSpec: rho must be in [0,1]");
        } else if (rho) {
            throw DomainError("RuleSpec: rho only valid for RhoFA");
        }
        if (tag == Rule::NodePerturb) {
            if (!perturb_count || !perturb_scale)
                throw DomainError("RuleSpec: NodePerturb requires K and sigma");
            if (*perturb_count < 1) throw DomainError("RuleSpec: K >= 1 required");
            if (!(*perturb_scale > 0.0)) throw DomainError("RuleSpec: sigma > 0 required");
        } else if (perturb_count || perturb_scale) {
            throw DomainError("RuleSpec: K/sigma only valid for NodePerturb");
        }
    }

    double rho_value() const { return rho.value_or(0.0); }
};

// ---------------------------------------------------------------------------
// TimeGrid: t_k = k * dt for k = 0..T-1.
// ---------------------------------------------------------------------------
struct TimeGrid {
    int steps_T = 1;
    double dt = 0.01;

    TimeGrid() = default;
    TimeGrid(int T, double dt_) : steps_T(T), dt(dt_) { validate(); }

    void validate() const {
        if (steps_T < 1) throw DomainError("TimeGrid: T >= 1 required");
        if (!(dt > 0.0)) throw DomainError("TimeGrid: dt > 0 required");
    }
    double time(int k) const { return k * dt; }
    double horizon() const { return (steps_T - 1) * dt; }
};

// ---------------------------------------------------------------------------
// TwoTime: dense two-time tensor X_{mu nu}(t,s) stored as a (P*T) x (P*T)
// matrix with flat index (mu*T + t). Layout (mu, t, nu, s).
// ---------------------------------------------------------------------------
class TwoTime {
public:
    TwoTime() : P_(0), T_(0) {}
    TwoTime(int P, int T) : P_(P), T_(T), m_(Mat::Zero(P * T, P * T)) {}

    // Constant-in-time tensor from a static P x P kernel.
    static TwoTime tiled(const Mat& k, int T) {
        TwoTime out(static_cast<int>(k.rows()), T);
        for (int mu = 0; mu < out.P_; ++mu)
            for (int nu = 0; nu < out.P_; ++nu)
                out.m_.block(mu * T, nu * T, T, T).setConstant(k(mu, nu));
        return out;
    }
    static TwoTime ones(int P, int T) { return tiled(Mat::Ones(P, P), T); }

    int P() const { return P_; }
    int T() const { return T_; }
    int n() const { return P_ * T_; }

    double& operator()(int mu, int t, int nu, int s) { return m_(mu * T_ + t, nu * T_ + s); }
    double operator()(int mu, int t, int nu, int s) const { return m_(mu * T_ + t, nu * T_ + s); }

    Mat& mat() { return m_; }
    const Mat& mat() const { return m_; }

    // P x P slice at times (t, s).
    Mat slice(int t, int s) const {
        Mat out(P_, P_);
        for (int mu = 0; mu < P_; ++mu)
            for (int nu = 0; nu < P_; ++nu) out(mu, nu) = (*this)(mu, t, nu, s);
        return out;
    }
    Mat equal_time(int t) const { return slice(t, t); }

    void check_same_grid(const TwoTime& other, const char* what) const {
        if (P_ != other.P_ || T_ != other.T_)
            throw ShapeError(std::string("TwoTime grid mismatch in ") + what);
    }

    // Zero all entries with s >= t (strict causality).
    void enforce_causality() {
        for (int mu = 0; mu < P_; ++mu)
            for (int t = 0; t < T_; ++t)
                for (int nu = 0; nu < P_; ++nu)
                    for (int s = t; s < T_; ++s) (*this)(mu, t, nu, s) = 0.0;
    }

    bool is_causal(double tol = 0.0) const {
        for (int mu = 0; mu < P_; ++mu)
            for (int t = 0; t < T_; ++t)
                for (int nu = 0; nu < P_; ++nu)
                    for (int s = t; s < T_; ++s)
                        if (std::abs((*this)(mu, t, nu, s)) > tol) return false;
        return true;
    }

private:
    int P_, T_;
    Mat m_;
};

// ---------------------------------------------------------------------------
// KernelSet: per-layer two-time kernels. Index convention:
//   phi[l], l = 0..L      (phi[0] is the fixed boundary K^x, time-constant)
//   g[l], gtilde[l], gtildetilde[l], l = 1..L+1 (index L+1 is the all-ones
//   boundary; stored at vector position l-1).
// ---------------------------------------------------------------------------
struct KernelSet {
    int L = 0, P = 0, T = 0;
    std::vector<TwoTime> phi;           // size L+1, phi[l]
    std::vector<TwoTime> g;             // size L+1, g[l-1] holds G^l
    std::vector<TwoTime> gtilde;        // same indexing as g
    std::vector<TwoTime> gtildetilde;   // same indexing as g

    KernelSet() = default;
    KernelSet(int L_, int P_, int T_, const Mat& input_kernel)
        : L(L_), P(P_), T(T_) {
        phi.assign(L + 1, TwoTime(P, T));
        phi[0] = TwoTime::tiled(input_kernel, T);
        g.assign(L + 1, TwoTime(P, T));
        gtilde.assign(L + 1, TwoTime(P, T));
        gtildetilde.assign(L + 1, TwoTime(P, T));
        g[L] = TwoTime::ones(P, T);            // G^{L+1}
        gtilde[L] = TwoTime::ones(P, T);       // Gtilde^{L+1}
        gtildetilde[L] = TwoTime::ones(P, T);  // Gtildetilde^{L+1}
    }

    TwoTime& G(int l) { return g.at(l - 1); }
    const TwoTime& G(int l) const { return g.at(l - 1); }
    TwoTime& Gt(int l) { return gtilde.at(l - 1); }
    const TwoTime& Gt(int l) const { return gtilde.at(l - 1); }
    TwoTime& Gtt(int l) { return gtildetilde.at(l - 1); }
    const TwoTime& Gtt(int l) const { return gtildetilde.at(l - 1); }
    TwoTime& Phi(int l) { return phi.at(l); }
    const TwoTime& Phi(int l) const { return phi.at(l); }
};

// ---------------------------------------------------------------------------
// ResponseSet: causal response functions A,B,C,D per layer (1..L). Entries
// with s >= t are identically zero. A[l]/C[l] act at layer l; B[l]/D[l]
// describe layer l+1 gradient fields, so only l = 1..L-1 are ever nonzero.
// ---------------------------------------------------------------------------
struct ResponseSet {
    int L = 0, P = 0, T = 0;
    std::vector<TwoTime> A, B, C, D;  // size L, index l-1

    ResponseSet() = default;
    ResponseSet(int L_, int P_, int T_) : L(L_), P(P_), T(T_) {
        A.assign(L, TwoTime(P, T));
        B.assign(L, TwoTime(P, T));
        C.assign(L, TwoTime(P, T));
        D.assign(L, TwoTime(P, T));
    }

    bool all_causal(double tol = 0.0) const {
        for (int l = 0; l < L; ++l)
            if (!A[l].is_causal(tol) || !B[l].is_causal(tol) || !C[l].is_causal(tol) ||
                !D[l].is_causal(tol))
                return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// DmftState: converged kernels + responses + prediction dynamics.
// ---------------------------------------------------------------------------
struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double final_residual = 0.0;
    bool rank_deficiency_warning = false;
    std::vector<double> residual_history;
    std::vector<double> loss_history;  // loss at final grid time, per iteration
};

struct DmftState {
    KernelSet kernels;
    ResponseSet responses;
    Mat f;      // P x T predictions
    Mat Delta;  // P x T errors, Delta = y - f
    TwoTime entk;
    ConvergenceReport report;
};

}  // namespace entk
