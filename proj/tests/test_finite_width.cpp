#include "entk/finite_width.hpp"
#include "entk/lazy.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace entk;
using Catch::Approx;

namespace {

NetworkConfig cfg(int L, int N, double g0, Activation act, std::uint64_t seed) {
    NetworkConfig c;
    c.depth_L = L;
    c.width_N = N;
    c.gamma0 = g0;
    c.activation = act;
    c.seed = seed;
    return c;
}

// Test-side oracle: forward pass restarted from a perturbed preactivation at
// layer l (1-based), reusing only the stored weights.
double forward_from_layer(const Params& p, const Dataset& ds, int layer, const Mat& h_layer,
                          int mu) {
    const int L = p.config.depth_L, N = p.config.width_N;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    Vec h = h_layer.col(mu);
    Vec feat(N);
    for (int l = layer; l <= L; ++l) {
        for (int i = 0; i < N; ++i) feat(i) = phi(p.config.activation, h(i));
        if (l < L) h = p.W[l - 1] * feat * inv_sqrt_n;
    }
    return p.wL.dot(feat) / (p.config.gamma0 * N);
}

}  // namespace

TEST_CASE("init_network determinism and feedback structure") {
    const Dataset ds = make_dataset({4, 12, 1, true, false});

    SECTION("same seed gives identical parameters") {
        const Params a = init_network(cfg(2, 64, 1.0, Activation::Tanh, 7), RuleSpec::gd(), 12);
        const Params b = init_network(cfg(2, 64, 1.0, Activation::Tanh, 7), RuleSpec::gd(), 12);
        REQUIRE(a.W0 == b.W0);
        REQUIRE(a.W[0] == b.W[0]);
        REQUIRE(a.wL == b.wL);
    }
    SECTION("rho = 1 feedback equals the initial forward weights exactly") {
        const Params p =
            init_network(cfg(3, 32, 1.0, Activation::Linear, 3), RuleSpec::rho_fa(1.0), 12);
        REQUIRE(p.fa_W[0] == p.W[0]);
        REQUIRE(p.fa_W[1] == p.W[1]);
        REQUIRE(p.fa_w == p.wL);
    }
    SECTION("rho = 0 feedback is statistically independent of W(0)") {
        const int N = 200;
        const Params p =
            init_network(cfg(2, N, 1.0, Activation::Linear, 5), RuleSpec::rho_fa(0.0), 12);
        // entrywise correlation over the N^2 entries: |corr| < 4/N
        const double corr = (p.fa_W[0].array() * p.W[0].array()).sum() /
                            (p.fa_W[0].norm() * p.W[0].norm());
        REQUIRE(std::abs(corr) < 4.0 / N);
    }
    SECTION("gaussian init moments") {
        const Params p = init_network(cfg(1, 400, 1.0, Activation::Linear, 9), RuleSpec::gd(), 50);
        REQUIRE(p.W0.array().square().mean() == Approx(1.0).epsilon(0.05));
        REQUIRE(std::abs(p.W0.mean()) < 0.02);
    }
}

TEST_CASE("forward pass") {
    SECTION("linear single layer variance approaches the input kernel diagonal") {
        const Dataset ds = make_dataset({3, 10, 2, false, false});
        const Params p =
            init_network(cfg(1, 100000, 1.0, Activation::Linear, 11), RuleSpec::gd(), 10);
        const ForwardState fs = forward(p, ds);
        for (int mu = 0; mu < 3; ++mu) {
            const double var = fs.h[0].col(mu).squaredNorm() / p.config.width_N;
            REQUIRE(var == Approx(ds.input_kernel(mu, mu)).epsilon(0.02));
        }
    }
    SECTION("zero input propagates to zero output") {
        Mat X = Mat::Zero(2, 6);
        X(0, 0) = 1e-300;  // avoid the degenerate all-zero row norm
        Vec y = Vec::Ones(2);
        const Dataset ds(X, y);
        const Params p = init_network(cfg(2, 32, 1.0, Activation::Tanh, 1), RuleSpec::gd(), 6);
        const ForwardState fs = forward(p, ds);
        REQUIRE(fs.h[0].col(1).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(fs.f_raw(1) == 0.0);
    }
    SECTION("gln with forced-open gates is a rescaled linear net") {
        const Dataset ds = make_dataset({1, 8, 3, true, false});
        Params p = init_network(cfg(2, 40, 1.0, Activation::ReluNormalized, 2),
                                RuleSpec::gln(), 8);
        // aim every gate row at the input so m = K |x|^2 / sqrt(D) >> 0
        for (auto& M : p.gln_M)
            for (int i = 0; i < 40; ++i) M.row(i) = 100.0 * ds.inputs.row(0);
        const ForwardState fs = forward(p, ds);
        Params plin = p;
        plin.rule = RuleSpec::gd();
        plin.config.activation = Activation::Linear;
        const ForwardState fl = forward(plin, ds);
        // gates are sqrt(2) Theta = sqrt(2): each gated layer rescales by sqrt(2)
        REQUIRE(fs.h[1].isApprox(std::sqrt(2.0) * fl.h[1], 1e-12));
        REQUIRE(fs.f_raw(0) == Approx(2.0 * fl.f_raw(0)).margin(1e-12));
    }
    SECTION("dimension mismatch is a shape error") {
        const Dataset ds = make_dataset({2, 7, 0, true, false});
        const Params p = init_network(cfg(1, 16, 1.0, Activation::Linear, 0), RuleSpec::gd(), 6);
        REQUIRE_THROWS_AS(forward(p, ds), ShapeError);
    }
}

TEST_CASE("backward_true") {
    const Dataset ds = make_dataset({3, 8, 4, true, false});

    SECTION("single hidden linear layer: g^1 equals the readout for every sample") {
        const Params p = init_network(cfg(1, 24, 1.0, Activation::Linear, 6), RuleSpec::gd(), 8);
        const ForwardState fs = forward(p, ds);
        const auto g = backward_true(p, fs);
        for (int mu = 0; mu < 3; ++mu) REQUIRE(g[0].col(mu) == p.wL);
    }
    SECTION("finite differences confirm the backward pass at 1e-6 relative") {
        const Params p = init_network(cfg(2, 48, 1.3, Activation::Tanh, 8), RuleSpec::gd(), 8);
        const ForwardState fs = forward(p, ds);
        const auto g = backward_true(p, fs);
        const double eps = 1e-4;
        const double g0n = p.config.gamma0 * p.config.width_N;
        for (int layer : {1, 2}) {
            for (int i : {0, 7, 23}) {
                const int mu = i % 3;
                Mat hp = fs.h[layer - 1], hm = fs.h[layer - 1];
                hp(i, mu) += eps;
                hm(i, mu) -= eps;
                const double fd = g0n *
                                  (forward_from_layer(p, ds, layer, hp, mu) -
                                   forward_from_layer(p, ds, layer, hm, mu)) /
                                  (2.0 * eps);
                REQUIRE(fd == Approx(g[layer - 1](i, mu)).epsilon(1e-6));
            }
        }
    }
    SECTION("gradients do not depend on gamma0 at fixed weights") {
        Params a = init_network(cfg(2, 32, 0.5, Activation::Tanh, 5), RuleSpec::gd(), 8);
        Params b = a;
        b.config.gamma0 = 7.0;
        const ForwardState fa_ = forward(a, ds), fb = forward(b, ds);
        const auto ga = backward_true(a, fa_), gb = backward_true(b, fb);
        REQUIRE(ga[0] == gb[0]);
        REQUIRE(ga[1] == gb[1]);
    }
}

TEST_CASE("pseudo_gradients per rule") {
    const Dataset ds = make_dataset({4, 10, 5, true, false});

    SECTION("GD pseudo-gradient is the true gradient bitwise") {
        const Params p = init_network(cfg(2, 40, 1.0, Activation::Tanh, 2), RuleSpec::gd(), 10);
        const ForwardState fs = forward(p, ds);
        const Vec delta = ds.targets - fs.f_raw;
        const auto g = backward_true(p, fs);
        const auto gt = pseudo_gradients(p.rule, p, fs, delta);
        REQUIRE(g[0] == gt[0]);
        REQUIRE(g[1] == gt[1]);
    }
    SECTION("Hebb with zero error vanishes") {
        const Params p = init_network(cfg(2, 40, 1.0, Activation::Tanh, 2), RuleSpec::hebb(), 10);
        const ForwardState fs = forward(p, ds);
        const auto gt = pseudo_gradients(p.rule, p, fs, Vec::Zero(4));
        REQUIRE(gt[0].cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(gt[1].cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("rho-FA initial gradient/pseudo-gradient kernel matches rho^{L+1-l} G^l") {
        // ensemble MC oracle against the static recursion
        const int L = 2, N = 1000, seeds = 6;
        const double rho = 0.6;
        const LazyKernelStack lazy =
            lazy_kernel_stack(ds.input_kernel, L, Activation::ReluNormalized);
        for (int layer = 1; layer <= L; ++layer) {
            Mat acc = Mat::Zero(4, 4);
            for (int s = 0; s < seeds; ++s) {
                const Params p = init_network(cfg(L, N, 1.0, Activation::ReluNormalized, 100 + s),
                                              RuleSpec::rho_fa(rho), 10);
                const ForwardState fs = forward(p, ds);
                const auto g = backward_true(p, fs);
                const auto gt = pseudo_gradients(p.rule, p, fs, Vec::Zero(4));
                acc += g[layer - 1].transpose() * gt[layer - 1] / static_cast<double>(N);
            }
            acc /= seeds;
            const Mat expected = std::pow(rho, L + 1 - layer) * lazy.G(layer);
            REQUIRE((acc - expected).norm() / expected.norm() < 0.1);
        }
    }
    SECTION("node perturbation is rejected here") {
        const Params p = init_network(cfg(1, 16, 1.0, Activation::Linear, 1),
                                      RuleSpec::gd(), 10);
        const ForwardState fs = forward(p, ds);
        REQUIRE_THROWS_AS(pseudo_gradients(RuleSpec::node_perturb(4, 0.1), p, fs, Vec::Zero(4)),
                          DomainError);
    }
}

TEST_CASE("training dynamics") {
    SECTION("rich two-layer relu run fits the data with monotone loss") {
        const Dataset ds = make_dataset({10, 50, 12, true, false});
        const Params p =
            init_network(cfg(1, 2000, 2.0, Activation::ReluNormalized, 12), RuleSpec::gd(), 50);
        const TrainTrace tr = train(p, ds, TimeGrid(60, 0.05));
        for (std::size_t k = 1; k < tr.loss.size(); ++k) REQUIRE(tr.loss[k] < tr.loss[k - 1]);
        REQUIRE(tr.loss.back() < 1e-2 * tr.loss.front());
    }
    SECTION("lazy regime: eNTK drift below 5 gamma0") {
        const double g0 = 1e-3;
        const Dataset ds = make_dataset({6, 30, 3, true, false});
        const Params p =
            init_network(cfg(1, 4000, g0, Activation::ReluNormalized, 3), RuleSpec::gd(), 30);
        TrainConfig tc;
        tc.snapshot_steps = {0, 199};
        const TrainTrace tr = train(p, ds, TimeGrid(200, 0.01), tc);
        const Mat k0 = tr.snapshots.front().entk;
        const Mat k1 = tr.snapshots.back().entk;
        REQUIRE((k1 - k0).norm() / k0.norm() < 5.0 * g0);
    }
    SECTION("explicit Euler self-convergence is first order") {
        const Dataset ds = make_dataset({4, 16, 9, true, false});
        auto run_f = [&](int T, double dt) {
            const Params p =
                init_network(cfg(1, 400, 1.5, Activation::Tanh, 9), RuleSpec::gd(), 16);
            return train(p, ds, TimeGrid(T, dt)).f;
        };
        const Mat f1 = run_f(21, 0.1), f2 = run_f(41, 0.05), f4 = run_f(81, 0.025);
        // Richardson reference from the two finest runs at the common final time
        const Vec ref = 2.0 * f4.col(80) - f2.col(40);
        const double e1 = (f1.col(20) - ref).norm();
        const double e2 = (f2.col(40) - ref).norm();
        REQUIRE(e1 / e2 == Approx(2.0).epsilon(0.35));
    }
    SECTION("frozen quantities stay bitwise frozen") {
        const Dataset ds = make_dataset({4, 16, 2, true, false});
        const TimeGrid grid(30, 0.05);
        {
            const Params p = init_network(cfg(2, 80, 1.5, Activation::Tanh, 21),
                                          RuleSpec::rho_fa(0.4), 16);
            const Mat fb0 = p.fa_W[0];
            const Vec fw0 = p.fa_w;
            const TrainTrace tr = train(p, ds, grid);
            REQUIRE(tr.final_params.fa_W[0] == fb0);
            REQUIRE(tr.final_params.fa_w == fw0);
            REQUIRE((tr.final_params.W0 - p.W0).cwiseAbs().maxCoeff() > 0.0);
        }
        {
            const Params p =
                init_network(cfg(2, 80, 1.5, Activation::Tanh, 22), RuleSpec::dfa(), 16);
            const Vec z0 = p.dfa_z[0], z1 = p.dfa_z[1];
            const TrainTrace tr = train(p, ds, grid);
            REQUIRE(tr.final_params.dfa_z[0] == z0);
            REQUIRE(tr.final_params.dfa_z[1] == z1);
        }
        {
            const Params p = init_network(cfg(2, 80, 1.5, Activation::ReluNormalized, 23),
                                          RuleSpec::gln(), 16);
            const Mat m0 = p.gln_M[0];
            const TrainTrace tr = train(p, ds, grid);
            REQUIRE(tr.final_params.gln_M[0] == m0);
        }
    }
    SECTION("two-way eNTK consistency at N = 4000, dt = 1e-2") {
        const Dataset ds = make_dataset({6, 30, 7, true, false});
        auto check = [&](Activation act, const std::vector<int>& snaps) {
            const Params p = init_network(cfg(1, 4000, 2.0, act, 7), RuleSpec::gd(), 30);
            TrainConfig tc;
            tc.snapshot_steps = snaps;
            const TrainTrace tr = train(p, ds, TimeGrid(120, 0.01), tc);
            for (const auto& snap : tr.snapshots) {
                const int k = snap.step;
                const Vec delta = ds.targets - tr.f.col(k);
                const Vec lhs = snap.entk * delta;
                const Vec rhs = (tr.f.col(k + 1) - tr.f.col(k)) / 0.01;
                REQUIRE((lhs - rhs).norm() / rhs.norm() < 0.05);
            }
        };
        check(Activation::Tanh, {0, 40, 80});
        // relu unit flips make the late-time ratio noisier once Delta has
        // decayed; the O(dt) + O(1/sqrt(N)) bound is checked while training
        // is active
        check(Activation::ReluNormalized, {0, 20});
    }
    SECTION("GD gtilde kernel equals the gradient kernel exactly") {
        const Dataset ds = make_dataset({4, 16, 5, true, false});
        const Params p =
            init_network(cfg(2, 100, 1.0, Activation::Tanh, 5), RuleSpec::gd(), 16);
        TrainConfig tc;
        tc.snapshot_steps = {0, 10};
        const TrainTrace tr = train(p, ds, TimeGrid(11, 0.05), tc);
        for (const auto& snap : tr.snapshots) {
            REQUIRE(snap.gtilde[0] == snap.g[0]);
            REQUIRE(snap.gtilde[1] == snap.g[1]);
        }
    }
    SECTION("measured equal-time feature kernels are PSD") {
        const Dataset ds = make_dataset({5, 20, 6, true, false});
        const Params p = init_network(cfg(2, 200, 2.0, Activation::ReluNormalized, 6),
                                      RuleSpec::rho_fa(0.5), 20);
        TrainConfig tc;
        tc.snapshot_steps = {0, 20, 39};
        const TrainTrace tr = train(p, ds, TimeGrid(40, 0.05), tc);
        for (const auto& snap : tr.snapshots)
            for (int l = 1; l <= 2; ++l)
                REQUIRE(min_eigenvalue_sym(snap.phi[l]) > -1e-10);
    }
    SECTION("seed determinism, independent of thread count") {
        const Dataset ds = make_dataset({3, 10, 8, true, false});
        auto run_loss = [&] {
            const Params p =
                init_network(cfg(1, 100, 1.0, Activation::Tanh, 8), RuleSpec::dfa(), 10);
            return train(p, ds, TimeGrid(20, 0.05)).loss;
        };
        set_num_threads(1);
        const auto a = run_loss();
        set_num_threads(4);
        const auto b = run_loss();
        set_num_threads(0);
        REQUIRE(a == b);
    }
    SECTION("divergence guard aborts on oversized steps") {
        const Dataset ds = make_dataset({4, 16, 3, true, false});
        const Params p = init_network(cfg(1, 100, 2.0, Activation::ReluNormalized, 3),
                                      RuleSpec::gd(), 16);
        REQUIRE_THROWS_AS(train(p, ds, TimeGrid(400, 5.0)), SolverError);
    }
}

TEST_CASE("node perturbation") {
    const Dataset ds = make_dataset({3, 10, 4, true, false});

    SECTION("zero error gives a zero update") {
        Params p = init_network(cfg(1, 64, 1.0, Activation::Tanh, 4), RuleSpec::gd(), 10);
        const Params before = p;
        RngStream rng(5);
        const Vec zero = Vec::Zero(3);
        node_perturb_step(p, ds, 8, 0.1, 0.05, rng, &zero);
        REQUIRE(p.W0 == before.W0);
        REQUIRE(p.wL == before.wL);
    }
    SECTION("estimator is unbiased over 1e4 repetitions") {
        RngStream rng(77);
        const Vec g = rng.normal_vec(64);
        const int reps = 10000, K = 8;
        Vec mean = Vec::Zero(64), m2 = Vec::Zero(64);
        for (int r = 0; r < reps; ++r) {
            RngStream sub = rng.child(r);
            const Vec ghat = node_perturb_estimate(g, K, 0.3, sub);
            mean += ghat;
            m2 += ghat.cwiseProduct(ghat);
        }
        mean /= reps;
        const Vec var = m2 / reps - mean.cwiseProduct(mean);
        const Vec se = (var / reps).cwiseSqrt();
        // aggregate 3-sigma check: |mean - g|^2 against the summed variances
        REQUIRE((mean - g).squaredNorm() < 9.0 * se.squaredNorm());
    }
    SECTION("snr grows like sqrt(K/N)") {
        const int N = 256;
        RngStream rng(6);
        const Vec g = rng.normal_vec(N);
        std::vector<double> lx, ly;
        for (int K : {16, 64, 256}) {
            double err2 = 0.0;
            const int reps = 60;
            for (int r = 0; r < reps; ++r) {
                RngStream sub = rng.child(K * 1000 + r);
                err2 += (node_perturb_estimate(g, K, 0.2, sub) - g).squaredNorm();
            }
            lx.push_back(std::log(static_cast<double>(K) / N));
            ly.push_back(std::log(g.norm() / std::sqrt(err2 / reps)));
        }
        REQUIRE(oracle::ols_slope(lx, ly) == Approx(0.5).margin(0.1));
    }
}
