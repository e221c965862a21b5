#include "entk/lazy.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace entk;
using Catch::Approx;

namespace {
const double kPi = 3.14159265358979323846;

double relu(double h) { return phi(Activation::ReluNormalized, h); }
double relu_dot(double h) { return phi_dot(Activation::ReluNormalized, h); }
double tanh_f(double h) { return std::tanh(h); }
double tanh_dot(double h) {
    const double t = std::tanh(h);
    return 1.0 - t * t;
}

Mat psd_random(int P, RngStream& rng) {
    Mat a = rng.normal_mat(P, P + 2);
    return a * a.transpose() / (P + 2);
}
}  // namespace

TEST_CASE("relu nngp layer closed form") {
    SECTION("theta = 0: norm preservation") {
        Mat k = Mat::Ones(2, 2);
        const NngpLayer out = nngp_layer(k, Activation::ReluNormalized);
        REQUIRE(out.phi(0, 1) == Approx(1.0));
        REQUIRE(out.phidot(0, 1) == Approx(1.0));
    }
    SECTION("theta = pi/2: Phi = 1/pi, Phidot = 1/2, against the MC oracle") {
        Mat k = Mat::Identity(2, 2);
        const NngpLayer out = nngp_layer(k, Activation::ReluNormalized);
        REQUIRE(out.phi(0, 1) == Approx(1.0 / kPi));
        REQUIRE(out.phidot(0, 1) == Approx(0.5));
        // 1e7-draw Gaussian-pair oracle, 3-digit agreement
        const double mc = oracle::mc_pair_moment(relu, relu, 1.0, 1.0, 0.0, 10000000, 101);
        REQUIRE(std::abs(mc - out.phi(0, 1)) < 5e-4);
        const double mcd =
            oracle::mc_pair_moment(relu_dot, relu_dot, 1.0, 1.0, 0.0, 10000000, 102);
        REQUIRE(std::abs(mcd - out.phidot(0, 1)) < 5e-4);
    }
    SECTION("general covariance against MC") {
        Mat k(2, 2);
        k << 1.3, -0.4, -0.4, 0.8;
        const NngpLayer out = nngp_layer(k, Activation::ReluNormalized);
        const double c = -0.4 / std::sqrt(1.3 * 0.8);
        const double mc = oracle::mc_pair_moment(relu, relu, 1.3, 0.8, c, 4000000, 103);
        REQUIRE(out.phi(0, 1) == Approx(mc).margin(4e-3));
    }
    SECTION("linear passes through") {
        RngStream rng(4);
        Mat k = psd_random(3, rng);
        const NngpLayer out = nngp_layer(k, Activation::Linear);
        REQUIRE(out.phi == k);
        REQUIRE(out.phidot == Mat::Ones(3, 3));
    }
    SECTION("non-PSD input is a domain error") {
        Mat k(2, 2);
        k << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
        REQUIRE_THROWS_AS(nngp_layer(k, Activation::ReluNormalized), DomainError);
    }
}

TEST_CASE("tanh layer quadrature matches MC") {
    Mat k(2, 2);
    k << 1.0, 0.6, 0.6, 0.9;
    const NngpLayer out = nngp_layer(k, Activation::Tanh);
    const double c = 0.6 / std::sqrt(0.9);
    const double mc = oracle::mc_pair_moment(tanh_f, tanh_f, 1.0, 0.9, c, 4000000, 104);
    REQUIRE(out.phi(0, 1) == Approx(mc).margin(3e-3));
    const double mcd = oracle::mc_pair_moment(tanh_dot, tanh_dot, 1.0, 0.9, c, 4000000, 105);
    REQUIRE(out.phidot(0, 1) == Approx(mcd).margin(3e-3));
}

TEST_CASE("quadrature path agrees with the closed forms within 1e-6") {
    RngStream rng(9);
    for (int trial = 0; trial < 3; ++trial) {
        Mat k = psd_random(3, rng);
        const NngpLayer closed = nngp_layer(k, Activation::ReluNormalized);
        const NngpLayer tanh_gh = nngp_layer(k, Activation::Tanh);
        for (int mu = 0; mu < 3; ++mu)
            for (int nu = 0; nu < 3; ++nu) {
                if (mu == nu) continue;
                const double qm = k(mu, mu), qn = k(nu, nu);
                const double c = k(mu, nu) / std::sqrt(qm * qn);
                // independent panel quadrature vs arccos closed form
                REQUIRE(closed.phi(mu, nu) ==
                        Approx(oracle::quad_pair_moment(relu, relu, qm, qn, c)).margin(1e-6));
                REQUIRE(closed.phidot(mu, nu) ==
                        Approx(oracle::quad_pair_moment(relu_dot, relu_dot, qm, qn, c))
                            .margin(1e-6));
                // and vs the library's Gauss-Hermite path for tanh (degree 40
                // resolves the tanh integrand to ~1e-5)
                REQUIRE(tanh_gh.phi(mu, nu) ==
                        Approx(oracle::quad_pair_moment(tanh_f, tanh_f, qm, qn, c))
                            .margin(1e-5));
            }
    }
}

TEST_CASE("gradient_layer") {
    SECTION("ones with linear derivative kernel stay ones") {
        const Mat g = gradient_layer(Mat::Ones(3, 3), Mat::Ones(3, 3));
        REQUIRE(g == Mat::Ones(3, 3));
    }
    SECTION("two relu layers on an orthogonal pair give 1/4 off-diagonal") {
        const LazyKernelStack st =
            lazy_kernel_stack(Mat::Identity(2, 2), 2, Activation::ReluNormalized);
        // G^1 = Phidot^1 .* Phidot^2: first factor is 1/2 at theta = pi/2;
        // the second is evaluated at the layer-1 correlation 1/pi.
        const double c1 = 1.0 / kPi;
        const double expected = 0.5 * (kPi - std::acos(c1)) / kPi;
        REQUIRE(st.G(1)(0, 1) == Approx(expected));
        // MC oracle for the composed moment
        const double mc1 = oracle::mc_pair_moment(relu_dot, relu_dot, 1.0, 1.0, c1, 4000000, 7);
        REQUIRE(st.G(1)(0, 1) == Approx(0.5 * mc1).margin(2e-3));
    }
    SECTION("zero upstream kernel gives zero") {
        REQUIRE(gradient_layer(Mat::Zero(2, 2), Mat::Ones(2, 2)) == Mat::Zero(2, 2));
    }
    SECTION("shape mismatch throws") {
        REQUIRE_THROWS_AS(gradient_layer(Mat::Ones(2, 2), Mat::Ones(3, 3)), ShapeError);
    }
}

TEST_CASE("lazy eNTK identities") {
    const Dataset ds = make_dataset({5, 20, 2, true, false});
    const LazyKernelStack st = lazy_kernel_stack(ds.input_kernel, 3, Activation::ReluNormalized);

    SECTION("rho = 0 FA equals the last-layer feature kernel") {
        REQUIRE(lazy_entk(RuleSpec::rho_fa(0.0), st) == st.Phi(3));
    }
    SECTION("rho = 1 FA equals the GD kernel") {
        REQUIRE(lazy_entk(RuleSpec::rho_fa(1.0), st) == lazy_entk(RuleSpec::gd(), st));
    }
    SECTION("DFA and Hebb are identical") {
        REQUIRE(lazy_entk(RuleSpec::dfa(), st) == lazy_entk(RuleSpec::hebb(), st));
    }
    SECTION("GLN at L = 2 with orthogonal inputs vanishes off-diagonal") {
        const LazyKernelStack st2 =
            lazy_kernel_stack(Mat::Identity(2, 2), 2, Activation::ReluNormalized);
        const Mat k = lazy_entk(RuleSpec::gln(), st2);
        REQUIRE(k(0, 1) == Approx(0.0).margin(1e-14));
        REQUIRE(k(0, 0) == Approx(1.0));  // unit gate kernel diagonal times K^x
    }
    SECTION("node perturbation has no lazy kernel") {
        REQUIRE_THROWS_AS(lazy_entk(RuleSpec::node_perturb(4, 0.1), st), DomainError);
    }
    SECTION("all lazy kernels are symmetric PSD") {
        for (const RuleSpec& rule :
             {RuleSpec::gd(), RuleSpec::rho_fa(0.3), RuleSpec::dfa(), RuleSpec::gln(),
              RuleSpec::hebb()}) {
            const Mat k = lazy_entk(rule, st);
            REQUIRE((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            REQUIRE(min_eigenvalue_sym(k) > -1e-8);
        }
    }
    SECTION("rho-FA kernel is elementwise nondecreasing in rho") {
        Mat prev = lazy_entk(RuleSpec::rho_fa(0.0), st);
        for (double rho : {0.25, 0.5, 0.75, 1.0}) {
            const Mat cur = lazy_entk(RuleSpec::rho_fa(rho), st);
            REQUIRE(((cur - prev).array() >= -1e-12).all());
            prev = cur;
        }
    }
}

TEST_CASE("lazy prediction dynamics") {
    const TimeGrid grid(50, 0.1);
    SECTION("identity kernel: f = (1 - e^{-t}) y") {
        Vec y(3);
        y << 1.0, -2.0, 0.5;
        const LazyPrediction pred = lazy_predict(Mat::Identity(3, 3), y, grid);
        REQUIRE_FALSE(pred.used_euler_fallback);
        for (int k = 0; k < grid.steps_T; ++k)
            for (int mu = 0; mu < 3; ++mu)
                REQUIRE(pred.f(mu, k) ==
                        Approx((1.0 - std::exp(-grid.time(k))) * y(mu)).margin(1e-12));
    }
    SECTION("zero kernel: f stays zero") {
        Vec y(2);
        y << 1.0, 1.0;
        const LazyPrediction pred = lazy_predict(Mat::Zero(2, 2), y, grid);
        REQUIRE(pred.f.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("full-rank PSD kernel: errors strictly decrease, final below 1e-6") {
        RngStream rng(6);
        Mat a = rng.normal_mat(4, 8);
        Mat K = a * a.transpose() / 8.0;
        Vec y = rng.normal_vec(4);
        const double lam_min = min_eigenvalue_sym(K);
        REQUIRE(lam_min > 0.0);
        const double horizon = 20.0 / lam_min;
        const TimeGrid g2(200, horizon / 199.0);
        const LazyPrediction pred = lazy_predict(K, y, g2);
        double prev = (y - pred.f.col(0)).norm();
        for (int k = 1; k < g2.steps_T; ++k) {
            const double cur = (y - pred.f.col(k)).norm();
            REQUIRE(cur < prev);
            prev = cur;
        }
        REQUIRE(prev < 1e-6);
    }
}

TEST_CASE("angle sweep") {
    std::vector<double> thetas{0.0, kPi / 4, kPi / 2, 3 * kPi / 4, kPi};

    SECTION("theta = 0 equals the diagonal for every rule") {
        for (const RuleSpec& rule :
             {RuleSpec::gd(), RuleSpec::rho_fa(0.5), RuleSpec::dfa(), RuleSpec::gln()}) {
            const auto rows = angle_sweep(rule, 2, Activation::ReluNormalized, thetas);
            REQUIRE(rows[0].k_normalized == Approx(1.0));
        }
    }
    SECTION("rho = 0 FA equals the iterated feature kernel curve") {
        const auto rows = angle_sweep(RuleSpec::rho_fa(0.0), 3, Activation::ReluNormalized,
                                      thetas);
        for (std::size_t i = 0; i < thetas.size(); ++i) {
            Mat kx(2, 2);
            kx << 1.0, std::cos(thetas[i]), std::cos(thetas[i]), 1.0;
            const LazyKernelStack st = lazy_kernel_stack(kx, 3, Activation::ReluNormalized);
            REQUIRE(rows[i].k_raw == Approx(st.Phi(3)(0, 1)).margin(1e-14));
        }
    }
    SECTION("frozen values at pi/2 for L = 2 relu") {
        // hand-evaluated recursion: Phi^1 = 1/pi, Phi^2 = (sin t1 + (pi-t1)/pi)/pi
        const double c1 = 1.0 / kPi;
        const double t1 = std::acos(c1);
        const double phi2 = (std::sin(t1) + (kPi - t1) * c1) / kPi;
        const double pd2 = (kPi - t1) / kPi;
        const auto gd = angle_sweep(RuleSpec::gd(), 2, Activation::ReluNormalized,
                                    {kPi / 2});
        // K = G^1 K^x + G^2 Phi^1 + Phi^2 with K^x off-diagonal 0
        REQUIRE(gd[0].k_raw == Approx(pd2 * 0.5 * 0.0 + pd2 * c1 + phi2).margin(1e-12));
        const auto fa = angle_sweep(RuleSpec::rho_fa(0.5), 2, Activation::ReluNormalized,
                                    {kPi / 2});
        REQUIRE(fa[0].k_raw == Approx(0.5 * pd2 * c1 + phi2).margin(1e-12));
    }
}
