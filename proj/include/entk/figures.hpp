#pragma once

// Figure-reproduction recipes: pre-wired desk-scale configs emitting
// plot-ready CSVs plus a README describing the expected qualitative features.
// Included at the end of harness.hpp.

namespace entk {
namespace rundetail {

inline std::vector<double> theta_grid_default() {
    std::vector<double> th;
    const double pi = 3.14159265358979323846;
    for (int i = 0; i <= 32; ++i) th.push_back(pi * i / 32.0);
    return th;
}

inline void fig_angle_csv(const std::filesystem::path& dir, ResultManifest& m,
                          const std::string& name, const RuleSpec& rule, int L, Activation act) {
    const auto rows = angle_sweep(rule, L, act, theta_grid_default());
    CsvWriter csv(dir / name, {"theta", "k_raw", "k_normalized"});
    for (const auto& r : rows) csv.row({r.theta, r.k_raw, r.k_normalized});
    register_output(m, dir, name);
}

// Measured equal-time eNTK deviation of a width-N network at initialization
// from the infinite-width lazy kernel, averaged over seeds.
inline double lazy_entk_sq_error(int N, int L, Activation act, const Dataset& ds,
                                 const Mat& k_inf, int seeds, std::uint64_t seed0) {
    std::vector<double> errs(seeds);
    parallel_for(0, seeds, [&](std::int64_t s) {
        NetworkConfig cfg;
        cfg.depth_L = L;
        cfg.width_N = N;
        cfg.gamma0 = 1.0;
        cfg.activation = act;
        cfg.seed = seed0 + static_cast<std::uint64_t>(s);
        const Params p = init_network(cfg, RuleSpec::gd(), static_cast<int>(ds.D()));
        const ForwardState fs = forward(p, ds);
        const std::vector<Mat> g = backward_true(p, fs);
        const Vec zero = Vec::Zero(ds.P());
        const std::vector<Mat> gt = pseudo_gradients(RuleSpec::gd(), p, fs, zero);
        std::vector<Mat> phis(L + 1), gts(L + 1);
        phis[0] = ds.input_kernel;
        const double inv_n = 1.0 / N;
        for (int l = 1; l <= L; ++l) {
            phis[l] = fs.feat[l - 1].transpose() * fs.feat[l - 1] * inv_n;
            gts[l - 1] = g[l - 1].transpose() * gt[l - 1] * inv_n;
        }
        gts[L] = Mat::Ones(ds.P(), ds.P());
        errs[s] = (entk_contract_static(phis, gts) - k_inf).squaredNorm() / k_inf.squaredNorm();
    });
    double acc = 0.0;
    for (double e : errs) acc += e;
    return acc / seeds;
}

inline void fig1(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    DatasetSpec dspec{10, 50, base.dataset.seed, true, false};
    const Dataset ds = make_dataset(dspec);
    NetworkConfig net;
    net.depth_L = 1;
    net.width_N = 2000;
    net.gamma0 = 2.0;
    net.activation = Activation::ReluNormalized;
    net.seed = base.network.seed;
    const TimeGrid grid(60, 0.05);
    SolverConfig scfg;
    scfg.samples_S = 1200;
    scfg.damping_beta = 0.5;
    scfg.max_iters = 18;
    scfg.tol = 2e-2;
    scfg.seed = base.solver.seed;

    const std::vector<std::pair<std::string, RuleSpec>> rules{
        {"gd", RuleSpec::gd()},
        {"fa0", RuleSpec::rho_fa(0.0)},
        {"gln", RuleSpec::gln()},
        {"hebb", RuleSpec::hebb()}};
    for (const auto& [name, rule] : rules) {
        const Params p = init_network(net, rule, 50);
        TrainConfig tc;
        tc.snapshot_steps = {grid.steps_T - 1};
        const TrainTrace tr = train(p, ds, grid, tc);
        const DmftState st = solve(ds, net, rule, grid, scfg);
        CsvWriter csv(dir / ("loss_" + name + ".csv"),
                      {"time", "loss_network", "loss_dmft", "alignment_network"});
        for (int k = 0; k < grid.steps_T; ++k)
            csv.row({grid.time(k), tr.loss[k], 0.5 * st.Delta.col(k).squaredNorm(),
                     tr.alignment[k]});
        register_output(m, dir, "loss_" + name + ".csv");
        Json j;
        j["phi_final_network"] = matrix_to_json(tr.snapshots.back().phi[1]);
        j["phi_final_dmft"] = matrix_to_json(st.kernels.Phi(1).equal_time(grid.steps_T - 1));
        j["gtilde_final_network"] = matrix_to_json(tr.snapshots.back().gtilde[0]);
        j["gtilde_final_dmft"] = matrix_to_json(st.kernels.Gt(1).equal_time(grid.steps_T - 1));
        Json pre = Json::array();
        for (Eigen::Index i = 0; i < tr.snapshots.back().preact_sample.size(); ++i)
            pre.push_back(tr.snapshots.back().preact_sample(i));
        j["preactivation_sample"] = std::move(pre);
        write_json(dir / ("kernels_" + name + ".json"), j);
        register_output(m, dir, "kernels_" + name + ".json");
    }
    write_text(dir / "README.txt",
               "Two-layer relu network, four learning rules, rich regime (gamma0 = 2).\n"
               "Expected: training loss decays for every rule and the network curve tracks\n"
               "the mean-field curve; kernel-task alignment grows during training; final\n"
               "Phi and Gtilde kernels from the width-2000 network match the mean-field\n"
               "kernels entrywise to ~10%.\n");
    register_output(m, dir, "README.txt");
}

inline void fig2(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        std::ostringstream name;
        name << "fa_L2_rho" << rho << ".csv";
        fig_angle_csv(dir, m, name.str(), RuleSpec::rho_fa(rho), 2,
                      Activation::ReluNormalized);
    }
    for (int L : {1, 2, 3, 4}) {
        fig_angle_csv(dir, m, "fa_rho0.5_L" + std::to_string(L) + ".csv",
                      RuleSpec::rho_fa(0.5), L, Activation::ReluNormalized);
        fig_angle_csv(dir, m, "gln_L" + std::to_string(L) + ".csv", RuleSpec::gln(), L,
                      Activation::ReluNormalized);
    }
    // width convergence of the initial eNTK (squared relative error vs N)
    {
        const Dataset ds = make_dataset({6, 30, base.dataset.seed, true, false});
        const LazyKernelStack st =
            lazy_kernel_stack(ds.input_kernel, 2, Activation::ReluNormalized);
        const Mat k_inf = lazy_entk(RuleSpec::gd(), st);
        std::vector<double> widths{256, 512, 1024, 2048, 4096}, errs;
        for (double n : widths)
            errs.push_back(lazy_entk_sq_error(static_cast<int>(n), 2,
                                              Activation::ReluNormalized, ds, k_inf, 12,
                                              base.network.seed));
        const ScalingFit fit = width_scaling_fit(widths, errs);
        CsvWriter csv(dir / "width_convergence.csv", {"N", "sq_rel_error"});
        for (std::size_t i = 0; i < widths.size(); ++i) csv.row({widths[i], errs[i]});
        register_output(m, dir, "width_convergence.csv");
        write_text(dir / "width_convergence_fit.txt",
                   "log-log slope = " + format_double(fit.slope) + " +- " +
                       format_double(fit.stderr_slope) + " (expected -1)\n");
        register_output(m, dir, "width_convergence_fit.txt");
    }
    write_text(dir / "README.txt",
               "Lazy-limit kernels versus input angle for relu networks.\n"
               "Expected: rho-FA kernels interpolate between the last-layer feature\n"
               "kernel (rho = 0) and the full NTK (rho = 1); the GLN kernel vanishes at\n"
               "theta = pi/2 where the input kernel does; the width sweep shows the\n"
               "squared eNTK error decaying as 1/N.\n");
    register_output(m, dir, "README.txt");
}

inline void fig3(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    DatasetSpec dspec{6, 20, base.dataset.seed, true, false};
    const Dataset ds = make_dataset(dspec);
    NetworkConfig net;
    net.depth_L = 3;
    // desk scale by default; pass network.width_N = 4000 for the extended run
    net.width_N = base.network.width_N;
    net.activation = Activation::Tanh;
    net.seed = base.network.seed;
    const TimeGrid grid(150, 0.04);
    for (double g0 : {0.5, 1.0, 2.0}) {
        net.gamma0 = g0;
        const Params p = init_network(net, RuleSpec::dfa(), 20);
        TrainConfig tc;
        tc.snapshot_steps = {grid.steps_T - 1};
        const TrainTrace tr = train(p, ds, grid, tc);
        std::ostringstream name;
        name << "dfa_gamma" << g0 << ".csv";
        // per-step alignment column is the eNTK-task alignment
        CsvWriter csv(dir / name.str(), {"time", "loss", "entk_alignment", "corr_g_gtilde"});
        for (std::size_t k = 0; k < tr.loss.size(); ++k)
            csv.row({tr.time[k], tr.loss[k], tr.alignment[k], tr.corr[k]});
        register_output(m, dir, name.str());
        const Mat phiL = tr.snapshots.back().phi[net.depth_L];
        write_json(dir / ("phiL_final_gamma" + format_double(g0) + ".json"),
                   matrix_to_json(phiL));
        register_output(m, dir, "phiL_final_gamma" + format_double(g0) + ".json");
    }
    write_text(dir / "README.txt",
               "Depth-4 tanh network trained with DFA at several richness values.\n"
               "Expected: larger gamma0 trains faster, reaches higher kernel-task\n"
               "alignment, and drives the gradient/pseudo-gradient correlation higher.\n"
               "Run with network.width_N = 4000 for the extended (paper-scale) version.\n");
    register_output(m, dir, "README.txt");
}

inline void fig4(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    DatasetSpec dspec{4, 16, base.dataset.seed, true, true};
    const Dataset ds = make_dataset(dspec);
    const TimeGrid grid(60, 0.05);
    LinearClosureConfig cfg;
    cfg.damping_beta = 0.5;
    cfg.tol = 1e-8;
    cfg.max_iters = 200;
    for (double rho : {0.0, 0.5, 1.0}) {
        const LinearClosureState st = linear_fa_closure(ds, 1.0, rho, 3, grid, cfg);
        std::ostringstream name;
        name << "fa_rho" << rho << ".csv";
        std::vector<std::string> cols{"time", "loss"};
        for (int l = 1; l <= 3; ++l) cols.push_back("h_overlap_l" + std::to_string(l));
        for (int l = 1; l <= 3; ++l) cols.push_back("gtilde_l" + std::to_string(l));
        CsvWriter csv(dir / name.str(), cols);
        std::vector<Vec> overlaps(3);
        for (int l = 1; l <= 3; ++l) overlaps[l - 1] = h_task_overlap(st, ds.targets, l);
        for (int k = 0; k < st.T; ++k) {
            std::vector<double> row{grid.time(k), 0.5 * st.Delta.col(k).squaredNorm()};
            for (int l = 1; l <= 3; ++l) row.push_back(overlaps[l - 1](k));
            for (int l = 1; l <= 3; ++l) {
                double acc = 0.0;
                for (int mu = 0; mu < st.P; ++mu)
                    acc += st.Gt[l - 1](mu * st.T + k, mu * st.T + k);
                row.push_back(acc / st.P);
            }
            csv.row(row);
        }
        register_output(m, dir, name.str());
    }
    write_text(dir / "README.txt",
               "Depth-4 linear network, rho-FA closure.\n"
               "Expected: larger rho trains faster initially and carries larger\n"
               "gradient/pseudo-gradient kernels, but the feature kernels overlap the\n"
               "task direction less than at small rho (final h_overlap decreasing in\n"
               "rho).\n");
    register_output(m, dir, "README.txt");
}

inline void fig5(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    (void)base;
    const TimeGrid grid(2000, 0.005);
    const double y = 1.0, g0 = 2.0;
    {
        const TwoLayerTrajectory gd = solve_gd(g0, y, grid);
        const TwoLayerTrajectory fa0 = solve_rho_fa(g0, 0.0, y, grid);
        const TwoLayerTrajectory fa1 = solve_rho_fa(g0, 1.0, y, grid);
        Vec yv(1);
        yv << y;
        const auto hebb = solve_hebb(g0, yv, grid);
        CsvWriter csv(dir / "loss_dynamics.csv",
                      {"time", "loss_gd", "loss_fa_rho0", "loss_fa_rho1", "loss_hebb"});
        CsvWriter csv2(dir / "kernel_alignment.csv",
                       {"time", "h_y_gd", "h_y_fa_rho0", "h_y_fa_rho1", "h_hebb"});
        for (int k = 0; k < grid.steps_T; ++k) {
            csv.row({grid.time(k), 0.5 * gd.points[k].delta * gd.points[k].delta,
                     0.5 * fa0.points[k].delta * fa0.points[k].delta,
                     0.5 * fa1.points[k].delta * fa1.points[k].delta,
                     0.5 * hebb[0].delta[k] * hebb[0].delta[k]});
            csv2.row({grid.time(k), gd.points[k].h_y, fa0.points[k].h_y, fa1.points[k].h_y,
                      hebb[0].h[k]});
        }
        register_output(m, dir, "loss_dynamics.csv");
        register_output(m, dir, "kernel_alignment.csv");
    }
    {
        std::vector<double> gammas;
        for (int i = 0; i <= 36; ++i) gammas.push_back(std::pow(10.0, -3.0 + i * 7.0 / 36.0));
        const auto rows = feature_movement_sweep(gammas, y);
        CsvWriter csv(dir / "feature_movement.csv",
                      {"gamma0", "delta_h_gd", "delta_h_fa_rho0", "delta_h_fa_rho1"});
        for (const auto& r : rows)
            csv.row({r.gamma0, r.delta_h_gd, r.delta_h_fa0, r.delta_h_fa1});
        register_output(m, dir, "feature_movement.csv");
    }
    write_text(dir / "README.txt",
               "Exactly solved two-layer linear dynamics.\n"
               "Expected: rho = 0 FA and Hebb share early-time loss dynamics, as do\n"
               "rho = 1 FA and GD; H_y grows for GD/FA but only the diagonal scale for\n"
               "Hebb; feature movement scales as gamma0^2 at small gamma0, gamma0 for GD\n"
               "and gamma0^(2/3) for FA at large gamma0.\n");
    register_output(m, dir, "README.txt");
}

inline void fig6(const ExperimentConfig& base, const std::filesystem::path& dir,
                 ResultManifest& m) {
    const int L = 10, N = 1024, R = base.finite_size.replicates;
    const EnsembleCovariance ens =
        ensemble_kernel_covariance(Activation::ReluNormalized, L, N, R, base.network.seed);
    const NloPrediction pred = nlo_prediction(Activation::ReluNormalized, L, N);
    {
        CsvWriter csv(dir / "covariance_heatmap.csv",
                      {"l1", "l2", "emp_cov_phi", "pred_cov_phi", "emp_cov_g", "pred_cov_g"});
        for (int a = 0; a < L; ++a)
            for (int b = 0; b < L; ++b)
                csv.row({static_cast<double>(a + 1), static_cast<double>(b + 1),
                         ens.cov_phi(a, b), pred.cov_phi(a, b), ens.cov_g(a, b),
                         pred.cov_g(a, b)});
        register_output(m, dir, "covariance_heatmap.csv");
    }
    {
        CsvWriter csv(dir / "variance_vs_width.csv",
                      {"N", "var_phi_L", "pred_phi_L", "var_g_1", "pred_g_1"});
        for (int n : {256, 512, 1024, 2048}) {
            const EnsembleCovariance e = ensemble_kernel_covariance(
                Activation::ReluNormalized, 4, n, 300, base.network.seed + 7);
            const NloPrediction p = nlo_prediction(Activation::ReluNormalized, 4, n);
            csv.row({static_cast<double>(n), e.cov_phi(3, 3), p.cov_phi(3, 3), e.cov_g(0, 0),
                     p.cov_g(0, 0)});
        }
        register_output(m, dir, "variance_vs_width.csv");
    }
    write_text(dir / "README.txt",
               "Kernel fluctuations across random initializations.\n"
               "Expected: Cov(Phi^l, Phi^l') tracks 5 min(l,l')/N (Brownian profile,\n"
               "variance growing with depth) and Cov(G^l, G^l') the mirrored profile;\n"
               "variances shrink as 1/N.\n");
    register_output(m, dir, "README.txt");
}

inline void run_figure(const ExperimentConfig& c, const std::filesystem::path& dir,
                       ResultManifest& m) {
    const std::string& r = c.figure_recipe;
    if (r == "fig1") fig1(c, dir, m);
    else if (r == "fig2") fig2(c, dir, m);
    else if (r == "fig3") fig3(c, dir, m);
    else if (r == "fig4") fig4(c, dir, m);
    else if (r == "fig5") fig5(c, dir, m);
    else if (r == "fig6") fig6(c, dir, m);
    else throw DomainError("config.figure_recipe: unknown recipe '" + r + "'");
}

}  // namespace rundetail
}  // namespace entk
