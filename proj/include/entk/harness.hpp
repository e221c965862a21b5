#pragma once

#include "entk/dataset.hpp"
#include "entk/dmft.hpp"
#include "entk/finite_size.hpp"
#include "entk/finite_width.hpp"
#include "entk/io.hpp"
#include "entk/lazy.hpp"
#include "entk/linear_dmft.hpp"
#include "entk/two_layer.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace entk {

enum class Mode { Train, Lazy, Dmft, Linear, Exact2, FiniteSize, Figure };

inline Mode mode_from_string(const std::string& s) {
    if (s == "train") return Mode::Train;
    if (s == "lazy") return Mode::Lazy;
    if (s == "dmft") return Mode::Dmft;
    if (s == "linear") return Mode::Linear;
    if (s == "exact2") return Mode::Exact2;
    if (s == "finite-size") return Mode::FiniteSize;
    if (s == "figure") return Mode::Figure;
    throw DomainError("config.mode: unknown mode '" + s + "'");
}

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Train: return "train";
        case Mode::Lazy: return "lazy";
        case Mode::Dmft: return "dmft";
        case Mode::Linear: return "linear";
        case Mode::Exact2: return "exact2";
        case Mode::FiniteSize: return "finite-size";
        case Mode::Figure: return "figure";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// ExperimentConfig: everything one run needs, JSON round-trippable.
// ---------------------------------------------------------------------------
struct DatasetConfig {
    std::string kind = "random-gaussian";  // random-gaussian | angle-pair | csv
    int P = 10, D = 50;
    std::uint64_t seed = 0;
    bool whitened = false;
    bool unit_norm = true;
    double theta = 1.5707963267948966;  // angle-pair
    std::string inputs_csv, targets_csv;
};

struct Exact2Config {
    std::string rule = "GD";  // GD | RhoFA | Hebb
    double rho = 0.0;
    double y = 1.0;
    std::string gd_form = "appendix";  // appendix | main-text
    std::vector<double> gamma0_sweep;  // when nonempty: emit (gamma0, dH) sweep
};

struct FiniteSizeConfig {
    int replicates = 500;
};

struct ExperimentConfig {
    Mode mode = Mode::Train;
    DatasetConfig dataset;
    NetworkConfig network;
    RuleSpec rule;
    TimeGrid grid{32, 0.05};
    SolverConfig solver;
    LinearClosureConfig linear;
    Exact2Config exact2;
    FiniteSizeConfig finite_size;
    std::vector<int> snapshot_steps;
    std::vector<double> theta_grid;  // lazy mode: optional angle sweep
    std::string output_dir = "out";
    std::string figure_recipe = "fig1";
    int memory_budget_pt = 1024;

    void validate() const {
        network.validate();
        rule.validate();
        grid.validate();
        if (dataset.P < 1 || dataset.D < 1)
            throw DomainError("config.dataset: P, D >= 1 required");
        if (mode == Mode::Dmft || mode == Mode::Linear) {
            const long pt = static_cast<long>(dataset.P) * grid.steps_T;
            if (pt > memory_budget_pt)
                throw DomainError("config: P*T = " + std::to_string(pt) +
                                  " exceeds memory budget " + std::to_string(memory_budget_pt) +
                                  " (raise memory_budget_pt to override)");
        }
    }
};

// ---- JSON (de)serialization ------------------------------------------------

inline Json to_json(const RuleSpec& r) {
    Json j{{"tag", to_string(r.tag)}};
    if (r.rho) j["rho"] = *r.rho;
    if (r.perturb_count) j["K"] = *r.perturb_count;
    if (r.perturb_scale) j["sigma"] = *r.perturb_scale;
    return j;
}

inline RuleSpec rule_from_json(const Json& j) {
    RuleSpec r;
    r.tag = rule_from_string(j.at("tag").get<std::string>());
    if (j.contains("rho")) r.rho = j.at("rho").get<double>();
    if (j.contains("K")) r.perturb_count = j.at("K").get<int>();
    if (j.contains("sigma")) r.perturb_scale = j.at("sigma").get<double>();
    r.validate();
    return r;
}

inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["mode"] = to_string(c.mode);
    j["dataset"] = {{"kind", c.dataset.kind},   {"P", c.dataset.P},
                    {"D", c.dataset.D},         {"seed", c.dataset.seed},
                    {"whitened", c.dataset.whitened}, {"unit_norm", c.dataset.unit_norm},
                    {"theta", c.dataset.theta}};
    if (!c.dataset.inputs_csv.empty()) j["dataset"]["inputs_csv"] = c.dataset.inputs_csv;
    if (!c.dataset.targets_csv.empty()) j["dataset"]["targets_csv"] = c.dataset.targets_csv;
    j["network"] = {{"depth_L", c.network.depth_L},
                    {"width_N", c.network.width_N},
                    {"gamma0", c.network.gamma0},
                    {"activation", to_string(c.network.activation)},
                    {"seed", c.network.seed}};
    j["rule"] = to_json(c.rule);
    j["grid"] = {{"steps_T", c.grid.steps_T}, {"dt", c.grid.dt}};
    j["solver"] = {{"samples_S", c.solver.samples_S}, {"damping_beta", c.solver.damping_beta},
                   {"max_iters", c.solver.max_iters}, {"tol", c.solver.tol},
                   {"jitter", c.solver.jitter},       {"seed", c.solver.seed},
                   {"estimate_responses", c.solver.estimate_responses}};
    j["linear"] = {{"damping_beta", c.linear.damping_beta},
                   {"tol", c.linear.tol},
                   {"max_iters", c.linear.max_iters}};
    j["exact2"] = {{"rule", c.exact2.rule},
                   {"rho", c.exact2.rho},
                   {"y", c.exact2.y},
                   {"gd_form", c.exact2.gd_form},
                   {"gamma0_sweep", c.exact2.gamma0_sweep}};
    j["finite_size"] = {{"replicates", c.finite_size.replicates}};
    j["snapshot_steps"] = c.snapshot_steps;
    j["theta_grid"] = c.theta_grid;
    j["output_dir"] = c.output_dir;
    j["figure_recipe"] = c.figure_recipe;
    j["memory_budget_pt"] = c.memory_budget_pt;
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    try {
        c.mode = mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("dataset")) {
            const Json& d = j.at("dataset");
            if (d.contains("kind")) c.dataset.kind = d.at("kind").get<std::string>();
            if (d.contains("P")) c.dataset.P = d.at("P").get<int>();
            if (d.contains("D")) c.dataset.D = d.at("D").get<int>();
            if (d.contains("seed")) c.dataset.seed = d.at("seed").get<std::uint64_t>();
            if (d.contains("whitened")) c.dataset.whitened = d.at("whitened").get<bool>();
            if (d.contains("unit_norm")) c.dataset.unit_norm = d.at("unit_norm").get<bool>();
            if (d.contains("theta")) c.dataset.theta = d.at("theta").get<double>();
            if (d.contains("inputs_csv")) c.dataset.inputs_csv = d.at("inputs_csv");
            if (d.contains("targets_csv")) c.dataset.targets_csv = d.at("targets_csv");
        }
        if (j.contains("network")) {
            const Json& n = j.at("network");
            if (n.contains("depth_L")) c.network.depth_L = n.at("depth_L").get<int>();
            if (n.contains("width_N")) c.network.width_N = n.at("width_N").get<int>();
            if (n.contains("gamma0")) c.network.gamma0 = n.at("gamma0").get<double>();
            if (n.contains("activation"))
                c.network.activation = activation_from_string(n.at("activation"));
            if (n.contains("seed")) c.network.seed = n.at("seed").get<std::uint64_t>();
        }
        if (j.contains("rule")) c.rule = rule_from_json(j.at("rule"));
        if (j.contains("grid")) {
            c.grid.steps_T = j.at("grid").value("steps_T", c.grid.steps_T);
            c.grid.dt = j.at("grid").value("dt", c.grid.dt);
        }
        if (j.contains("solver")) {
            const Json& s = j.at("solver");
            c.solver.samples_S = s.value("samples_S", c.solver.samples_S);
            c.solver.damping_beta = s.value("damping_beta", c.solver.damping_beta);
            c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
            c.solver.tol = s.value("tol", c.solver.tol);
            c.solver.jitter = s.value("jitter", c.solver.jitter);
            c.solver.seed = s.value("seed", c.solver.seed);
            c.solver.estimate_responses =
                s.value("estimate_responses", c.solver.estimate_responses);
        }
        if (j.contains("linear")) {
            const Json& s = j.at("linear");
            c.linear.damping_beta = s.value("damping_beta", c.linear.damping_beta);
            c.linear.tol = s.value("tol", c.linear.tol);
            c.linear.max_iters = s.value("max_iters", c.linear.max_iters);
        }
        if (j.contains("exact2")) {
            const Json& e = j.at("exact2");
            c.exact2.rule = e.value("rule", c.exact2.rule);
            c.exact2.rho = e.value("rho", c.exact2.rho);
            c.exact2.y = e.value("y", c.exact2.y);
            c.exact2.gd_form = e.value("gd_form", c.exact2.gd_form);
            if (e.contains("gamma0_sweep"))
                c.exact2.gamma0_sweep = e.at("gamma0_sweep").get<std::vector<double>>();
        }
        if (j.contains("finite_size"))
            c.finite_size.replicates = j.at("finite_size").value("replicates", 500);
        if (j.contains("snapshot_steps"))
            c.snapshot_steps = j.at("snapshot_steps").get<std::vector<int>>();
        if (j.contains("theta_grid"))
            c.theta_grid = j.at("theta_grid").get<std::vector<double>>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("figure_recipe")) c.figure_recipe = j.at("figure_recipe");
        if (j.contains("memory_budget_pt")) c.memory_budget_pt = j.at("memory_budget_pt");
    } catch (const Json::exception& e) {
        throw DomainError(std::string("config schema violation: ") + e.what());
    }
    c.validate();
    return c;
}

inline Dataset dataset_from_config(const DatasetConfig& d) {
    if (d.kind == "random-gaussian")
        return make_dataset({d.P, d.D, d.seed, d.unit_norm, d.whitened});
    if (d.kind == "angle-pair") return make_angle_pair(d.theta, d.D);
    if (d.kind == "csv") {
        const auto xin = read_csv_numeric(d.inputs_csv);
        const auto yin = read_csv_numeric(d.targets_csv);
        if (xin.empty() || yin.size() != xin.size())
            throw DomainError("config.dataset: csv inputs/targets row mismatch");
        Mat X(xin.size(), xin[0].size());
        Vec y(yin.size());
        for (std::size_t i = 0; i < xin.size(); ++i) {
            if (xin[i].size() != static_cast<std::size_t>(X.cols()))
                throw DomainError("config.dataset: ragged csv inputs");
            for (std::size_t jj = 0; jj < xin[i].size(); ++jj) X(i, jj) = xin[i][jj];
            y(i) = yin[i].at(0);
        }
        return Dataset(std::move(X), std::move(y), d.whitened);
    }
    throw DomainError("config.dataset.kind: unknown kind '" + d.kind + "'");
}

// ---------------------------------------------------------------------------
// ResultManifest
// ---------------------------------------------------------------------------
struct ResultManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> output_hashes;
    double wall_clock_s = 0.0;
    bool converged = true;
    int exit_code = 0;
};

inline void write_manifest(const std::filesystem::path& dir, const ResultManifest& m) {
    Json j;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["outputs"] = m.output_hashes;
    j["wall_clock_s"] = m.wall_clock_s;
    j["converged"] = m.converged;
    j["exit_code"] = m.exit_code;
    write_json(dir / "manifest.json", j);
}

// ---------------------------------------------------------------------------
// Mode drivers
// ---------------------------------------------------------------------------
namespace rundetail {

inline void register_output(ResultManifest& m, const std::filesystem::path& dir,
                            const std::string& name) {
    m.output_hashes[name] = hex64(hash_file(dir / name));
}

inline void write_trace_csv(const std::filesystem::path& dir, const std::string& name,
                            const TrainTrace& trace) {
    CsvWriter csv(dir / name, {"step", "time", "loss", "alignment", "corr_g_gtilde"});
    for (std::size_t k = 0; k < trace.loss.size(); ++k)
        csv.row({static_cast<double>(k), trace.time[k], trace.loss[k], trace.alignment[k],
                 trace.corr[k]});
}

inline Json snapshot_to_json(const KernelSnapshot& snap) {
    Json j;
    j["step"] = snap.step;
    j["time"] = snap.time;
    for (std::size_t l = 0; l < snap.phi.size(); ++l)
        j["phi"][std::to_string(l)] = matrix_to_json(snap.phi[l]);
    for (std::size_t l = 0; l < snap.g.size(); ++l)
        j["g"][std::to_string(l + 1)] = matrix_to_json(snap.g[l]);
    for (std::size_t l = 0; l < snap.gtilde.size(); ++l)
        j["gtilde"][std::to_string(l + 1)] = matrix_to_json(snap.gtilde[l]);
    j["entk"] = matrix_to_json(snap.entk);
    Json pre = Json::array();
    for (Eigen::Index i = 0; i < snap.preact_sample.size(); ++i)
        pre.push_back(snap.preact_sample(i));
    j["preactivation_sample"] = std::move(pre);
    return j;
}

inline void run_train(const ExperimentConfig& c, const std::filesystem::path& dir,
                      ResultManifest& m) {
    const Dataset ds = dataset_from_config(c.dataset);
    const Params params = init_network(c.network, c.rule, static_cast<int>(ds.D()));
    TrainConfig tc;
    tc.snapshot_steps = c.snapshot_steps;
    const TrainTrace trace = train(params, ds, c.grid, tc);
    write_trace_csv(dir, "trace.csv", trace);
    register_output(m, dir, "trace.csv");
    if (!trace.snapshots.empty()) {
        Json snaps = Json::array();
        for (const auto& s : trace.snapshots) snaps.push_back(snapshot_to_json(s));
        write_json(dir / "kernel_snapshots.json", snaps);
        register_output(m, dir, "kernel_snapshots.json");
    }
}

inline void run_lazy(const ExperimentConfig& c, const std::filesystem::path& dir,
                     ResultManifest& m) {
    const Dataset ds = dataset_from_config(c.dataset);
    const LazyKernelStack st =
        lazy_kernel_stack(ds.input_kernel, c.network.depth_L, c.network.activation);
    const Mat K = lazy_entk(c.rule, st);
    write_json(dir / "entk.json", matrix_to_json(K));
    register_output(m, dir, "entk.json");
    const LazyPrediction pred = lazy_predict(K, ds.targets, c.grid);
    m.converged = m.converged && !pred.used_euler_fallback;
    {
        std::vector<std::string> cols{"step", "time"};
        for (Eigen::Index mu = 0; mu < ds.P(); ++mu) cols.push_back("f" + std::to_string(mu));
        CsvWriter csv(dir / "predictions.csv", cols);
        for (int k = 0; k < c.grid.steps_T; ++k) {
            std::vector<double> row{static_cast<double>(k), c.grid.time(k)};
            for (Eigen::Index mu = 0; mu < ds.P(); ++mu) row.push_back(pred.f(mu, k));
            csv.row(row);
        }
    }
    register_output(m, dir, "predictions.csv");
    if (!c.theta_grid.empty()) {
        const auto rows =
            angle_sweep(c.rule, c.network.depth_L, c.network.activation, c.theta_grid);
        CsvWriter csv(dir / "angle_sweep.csv", {"theta", "k_raw", "k_normalized"});
        for (const auto& r : rows) csv.row({r.theta, r.k_raw, r.k_normalized});
        register_output(m, dir, "angle_sweep.csv");
    }
}

inline void write_convergence_csv(const std::filesystem::path& dir, const std::string& name,
                                  const ConvergenceReport& rep) {
    CsvWriter csv(dir / name, {"iter", "residual", "loss_final_time"});
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
        csv.row({static_cast<double>(i + 1), rep.residual_history[i], rep.loss_history[i]});
}

inline void run_dmft(const ExperimentConfig& c, const std::filesystem::path& dir,
                     ResultManifest& m) {
    const Dataset ds = dataset_from_config(c.dataset);
    const DmftState state = solve(ds, c.network, c.rule, c.grid, c.solver);
    m.converged = state.report.converged;
    write_convergence_csv(dir, "convergence.csv", state.report);
    register_output(m, dir, "convergence.csv");
    {
        std::vector<std::string> cols{"step", "time", "loss"};
        for (Eigen::Index mu = 0; mu < ds.P(); ++mu) cols.push_back("f" + std::to_string(mu));
        CsvWriter csv(dir / "predictions.csv", cols);
        for (int k = 0; k < c.grid.steps_T; ++k) {
            std::vector<double> row{static_cast<double>(k), c.grid.time(k),
                                    0.5 * state.Delta.col(k).squaredNorm()};
            for (Eigen::Index mu = 0; mu < ds.P(); ++mu) row.push_back(state.f(mu, k));
            csv.row(row);
        }
    }
    register_output(m, dir, "predictions.csv");
    Json j;
    j["converged"] = state.report.converged;
    j["iterations"] = state.report.iterations;
    j["final_residual"] = state.report.final_residual;
    j["rank_deficiency_warning"] = state.report.rank_deficiency_warning;
    for (int l = 1; l <= state.kernels.L; ++l) {
        j["phi"][std::to_string(l)] = two_time_to_json(state.kernels.Phi(l));
        j["g"][std::to_string(l)] = two_time_to_json(state.kernels.G(l));
        j["gtilde"][std::to_string(l)] = two_time_to_json(state.kernels.Gt(l));
        j["gtildetilde"][std::to_string(l)] = two_time_to_json(state.kernels.Gtt(l));
    }
    j["entk"] = two_time_to_json(state.entk);
    write_json(dir / "dmft_state.json", j);
    register_output(m, dir, "dmft_state.json");
}

inline void run_linear(const ExperimentConfig& c, const std::filesystem::path& dir,
                       ResultManifest& m) {
    const Dataset ds = dataset_from_config(c.dataset);
    const LinearClosureState st =
        linear_closure(ds, c.rule, c.network.gamma0, c.network.depth_L, c.grid, c.linear);
    m.converged = st.report.converged;
    write_convergence_csv(dir, "convergence.csv", st.report);
    register_output(m, dir, "convergence.csv");
    {
        std::vector<std::string> cols{"step", "time", "loss"};
        for (int l = 1; l <= st.L; ++l) cols.push_back("h_overlap_l" + std::to_string(l));
        for (int l = 1; l <= st.L; ++l) cols.push_back("gtilde_l" + std::to_string(l));
        CsvWriter csv(dir / "trajectories.csv", cols);
        std::vector<Vec> overlaps(st.L);
        for (int l = 1; l <= st.L; ++l) overlaps[l - 1] = h_task_overlap(st, ds.targets, l);
        for (int k = 0; k < st.T; ++k) {
            std::vector<double> row{static_cast<double>(k), c.grid.time(k),
                                    0.5 * st.Delta.col(k).squaredNorm()};
            for (int l = 1; l <= st.L; ++l) row.push_back(overlaps[l - 1](k));
            // diagonal gtilde value averaged over samples
            for (int l = 1; l <= st.L; ++l) {
                double acc = 0.0;
                for (int mu = 0; mu < st.P; ++mu)
                    acc += st.Gt[l - 1](mu * st.T + k, mu * st.T + k);
                row.push_back(acc / st.P);
            }
            csv.row(row);
        }
    }
    register_output(m, dir, "trajectories.csv");
}

inline void run_exact2(const ExperimentConfig& c, const std::filesystem::path& dir,
                       ResultManifest& m) {
    const Exact2Config& e = c.exact2;
    const TwoLayerGdForm form =
        e.gd_form == "main-text" ? TwoLayerGdForm::MainText : TwoLayerGdForm::Appendix;
    if (!e.gamma0_sweep.empty()) {
        const auto rows = feature_movement_sweep(e.gamma0_sweep, e.y);
        CsvWriter csv(dir / "feature_movement.csv",
                      {"gamma0", "delta_h_gd", "delta_h_fa_rho0", "delta_h_fa_rho1"});
        for (const auto& r : rows)
            csv.row({r.gamma0, r.delta_h_gd, r.delta_h_fa0, r.delta_h_fa1});
        register_output(m, dir, "feature_movement.csv");
        return;
    }
    TwoLayerTrajectory tr;
    if (e.rule == "GD") {
        tr = solve_gd(c.network.gamma0, e.y, c.grid, form);
    } else if (e.rule == "RhoFA") {
        tr = solve_rho_fa(c.network.gamma0, e.rho, e.y, c.grid);
    } else if (e.rule == "Hebb") {
        Vec y(1);
        y << e.y;
        const auto hebb = solve_hebb(c.network.gamma0, y, c.grid);
        CsvWriter csv(dir / "trajectory.csv", {"t", "delta", "h"});
        for (std::size_t k = 0; k < hebb[0].t.size(); ++k)
            csv.row({hebb[0].t[k], hebb[0].delta[k], hebb[0].h[k]});
        register_output(m, dir, "trajectory.csv");
        return;
    } else {
        throw DomainError("config.exact2.rule: unknown rule '" + e.rule + "'");
    }
    CsvWriter csv(dir / "trajectory.csv", {"t", "delta", "a", "h_y", "gtilde"});
    for (const auto& pt : tr.points) csv.row({pt.t, pt.delta, pt.a, pt.h_y, pt.gtilde});
    register_output(m, dir, "trajectory.csv");
}

inline void run_finite_size(const ExperimentConfig& c, const std::filesystem::path& dir,
                            ResultManifest& m) {
    const int L = c.network.depth_L, N = c.network.width_N;
    const EnsembleCovariance ens = ensemble_kernel_covariance(
        c.network.activation, L, N, c.finite_size.replicates, c.network.seed);
    const NloPrediction pred = nlo_prediction(c.network.activation, L, N);
    CsvWriter csv(dir / "covariance.csv", {"l1", "l2", "emp_cov_phi", "pred_cov_phi",
                                           "se_phi", "emp_cov_g", "pred_cov_g", "se_g"});
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b)
            csv.row({static_cast<double>(a + 1), static_cast<double>(b + 1), ens.cov_phi(a, b),
                     pred.cov_phi(a, b), ens.se_phi(a, b), ens.cov_g(a, b), pred.cov_g(a, b),
                     ens.se_g(a, b)});
    register_output(m, dir, "covariance.csv");
}

void run_figure(const ExperimentConfig& c, const std::filesystem::path& dir, ResultManifest& m);

}  // namespace rundetail

struct RunResult {
    int exit_code = 0;
    ResultManifest manifest;
};

inline RunResult run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);

    ResultManifest manifest;
    manifest.config_hash = hex64(fnv1a(to_json(config).dump()));
    manifest.seed = config.network.seed;

    switch (config.mode) {
        case Mode::Train: rundetail::run_train(config, dir, manifest); break;
        case Mode::Lazy: rundetail::run_lazy(config, dir, manifest); break;
        case Mode::Dmft: rundetail::run_dmft(config, dir, manifest); break;
        case Mode::Linear: rundetail::run_linear(config, dir, manifest); break;
        case Mode::Exact2: rundetail::run_exact2(config, dir, manifest); break;
        case Mode::FiniteSize: rundetail::run_finite_size(config, dir, manifest); break;
        case Mode::Figure: rundetail::run_figure(config, dir, manifest); break;
    }

    manifest.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.exit_code = manifest.converged ? 0 : 2;
    write_manifest(dir, manifest);
    return RunResult{manifest.exit_code, manifest};
}

inline RunResult run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw DomainError(std::string("config parse error: ") + e.what());
    }
    return run(config_from_json(j));
}

}  // namespace entk

#include "entk/figures.hpp"
