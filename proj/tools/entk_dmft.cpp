// entk-dmft: command-line entry point.
//
//   entk-dmft <mode> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]
//
// Modes: train, lazy, dmft, linear, exact2, finite-size, figure.
// Exit codes: 0 success, 2 flagged non-convergence, 1 error.

#include "entk/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"effective-NTK / DMFT simulator for gradient descent and "
                 "biologically plausible learning rules"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    const std::vector<std::string> modes{"train", "lazy",   "dmft",  "linear",
                                         "exact2", "finite-size", "figure"};
    for (const std::string& mode : modes) {
        CLI::App* sub = app.add_subcommand(mode, "run in '" + mode + "' mode");
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "master seed (overrides config)")
            ->each([&seed_set](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads,
                        "worker threads (default: ENTK_DMFT_THREADS or hardware)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) entk::set_num_threads(threads);

        std::ifstream in(config_path);
        if (!in) throw entk::DomainError("cannot open config: " + config_path);
        entk::Json j;
        try {
            in >> j;
        } catch (const entk::Json::exception& e) {
            throw entk::DomainError(std::string("config parse error: ") + e.what());
        }
        entk::ExperimentConfig config = entk::config_from_json(j);

        const std::string mode = app.get_subcommands().front()->get_name();
        if (entk::mode_from_string(mode) != config.mode)
            throw entk::DomainError("config.mode is '" +
                                    std::string(entk::to_string(config.mode)) +
                                    "' but the '" + mode + "' subcommand was given");
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (seed_set) {
            config.network.seed = seed;
            config.solver.seed = seed;
            config.dataset.seed = seed;
        }

        const entk::RunResult res = entk::run(config);
        if (res.exit_code == 2)
            std::cerr << "warning: run flagged non-converged (exit 2)\n";
        std::cout << "outputs written to " << config.output_dir << " (config "
                  << res.manifest.config_hash << ", " << res.manifest.wall_clock_s << " s)\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
