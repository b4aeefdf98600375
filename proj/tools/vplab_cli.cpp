#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vplab/vplab.h"

namespace {

int report(vplab_status s) {
    std::fprintf(stderr, "vplab: %s: %s\n", vplab_status_name(s), vplab_last_error());
    return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field limit experiments for regularized Vlasov-Poisson particle systems"};
    app.set_version_flag("--version", std::string(vplab_version()));
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path, n_grid, out_dir;
    std::string seed, delta, sigma, trials, threads, snapshots;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed (run.seed)");
    app.add_option("--n", n_grid, "Particle count or comma-separated grid (run.n)");
    app.add_option("--delta", delta, "Cutoff exponent (kernel.delta)");
    app.add_option("--sigma", sigma, "+1 repulsive, -1 attractive (kernel.sigma)");
    app.add_option("--trials", trials, "Trials per n (run.trials)");
    app.add_option("--out", out_dir, "Output root; default $VPLAB_OUTPUT_ROOT or ./vplab-out (output.dir)");
    app.add_option("--threads", threads, "Worker threads, 0 for all cores (run.threads)");
    app.add_option("--snapshots", snapshots, "Snapshot intervals over [0, T] (run.snapshots)");
    app.add_option("--set", sets, "Override any field: section.key=value (repeatable)");

    const std::pair<const char*, const char*> commands[] = {
        {"sample", "Draw initial states and write snapshot files"},
        {"evolve", "Integrate the microscopic system"},
        {"meanfield", "Evolve the reference ensemble"},
        {"compare", "Run microscopic-vs-mean-field trials at the first n"},
        {"chaos", "Concentration sweep over the n grid"},
        {"rate", "Fit the empirical-measure convergence exponent"},
        {"wasserstein", "Distance between the snapshot files inputs.a and inputs.b"},
        {"audit", "Kernel conditions and invariant checks"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    vplab_config* cfg = nullptr;
    vplab_status s = config_path.empty() ? vplab_config_new(&cfg) : vplab_config_load(config_path.c_str(), &cfg);
    if (s != VPLAB_OK) return report(s);

    const std::pair<const char*, const std::string*> overrides[] = {
        {"run.seed", &seed},       {"run.n", &n_grid},           {"kernel.delta", &delta},
        {"kernel.sigma", &sigma},  {"run.trials", &trials},      {"output.dir", &out_dir},
        {"run.threads", &threads}, {"run.snapshots", &snapshots},
    };
    for (const auto& [field, value] : overrides) {
        if (!value->empty() && (s = vplab_config_set(cfg, field, value->c_str())) != VPLAB_OK) break;
    }
    for (const std::string& kv : sets) {
        if (s != VPLAB_OK) break;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "vplab: --set expects section.key=value, got '%s'\n", kv.c_str());
            vplab_config_free(cfg);
            return static_cast<int>(VPLAB_ERR_INVALID_ARGUMENT);
        }
        s = vplab_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    if (s != VPLAB_OK) {
        vplab_config_free(cfg);
        return report(s);
    }

    vplab_run_result* result = nullptr;
    s = vplab_run(cfg, subcommand.c_str(), &result);
    vplab_config_free(cfg);
    if (s != VPLAB_OK) return report(s);
    for (std::size_t i = 0; i < vplab_run_summary_count(result); ++i) {
        std::printf("%s\n", vplab_run_summary_line(result, i));
    }
    std::printf("results in %s\n", vplab_run_directory(result));
    vplab_run_free(result);
    return 0;
}
