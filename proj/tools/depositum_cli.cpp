#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "depositum/config.hpp"
#include "depositum/errors.hpp"
#include "depositum/experiment.hpp"
#include "depositum/parallel.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::int64_t eval_every = 0;
};

void add_common(CLI::App* cmd, Common& c, bool outputs) {
    cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seeds", c.seeds, "Comma-separated seed list (overrides the config)")->delimiter(',');
    if (outputs) {
        cmd->add_option("--out", c.out, "Output directory (overrides the config)");
        cmd->add_option("--eval-every", c.eval_every, "Metrics cadence (overrides the config)")
            ->check(CLI::PositiveNumber);
    }
}

depositum::ExperimentConfig load(const Common& c) {
    depositum::ExperimentConfig cfg = depositum::load_config(c.config);
    if (!c.seeds.empty()) cfg.seeds = c.seeds;
    if (c.eval_every > 0) cfg.eval_every = c.eval_every;
    if (!c.out.empty()) cfg.output = c.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized proximal stochastic gradient tracking with momentum"};
    app.require_subcommand(1);
    Common run_opts, sweep_opts, speedup_opts, spectral_opts, partition_opts;
    CLI::App* run = app.add_subcommand("run", "Run every seed of a config and write CSV traces");
    CLI::App* sweep = app.add_subcommand("sweep", "Run the config's sweep axis and write a summary");
    CLI::App* speedup = app.add_subcommand("speedup", "Client-count study with automatic parameters");
    CLI::App* spectral = app.add_subcommand("spectral", "Print lambda, delta1 and delta2 for the topology");
    CLI::App* partition = app.add_subcommand("partition-report", "Print per-class client shares of the partition");
    add_common(run, run_opts, true);
    add_common(sweep, sweep_opts, true);
    add_common(speedup, speedup_opts, true);
    add_common(spectral, spectral_opts, false);
    add_common(partition, partition_opts, false);

    CLI11_PARSE(app, argc, argv);

    const int threads = depositum::configured_threads();
    try {
        if (run->parsed()) {
            const auto cfg = load(run_opts);
            const auto out = depositum::cli_run(cfg, cfg.output, threads);
            for (const auto& f : out.files) std::cout << f << '\n';
        } else if (sweep->parsed()) {
            const auto cfg = load(sweep_opts);
            const auto cells = depositum::cli_sweep(cfg, cfg.output, threads);
            std::cout << fmt::format("{} runs, summary at {}/summary.csv\n", cells.size(), cfg.output);
        } else if (speedup->parsed()) {
            const auto cfg = load(speedup_opts);
            const auto report = depositum::cli_speedup(cfg, cfg.output, threads);
            for (const auto& e : report.entries) {
                std::cout << fmt::format("n={} final_mean_loss={}\n", e.clients, e.final_loss);
            }
            std::cout << fmt::format("loss non-increasing in n: {}\n", report.loss_nonincreasing ? "yes" : "no");
        } else if (spectral->parsed()) {
            std::cout << depositum::spectral_report(load(spectral_opts));
        } else if (partition->parsed()) {
            const auto cfg = load(partition_opts);
            std::cout << depositum::partition_report(cfg, cfg.seeds.front());
        }
    } catch (const depositum::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const depositum::ParseError& e) {
        std::cerr << "config parse error: " << e.what() << '\n';
        return 2;
    } catch (const depositum::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
