#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "depositum/config.hpp"
#include "depositum/dataset.hpp"
#include "depositum/optimizer.hpp"
#include "depositum/partition.hpp"
#include "depositum/problem.hpp"
#include "depositum/topology.hpp"

namespace depositum {

/// Everything a single run needs, materialized from a config and a seed.
struct Workload {
    Dataset train;
    std::optional<Dataset> test;
    Partition partition;
    std::unique_ptr<Problem> problem;
    std::optional<MixingMatrix> mixing;
    double lipschitz = 0.0;
};

/// Pooled training data (and optional held-out data) for a run seed.
/// Synthetic data uses the config's data seed when present, otherwise the run seed.
std::pair<Dataset, std::optional<Dataset>> make_data(const ExperimentConfig& cfg, std::uint64_t seed);

Partition make_partition(const ExperimentConfig& cfg, const Dataset& train, int clients, std::uint64_t seed);

Workload build_workload(const ExperimentConfig& cfg, std::uint64_t seed);

/// Explicit hyperparameters, or the automatic rules applied to this workload.
HyperParams resolve_hyperparams(const ExperimentConfig& cfg, const Workload& work);

struct RunResult {
    Trace trace;
    HyperParams hp;
    double lipschitz = 0.0;
    double lambda = 0.0;
};

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, int threads = 1);

inline constexpr const char* kTraceHeader =
    "t,loss,prox_grad_sq,cons_x_sq,cons_y_sq,cons_nu_sq,grad_est_sq,s_over_n,accuracy";

/// One header line and one row per record; doubles use the shortest round-trip form.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string trace_csv(const Trace& trace);
std::string run_metadata_json(const RunResult& result);

struct RunOutput {
    std::vector<RunResult> runs;
    std::vector<std::string> files;
};

/// One trace per seed under `out_dir` (trace_seed<seed>.csv plus a .json sidecar).
RunOutput cli_run(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

struct SweepCell {
    std::size_t value_index = 0;
    std::string value;
    std::uint64_t seed = 0;
    RunResult result;
};

/// Per-value subdirectories <axis>_<k>/ holding one trace per seed, plus summary.csv.
std::vector<SweepCell> cli_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

struct SpeedupPoint {
    std::int64_t t = 0;
    double loss = 0.0;
    double s_over_n = 0.0;
    double accuracy = 0.0;
};

struct SpeedupEntry {
    int clients = 0;
    HyperParams hp;
    double lambda = 0.0;
    std::vector<SpeedupPoint> mean_trajectory;
    double final_loss = 0.0;
};

struct SpeedupReport {
    std::vector<SpeedupEntry> entries;
    /// Final mean loss never increases along the client list.
    bool loss_nonincreasing = true;
};

/// Runs the automatic-parameter configuration for every client count and seed and
/// averages the traces per client count.
SpeedupReport speedup_study(const ExperimentConfig& cfg, const std::vector<int>& clients, int threads);

/// speedup_n<n>.csv mean trajectories plus speedup_summary.csv under `out_dir`.
SpeedupReport cli_speedup(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

/// Same graph family as `base` with `clients` nodes.
TopologySpec resize_topology(const TopologySpec& base, int clients);

/// Human-readable lambda, delta1, delta2 (and omega under momentum) for the config's topology.
std::string spectral_report(const ExperimentConfig& cfg);

/// Per-class share of samples held by each client (rows: classes, columns: clients).
std::string partition_report(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace depositum
