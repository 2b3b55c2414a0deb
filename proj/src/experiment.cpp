#include "depositum/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "depositum/errors.hpp"
#include "depositum/parallel.hpp"
#include "depositum/rng.hpp"

namespace depositum {
namespace {

namespace fs = std::filesystem;

fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir, ec.message()));
    return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << content;
    out.flush();
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string number(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

std::string trace_name(std::uint64_t seed) { return fmt::format("trace_seed{}", seed); }

std::vector<RunResult> run_seeds(const std::vector<ExperimentConfig>& configs,
                                 const std::vector<std::uint64_t>& seeds, int threads) {
    const int cells = static_cast<int>(configs.size() * seeds.size());
    std::vector<RunResult> results(static_cast<std::size_t>(cells));
    const int inner = cells > 1 ? 1 : threads;
    parallel_for(cells, threads, [&](int k) {
        const auto c = static_cast<std::size_t>(k) / seeds.size();
        const auto s = static_cast<std::size_t>(k) % seeds.size();
        results[static_cast<std::size_t>(k)] = run_experiment(configs[c], seeds[s], inner);
    });
    return results;
}

void write_run(const fs::path& dir, const RunResult& result, std::vector<std::string>& files) {
    const std::string stem = trace_name(result.trace.seed);
    write_file(dir / (stem + ".csv"), trace_csv(result.trace));
    write_file(dir / (stem + ".json"), run_metadata_json(result));
    files.push_back((dir / (stem + ".csv")).string());
    files.push_back((dir / (stem + ".json")).string());
}

}  // namespace

std::pair<Dataset, std::optional<Dataset>> make_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    const DataConfig& data = cfg.data;
    if (data.source == DataConfig::Source::Libsvm) {
        Dataset train = load_libsvm(data.path, data.libsvm_dim);
        std::optional<Dataset> test;
        if (!data.test_path.empty()) {
            test = load_libsvm(data.test_path, data.libsvm_dim.value_or(static_cast<int>(train.dim())));
        }
        return {std::move(train), std::move(test)};
    }

    Rng rng = rng_stream(data.seed.value_or(seed), 0, 0, stream::kData);
    const int total = data.samples + data.test_samples;
    Dataset pooled = cfg.model.kind == ModelKind::LogisticBinary
                         ? synth_logistic(data.dim, total, data.separation, rng)
                         : synth_classes(data.dim, total, data.classes, data.separation, rng);
    if (data.test_samples == 0) return {std::move(pooled), std::nullopt};

    std::vector<int> head(static_cast<std::size_t>(data.samples));
    std::vector<int> tail(static_cast<std::size_t>(data.test_samples));
    for (int r = 0; r < data.samples; ++r) head[static_cast<std::size_t>(r)] = r;
    for (int r = 0; r < data.test_samples; ++r) tail[static_cast<std::size_t>(r)] = data.samples + r;
    return {pooled.subset(head), pooled.subset(tail)};
}

Partition make_partition(const ExperimentConfig& cfg, const Dataset& train, int clients, std::uint64_t seed) {
    Rng rng = rng_stream(seed, 0, 0, stream::kPartition);
    if (cfg.partition.iid) return iid_partition(static_cast<int>(train.samples()), clients, rng);
    return dirichlet_partition(train.labels, clients, cfg.partition.theta, rng);
}

Workload build_workload(const ExperimentConfig& cfg, std::uint64_t seed) {
    Workload work;
    auto [train, test] = make_data(cfg, seed);
    work.train = std::move(train);
    work.test = std::move(test);
    work.partition = make_partition(cfg, work.train, cfg.topology.n, seed);
    work.problem = std::make_unique<Problem>(cfg.model, work.train, work.partition, cfg.noise_std);
    work.mixing = build_mixing(cfg.topology);
    work.lipschitz = work.problem->estimate_L(seed);
    return work;
}

HyperParams resolve_hyperparams(const ExperimentConfig& cfg, const Workload& work) {
    if (!cfg.hyper.auto_mode) {
        HyperParams hp = cfg.hyper.params;
        hp.iterations = cfg.iterations;
        return hp;
    }
    return corollary1_params(cfg.topology.n, work.lipschitz, cfg.regularizer.weak_modulus(), cfg.hyper.params.period,
                             cfg.iterations, work.mixing->lambda(), cfg.hyper.params.momentum);
}

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, int threads) {
    const Workload work = build_workload(cfg, seed);
    RunResult result;
    result.hp = resolve_hyperparams(cfg, work);
    result.lipschitz = work.lipschitz;
    result.lambda = work.mixing->lambda();

    RunOptions options;
    options.eval_every = cfg.eval_every;
    options.algorithm = cfg.algorithm;
    options.lipschitz = work.lipschitz;
    options.eval_data = work.test ? &*work.test : nullptr;
    options.threads = threads;
    result.trace = run(*work.problem, *work.mixing, result.hp, cfg.regularizer, seed, options);
    result.trace.config_digest = cfg.digest();
    return result;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << kTraceHeader << '\n';
    for (const MetricsRecord& r : trace.records) {
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.t, r.loss, r.prox_grad_sq, r.cons_x_sq, r.cons_y_sq,
                           r.cons_nu_sq, r.grad_est_sq, r.s_over_n, r.accuracy ? number(*r.accuracy) : "");
    }
}

std::string trace_csv(const Trace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    return out.str();
}

std::string run_metadata_json(const RunResult& result) {
    nlohmann::json doc;
    doc["config_digest"] = result.trace.config_digest;
    doc["seed"] = result.trace.seed;
    doc["seconds"] = result.trace.seconds;
    doc["communications"] = result.trace.communications;
    doc["records"] = result.trace.records.size();
    doc["lipschitz"] = result.lipschitz;
    doc["lambda"] = result.lambda;
    doc["hyperparams"] = {{"alpha", result.hp.alpha},   {"beta", result.hp.beta},
                          {"gamma", result.hp.gamma},   {"T0", result.hp.period},
                          {"batch", result.hp.batch},   {"T", result.hp.iterations},
                          {"momentum", to_string(result.hp.momentum)}};
    return doc.dump(2) + "\n";
}

RunOutput cli_run(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
    RunOutput output;
    output.runs = run_seeds({cfg}, cfg.seeds, threads);
    const fs::path dir = ensure_dir(out_dir);
    for (const RunResult& r : output.runs) write_run(dir, r, output.files);
    return output;
}

std::vector<SweepCell> cli_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
    if (!cfg.sweep) throw ConfigError("sweep: missing sweep section");
    const SweepConfig& sweep = *cfg.sweep;
    std::vector<ExperimentConfig> variants;
    for (std::size_t k = 0; k < sweep.values.size(); ++k) variants.push_back(apply_sweep_value(cfg, k));

    std::vector<RunResult> results = run_seeds(variants, cfg.seeds, threads);
    const fs::path root = ensure_dir(out_dir);
    std::vector<SweepCell> cells;
    std::vector<std::string> files;
    std::string summary =
        "axis,value,seed,alpha,beta,gamma,T0,batch,final_t,final_loss,final_s_over_n,final_accuracy,"
        "mean_cons_x_sq,communications\n";
    for (std::size_t k = 0; k < results.size(); ++k) {
        SweepCell cell;
        cell.value_index = k / cfg.seeds.size();
        cell.value = sweep.values[cell.value_index].dump();
        cell.seed = cfg.seeds[k % cfg.seeds.size()];
        cell.result = std::move(results[k]);

        const fs::path dir = ensure_dir((root / fmt::format("{}_{}", sweep.axis, cell.value_index)).string());
        write_run(dir, cell.result, files);

        const auto& records = cell.result.trace.records;
        const MetricsRecord& last = records.back();
        double cons = 0.0;
        for (const auto& r : records) cons += r.cons_x_sq;
        cons /= static_cast<double>(records.size());
        const HyperParams& hp = cell.result.hp;
        summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", sweep.axis, csv_field(cell.value),
                               cell.seed, hp.alpha, hp.beta, hp.gamma, hp.period, hp.batch, last.t, last.loss,
                               last.s_over_n, last.accuracy ? number(*last.accuracy) : "", cons,
                               cell.result.trace.communications);
        cells.push_back(std::move(cell));
    }
    write_file(root / "summary.csv", summary);
    return cells;
}

TopologySpec resize_topology(const TopologySpec& base, int clients) {
    if (clients < 1) throw ConfigError(fmt::format("speedup.n: client count must be >= 1, got {}", clients));
    if (clients == 1) return TopologySpec::complete(1);
    switch (base.kind) {
        case GraphKind::Complete: return TopologySpec::complete(clients, base.weighting);
        case GraphKind::Ring: return TopologySpec::ring(clients, base.weighting);
        case GraphKind::Star: return TopologySpec::star(clients, base.weighting);
        case GraphKind::EdgeList: break;
    }
    throw ConfigError("topology: an explicit edge list cannot be resized for a speedup study");
}

SpeedupReport speedup_study(const ExperimentConfig& cfg, const std::vector<int>& clients, int threads) {
    if (clients.empty()) throw ConfigError("speedup.n: expected at least one client count");
    std::vector<ExperimentConfig> variants;
    for (const int n : clients) {
        ExperimentConfig v = cfg;
        v.topology = resize_topology(cfg.topology, n);
        v.hyper.auto_mode = true;
        variants.push_back(std::move(v));
    }
    const std::vector<RunResult> results = run_seeds(variants, cfg.seeds, threads);

    SpeedupReport report;
    const std::size_t seeds = cfg.seeds.size();
    for (std::size_t c = 0; c < variants.size(); ++c) {
        SpeedupEntry entry;
        entry.clients = clients[c];
        entry.hp = results[c * seeds].hp;
        entry.lambda = results[c * seeds].lambda;
        const std::size_t rows = results[c * seeds].trace.records.size();
        entry.mean_trajectory.resize(rows);
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto& records = results[c * seeds + s].trace.records;
            for (std::size_t r = 0; r < rows; ++r) {
                SpeedupPoint& p = entry.mean_trajectory[r];
                p.t = records[r].t;
                p.loss += records[r].loss / static_cast<double>(seeds);
                p.s_over_n += records[r].s_over_n / static_cast<double>(seeds);
                p.accuracy += records[r].accuracy.value_or(std::nan("")) / static_cast<double>(seeds);
            }
        }
        entry.final_loss = entry.mean_trajectory.back().loss;
        if (!report.entries.empty() && entry.final_loss > report.entries.back().final_loss) {
            report.loss_nonincreasing = false;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

SpeedupReport cli_speedup(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
    if (cfg.speedup_clients.empty()) throw ConfigError("speedup: missing speedup.n client list");
    if (cfg.seeds.size() < 3) {
        throw ConfigError(fmt::format("seeds: a speedup study needs at least 3 seeds, got {}", cfg.seeds.size()));
    }
    SpeedupReport report = speedup_study(cfg, cfg.speedup_clients, threads);
    const fs::path dir = ensure_dir(out_dir);
    std::string summary = "n,lambda,alpha,beta,gamma,T0,batch,final_mean_loss,final_mean_s_over_n,loss_nonincreasing\n";
    for (const SpeedupEntry& e : report.entries) {
        std::string csv = "t,mean_loss,mean_s_over_n,mean_accuracy\n";
        for (const SpeedupPoint& p : e.mean_trajectory) {
            csv += fmt::format("{},{},{},{}\n", p.t, p.loss, p.s_over_n, number(p.accuracy));
        }
        write_file(dir / fmt::format("speedup_n{}.csv", e.clients), csv);
        summary += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", e.clients, e.lambda, e.hp.alpha, e.hp.beta, e.hp.gamma,
                               e.hp.period, e.hp.batch, e.final_loss, e.mean_trajectory.back().s_over_n,
                               report.loss_nonincreasing ? 1 : 0);
    }
    write_file(dir / "speedup_summary.csv", summary);
    return report;
}

std::string spectral_report(const ExperimentConfig& cfg) {
    const MixingMatrix w = build_mixing(cfg.topology);
    const HyperParams& hp = cfg.hyper.params;
    const double alpha_rho = cfg.hyper.auto_mode ? 0.0 : hp.alpha * cfg.regularizer.weak_modulus();
    std::string out = fmt::format("topology: {}\nlambda: {}\nT0: {}\nalpha_rho: {}\n", cfg.topology.describe(),
                                  w.lambda(), hp.period, alpha_rho);
    const DeltaParams d = delta_params(w.lambda(), hp.period, alpha_rho);
    out += fmt::format("delta1: {}\ndelta2: {}\n", d.delta1, d.delta2);
    if (!cfg.hyper.auto_mode && hp.momentum == Momentum::Nesterov) {
        out += fmt::format("omega: {}\n", nesterov_omega(hp.gamma));
    }
    return out;
}

std::string partition_report(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto data = make_data(cfg, seed);
    const Dataset& train = data.first;
    const Partition part = make_partition(cfg, train, cfg.topology.n, seed);
    const Eigen::MatrixXd share = class_proportions(train.labels, part);
    const std::vector<int> classes = train.classes();

    std::string out = "class";
    for (int i = 0; i < part.clients(); ++i) out += fmt::format(",client{}", i);
    out += "\n";
    for (Eigen::Index c = 0; c < share.rows(); ++c) {
        out += fmt::format("{}", classes[static_cast<std::size_t>(c)]);
        for (Eigen::Index i = 0; i < share.cols(); ++i) out += fmt::format(",{:.4f}", share(c, i));
        out += "\n";
    }
    out += "samples";
    for (const auto& rows : part.assignments) out += fmt::format(",{}", rows.size());
    out += "\n";
    return out;
}

}  // namespace depositum
