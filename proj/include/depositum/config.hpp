#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "depositum/optimizer.hpp"
#include "depositum/problem.hpp"
#include "depositum/regularizers.hpp"
#include "depositum/topology.hpp"

namespace depositum {

inline constexpr int kSchemaVersion = 1;

struct DataConfig {
    enum class Source { Synthetic, Libsvm };
    Source source = Source::Synthetic;
    // synthetic
    int dim = 10;
    int samples = 400;
    int classes = 2;
    double separation = 2.0;
    int test_samples = 0;
    /// Data seed; when absent each run seed also generates its own data.
    std::optional<std::uint64_t> seed;
    // libsvm
    std::string path;
    std::string test_path;
    std::optional<int> libsvm_dim;
};

struct PartitionConfig {
    bool iid = true;
    double theta = 1.0;
};

struct HyperConfig {
    /// Auto mode: alpha, beta, gamma and B derived per run.
    bool auto_mode = false;
    HyperParams params;
};

struct SweepConfig {
    std::string axis;  // alpha | beta | gamma | T0 | topology
    std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
    ModelSpec model;
    double noise_std = 0.0;
    DataConfig data;
    PartitionConfig partition;
    TopologySpec topology;
    Regularizer regularizer = Regularizer::zero();
    HyperConfig hyper;
    Algorithm algorithm = Algorithm::Depositum;
    std::vector<std::uint64_t> seeds{0};
    std::int64_t iterations = 100;
    std::int64_t eval_every = 1;
    std::string output = "out";
    std::optional<SweepConfig> sweep;
    std::vector<int> speedup_clients;
    /// Canonical form of the document the config was read from.
    nlohmann::json source;

    /// 16 hex digits of FNV-1a over the canonical JSON dump.
    std::string digest() const;
};

/// Parses and validates a config document. Syntax errors raise ParseError with
/// a 1-based line and column; schema and precondition violations raise
/// ConfigError whose message starts with the offending field path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// The config with sweep value `index` substituted along the sweep axis, revalidated.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, std::size_t index);

TopologySpec parse_topology(const nlohmann::json& node, const std::string& where);
Regularizer parse_regularizer(const nlohmann::json& node, const std::string& where);
Momentum parse_momentum(const std::string& name, const std::string& where);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace depositum
