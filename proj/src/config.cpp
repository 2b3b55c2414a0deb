#include "depositum/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(fmt::format("{}: {}", where, what));
}

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

/// Typed access to one JSON object that remembers its path and rejects unknown keys.
class Node {
public:
    Node(const json& value, std::string path, std::set<std::string> allowed) : value_(value), path_(std::move(path)) {
        if (!value_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
        for (const auto& [key, _] : value_.items()) {
            if (!allowed.contains(key)) fail(join(path_, key), "unknown field");
        }
    }

    bool has(const std::string& key) const { return value_.contains(key); }
    std::string at(const std::string& key) const { return join(path_, key); }

    const json& raw(const std::string& key) const {
        if (!has(key)) fail(at(key), "missing required field");
        return value_.at(key);
    }

    double number(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(at(key), "expected a finite number");
        return d;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    std::string text(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }

private:
    const json& value_;
    std::string path_;
};

int to_int(std::int64_t v, const std::string& where, std::int64_t lo) {
    if (v < lo || v > std::numeric_limits<int>::max()) fail(where, fmt::format("must be an integer >= {}, got {}", lo, v));
    return static_cast<int>(v);
}

ModelKind parse_model_kind(const std::string& name, const std::string& where) {
    if (name == "logistic") return ModelKind::LogisticBinary;
    if (name == "softmax") return ModelKind::SoftmaxLinear;
    if (name == "mlp") return ModelKind::Mlp1;
    fail(where, fmt::format("unknown problem kind '{}' (logistic, softmax, mlp)", name));
}

DataConfig parse_data(const json& node, const std::string& where) {
    Node n(node, where, {"source", "d", "samples", "classes", "separation", "test_samples", "seed", "path",
                         "test_path", "dim"});
    DataConfig data;
    const std::string source = n.text("source", "synthetic");
    if (source == "synthetic") {
        data.source = DataConfig::Source::Synthetic;
        data.dim = to_int(n.integer("d", data.dim), n.at("d"), 1);
        data.samples = to_int(n.integer("samples", data.samples), n.at("samples"), 1);
        data.classes = to_int(n.integer("classes", data.classes), n.at("classes"), 2);
        data.separation = n.number("separation", data.separation);
        if (data.separation < 0.0) fail(n.at("separation"), "must be >= 0");
        data.test_samples = to_int(n.integer("test_samples", 0), n.at("test_samples"), 0);
    } else if (source == "libsvm") {
        data.source = DataConfig::Source::Libsvm;
        data.path = n.text("path");
        data.test_path = n.text("test_path", "");
        if (n.has("dim")) data.libsvm_dim = to_int(n.integer("dim"), n.at("dim"), 1);
    } else {
        fail(n.at("source"), fmt::format("unknown data source '{}' (synthetic, libsvm)", source));
    }
    if (n.has("seed")) {
        const std::int64_t s = n.integer("seed");
        if (s < 0) fail(n.at("seed"), "must be >= 0");
        data.seed = static_cast<std::uint64_t>(s);
    }
    return data;
}

HyperConfig parse_hyper(const json& node, const std::string& where) {
    HyperConfig hc;
    if (node.is_string()) {
        if (node.get<std::string>() != "auto") fail(where, "expected an object or \"auto\"");
        hc.auto_mode = true;
        return hc;
    }
    Node n(node, where, {"mode", "alpha", "beta", "gamma", "T0", "batch", "momentum"});
    const std::string mode = n.text("mode", "explicit");
    if (mode == "auto") {
        hc.auto_mode = true;
    } else if (mode != "explicit") {
        fail(n.at("mode"), fmt::format("unknown mode '{}' (explicit, auto)", mode));
    }
    HyperParams& hp = hc.params;
    if (hc.auto_mode) {
        for (const char* key : {"alpha", "beta", "gamma", "batch"}) {
            if (n.has(key)) fail(n.at(key), "is derived automatically in auto mode");
        }
    } else {
        hp.alpha = n.number("alpha");
        hp.beta = n.number("beta", 1.0);
        hp.gamma = n.number("gamma", 0.0);
        const std::int64_t batch = n.integer("batch", 1);
        if (batch < 1) fail(n.at("batch"), fmt::format("batch size B must be >= 1, got {}", batch));
        hp.batch = to_int(batch, n.at("batch"), 1);
        if (!(hp.alpha > 0.0)) fail(n.at("alpha"), fmt::format("step size alpha must be > 0, got {}", hp.alpha));
        if (!(hp.beta > 0.0)) fail(n.at("beta"), fmt::format("tracking step beta must be > 0, got {}", hp.beta));
        if (!(hp.gamma >= 0.0 && hp.gamma < 1.0)) {
            fail(n.at("gamma"), fmt::format("momentum parameter must satisfy γ∈[0,1), got {}", hp.gamma));
        }
    }
    const std::int64_t period = n.integer("T0", 1);
    if (period < 1) fail(n.at("T0"), fmt::format("communication period must be >= 1, got {}", period));
    hp.period = to_int(period, n.at("T0"), 1);
    hp.momentum = parse_momentum(n.text("momentum", "polyak"), n.at("momentum"));
    return hc;
}

void validate(ExperimentConfig& cfg) {
    try {
        (void)build_mixing(cfg.topology);
    } catch (const Error& e) {
        fail("topology", e.what());
    }
    if (cfg.partition.iid && cfg.data.source == DataConfig::Source::Synthetic && cfg.data.samples < cfg.topology.n) {
        fail("problem.data.samples", fmt::format("{} samples cannot cover {} clients", cfg.data.samples, cfg.topology.n));
    }
    if (cfg.model.kind == ModelKind::LogisticBinary && cfg.data.source == DataConfig::Source::Synthetic &&
        cfg.data.classes != 2) {
        fail("problem.data.classes", "the logistic problem needs exactly 2 classes");
    }
    if (!cfg.hyper.auto_mode) {
        const double rho = cfg.regularizer.weak_modulus();
        if (cfg.hyper.params.alpha * rho >= 1.0) {
            fail("hyperparams.alpha", fmt::format("alpha * rho = {} must be < 1 for the {} regularizer",
                                                  cfg.hyper.params.alpha * rho, cfg.regularizer.name()));
        }
    }
    cfg.hyper.params.iterations = cfg.iterations;
}

}  // namespace

Momentum parse_momentum(const std::string& name, const std::string& where) {
    if (name == "polyak") return Momentum::Polyak;
    if (name == "nesterov") return Momentum::Nesterov;
    if (name == "none") return Momentum::None;
    fail(where, fmt::format("unknown momentum '{}' (polyak, nesterov, none)", name));
}

TopologySpec parse_topology(const json& node, const std::string& where) {
    Node n(node, where, {"kind", "n", "weighting", "edges"});
    const std::string kind = n.text("kind");
    const int clients = to_int(n.integer("n"), n.at("n"), 1);
    std::optional<Weighting> weighting;
    if (n.has("weighting")) {
        const std::string w = n.text("weighting");
        if (w == "uniform") {
            weighting = Weighting::Uniform;
        } else if (w == "metropolis") {
            weighting = Weighting::Metropolis;
        } else {
            fail(n.at("weighting"), fmt::format("unknown weighting '{}' (uniform, metropolis)", w));
        }
    }
    if (kind != "edgelist" && n.has("edges")) fail(n.at("edges"), "only allowed for kind \"edgelist\"");
    try {
        if (kind == "complete") return TopologySpec::complete(clients, weighting.value_or(Weighting::Uniform));
        if (kind == "ring") return TopologySpec::ring(clients, weighting.value_or(Weighting::Uniform));
        if (kind == "star") return TopologySpec::star(clients, weighting.value_or(Weighting::Metropolis));
        if (kind == "edgelist") {
            const json& list = n.raw("edges");
            if (!list.is_array()) fail(n.at("edges"), "expected an array of [i, j] pairs");
            std::vector<std::pair<int, int>> edges;
            for (std::size_t k = 0; k < list.size(); ++k) {
                const json& e = list[k];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                    fail(fmt::format("{}[{}]", n.at("edges"), k), "expected a pair of integers");
                }
                edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
            return TopologySpec::edge_list(clients, std::move(edges), weighting.value_or(Weighting::Metropolis));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(where, e.what());
    }
    fail(n.at("kind"), fmt::format("unknown topology '{}' (complete, ring, star, edgelist)", kind));
}

Regularizer parse_regularizer(const json& node, const std::string& where) {
    Node n(node, where, {"kind", "weight", "lam", "theta", "a", "lo", "hi"});
    const std::string kind = n.text("kind");
    const auto only = [&](std::set<std::string> keys) {
        keys.insert("kind");
        for (const auto& [key, _] : node.items()) {
            if (!keys.contains(key)) fail(n.at(key), fmt::format("not a parameter of the {} regularizer", kind));
        }
    };
    try {
        if (kind == "zero") {
            only({});
            return Regularizer::zero();
        }
        if (kind == "l1") {
            only({"weight"});
            return Regularizer::l1(n.number("weight"));
        }
        if (kind == "mcp") {
            only({"lam", "theta"});
            return Regularizer::mcp(n.number("lam"), n.number("theta"));
        }
        if (kind == "scad") {
            only({"lam", "a"});
            return Regularizer::scad(n.number("lam"), n.number("a"));
        }
        if (kind == "box") {
            only({"lo", "hi"});
            return Regularizer::box(n.number("lo"), n.number("hi"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(where, e.what());
    }
    fail(n.at("kind"), fmt::format("unknown regularizer '{}' (zero, l1, mcp, scad, box)", kind));
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", hash);
}

std::string ExperimentConfig::digest() const { return fnv1a_hex(source.dump()); }

ExperimentConfig parse_config(const json& doc) {
    Node root(doc, "", {"schema_version", "problem", "partition", "topology", "regularizer", "hyperparams",
                        "algorithm", "seeds", "T", "eval_every", "output", "sweep", "speedup"});
    ExperimentConfig cfg;
    cfg.source = doc;

    const std::int64_t version = root.integer("schema_version");
    if (version != kSchemaVersion) {
        fail("schema_version", fmt::format("unsupported version {} (expected {})", version, kSchemaVersion));
    }

    {
        Node p(root.raw("problem"), "problem", {"kind", "hidden", "noise_std", "data"});
        cfg.model.kind = parse_model_kind(p.text("kind", "logistic"), p.at("kind"));
        cfg.model.hidden = to_int(p.integer("hidden", cfg.model.hidden), p.at("hidden"), 1);
        cfg.noise_std = p.number("noise_std", 0.0);
        if (cfg.noise_std < 0.0) fail(p.at("noise_std"), "must be >= 0");
        cfg.data = p.has("data") ? parse_data(p.raw("data"), p.at("data")) : DataConfig{};
    }

    if (root.has("partition")) {
        Node p(root.raw("partition"), "partition", {"kind", "theta"});
        const std::string kind = p.text("kind", "iid");
        if (kind == "iid") {
            if (p.has("theta")) fail(p.at("theta"), "only allowed for kind \"dirichlet\"");
            cfg.partition.iid = true;
        } else if (kind == "dirichlet") {
            cfg.partition.iid = false;
            cfg.partition.theta = p.number("theta");
            if (!(cfg.partition.theta > 0.0)) fail(p.at("theta"), "Dirichlet concentration must be > 0");
        } else {
            fail(p.at("kind"), fmt::format("unknown partition '{}' (iid, dirichlet)", kind));
        }
    }

    cfg.topology = parse_topology(root.raw("topology"), "topology");
    cfg.regularizer = root.has("regularizer") ? parse_regularizer(root.raw("regularizer"), "regularizer")
                                              : Regularizer::zero();
    cfg.hyper = parse_hyper(root.raw("hyperparams"), "hyperparams");

    const std::string algorithm = root.text("algorithm", "depositum");
    if (algorithm == "depositum") {
        cfg.algorithm = Algorithm::Depositum;
    } else if (algorithm == "prox_dsgd") {
        cfg.algorithm = Algorithm::ProxDsgd;
    } else {
        fail("algorithm", fmt::format("unknown algorithm '{}' (depositum, prox_dsgd)", algorithm));
    }

    if (root.has("seeds")) {
        const json& seeds = root.raw("seeds");
        if (!seeds.is_array() || seeds.empty()) fail("seeds", "expected a non-empty array of integers");
        cfg.seeds.clear();
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            if (!seeds[k].is_number_integer() || seeds[k].get<std::int64_t>() < 0) {
                fail(fmt::format("seeds[{}]", k), "expected a non-negative integer");
            }
            cfg.seeds.push_back(seeds[k].get<std::uint64_t>());
        }
    }

    cfg.iterations = root.integer("T");
    if (cfg.iterations < 0) fail("T", fmt::format("iteration budget must be >= 0, got {}", cfg.iterations));
    cfg.eval_every = root.integer("eval_every", 1);
    if (cfg.eval_every < 1) fail("eval_every", fmt::format("must be >= 1, got {}", cfg.eval_every));
    cfg.output = root.text("output", cfg.output);

    if (root.has("sweep")) {
        Node s(root.raw("sweep"), "sweep", {"axis", "values"});
        SweepConfig sweep;
        sweep.axis = s.text("axis");
        static const std::set<std::string> axes{"alpha", "beta", "gamma", "T0", "topology"};
        if (!axes.contains(sweep.axis)) {
            fail(s.at("axis"), fmt::format("unknown axis '{}' (alpha, beta, gamma, T0, topology)", sweep.axis));
        }
        const json& values = s.raw("values");
        if (!values.is_array() || values.empty()) fail(s.at("values"), "expected a non-empty array");
        for (const auto& v : values) sweep.values.push_back(v);
        cfg.sweep = std::move(sweep);
    }

    if (root.has("speedup")) {
        Node s(root.raw("speedup"), "speedup", {"n"});
        const json& list = s.raw("n");
        if (!list.is_array() || list.empty()) fail(s.at("n"), "expected a non-empty array of client counts");
        for (std::size_t k = 0; k < list.size(); ++k) {
            if (!list[k].is_number_integer()) fail(fmt::format("speedup.n[{}]", k), "expected an integer");
            cfg.speedup_clients.push_back(to_int(list[k].get<std::int64_t>(), fmt::format("speedup.n[{}]", k), 1));
        }
    }

    validate(cfg);
    if (cfg.sweep) {
        for (std::size_t k = 0; k < cfg.sweep->values.size(); ++k) {
            (void)apply_sweep_value(cfg, k);
        }
    }
    return cfg;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, std::size_t index) {
    if (!base.sweep || index >= base.sweep->values.size()) {
        throw InvalidArgument(fmt::format("sweep value {} does not exist", index));
    }
    const std::string& axis = base.sweep->axis;
    const json& value = base.sweep->values[index];
    const std::string where = fmt::format("sweep.values[{}]", index);

    json doc = base.source;
    doc.erase("sweep");
    if (axis == "topology") {
        doc["topology"] = value;
    } else {
        json& hp = doc["hyperparams"];
        if (!hp.is_object()) fail(where, "sweeps over hyperparameters need explicit hyperparams");
        if (axis == "T0") {
            if (!value.is_number_integer()) fail(where, "expected an integer period");
        } else {
            if (!value.is_number()) fail(where, "expected a number");
            if (hp.value("mode", "explicit") == "auto") fail(where, "axis is derived automatically in auto mode");
        }
        hp[axis] = value;
    }
    try {
        return parse_config(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{} -> {}", where, e.what()));
    }
}

ExperimentConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // e.byte is the 1-based offset just past the failing character
        const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t k = 0; k < offset; ++k) {
            if (text[k] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(line, column, "invalid JSON");
    }
    return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open config '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(std::string_view(buffer.str()));
}

}  // namespace depositum
