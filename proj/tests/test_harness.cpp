#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "depositum/config.hpp"
#include "depositum/errors.hpp"
#include "depositum/experiment.hpp"

using namespace depositum;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json base_config() {
    return json::parse(R"({
      "schema_version": 1,
      "problem": {"kind": "logistic", "data": {"source": "synthetic", "d": 6, "samples": 240, "separation": 2.0, "seed": 5}},
      "partition": {"kind": "iid"},
      "topology": {"kind": "complete", "n": 4},
      "regularizer": {"kind": "l1", "weight": 0.01},
      "hyperparams": {"alpha": 0.1, "beta": 1.0, "gamma": 0.5, "T0": 1, "batch": 4, "momentum": "polyak"},
      "T": 50,
      "eval_every": 1,
      "seeds": [1]
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "depositum_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string config_error(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("valid config") {
        const ExperimentConfig cfg = parse_config(base_config());
        CHECK(cfg.topology.kind == GraphKind::Complete);
        CHECK(cfg.topology.n == 4);
        CHECK(cfg.hyper.params.alpha == 0.1);
        CHECK(cfg.hyper.params.iterations == 50);
        CHECK(cfg.hyper.params.batch == 4);
        CHECK(cfg.regularizer.name() == Regularizer::l1(0.01).name());
        CHECK(cfg.data.seed == 5u);
        CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
    }

    TEST_CASE("violations name the field") {
        json doc = base_config();
        doc["hyperparams"]["gamma"] = 1.0;
        std::string msg = config_error(doc);
        CHECK(msg.find("hyperparams.gamma") == 0);
        CHECK(msg.find("γ∈[0,1)") != std::string::npos);

        doc = base_config();
        doc["hyperparams"]["batch"] = 0;
        CHECK(config_error(doc).find("hyperparams.batch") == 0);

        doc = base_config();
        doc["regularizer"] = {{"kind", "mcp"}, {"lam", 1.0}, {"theta", 0.1}};
        CHECK(config_error(doc).find("hyperparams.alpha") == 0);

        doc = base_config();
        doc["topology"] = {{"kind", "edgelist"}, {"n", 4}, {"edges", {{0, 1}, {2, 3}}}};
        CHECK(config_error(doc).find("topology") == 0);
        CHECK(config_error(doc).find("not connected") != std::string::npos);

        doc = base_config();
        doc["topology"]["colour"] = "red";
        CHECK(config_error(doc).find("topology.colour: unknown field") == 0);

        doc = base_config();
        doc["schema_version"] = 2;
        CHECK(config_error(doc).find("schema_version") == 0);

        doc = base_config();
        doc["regularizer"] = {{"kind", "l1"}, {"lam", 1.0}};
        CHECK(config_error(doc).find("regularizer.lam") == 0);

        doc = base_config();
        doc["partition"] = {{"kind", "dirichlet"}, {"theta", 0.0}};
        CHECK(config_error(doc).find("partition.theta") == 0);

        doc = base_config();
        doc.erase("T");
        CHECK(config_error(doc).find("T: missing") == 0);
    }

    TEST_CASE("syntax errors carry line and column") {
        try {
            (void)parse_config(std::string_view("{\n  \"T\": 5,\n  oops\n}"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(e.column() == 3);
        }
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
    }

    TEST_CASE("auto mode and sweeps") {
        json doc = base_config();
        doc["hyperparams"] = {{"mode", "auto"}, {"T0", 5}, {"momentum", "nesterov"}};
        ExperimentConfig cfg = parse_config(doc);
        CHECK(cfg.hyper.auto_mode);
        CHECK(cfg.hyper.params.period == 5);
        CHECK(cfg.hyper.params.momentum == Momentum::Nesterov);
        doc["hyperparams"]["alpha"] = 0.1;
        CHECK(config_error(doc).find("hyperparams.alpha") == 0);
        doc["hyperparams"] = "auto";
        CHECK(parse_config(doc).hyper.auto_mode);

        doc = base_config();
        doc["sweep"] = {{"axis", "gamma"}, {"values", {0.0, 0.5, 1.0}}};
        CHECK(config_error(doc).find("sweep.values[2]") == 0);
        doc["sweep"]["values"] = {0.0, 0.9};
        cfg = parse_config(doc);
        CHECK(apply_sweep_value(cfg, 1).hyper.params.gamma == 0.9);
        CHECK_FALSE(apply_sweep_value(cfg, 1).sweep.has_value());
        doc["sweep"] = {{"axis", "topology"}, {"values", {{{"kind", "ring"}, {"n", 4}}}}};
        CHECK(apply_sweep_value(parse_config(doc), 0).topology.kind == GraphKind::Ring);
    }

    TEST_CASE("digest is stable under re-serialization") {
        const std::string text = base_config().dump(4);
        const ExperimentConfig a = parse_config(std::string_view(text));
        const ExperimentConfig b = parse_config(std::string_view(json::parse(text).dump()));
        CHECK(a.digest() == b.digest());
        CHECK(a.digest().size() == 16);
        json other = base_config();
        other["T"] = 51;
        CHECK(parse_config(other).digest() != a.digest());
        CHECK(fnv1a_hex("") == "cbf29ce484222325");
        CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    }
}

TEST_SUITE("experiments") {
    TEST_CASE("run writes one trace per seed with the expected rows") {
        json doc = base_config();
        doc["seeds"] = {1, 2};
        doc["eval_every"] = 3;
        const fs::path dir = scratch("run");
        const RunOutput out = cli_run(parse_config(doc), dir.string(), 2);
        CHECK(out.runs.size() == 2);
        const std::string csv = slurp(dir / "trace_seed1.csv");
        CHECK(csv.rfind(kTraceHeader, 0) == 0);
        CHECK(count_lines(csv) == 1 + (50 + 2) / 3 + 1);  // header + ceil(T/k) + final
        CHECK(fs::exists(dir / "trace_seed2.json"));
        const json meta = json::parse(slurp(dir / "trace_seed2.json"));
        CHECK(meta["config_digest"] == parse_config(doc).digest());
        CHECK(meta["seed"] == 2);
    }

    TEST_CASE("same config and seed give byte-identical traces") {
        const ExperimentConfig cfg = parse_config(base_config());
        const fs::path a = scratch("det_a");
        const fs::path b = scratch("det_b");
        cli_run(cfg, a.string(), 1);
        cli_run(cfg, b.string(), 4);
        CHECK(slurp(a / "trace_seed1.csv") == slurp(b / "trace_seed1.csv"));
    }

    TEST_CASE("sweep writes a trace per cell and a summary") {
        json doc = base_config();
        doc["seeds"] = {1, 2};
        doc["sweep"] = {{"axis", "alpha"}, {"values", {0.01, 0.05}}};
        const fs::path dir = scratch("sweep");
        const auto cells = cli_sweep(parse_config(doc), dir.string(), 4);
        CHECK(cells.size() == 4);
        std::size_t traces = 0;
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            traces += entry.path().extension() == ".csv" && entry.path().filename() != "summary.csv";
        }
        CHECK(traces == 4);
        CHECK(count_lines(slurp(dir / "summary.csv")) == 5);
        CHECK(cells[2].result.hp.alpha == 0.05);
    }

    TEST_CASE("equal alpha*beta gives near-coincident loss curves") {
        json doc = base_config();
        doc["topology"] = {{"kind", "ring"}, {"n", 6}};
        doc["partition"] = {{"kind", "dirichlet"}, {"theta", 0.5}};
        doc["T"] = 200;
        doc["hyperparams"] = {{"alpha", 0.2}, {"beta", 0.5}, {"gamma", 0.5}, {"T0", 1}, {"batch", 8}};
        const RunResult a = run_experiment(parse_config(doc), 3);
        doc["hyperparams"]["alpha"] = 0.1;
        doc["hyperparams"]["beta"] = 1.0;
        const RunResult b = run_experiment(parse_config(doc), 3);
        doc["hyperparams"]["alpha"] = 0.02;
        const RunResult c = run_experiment(parse_config(doc), 3);
        double lo = 1e300, hi = -1e300, gap = 0.0, gap_other = 0.0;
        for (std::size_t r = 0; r < a.trace.records.size(); ++r) {
            lo = std::min({lo, a.trace.records[r].loss, b.trace.records[r].loss});
            hi = std::max({hi, a.trace.records[r].loss, b.trace.records[r].loss});
            gap = std::max(gap, std::abs(a.trace.records[r].loss - b.trace.records[r].loss));
            gap_other = std::max(gap_other, std::abs(c.trace.records[r].loss - b.trace.records[r].loss));
        }
        CHECK(gap < 0.1 * (hi - lo));
        CHECK(gap_other > gap);
    }

    TEST_CASE("longer communication periods leave larger consensus errors") {
        json doc = base_config();
        doc["topology"] = {{"kind", "ring"}, {"n", 8}};
        doc["partition"] = {{"kind", "dirichlet"}, {"theta", 1.0}};
        doc["problem"]["data"]["samples"] = 400;
        doc["T"] = 200;
        doc["seeds"] = {1};
        doc["sweep"] = {{"axis", "T0"}, {"values", {1, 5, 10}}};
        const ExperimentConfig cfg = parse_config(doc);
        double previous = -1.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const RunResult r = run_experiment(apply_sweep_value(cfg, k), 1);
            double mean = 0.0;
            for (const auto& rec : r.trace.records) mean += rec.cons_x_sq / static_cast<double>(r.trace.records.size());
            CHECK(mean > previous);
            previous = mean;
        }
    }

    TEST_CASE("held-out accuracy and softmax data") {
        json doc = base_config();
        doc["problem"] = {{"kind", "softmax"},
                          {"data", {{"source", "synthetic"}, {"d", 4}, {"samples", 200}, {"classes", 3},
                                    {"separation", 4.0}, {"test_samples", 100}, {"seed", 2}}}};
        doc["T"] = 100;
        const RunResult r = run_experiment(parse_config(doc), 1);
        REQUIRE(r.trace.records.back().accuracy.has_value());
        CHECK(*r.trace.records.back().accuracy > 0.8);
        CHECK(*r.trace.records.front().accuracy < 0.7);
    }

    TEST_CASE("libsvm input") {
        const fs::path dir = scratch("libsvm");
        std::ofstream(dir / "train.svm") << "+1 1:1 2:0.5\n-1 1:-1\n+1 2:2\n-1 1:-0.5 2:-1\n";
        json doc = base_config();
        doc["problem"]["data"] = {{"source", "libsvm"}, {"path", (dir / "train.svm").string()},
                                  {"test_path", (dir / "train.svm").string()}};
        doc["topology"]["n"] = 2;
        const RunResult r = run_experiment(parse_config(doc), 1);
        CHECK(r.trace.records.size() == 51);
        CHECK(*r.trace.records.back().accuracy == 1.0);
    }

    TEST_CASE("speedup study") {
        json doc = base_config();
        doc["problem"]["data"]["samples"] = 400;
        doc["hyperparams"] = {{"mode", "auto"}, {"T0", 2}};
        doc["T"] = 60;
        doc["eval_every"] = 10;
        doc["seeds"] = {1, 2, 3};
        doc["speedup"] = {{"n", {1, 4}}};
        const fs::path dir = scratch("speedup");
        const SpeedupReport report = cli_speedup(parse_config(doc), dir.string(), 4);
        REQUIRE(report.entries.size() == 2);
        CHECK(report.entries[0].clients == 1);
        CHECK(report.entries[0].hp.batch == 1);
        CHECK(report.entries[1].hp.batch == 2);
        CHECK(report.entries[1].mean_trajectory.size() == 7);
        CHECK(fs::exists(dir / "speedup_n1.csv"));
        CHECK(fs::exists(dir / "speedup_n4.csv"));
        CHECK(count_lines(slurp(dir / "speedup_summary.csv")) == 3);

        doc["seeds"] = {1};
        CHECK_THROWS_AS(cli_speedup(parse_config(doc), dir.string(), 1), ConfigError);
        doc["seeds"] = {1, 2, 3};
        doc["speedup"]["n"] = {100};
        CHECK_THROWS_AS(cli_speedup(parse_config(doc), dir.string(), 1), BudgetTooSmall);
    }

    TEST_CASE("resizing topologies") {
        CHECK(resize_topology(TopologySpec::ring(4), 9).n == 9);
        CHECK(resize_topology(TopologySpec::ring(4), 9).kind == GraphKind::Ring);
        CHECK(resize_topology(TopologySpec::star(4), 1).kind == GraphKind::Complete);
        CHECK_THROWS_AS(resize_topology(TopologySpec::edge_list(3, {{0, 1}, {1, 2}}), 5), ConfigError);
    }

    TEST_CASE("reports") {
        json doc = base_config();
        doc["topology"] = {{"kind", "ring"}, {"n", 4}};
        doc["hyperparams"]["momentum"] = "nesterov";
        const std::string spectral = spectral_report(parse_config(doc));
        CHECK(spectral.find("lambda: 0.333333") != std::string::npos);
        CHECK(spectral.find("delta1: 0.148148") != std::string::npos);
        CHECK(spectral.find("omega: 5") != std::string::npos);

        doc["partition"] = {{"kind", "dirichlet"}, {"theta", 0.1}};
        const std::string table = partition_report(parse_config(doc), 1);
        CHECK(table.rfind("class,client0,client1,client2,client3\n", 0) == 0);
        CHECK(count_lines(table) == 4);
    }
}

TEST_SUITE("command line") {
    TEST_CASE("exit codes") {
        const fs::path dir = scratch("cli");
        json bad = base_config();
        bad["hyperparams"]["gamma"] = 1.0;
        std::ofstream(dir / "bad.json") << bad.dump(2);
        std::ofstream(dir / "good.json") << base_config().dump(2);
        std::ofstream(dir / "broken.json") << "{\n  \"T\": \n}";
        const std::string cli = DEPOSITUM_CLI;
        const auto status = [&](const std::string& args) {
            const int raw = std::system((cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
            return WEXITSTATUS(raw);
        };
        CHECK(status("run --config " + (dir / "good.json").string() + " --out " + (dir / "o").string() +
                     " --seeds 4,5 --eval-every 10") == 0);
        CHECK(count_lines(slurp(dir / "o" / "trace_seed5.csv")) == 1 + 5 + 1);
        CHECK(status("run --config " + (dir / "bad.json").string()) == 2);
        CHECK(slurp(dir / "log.txt").find("γ∈[0,1)") != std::string::npos);
        CHECK(status("run --config " + (dir / "broken.json").string()) == 2);
        CHECK(slurp(dir / "log.txt").find("line 3") != std::string::npos);
        CHECK(status("spectral --config " + (dir / "good.json").string()) == 0);
        CHECK(status("partition-report --config " + (dir / "good.json").string()) == 0);
        CHECK(status("frobnicate") != 0);
    }
}
