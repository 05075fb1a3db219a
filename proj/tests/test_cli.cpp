#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedquant/config.hpp"
#include "fedquant/errors.hpp"
#include "json.hpp"

using namespace fedquant;
using nlohmann::json;

namespace {

const char* kExpectedMetricsHeader =
    "round,refresh,sampled_clients,train_loss,train_accuracy,test_loss,test_accuracy,"
    "update_range,update_variance,update_excess_kurtosis,uplink_index_bits,"
    "uplink_codebook_bits,uplink_codebook_bits_amortised,uplink_norm_bits,downlink_bits,"
    "wire_bits_total,cumulative_bits";

const char* kExpectedSweepHeader =
    "axis,value,runs,test_accuracy_mean,test_accuracy_std,train_accuracy_mean,"
    "cumulative_bits_mean,reduction_mean";

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::filesystem::path fresh_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

std::size_t count_fields(const std::string& line) {
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

// Runs the installed binary; `env_prefix` may carry VAR=value assignments.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int invocation = 0;
    const auto scratch = std::filesystem::temp_directory_path() /
                         ("fedquant_cli_io_" + std::to_string(invocation++));
    std::filesystem::create_directories(scratch);
    const auto out_path = scratch / "stdout.txt";
    const auto err_path = scratch / "stderr.txt";
    std::string cmd = env_prefix.empty() ? "" : env_prefix + " ";
    cmd += FEDQUANT_CLI_PATH;
    cmd += " " + args + " > " + out_path.string() + " 2> " + err_path.string();
    const int raw = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

void expect_config_error(const std::string& text, const std::string& needle) {
    try {
        parse_config_text(text, "test");
        FAIL_CHECK("config accepted: " << text);
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
}

} // namespace

TEST_CASE("presets parse, validate and match their files on disk") {
    const auto names = preset_names();
    REQUIRE(names == std::vector<std::string>{"synthetic-smoke", "mnist-reference",
                                              "dirichlet-sweep"});
    for (const auto& name : names) {
        const ExperimentSpec spec = load_preset(name);
        CHECK_NOTHROW(spec.federation.validate());
        CHECK(spec.model_widths.size() >= 2);
        // The shipped file is byte for byte the embedded text.
        const auto path = std::filesystem::path(FEDQUANT_SOURCE_DIR) / "presets" /
                          (name + ".json");
        CHECK(read_file(path) == preset_text(name));
    }
    CHECK_THROWS_AS(load_preset("no-such-preset"), config_error);
    CHECK_THROWS_AS(preset_text("no-such-preset"), config_error);

    const ExperimentSpec smoke = load_preset("synthetic-smoke");
    CHECK(smoke.federation.rounds == 10);
    CHECK(smoke.federation.quantiser == Quantiser::bu);
    CHECK(smoke.federation.levels == 64);
    const ExperimentSpec reference = load_preset("mnist-reference");
    CHECK(reference.model_widths ==
          std::vector<std::uint32_t>{784, 64, 48, 18, 12, 10});
    CHECK(reference.data_kind == DataKind::idx);
    const ExperimentSpec sweep = load_preset("dirichlet-sweep");
    CHECK(sweep.sweep.axis == "alpha");
    CHECK(sweep.sweep.seeds.size() == 5);
}

TEST_CASE("config errors name the offending field") {
    const std::string valid = preset_text("synthetic-smoke");
    CHECK_NOTHROW(parse_config_text(valid, "test"));

    expect_config_error("{\"bogus\": 1}", "bogus");
    expect_config_error("{\"federation\": {\"levels\": 0}}", "federation.levels");
    expect_config_error("{\"federation\": {\"quantiser\": \"fancy\"}}",
                        "federation.quantiser");
    expect_config_error("{\"federation\": {\"sampled_per_round\": 9, \"total_clients\": 4}}",
                        "federation.sampled_per_round");
    expect_config_error("{\"model\": {\"widths\": [16]}}", "model.widths");
    expect_config_error("{\"data\": {\"kind\": \"synthetic\", \"feature_dim\": 5}}",
                        "model.widths");
    expect_config_error("{\"sweep\": {\"axis\": \"sideways\"}}", "sweep.axis");
    expect_config_error("{\"sweep\": {\"axis\": \"alpha\"}}", "sweep.values");
    expect_config_error("{\"sweep\": {\"axis\": \"levels\", \"values\": [0.5]}}",
                        "sweep.values");
    expect_config_error("[1, 2]", "top level");
    expect_config_error("{\n  \"model\": {\n  ", "line 3");

    CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), config_error);
}

TEST_CASE("a parsed config echoes back to stable json") {
    for (const auto& name : preset_names()) {
        const ExperimentSpec spec = load_preset(name);
        const std::string echo = config_to_json(spec);
        const ExperimentSpec reparsed = parse_config_text(echo, "echo");
        CHECK(config_to_json(reparsed) == echo);
    }
}

TEST_CASE("synthetic datasets come out with the configured shape") {
    const ExperimentSpec spec = load_preset("synthetic-smoke");
    const auto [train, test] = load_datasets(spec);
    CHECK(train.size() == 600); // 4 classes x 150
    CHECK(test.size() == 160);  // 4 classes x 40
    CHECK(train.feature_dim == 16);
    CHECK(train.class_count == 4);
    CHECK_NOTHROW(train.validate());
    CHECK_NOTHROW(test.validate());

    // Same seed, same data.
    const auto [train2, test2] = load_datasets(spec);
    CHECK(train2.features == train.features);
    CHECK(test2.labels == test.labels);
}

TEST_CASE("run writes metrics, summary and manifest") {
    const auto out_dir = fresh_dir("fedquant_cli_run");
    const CliResult run =
        run_cli("run --preset synthetic-smoke --out-dir " + out_dir.string());
    CHECK(run.exit_code == 0);
    CHECK(run.err.empty());
    CHECK(run.out.find("final test accuracy") != std::string::npos);

    const auto lines = split_lines(read_file(out_dir / "metrics.csv"));
    REQUIRE(lines.size() == 11); // header + ten rounds
    CHECK(lines[0] == kExpectedMetricsHeader);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        CHECK(count_fields(lines[k]) == count_fields(lines[0]));
        CHECK(lines[k].substr(0, lines[k].find(',')) == std::to_string(k - 1));
    }
    // Ten-round refresh period: only round 0 ships codebooks.
    CHECK(lines[1].find(",1,") == lines[1].find(','));
    CHECK(lines[2][lines[2].find(',') + 1] == '0');

    const json summary = json::parse(read_file(out_dir / "summary.json"));
    CHECK(summary["model"]["parameters"] == 508);
    CHECK(summary["quantiser"] == "bu");
    CHECK(summary["levels"] == 64);
    CHECK(summary["rounds"] == 10);
    CHECK(summary["seed"] == 1);
    CHECK(summary["final_test"]["accuracy"].get<double>() > 0.8);
    CHECK(summary["reduction_vs_baseline"].get<double>() > 0.0);
    CHECK(summary["client_sizes"].size() == 10);

    const json manifest = json::parse(read_file(out_dir / "manifest.json"));
    CHECK(manifest["tool"] == "fedquant");
    CHECK(manifest["command"] == "run");
    CHECK(manifest["outputs"] == json::array({"metrics.csv", "summary.json"}));
    CHECK(manifest["config"]["federation"]["levels"] == 64);
}

TEST_CASE("reruns are byte-identical and seeds flow through") {
    const auto dir_a = fresh_dir("fedquant_cli_rerun_a");
    const auto dir_b = fresh_dir("fedquant_cli_rerun_b");
    CHECK(run_cli("run --preset synthetic-smoke --out-dir " + dir_a.string()).exit_code == 0);
    CHECK(run_cli("run --preset synthetic-smoke --out-dir " + dir_b.string()).exit_code == 0);
    CHECK(read_file(dir_a / "metrics.csv") == read_file(dir_b / "metrics.csv"));
    CHECK(read_file(dir_a / "summary.json") == read_file(dir_b / "summary.json"));

    const auto dir_c = fresh_dir("fedquant_cli_seeded");
    CHECK(run_cli("run --preset synthetic-smoke --seed 7 --out-dir " + dir_c.string())
              .exit_code == 0);
    const json summary = json::parse(read_file(dir_c / "summary.json"));
    CHECK(summary["seed"] == 7);
    CHECK(read_file(dir_c / "metrics.csv") != read_file(dir_a / "metrics.csv"));

    // Without --out-dir the environment picks the directory.
    const auto dir_d = fresh_dir("fedquant_cli_envdir");
    const CliResult env_run = run_cli("run --preset synthetic-smoke",
                                      "FEDQUANT_OUT_DIR=" + dir_d.string());
    CHECK(env_run.exit_code == 0);
    CHECK(read_file(dir_d / "metrics.csv") == read_file(dir_a / "metrics.csv"));
}

TEST_CASE("the cost table reproduces the reference figures") {
    const CliResult cost = run_cli("cost --preset mnist-reference");
    CHECK(cost.exit_code == 0);
    for (const char* needle :
         {"3,494,400", "327,702.4", "2,074,903", "40.62%", "2,129,605", "39.06%",
          "2,129,560", "2,184,160", "37.50%"}) {
        CHECK(cost.out.find(needle) != std::string::npos);
    }
}

TEST_CASE("sweeps aggregate seeded runs per axis value") {
    const auto out_dir = fresh_dir("fedquant_cli_sweep");
    const CliResult sweep =
        run_cli("sweep --preset dirichlet-sweep --out-dir " + out_dir.string());
    CHECK(sweep.exit_code == 0);

    const auto lines = split_lines(read_file(out_dir / "sweep.csv"));
    REQUIRE(lines.size() == 4); // header + three alpha values
    CHECK(lines[0] == kExpectedSweepHeader);
    std::vector<double> values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(lines[i].substr(0, lines[i].find(',')) == "alpha");
        std::istringstream row(lines[i].substr(lines[i].find(',') + 1));
        double value = 0.0;
        row >> value;
        values.push_back(value);
        CHECK(lines[i].find(",5,") != std::string::npos); // five seeds per value
    }
    REQUIRE(values.size() == 3);
    CHECK(values[0] < values[1]);
    CHECK(values[1] < values[2]);

    const json manifest = json::parse(read_file(out_dir / "manifest.json"));
    CHECK(manifest["command"] == "sweep");
}

TEST_CASE("a custom config file drives a levels sweep") {
    const auto dir = fresh_dir("fedquant_cli_config");
    const std::string config_text = R"({
  "model": {"widths": [6, 8, 4]},
  "data": {
    "kind": "synthetic",
    "classes": 4,
    "per_class": 40,
    "test_per_class": 10,
    "feature_dim": 6,
    "spread": 0.3
  },
  "federation": {
    "total_clients": 5,
    "sampled_per_round": 2,
    "rounds": 3,
    "quantiser": "bu",
    "levels": 16,
    "refresh_period": 5,
    "pretrain_fraction": 0.2,
    "pretrain_epochs": 1,
    "local_epochs": 1,
    "learning_rate": 0.05,
    "batch_size": 16
  },
  "seed": 3,
  "sweep": {"axis": "levels", "values": [8, 32], "seeds": [1, 2]}
}
)";
    {
        std::ofstream out(dir / "config.json", std::ios::binary);
        out << config_text;
    }
    const auto out_dir = dir / "out";
    const CliResult sweep = run_cli("sweep " + (dir / "config.json").string() +
                                    " --out-dir " + out_dir.string());
    CHECK(sweep.exit_code == 0);
    const auto lines = split_lines(read_file(out_dir / "sweep.csv"));
    REQUIRE(lines.size() == 3); // header + two level values
    CHECK(lines[1].rfind("levels,8,2,", 0) == 0);
    CHECK(lines[2].rfind("levels,32,2,", 0) == 0);

    const CliResult run = run_cli("run " + (dir / "config.json").string() +
                                  " --out-dir " + (dir / "run_out").string());
    CHECK(run.exit_code == 0);
    const auto metrics = split_lines(read_file(dir / "run_out" / "metrics.csv"));
    CHECK(metrics.size() == 4); // header + three rounds
}

TEST_CASE("bad invocations exit with distinct codes") {
    // Config problems exit 2 with a prefixed message.
    const CliResult no_axis = run_cli("sweep --preset synthetic-smoke --out-dir /tmp/unused");
    CHECK(no_axis.exit_code == 2);
    CHECK(no_axis.err.rfind("config error:", 0) == 0);

    const auto dir = fresh_dir("fedquant_cli_bad");
    {
        std::ofstream out(dir / "broken.json", std::ios::binary);
        out << "{\n  \"model\": {\n";
    }
    const CliResult malformed =
        run_cli("run " + (dir / "broken.json").string());
    CHECK(malformed.exit_code == 2);
    CHECK(malformed.err.find("malformed JSON") != std::string::npos);

    const CliResult both = run_cli("run " + (dir / "broken.json").string() +
                                   " --preset synthetic-smoke");
    CHECK(both.exit_code == 2);
    const CliResult neither = run_cli("run");
    CHECK(neither.exit_code == 2);

    const CliResult bad_axis =
        run_cli("sweep --preset dirichlet-sweep --axis sideways --out-dir /tmp/unused");
    CHECK(bad_axis.exit_code == 2);

    // Usage problems are CLI parse failures, not config errors.
    const CliResult unknown = run_cli("frobnicate");
    CHECK(unknown.exit_code != 0);
    CHECK(unknown.exit_code != 2);

    const CliResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
    for (const char* word : {"run", "cost", "sweep"}) {
        CHECK(help.out.find(word) != std::string::npos);
    }
}
