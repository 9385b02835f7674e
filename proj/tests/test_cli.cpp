#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "optochaos/cli.hpp"

using namespace optochaos;
using cli::ConfigError;
using cli::RunConfig;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Everything after the "# end-header" marker: the deterministic payload.
std::string data_section(const std::string& text) {
    const std::string marker = "# end-header\n";
    const auto pos = text.find(marker);
    REQUIRE(pos != std::string::npos);
    return text.substr(pos + marker.size());
}

std::string temp_path(const std::string& stem) {
    return std::string("cli_test_") + stem + ".csv";
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(OPTOCHAOS_BIN) + " " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
    const RunConfig cfg = cli::parse_config(R"({"command": "trajectory"})");
    CHECK(cfg.command == "trajectory");
    CHECK(cfg.params.kappa == 1.0);
    CHECK(cfg.params.gamma == 1e-3);
    CHECK(cfg.params.pump == 0.0);
    CHECK(cfg.params.detuning == 0.0);
    CHECK(cfg.seed == 0);
    CHECK(cfg.output_format == "csv");
    CHECK(!cfg.emit_plots);
    CHECK(cfg.spec["samples_per_period"].get<int>() == 128);
    CHECK(cfg.spec["tau_end"].get<double>() ==
          doctest::Approx(200.0 * 3.14159265358979323846));
}

TEST_CASE("unknown keys are rejected with their location") {
    try {
        cli::parse_config(
            R"({"command": "trajectory",
                "params": {"tempreature": 300, "pump": 1.0}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.errors.size() == 1);
        CHECK(e.errors[0].find("/params/tempreature") != std::string::npos);
        CHECK(e.errors[0].find("unknown key") != std::string::npos);
    }
}

TEST_CASE("all errors are collected before throwing") {
    try {
        cli::parse_config(
            R"({"command": "qsd-ensemble",
                "params": {"pump": -1.0},
                "spec": {"n_cav": 1, "n_mech": 4, "tau_end": 5.0,
                         "bogus": true}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.errors.size() >= 3);  // pump range, n_cav range, unknown key
        bool saw_bogus = false, saw_ncav = false, saw_params = false;
        for (const auto& msg : e.errors) {
            if (msg.find("/spec/bogus") != std::string::npos) saw_bogus = true;
            if (msg.find("/spec/n_cav") != std::string::npos) saw_ncav = true;
            if (msg.find("/params") != std::string::npos) saw_params = true;
        }
        CHECK(saw_bogus);
        CHECK(saw_ncav);
        CHECK(saw_params);
    }
}

TEST_CASE("parse-serialize round trip is the identity") {
    const std::string text =
        R"({"command": "spectrum",
            "params": {"pump": 1.5, "detuning": -0.4},
            "seed": 7,
            "output": {"path": "out.csv", "format": "csv"},
            "spec": {"n_periods": 256, "window": "rect"}})";
    const RunConfig a = cli::parse_config(text);
    const std::string canon = cli::serialize_config(a);
    const RunConfig b = cli::parse_config(canon);
    CHECK(cli::serialize_config(b) == canon);
    CHECK(b.params.pump == 1.5);
    CHECK(b.spec["n_periods"].get<int>() == 256);
    CHECK(b.spec["window"].get<std::string>() == "rect");
    // Defaults were filled in during normalization.
    CHECK(b.spec.contains("samples_per_period"));
}

TEST_CASE("dotted --set overrides") {
    RunConfig cfg = cli::parse_config(R"({"command": "trajectory"})");
    cli::apply_override(cfg, "params.pump=1.5");
    CHECK(cfg.params.pump == 1.5);
    cli::apply_override(cfg, "spec.tau_end=62.8");
    CHECK(cfg.spec["tau_end"].get<double>() == 62.8);
    cli::apply_override(cfg, "output.format=json");
    CHECK(cfg.output_format == "json");
    CHECK_THROWS_AS(cli::apply_override(cfg, "params.tempreature=300"),
                    ConfigError);
    CHECK_THROWS_AS(cli::apply_override(cfg, "no_equals_sign"), ConfigError);
    // Overrides go through full validation.
    CHECK_THROWS_AS(cli::apply_override(cfg, "params.pump=-2.0"), ConfigError);
}

TEST_CASE("trajectory output is deterministic across reruns") {
    const std::string path_a = temp_path("traj_a");
    const std::string path_b = temp_path("traj_b");
    RunConfig cfg = cli::parse_config(R"({"command": "trajectory",
        "params": {"pump": 1.3, "detuning": -0.4},
        "spec": {"tau_end": 125.6, "initial": [0.1, 0.0, 0.1, 0.0]}})");
    cfg.output_path = path_a;
    CHECK(cli::execute(cfg) == 0);
    cfg.output_path = path_b;
    CHECK(cli::execute(cfg) == 0);
    const std::string a = slurp(path_a);
    const std::string b = slurp(path_b);
    // Headers differ (wall time, output path); payloads must be identical.
    CHECK(data_section(a) == data_section(b));
    CHECK(data_section(a).find(',') != std::string::npos);
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
}

TEST_CASE("csv and json mirrors carry the same payload") {
    const std::string path_csv = temp_path("fp");
    const std::string path_json = temp_path("fp_json");
    RunConfig cfg = cli::parse_config(R"({"command": "fixed-points",
        "params": {"pump": 1.3, "detuning": -0.6}})");
    cfg.output_path = path_csv;
    CHECK(cli::execute(cfg) == 0);
    cfg.output_format = "json";
    cfg.output_path = path_json;
    CHECK(cli::execute(cfg) == 0);

    const std::string csv = data_section(slurp(path_csv));
    const auto doc = nlohmann::json::parse(slurp(path_json));
    REQUIRE(doc.contains("data"));
    std::ostringstream rebuilt;
    for (const auto& row : doc["data"]) {
        for (std::size_t i = 0; i < row.size(); ++i)
            rebuilt << (i ? "," : "") << row[i].get<std::string>();
        rebuilt << "\n";
    }
    CHECK(rebuilt.str() == csv);
    CHECK(doc["manifest"]["command"] == "fixed-points");
    std::remove(path_csv.c_str());
    std::remove(path_json.c_str());
}

TEST_CASE("plot script emission") {
    const std::string path = temp_path("plot");
    RunConfig cfg = cli::parse_config(R"({"command": "trajectory",
        "params": {"pump": 1.3, "detuning": -0.4},
        "spec": {"tau_end": 12.56}})");
    cfg.output_path = path;
    cfg.emit_plots = true;
    CHECK(cli::execute(cfg) == 0);
    const std::string script = slurp(path + ".plot.py");
    CHECK(script.find("matplotlib") != std::string::npos);
    CHECK(script.find(path) != std::string::npos);
    std::remove(path.c_str());
    std::remove((path + ".plot.py").c_str());
}

TEST_CASE("binary exit codes") {
    SUBCASE("success") {
        write_file("cli_ok.json", R"({"command": "fixed-points",
            "params": {"pump": 1.0, "detuning": -0.5},
            "output": {"path": "cli_ok_out.csv"}})");
        CHECK(run_binary("fixed-points --config cli_ok.json") == 0);
        std::remove("cli_ok.json");
        std::remove("cli_ok_out.csv");
    }
    SUBCASE("config errors exit 1") {
        write_file("cli_bad.json", R"({"command": "fixed-points",
            "params": {"tempreature": 300}})");
        CHECK(run_binary("fixed-points --config cli_bad.json") == 1);
        // An unreadable config file is an I/O failure, not a config error.
        CHECK(run_binary("fixed-points --config cli_missing.json") == 3);
        std::remove("cli_bad.json");
    }
    SUBCASE("runtime failures exit 2") {
        // Truncation violation from an undersized QSD basis.
        write_file("cli_leak.json", R"({"command": "qsd-trajectory",
            "params": {"pump": 2.0, "detuning": 0.0, "sigma": 0.1},
            "spec": {"n_cav": 2, "n_mech": 2, "tau_end": 10.0}})");
        CHECK(run_binary("qsd-trajectory --config cli_leak.json") == 2);
        std::remove("cli_leak.json");
    }
    SUBCASE("io failures exit 3") {
        write_file("cli_io.json", R"({"command": "fixed-points",
            "params": {"pump": 1.0},
            "output": {"path": "/nonexistent-dir/out.csv"}})");
        CHECK(run_binary("fixed-points --config cli_io.json") == 3);
        std::remove("cli_io.json");
    }
    SUBCASE("set override on the command line") {
        write_file("cli_set.json", R"({"command": "fixed-points",
            "params": {"pump": 1.0}, "output": {"path": "cli_set_out.csv"}})");
        CHECK(run_binary("fixed-points --config cli_set.json "
                         "--set params.pump=1.2") == 0);
        const std::string out = slurp("cli_set_out.csv");
        CHECK(out.find("\"pump\":1.2") != std::string::npos);
        std::remove("cli_set.json");
        std::remove("cli_set_out.csv");
    }
}
