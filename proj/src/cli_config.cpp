#include <cmath>
#include <set>

#include "optochaos/cli.hpp"

namespace optochaos::cli {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Checker {
    std::vector<std::string> errors;

    void fail(const std::string& where, const std::string& what) {
        errors.push_back(where + ": " + what);
    }

    void known_keys(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key()))
                fail(where + "/" + it.key(), "unknown key");
    }

    double number(const json& obj, const std::string& where,
                  const std::string& key, double fallback) {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_number()) {
            fail(where + "/" + key, "expected a number");
            return fallback;
        }
        return obj[key].get<double>();
    }

    std::int64_t integer(const json& obj, const std::string& where,
                         const std::string& key, std::int64_t fallback) {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_number_integer()) {
            fail(where + "/" + key, "expected an integer");
            return fallback;
        }
        return obj[key].get<std::int64_t>();
    }

    std::string text(const json& obj, const std::string& where,
                     const std::string& key, const std::string& fallback) {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_string()) {
            fail(where + "/" + key, "expected a string");
            return fallback;
        }
        return obj[key].get<std::string>();
    }

    void require(const json& obj, const std::string& where,
                 const std::string& key) {
        if (!obj.contains(key)) fail(where + "/" + key, "required key missing");
    }
};

const std::set<std::string> kCommands = {
    "trajectory",     "fixed-points", "ansatz",        "lyapunov",
    "bifurcation",    "phase-diagram", "spectrum",     "qsd-trajectory",
    "qsd-ensemble",   "oracle-check"};

json normalize_spec(const std::string& command, const json& in, Checker& ck) {
    const std::string w = "/spec";
    json out = json::object();
    auto num = [&](const char* key, double dflt) {
        out[key] = ck.number(in, w, key, dflt);
    };
    auto integer = [&](const char* key, std::int64_t dflt) {
        out[key] = ck.integer(in, w, key, dflt);
    };

    if (command == "trajectory") {
        ck.known_keys(in, w, {"tau_end", "transient", "samples_per_period",
                              "initial"});
        num("tau_end", 200.0 * kPi);
        num("transient", 0.0);
        integer("samples_per_period", 128);
        json init = json::array({0.0, 0.0, 0.0, 0.0});
        if (in.contains("initial")) {
            if (!in["initial"].is_array() || in["initial"].size() != 4)
                ck.fail(w + "/initial", "expected [Re a, Im a, Re b, Im b]");
            else
                init = in["initial"];
        }
        out["initial"] = init;
        if (out["tau_end"].get<double>() <= 0.0)
            ck.fail(w + "/tau_end", "must be positive");
    } else if (command == "fixed-points") {
        ck.known_keys(in, w, {});
    } else if (command == "ansatz") {
        ck.known_keys(in, w, {"delta_min", "delta_max", "delta_step"});
        num("delta_min", -2.0);
        num("delta_max", 0.0);
        num("delta_step", 0.01);
        if (out["delta_step"].get<double>() <= 0.0)
            ck.fail(w + "/delta_step", "must be positive");
    } else if (command == "lyapunov") {
        ck.known_keys(in, w, {"method", "transient", "renorm_interval",
                              "n_steps", "discard", "separation"});
        const std::string method = ck.text(in, w, "method", "tangent");
        if (method != "tangent" && method != "twin")
            ck.fail(w + "/method", "must be 'tangent' or 'twin'");
        out["method"] = method;
        num("transient", 400.0 * kPi);
        num("renorm_interval", 2.0 * kPi);
        integer("n_steps", 2000);
        integer("discard", 200);
        num("separation", 1e-8);
    } else if (command == "bifurcation" || command == "phase-diagram") {
        std::set<std::string> keys = {"delta_min",     "delta_max",
                                      "delta_step",    "transient",
                                      "n_steps",       "discard",
                                      "sample_periods", "chaos_threshold",
                                      "cluster_eps"};
        if (command == "phase-diagram") {
            keys.insert("pump_min");
            keys.insert("pump_max");
            keys.insert("pump_step");
        } else {
            ck.require(in, w, "delta_min");
            ck.require(in, w, "delta_max");
        }
        ck.known_keys(in, w, keys);
        num("delta_min", -1.5);
        num("delta_max", 0.0);
        num("delta_step", command == "bifurcation" ? 0.0025 : 0.01);
        if (command == "phase-diagram") {
            num("pump_min", 1.0);
            num("pump_max", 1.6);
            num("pump_step", 0.01);
            if (out["pump_step"].get<double>() <= 0.0)
                ck.fail(w + "/pump_step", "must be positive");
        }
        num("transient", 400.0 * kPi);
        integer("n_steps", 2000);
        integer("discard", 200);
        integer("sample_periods", 64);
        num("chaos_threshold", 1e-3);
        num("cluster_eps", 0.0);
        if (out["delta_step"].get<double>() <= 0.0)
            ck.fail(w + "/delta_step", "must be positive");
    } else if (command == "spectrum") {
        ck.known_keys(in, w, {"transient", "n_periods", "samples_per_period",
                              "window", "threshold"});
        num("transient", 400.0 * kPi);
        integer("n_periods", 512);
        integer("samples_per_period", 128);
        out["window"] = ck.text(in, w, "window", "hann");
        num("threshold", 1e-4);
    } else if (command == "qsd-trajectory" || command == "qsd-ensemble" ||
               command == "oracle-check") {
        std::set<std::string> keys = {"n_cav",        "n_mech", "tau_end",
                                      "dt",           "sample_stride",
                                      "leak_tol",     "stepper"};
        if (command == "qsd-ensemble") keys.insert("n_traj");
        if (command == "oracle-check") keys.insert("n_traj");
        if (command == "qsd-trajectory") keys.insert("discard_periods");
        ck.known_keys(in, w, keys);
        ck.require(in, w, "n_cav");
        ck.require(in, w, "n_mech");
        ck.require(in, w, "tau_end");
        integer("n_cav", 2);
        integer("n_mech", 2);
        num("tau_end", 2.0 * kPi);
        num("dt", 2.0 * kPi / 4096.0);
        integer("sample_stride", 32);
        num("leak_tol", 1e-6);
        if (command == "qsd-ensemble")
            integer("n_traj", 2);
        if (command == "oracle-check") integer("n_traj", 0);
        if (command == "qsd-trajectory") integer("discard_periods", 20);
        if (out["n_cav"].get<std::int64_t>() < 2)
            ck.fail(w + "/n_cav", "must be at least 2");
        if (out["n_mech"].get<std::int64_t>() < 2)
            ck.fail(w + "/n_mech", "must be at least 2");
        if (out["dt"].get<double>() <= 0.0)
            ck.fail(w + "/dt", "must be positive");
        out["stepper"] = ck.text(in, w, "stepper", "euler");
        if (out["stepper"] != "euler" && out["stepper"] != "split")
            ck.fail(w + "/stepper", "must be \"euler\" or \"split\"");
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("syntax error: ") + e.what()});
    }
    Checker ck;
    if (!doc.is_object()) {
        throw ConfigError({"/: config must be a JSON object"});
    }
    ck.known_keys(doc, "",
                  {"command", "params", "seed", "output", "emit_plots",
                   "spec"});

    RunConfig cfg;
    ck.require(doc, "", "command");
    cfg.command = ck.text(doc, "", "command", "");
    if (!cfg.command.empty() && !kCommands.count(cfg.command))
        ck.fail("/command", "unknown command '" + cfg.command + "'");

    const json params = doc.value("params", json::object());
    ck.known_keys(params, "/params",
                  {"detuning", "kappa", "gamma", "pump", "sigma"});
    cfg.params.detuning = ck.number(params, "/params", "detuning", 0.0);
    cfg.params.kappa = ck.number(params, "/params", "kappa", 1.0);
    cfg.params.gamma = ck.number(params, "/params", "gamma", 1e-3);
    cfg.params.pump = ck.number(params, "/params", "pump", 0.0);
    cfg.params.sigma = ck.number(params, "/params", "sigma", 0.0);
    try {
        validate_params(cfg.params);
    } catch (const InvalidParams& e) {
        ck.fail("/params", e.what());
    }

    cfg.seed = static_cast<std::uint64_t>(ck.integer(doc, "", "seed", 0));
    if (doc.contains("emit_plots")) {
        if (!doc["emit_plots"].is_boolean())
            ck.fail("/emit_plots", "expected a boolean");
        else
            cfg.emit_plots = doc["emit_plots"].get<bool>();
    }

    const json output = doc.value("output", json::object());
    ck.known_keys(output, "/output", {"path", "format"});
    cfg.output_path = ck.text(output, "/output", "path", "");
    cfg.output_format = ck.text(output, "/output", "format", "csv");
    if (cfg.output_format != "csv" && cfg.output_format != "json")
        ck.fail("/output/format", "must be 'csv' or 'json'");

    if (kCommands.count(cfg.command)) {
        const json spec = doc.value("spec", json::object());
        if (!spec.is_object())
            ck.fail("/spec", "expected an object");
        else
            cfg.spec = normalize_spec(cfg.command, spec, ck);
    }

    if (!ck.errors.empty()) throw ConfigError(std::move(ck.errors));
    return cfg;
}

std::string serialize_config(const RunConfig& config) {
    json doc;
    doc["command"] = config.command;
    doc["params"] = {{"detuning", config.params.detuning},
                     {"kappa", config.params.kappa},
                     {"gamma", config.params.gamma},
                     {"pump", config.params.pump},
                     {"sigma", config.params.sigma}};
    doc["seed"] = config.seed;
    doc["output"] = {{"path", config.output_path},
                     {"format", config.output_format}};
    doc["emit_plots"] = config.emit_plots;
    doc["spec"] = config.spec;
    return doc.dump();
}

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError({"--set expects key=value, got '" + assignment +
                           "'"});
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json doc = json::parse(serialize_config(config));
    json* node = &doc;
    std::size_t pos = 0;
    std::string leaf = key;
    while (true) {
        const auto dot = leaf.find('.');
        if (dot == std::string::npos) break;
        const std::string head = leaf.substr(0, dot);
        if (!node->contains(head))
            throw ConfigError({"--set: unknown key '" + key + "'"});
        node = &(*node)[head];
        leaf = leaf.substr(dot + 1);
        pos += dot + 1;
    }
    if (!node->contains(leaf))
        throw ConfigError({"--set: unknown key '" + key + "'"});
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings allowed
    }
    (*node)[leaf] = parsed;
    config = parse_config(doc.dump());
}

}  // namespace optochaos::cli
