#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "optochaos/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"optochaos: route-to-chaos simulations of the generic "
                 "optomechanical system"};
    app.require_subcommand(1);

    const std::vector<std::string> commands = {
        "trajectory",   "fixed-points",  "ansatz",         "lyapunov",
        "bifurcation",  "phase-diagram", "spectrum",       "qsd-trajectory",
        "qsd-ensemble", "oracle-check"};

    std::string config_path;
    std::vector<std::string> overrides;
    bool emit_plots = false;
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration file")
            ->required();
        sub->add_option("--set", overrides,
                        "override a scalar config field, key=value");
        sub->add_flag("--emit-plots", emit_plots,
                      "emit a plot script next to the output file");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read config file " << config_path
                      << "\n";
            return 3;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        optochaos::cli::RunConfig config =
            optochaos::cli::parse_config(buf.str());
        if (config.command != command) {
            std::cerr << "error: config 'command' is '" << config.command
                      << "' but subcommand '" << command << "' was given\n";
            return 1;
        }
        for (const auto& ov : overrides)
            optochaos::cli::apply_override(config, ov);
        if (emit_plots) config.emit_plots = true;
        return optochaos::cli::execute(config);
    } catch (const optochaos::cli::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const optochaos::cli::ConfigError& e) {
        for (const auto& msg : e.errors) std::cerr << "config error: " << msg << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
