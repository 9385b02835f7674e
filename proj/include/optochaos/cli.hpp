#ifndef OPTOCHAOS_CLI_HPP
#define OPTOCHAOS_CLI_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "optochaos/model.hpp"

namespace optochaos::cli {

inline constexpr const char* kVersion = "0.1.0";

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    std::vector<std::string> errors;
    explicit ConfigError(std::vector<std::string> errs)
        : std::runtime_error(errs.empty() ? "invalid config" : errs.front()),
          errors(std::move(errs)) {}
};

/// A fully validated run configuration: the `spec` document is normalized
/// (defaults filled, keys checked), so serialize + parse is the identity.
struct RunConfig {
    std::string command;
    ModelParams params;
    std::uint64_t seed = 0;
    std::string output_path;
    std::string output_format = "csv";  // csv | json
    bool emit_plots = false;
    nlohmann::json spec;  // command-specific block, normalized
};

/// Parses and validates a config document. Collects all errors (with
/// JSON-pointer locations) before throwing.
RunConfig parse_config(const std::string& text);

/// Canonical serialization; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Applies a dotted-path override, e.g. "params.pump=1.5".
void apply_override(RunConfig& config, const std::string& assignment);

/// Dispatches to the owning module and writes the output files.
/// Returns the process exit status (0 = success, 4 = partial results).
int execute(const RunConfig& config);

}  // namespace optochaos::cli

#endif
