#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pathmkv {

/// Exit statuses of the runner.
enum ExitStatus : int {
    kExitPass = 0,
    kExitCheckFailed = 1,
    kExitConfigError = 2,
    kExitBlowup = 3,
    kExitRuntimeError = 4,
};

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;     ///< overrides the config seed
    std::optional<std::size_t> threads;    ///< overrides the config; 0 means all hardware threads
    bool write_files = true;
};

struct RunOutcome {
    int status = kExitPass;
    nlohmann::json report;
};

/// Subcommands understood by run().
const std::vector<std::string>& subcommands();

/// Schema of the experiment configuration: nested objects of
/// {"type", "units", "description"} leaves. Unknown keys are rejected.
const nlohmann::json& config_schema();

/// Validates `config` against the schema; throws ConfigError naming the field.
void validate_config(const nlohmann::json& config);

/// Parses a configuration text. Syntax errors and schema violations raise
/// ConfigError with the line and column or the field path.
nlohmann::json parse_config(const std::string& text);

/// Runs one subcommand. Writes report.json (and CSV plot data) under
/// opts.out_dir when opts.write_files is set. Never throws for config errors
/// or blowups; those are reported through the status.
RunOutcome run(const std::string& subcommand, const nlohmann::json& config, const RunOptions& opts);

/// git-describe style version string fixed at build time.
std::string version_string();

} // namespace pathmkv
