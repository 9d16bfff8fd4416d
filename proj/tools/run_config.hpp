#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace stdeep::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Raised for bad values that CLI11 cannot catch on its own (unknown family, empty groups, ...).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Flat `key = value` file; `#` starts a comment, blank lines are skipped.
 * Keys are long option names; `_` and `-` are interchangeable.
 * Keys are long option names without the leading dashes.
 */
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/**
 * Fills every option of `cmd` that was not given on the command line from
 * the config entries. Keys that name no option of any subcommand of `root`
 * are a usage error; keys of other subcommands are ignored.
 */
void apply_config(CLI::App& root, CLI::App& cmd, const std::map<std::string, std::string>& entries);

/// Option values after flags, config file and defaults were merged.
nlohmann::json resolved_options(const CLI::App& cmd);

/// {"tool", "version", "command", "config"} block written into every artifact.
nlohmann::json provenance(const std::string& command, const nlohmann::json& config);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stdeep::cli
