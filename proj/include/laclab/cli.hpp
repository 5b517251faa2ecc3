#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace laclab::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Fully resolved run: command parameters plus execution settings that never
/// enter the embedded config (so output bytes do not depend on them).
struct RunConfig {
  std::string command;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::string out;      // empty: stdout
  std::string samples;  // optional CSV of experiment samples
  std::string format = "json";
  unsigned threads = 0;
  bool timing = false;
};

struct ConfigError {
  std::size_t line = 0;  // 1-based, 0 when not tied to a line
  std::string message;
};

struct Validation {
  std::optional<RunConfig> config;
  std::vector<ConfigError> errors;

  bool ok() const { return config.has_value(); }
};

std::vector<std::string> command_names();

/// Flat JSON object naming "command" and its parameters. All problems are
/// collected; nothing runs when any is found.
Validation validate_config(const std::string& path);
/// Same for in-memory text; `command` is used when the text names none.
Validation validate_config_text(const std::string& text, const std::string& command = "");

/// Executes the resolved config. Exit code 0 on success, 2 when an assertion
/// (KS threshold, coupling bound) fails.
int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Command-line front door; args excludes the program name. Usage and
/// config errors return 1.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// FNV-1a of the compact config dump, as 16 hex digits.
std::string config_hash(const nlohmann::ordered_json& config);

}  // namespace laclab::cli
