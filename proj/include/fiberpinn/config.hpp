#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fiberpinn/orchestrator.hpp"

namespace fiberpinn {

/// A parsed value of the key-value config dialect: string, number, bool or
/// a flat array of numbers.
using ConfigValue = std::variant<std::string, double, bool, std::vector<double>>;

/// Flat "section.key" -> value map with source line numbers for messages.
struct ConfigDocument {
  std::map<std::string, ConfigValue> values;
  std::map<std::string, int> lines;
};

/// Parses `[section]` headers, `key = value` pairs and `#` comments.
/// Throws ConfigError with the origin and line on syntax errors or duplicate keys.
ConfigDocument parse_config_document(std::string_view text, const std::string& origin);

/// Everything a CLI command needs.
struct RunConfig {
  TrainingConfig train;
  std::size_t n_t = 1024;
  int n_steps = 1000;
  double rel_tol = 0.0;  // > 0 switches the SSFM to step doubling
  std::vector<double> snapshots;  // m
  std::vector<double> eye_distances;  // m
  std::size_t eye_power_bins = 64;
  int guard_symbols = 4;
  bool svg = true;
};

/// Builds and validates a RunConfig. Unknown keys, missing required keys and
/// out-of-range values throw ConfigError naming the key.
RunConfig make_run_config(const ConfigDocument& doc, const std::string& origin);

RunConfig load_run_config(const std::string& path);

/// Default half-window: 8 T0 around the occupied span for pulses, guard
/// symbols beyond the payload for OOK, 12 T0 for the birefringence task.
double default_t_max(const TrainingConfig& c, int guard_symbols);

}  // namespace fiberpinn
