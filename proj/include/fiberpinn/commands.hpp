#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "fiberpinn/config.hpp"

namespace fiberpinn {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDivergence = 3, kExitIo = 4 };

/// 64-bit FNV-1a; manifests use it to fingerprint every file they list.
std::uint64_t fnv1a64(std::string_view bytes);

/// "%.17g", the CSV float format.
std::string fmt17(double v);

struct CommandContext {
  RunConfig config;
  std::string config_name;            // file name only, never a path
  std::uint64_t config_checksum = 0;  // of the config text
  std::filesystem::path out;
  std::filesystem::path checkpoint;  // compare/eye; empty: <out>/model.ckpt or SSFM source
};

/// Loads and validates the config, applying --seed/--threads overrides.
CommandContext make_context(const std::string& config_path, const std::filesystem::path& out,
                            std::optional<std::uint64_t> seed_override, std::optional<int> threads_override);

void cmd_simulate(const CommandContext& ctx);
/// Returns false when training diverged (outputs are still written).
bool cmd_train(const CommandContext& ctx);
void cmd_compare(const CommandContext& ctx);
void cmd_eye(const CommandContext& ctx);
void cmd_coeffs(const CommandContext& ctx, std::ostream& os);

/// Full command line front end; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace fiberpinn
