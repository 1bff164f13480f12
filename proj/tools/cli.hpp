#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lqr::cli {

enum class Command { Validate, Dare, Simulate, OfflineCheck, LinearOpt, Costs, Regret, Converge, Concentrate };

std::optional<Command> parse_command(const std::string& name);
std::string command_name(Command command);

// Defaults match the library defaults. Unset optionals fall back to a
// per-command default (see README).
struct ExperimentConfig {
  Command command = Command::Validate;
  std::filesystem::path spec_path;
  std::optional<std::filesystem::path> out_path;
  std::optional<std::size_t> T;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 0;
  std::size_t starts = 4;
  std::size_t jobs = 1;
  double tol = 1e-12;  // DARE stopping tolerance
  std::size_t instances = 200;
  std::vector<std::size_t> T_grid;
  std::string policy = "online";  // simulate: online, online-tv, offline, linear
};

// 0 on success, 2 on parse or validation failure, 3 on numerical failure.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

// Parses argv (argv[0] is the program name) and dispatches to run().
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lqr::cli
