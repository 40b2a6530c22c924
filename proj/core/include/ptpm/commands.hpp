#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ptpm/config.hpp"

namespace ptpm {

// Flags shared by the subcommands. Unset values fall back to the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<PredictMode> mode;
  std::optional<std::vector<Method>> methods;
  bool quiet = false;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// Writes a synthetic CSV to --out using the config's synth section.
int cmd_gen_data(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Trains config.method; writes <out>/checkpoint.json and <out>/metrics.json.
int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Evaluates --checkpoint on --data (or the config's test split); writes the
// metrics JSON to --out or stdout.
int cmd_eval(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Trains and evaluates every method; writes <out>/compare.json and
// <out>/compare.txt and prints the table.
int cmd_compare(const CommandOptions& options, std::ostream& out, std::ostream& err);
// Depth sensitivity: writes <out>/sweep.json and <out>/sweep.txt.
int cmd_sweep_depth(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Runs `body`, mapping ConfigError, DataError and NumericalError to exit codes
// 2, 3 and 4 with a one-line diagnostic on `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace ptpm
