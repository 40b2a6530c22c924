#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptpm/data.hpp"
#include "ptpm/interval_tree.hpp"
#include "ptpm/trainer.hpp"

namespace ptpm {

enum class Method {
  kMse,        // direct squared-error regression
  kOrdinal,    // ordinal regression over the global tree's boundaries
  kTpm,        // tree model, plain cross entropy, global tree
  kPtpm,       // tree model with IPS-weighted cross entropy and learned pruning
  kPtpmNoTsl,  // PTPM without tree structure learning
  kPtpmNoUcl,  // PTPM without unbiased conditional learning
};

std::string_view method_name(Method method);
// Accepts the names produced by method_name; throws ConfigError otherwise.
Method parse_method(std::string_view name);
std::vector<Method> all_methods();
bool is_tree_method(Method method);

std::string_view mode_name(PredictMode mode);
PredictMode parse_mode(std::string_view name);

// Everything a command needs, read from a JSON file. Unknown keys are rejected.
struct RunConfig {
  int tree_depth = 6;
  std::vector<std::size_t> trunk_dims{64, 32};
  TrainConfig train;
  Method method = Method::kPtpm;
  DedupePolicy dedupe = DedupePolicy::kError;
  std::optional<PredictMode> mode;  // default: pruned iff the method learns trees

  std::optional<std::filesystem::path> train_data;
  std::optional<std::filesystem::path> test_data;
  double test_fraction = 1.0 / 6.0;  // used when no test file is given

  std::vector<Method> methods = all_methods();
  std::vector<std::uint64_t> seeds{0};
  std::vector<int> sweep_depths{3, 4, 5, 6};

  SynthConfig synth = default_synth_config(60000, 0);
};

// Throws ConfigError.
void validate(const RunConfig& config);

// Relative data paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// TrainConfig for `method`: the tree-learning flags follow the method, except
// that kPtpm keeps the flags set in config.train.
TrainConfig train_config_for(Method method, const RunConfig& config, std::uint64_t seed);
PredictMode default_mode(Method method, const TrainConfig& train);

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base);

}  // namespace ptpm
