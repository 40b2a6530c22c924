#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptpm/baselines.hpp"
#include "ptpm/config.hpp"
#include "ptpm/data.hpp"
#include "ptpm/trainer.hpp"

namespace ptpm {

// monostate marks a model that has not been trained or loaded.
using ModelState = std::variant<std::monostate, TreeModel, OrdinalModel, MseModel>;

// A trained model of any method together with how it serves predictions.
struct TrainedModel {
  Method method = Method::kPtpm;
  TrainConfig train;
  PredictMode mode = PredictMode::kGlobal;
  ModelState state;
  std::vector<EpochReport> history;
};

using ProgressFn = std::function<void(const std::string&)>;

// Builds and trains `method` for config.train.epochs epochs with `seed`.
TrainedModel train_model(Method method, const Dataset& train, const RunConfig& config, std::uint64_t seed,
                         const ProgressFn& progress = {});

std::vector<double> predict_all(const TrainedModel& model, const Dataset& data);

struct MetricsReport {
  std::string method;
  std::size_t samples = 0;
  double mae = 0.0;
  double xauc = 0.0;
  // Tree methods only.
  std::optional<double> avg_classifier_auc;
  std::size_t auc_nodes_evaluated = 0;
  std::size_t auc_nodes_skipped = 0;
  std::vector<std::optional<double>> prior_posterior_ratios;
  std::optional<double> mean_abs_ratio_dev;
  std::optional<double> mean_learned_depth;
};

// MAE and XAUC for every method; classifier AUC, prior-to-posterior ratios on
// the global tree and mean served-tree depth for tree methods.
MetricsReport evaluate(const TrainedModel& model, const Dataset& data);
nlohmann::json to_json(const MetricsReport& report);

// Train/test pair for one seed: the configured files when present, otherwise
// a seeded synthetic dataset split by config.test_fraction.
std::pair<Dataset, Dataset> resolve_datasets(const RunConfig& config, std::uint64_t seed);

struct CompareRow {
  MetricsReport metrics;
  std::uint64_t seed = 0;
  double train_seconds = 0.0;
};

struct CompareSummary {
  std::string method;
  double mean_mae = 0.0;
  double mean_xauc = 0.0;
  std::optional<double> mean_abs_ratio_dev;
  std::optional<double> mean_learned_depth;
  double mean_train_seconds = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<CompareSummary> summary;  // one per method, in request order
};

// Trains every method on every seed's data and evaluates on its test split.
CompareReport compare(const RunConfig& config, const std::vector<Method>& methods,
                      const std::vector<std::uint64_t>& seeds, const ProgressFn& progress = {});
nlohmann::json to_json(const CompareReport& report);
std::string format_table(const CompareReport& report);

struct DepthSweepRow {
  int depth = 0;
  std::uint64_t seed = 0;
  double xauc = 0.0;
  double mae = 0.0;
  double mean_learned_depth = 0.0;
};

// Trains config.method at each global depth and reports XAUC and the mean
// depth of the served trees.
std::vector<DepthSweepRow> sweep_depths(const RunConfig& config, const std::vector<int>& depths,
                                        const std::vector<std::uint64_t>& seeds,
                                        const ProgressFn& progress = {});
nlohmann::json to_json(const std::vector<DepthSweepRow>& rows);
std::string format_table(const std::vector<DepthSweepRow>& rows);

}  // namespace ptpm
