#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptpm/data.hpp"
#include "ptpm/interval_tree.hpp"
#include "ptpm/nn.hpp"
#include "ptpm/tpm.hpp"

namespace ptpm {

struct LossWeights {
  double ce = 1.0;
  double reg = 1.0;
  double var = 1.0;
  double tree = 1.0;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  LossWeights weights;
  double propensity_floor = kDefaultPropensityFloor;
  bool enable_tsl = true;
  bool enable_ucl = true;
  double prune_threshold = 0.5;
  // Pruning masks drawn per sample and step; losses average over the draws.
  std::size_t mask_samples = 1;
  std::uint64_t seed = 0;
};

// Throws ConfigError for out-of-range settings.
void validate(const TrainConfig& config);

// Batch-mean loss components; total = sum of weighted components.
struct LossBreakdown {
  double ce = 0.0;
  double reg = 0.0;
  double var = 0.0;
  double tree = 0.0;
  double total = 0.0;
};

struct EpochReport {
  std::vector<LossBreakdown> batches;
  LossBreakdown mean;  // sample-weighted mean over the epoch
};

// Trainable state of a tree model: the global tree, the shared network and
// the optimizer moments.
struct TreeModel {
  IntervalTree tree;
  MultiHeadNet net;
  AdamState adam;
  std::uint64_t epochs_done = 0;
};

// Global tree of `config`-independent depth plus a freshly initialized net
// with one classifier head per internal node and one pruning head per
// prunable node.
TreeModel init_tree_model(const Dataset& train, int depth, std::span<const std::size_t> trunk_dims,
                          std::uint64_t seed, DedupePolicy dedupe = DedupePolicy::kError);

// One pass over a seeded shuffle of `data` in mini-batches. Per batch: label
// paths, cross entropy (IPS-weighted when enable_ucl), expectation and
// variance on the global tree with labels normalized by v_max, one sampled
// pruning mask per sample with its self-critical REINFORCE term (when
// enable_tsl), and one Adam step on the weighted total. Throws NumericalError
// if any loss turns non-finite.
EpochReport train_epoch(TreeModel& model, const Dataset& data, const TrainConfig& config);

enum class PredictMode { kGlobal, kPruned };

// Expected watch time over the global tree, or over the tree pruned by the
// thresholded pruning heads.
double predict(const MultiHeadNet& net, const IntervalTree& global_tree, std::span<const double> x,
               PredictMode mode, double threshold = 0.5);
double predict(const ForwardTrace& trace, const IntervalTree& global_tree, PredictMode mode,
               double threshold = 0.5);

// The tree a sample is served with in the given mode.
IntervalTree serving_tree(const ForwardTrace& trace, const IntervalTree& global_tree, PredictMode mode,
                          double threshold = 0.5);

}  // namespace ptpm
