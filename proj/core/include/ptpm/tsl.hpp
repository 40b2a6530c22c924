#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ptpm/interval_tree.hpp"

namespace ptpm {

// One sampled pruning decision for one sample.
struct PruneDecision {
  std::vector<double> p;
  PruneMask mask;
  // 1 where no ancestor was sampled for collapse; only these entries enter
  // logp and the policy gradient.
  std::vector<std::uint8_t> effective;
  double logp = 0.0;
};

// Self-critical reward pair for one sample.
struct RewardPair {
  double r_pruned = 0.0;
  double r_global = 0.0;

  double advantage() const { return r_pruned - r_global; }
};

// Global tree depth whose prunable-node count is `count` (2^d - 2).
int depth_for_prunable_count(std::size_t count);

// Generator for the pruning draws of one sample, derived from the run seed,
// the epoch and the sample's position in the dataset.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index);

// Independent Bernoulli(p_i) draws. Entries below a sampled ancestor are kept
// in the mask but flagged ineffective.
PruneDecision sample_mask(std::span<const double> p, std::mt19937_64& rng);

// a_i = 1 iff p_i > threshold. Entries below a collapsed ancestor keep their
// thresholded value but have no effect on the pruned tree.
PruneMask deterministic_mask(std::span<const double> p, double threshold = 0.5);

// sum over effective entries of a_i log p_i + (1 - a_i) log(1 - p_i).
double mask_log_prob(std::span<const double> p, const PruneMask& mask,
                     std::span<const std::uint8_t> effective);

// Per-sample reward: the fraction of label-distinct batch pairs (i, j), j != i,
// that prediction i orders like the labels, minus (y_hat_i - y_i)^2. Labels and
// predictions are normalized. With no usable pair the ordering term is 0.5.
double sample_reward(std::size_t i, std::span<const double> y, std::span<const double> y_hat);
std::vector<double> batch_rewards(std::span<const double> y, std::span<const double> y_hat);

// Surrogate -advantage * logp; the advantage is a constant.
double reinforce_loss(const PruneDecision& decision, double advantage);

// d(reinforce_loss)/dp_i: -advantage * (a_i / p_i - (1 - a_i) / (1 - p_i)) on
// effective entries, 0 elsewhere.
std::vector<double> reinforce_prob_grad(const PruneDecision& decision, double advantage);

// Adds scale * d(reinforce_loss)/d(pruning logit) = -scale * advantage * (a_i - p_i)
// on effective entries.
void reinforce_logit_grad(const PruneDecision& decision, double advantage, double scale,
                          std::span<double> logit_grads);

}  // namespace ptpm
