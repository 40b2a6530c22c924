#include "ptpm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "ptpm/errors.hpp"
#include "ptpm/tsl.hpp"

namespace ptpm {
namespace {

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.ce) && std::isfinite(l.reg) && std::isfinite(l.var) && std::isfinite(l.tree) &&
         std::isfinite(l.total);
}

std::string describe(const LossBreakdown& l) {
  std::ostringstream os;
  os << "ce=" << l.ce << " reg=" << l.reg << " var=" << l.var << " tree=" << l.tree << " total=" << l.total;
  return os.str();
}

}  // namespace

void validate(const TrainConfig& config) {
  if (!(config.adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config.adam.beta1 >= 0.0 && config.adam.beta1 < 1.0) ||
      !(config.adam.beta2 >= 0.0 && config.adam.beta2 < 1.0) || !(config.adam.eps > 0.0)) {
    throw ConfigError("adam betas must lie in [0, 1) and eps must be positive");
  }
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.enable_tsl && config.batch_size < 2) {
    throw ConfigError("batch_size must be >= 2 when tree structure learning is enabled");
  }
  const LossWeights& w = config.weights;
  if (!(w.ce >= 0.0 && w.reg >= 0.0 && w.var >= 0.0 && w.tree >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (!(config.propensity_floor > 0.0 && config.propensity_floor <= 1.0)) {
    throw ConfigError("propensity floor must lie in (0, 1]");
  }
  if (!(config.prune_threshold > 0.0 && config.prune_threshold < 1.0)) {
    throw ConfigError("prune threshold must lie in (0, 1)");
  }
  if (config.mask_samples < 1) throw ConfigError("mask_samples must be >= 1");
}

TreeModel init_tree_model(const Dataset& train, int depth, std::span<const std::size_t> trunk_dims,
                          std::uint64_t seed, DedupePolicy dedupe) {
  if (train.empty()) throw DataError("training set is empty");
  const auto labels = train.labels();
  IntervalTree tree = IntervalTree::build_full(labels, depth, dedupe);
  NetShape shape{train.feature_dim, {trunk_dims.begin(), trunk_dims.end()}, tree.classifier_count(),
                 tree.prunable_count()};
  MultiHeadNet net = MultiHeadNet::init(std::move(shape), seed);
  return TreeModel{std::move(tree), std::move(net), AdamState{}, 0};
}

EpochReport train_epoch(TreeModel& model, const Dataset& data, const TrainConfig& config) {
  validate(config);
  if (data.empty()) throw DataError("training set is empty");
  const IntervalTree& tree = model.tree;
  MultiHeadNet& net = model.net;
  const std::uint64_t epoch = model.epochs_done;
  const double inv_vmax = 1.0 / tree.v_max();
  const bool use_tsl = config.enable_tsl && tree.prunable_count() > 0;
  const LossWeights& w = config.weights;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  {
    auto shuffle_rng = sample_rng(config.seed, epoch, ~std::uint64_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
  }

  const std::size_t batch_cap = std::min(config.batch_size, data.size());
  std::vector<ForwardTrace> traces(batch_cap);
  std::vector<HeadGradients> head_grads(batch_cap);
  std::vector<double> y_norm(batch_cap), global_pred(batch_cap), pruned_pred(batch_cap);
  std::vector<PruneDecision> decisions(batch_cap);
  std::vector<std::mt19937_64> rngs(batch_cap);
  std::vector<double> ones;

  EpochReport report;
  LossBreakdown epoch_sum;
  for (std::size_t start = 0; start < order.size(); start += batch_cap) {
    const std::size_t end = std::min(order.size(), start + batch_cap);
    const std::size_t batch = end - start;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    LossBreakdown loss;

    for (std::size_t b = 0; b < batch; ++b) {
      const Sample& s = data.samples[order[start + b]];
      ForwardTrace& trace = traces[b];
      forward(net, s.x, trace);
      const SampleLabel label = make_label(tree, s.y);
      const LeafDistribution dist = rescaled(leaf_distribution(trace, tree), inv_vmax);
      y_norm[b] = s.y * inv_vmax;
      global_pred[b] = expected_watch_time(dist);

      std::vector<double> weights;
      if (config.enable_ucl) {
        weights = ucl_weights(trace, label, config.propensity_floor);
      } else {
        weights.assign(label.depth(), 1.0);
      }
      const double ce = weighted_ce_loss(trace, label, weights);
      const double reg = reg_loss(global_pred[b], y_norm[b]);
      const double var = var_loss(dist);
      loss.ce += ce * inv_batch;
      loss.reg += reg * inv_batch;
      loss.var += var * inv_batch;

      HeadGradients& hg = head_grads[b];
      hg.classifier.assign(net.classifier_heads(), 0.0);
      hg.pruning.assign(net.pruning_heads(), 0.0);
      if (w.ce > 0.0) weighted_ce_logit_grad(trace, label, weights, w.ce * inv_batch, hg.classifier);
      if (w.reg > 0.0) {
        expectation_logit_grad(trace.q, tree, dist, w.reg * 2.0 * (global_pred[b] - y_norm[b]) * inv_batch,
                               hg.classifier);
      }
      if (w.var > 0.0) variance_logit_grad(trace.q, tree, dist, w.var * inv_batch, hg.classifier);
    }

    // Catch divergence before the pruning draws see NaN probabilities.
    if (!finite(loss)) {
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start) + ": " + describe(loss));
    }

    if (use_tsl) {
      const auto global_rewards = batch_rewards({y_norm.data(), batch}, {global_pred.data(), batch});
      for (std::size_t b = 0; b < batch; ++b) rngs[b] = sample_rng(config.seed, epoch, order[start + b]);
      const double inv_draws = 1.0 / static_cast<double>(config.mask_samples);
      for (std::size_t draw = 0; draw < config.mask_samples; ++draw) {
        for (std::size_t b = 0; b < batch; ++b) {
          decisions[b] = sample_mask(traces[b].p, rngs[b]);
          const IntervalTree pruned = tree.apply_prune(decisions[b].mask);
          pruned_pred[b] = expected_watch_time(leaf_distribution(traces[b].q, pruned)) * inv_vmax;
        }
        const auto pruned_rewards = batch_rewards({y_norm.data(), batch}, {pruned_pred.data(), batch});
        for (std::size_t b = 0; b < batch; ++b) {
          const RewardPair reward{pruned_rewards[b], global_rewards[b]};
          const double advantage = reward.advantage();
          loss.tree += reinforce_loss(decisions[b], advantage) * inv_batch * inv_draws;
          if (w.tree > 0.0) {
            reinforce_logit_grad(decisions[b], advantage, w.tree * inv_batch * inv_draws, head_grads[b].pruning);
          }
        }
      }
    }

    loss.total = w.ce * loss.ce + w.reg * loss.reg + w.var * loss.var + w.tree * loss.tree;
    if (!finite(loss)) {
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start) + ": " + describe(loss));
    }

    GradientSet grads = GradientSet::zeros_like(net);
    for (std::size_t b = 0; b < batch; ++b) backward_logits(net, traces[b], head_grads[b], grads);
    adam_step(net, grads, model.adam, config.adam);

    report.batches.push_back(loss);
    const double weight = static_cast<double>(batch) / static_cast<double>(data.size());
    epoch_sum.ce += loss.ce * weight;
    epoch_sum.reg += loss.reg * weight;
    epoch_sum.var += loss.var * weight;
    epoch_sum.tree += loss.tree * weight;
    epoch_sum.total += loss.total * weight;
  }
  report.mean = epoch_sum;
  ++model.epochs_done;
  return report;
}

IntervalTree serving_tree(const ForwardTrace& trace, const IntervalTree& global_tree, PredictMode mode,
                          double threshold) {
  if (mode == PredictMode::kGlobal || global_tree.prunable_count() == 0) return global_tree;
  return global_tree.apply_prune(deterministic_mask(trace.p, threshold));
}

double predict(const ForwardTrace& trace, const IntervalTree& global_tree, PredictMode mode,
               double threshold) {
  if (mode == PredictMode::kGlobal) return expected_watch_time(leaf_distribution(trace, global_tree));
  return expected_watch_time(leaf_distribution(trace, serving_tree(trace, global_tree, mode, threshold)));
}

double predict(const MultiHeadNet& net, const IntervalTree& global_tree, std::span<const double> x,
               PredictMode mode, double threshold) {
  return predict(forward(net, x), global_tree, mode, threshold);
}

}  // namespace ptpm
