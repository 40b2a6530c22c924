#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptpm/interval_tree.hpp"
#include "ptpm/nn.hpp"

namespace ptpm {

// Categorical distribution over the leaves of a (possibly pruned) tree, in
// left-to-right leaf order.
struct LeafDistribution {
  std::vector<NodeId> leaf_ids;
  std::vector<double> probs;
  std::vector<double> midpoints;
};

// Target of one training sample: its leaf, the root-to-leaf path and the
// per-step direction labels (o[j] = 1 iff the path goes right at step j).
struct SampleLabel {
  double y = 0.0;
  NodeId leaf = 0;
  std::vector<NodeId> path;
  std::vector<std::uint8_t> o;

  std::size_t depth() const { return o.size(); }
};

SampleLabel make_label(const IntervalTree& tree, double y);

// Leaf probabilities as products of conditional step probabilities along each
// root-to-leaf path. `q` holds one right-child probability per internal node
// of the global tree, indexed by node id. Collapsed nodes reuse the global
// heads of their surviving ancestors, so any pruned tree is accepted.
LeafDistribution leaf_distribution(std::span<const double> q, const IntervalTree& tree);
LeafDistribution leaf_distribution(const ForwardTrace& trace, const IntervalTree& tree);

double expected_watch_time(const LeafDistribution& dist);
// Categorical variance with midpoint representatives, clamped at 0.
double variance(const LeafDistribution& dist);
// Expected depth of the leaf a sample lands in.
double expected_leaf_depth(const LeafDistribution& dist, const IntervalTree& tree);
// Same distribution with midpoints multiplied by `factor`.
LeafDistribution rescaled(LeafDistribution dist, double factor);

// Probability of the observed direction at step j (0-based) of the label path.
double step_probability(const ForwardTrace& trace, const SampleLabel& label, std::size_t step);

// -log p(label leaf | x), from logits.
double ce_loss(const ForwardTrace& trace, const IntervalTree& tree, const SampleLabel& label);

inline constexpr double kDefaultPropensityFloor = 0.05;

// Probability of reaching the parent node of level `level` (1-based; level 1
// is the root's decision): the product of the first level-1 step
// probabilities, clamped to [floor, 1]. Level 1 gives 1.
double propensity(const ForwardTrace& trace, const SampleLabel& label, std::size_t level,
                  double floor = kDefaultPropensityFloor);

// Inverse-propensity weights 1 / propensity(level) for every level of the path.
std::vector<double> ucl_weights(const ForwardTrace& trace, const SampleLabel& label,
                                double floor = kDefaultPropensityFloor);

// -sum_j weights[j] * log p(step j). With all weights 1 this is ce_loss.
double weighted_ce_loss(const ForwardTrace& trace, const SampleLabel& label,
                        std::span<const double> weights);

// IPS-corrected cross entropy: weighted_ce_loss with ucl_weights. The
// propensities are constants with respect to the parameters.
double ce_ucl_loss(const ForwardTrace& trace, const IntervalTree& tree, const SampleLabel& label,
                   double floor = kDefaultPropensityFloor);

// Squared error between a prediction and a label, both already normalized.
double reg_loss(double prediction, double y);
double var_loss(const LeafDistribution& dist);

// Adds scale * d(weighted_ce_loss)/d(classifier logit) into `logit_grads`.
void weighted_ce_logit_grad(const ForwardTrace& trace, const SampleLabel& label,
                            std::span<const double> weights, double scale,
                            std::span<double> logit_grads);

// Adds scale * dF/d(classifier logit) into `logit_grads` for
// F = sum_k values[k] * P(leaf k), where `dist` came from the same q and tree
// and `values` is aligned with dist.leaf_ids.
void leaf_linear_logit_grad(std::span<const double> q, const IntervalTree& tree,
                            const LeafDistribution& dist, std::span<const double> values,
                            double scale, std::span<double> logit_grads);

// Convenience wrappers over leaf_linear_logit_grad for the two readouts.
void expectation_logit_grad(std::span<const double> q, const IntervalTree& tree,
                            const LeafDistribution& dist, double scale,
                            std::span<double> logit_grads);
void variance_logit_grad(std::span<const double> q, const IntervalTree& tree,
                         const LeafDistribution& dist, double scale,
                         std::span<double> logit_grads);

}  // namespace ptpm
