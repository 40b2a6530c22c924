#include "ptpm/tpm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ptpm {
namespace {

void check_heads(std::span<const double> q, const IntervalTree& tree) {
  if (q.size() < tree.classifier_count()) {
    throw std::invalid_argument("trace has " + std::to_string(q.size()) +
                                " conditional probabilities, tree needs " +
                                std::to_string(tree.classifier_count()));
  }
}

void check_label(const ForwardTrace& trace, const SampleLabel& label) {
  if (label.path.size() != label.o.size() + 1) throw std::invalid_argument("malformed sample label");
  for (std::size_t j = 0; j < label.o.size(); ++j) {
    if (label.path[j] >= trace.q.size()) {
      throw std::invalid_argument("no classifier head for node " + std::to_string(label.path[j]));
    }
  }
}

double step_log_prob(const ForwardTrace& trace, const SampleLabel& label, std::size_t step) {
  const NodeId node = label.path[step];
  if (node < trace.classifier_logits.size()) {
    const double z = trace.classifier_logits[node];
    return label.o[step] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  return std::log(step_probability(trace, label, step));
}

}  // namespace

SampleLabel make_label(const IntervalTree& tree, double y) {
  SampleLabel label;
  label.y = y;
  label.leaf = tree.leaf_for_value(y);
  label.path = tree.path_to_leaf(label.leaf);
  label.o.resize(label.path.size() - 1);
  for (std::size_t j = 0; j + 1 < label.path.size(); ++j) {
    label.o[j] = label.path[j + 1] == right_child_id(label.path[j]) ? 1 : 0;
  }
  return label;
}

LeafDistribution leaf_distribution(std::span<const double> q, const IntervalTree& tree) {
  check_heads(q, tree);
  LeafDistribution dist;
  dist.leaf_ids = tree.leaf_ids();
  dist.probs.reserve(dist.leaf_ids.size());
  dist.midpoints.reserve(dist.leaf_ids.size());
  for (NodeId leaf : dist.leaf_ids) {
    double prob = 1.0;
    for (NodeId id = leaf; id > 0;) {
      const NodeId parent = (id - 1) / 2;
      const double right = q[parent];
      prob *= id == right_child_id(parent) ? right : 1.0 - right;
      id = parent;
    }
    dist.probs.push_back(prob);
    dist.midpoints.push_back(tree.node(leaf).midpoint());
  }
  return dist;
}

LeafDistribution leaf_distribution(const ForwardTrace& trace, const IntervalTree& tree) {
  return leaf_distribution(trace.q, tree);
}

double expected_watch_time(const LeafDistribution& dist) {
  double e = 0.0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) e += dist.midpoints[k] * dist.probs[k];
  return e;
}

double variance(const LeafDistribution& dist) {
  double e = 0.0;
  double e2 = 0.0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) {
    e += dist.midpoints[k] * dist.probs[k];
    e2 += dist.midpoints[k] * dist.midpoints[k] * dist.probs[k];
  }
  return std::max(0.0, e2 - e * e);
}

double expected_leaf_depth(const LeafDistribution& dist, const IntervalTree& tree) {
  double depth = 0.0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) {
    depth += dist.probs[k] * tree.node(dist.leaf_ids[k]).depth;
  }
  return depth;
}

LeafDistribution rescaled(LeafDistribution dist, double factor) {
  for (double& m : dist.midpoints) m *= factor;
  return dist;
}

double step_probability(const ForwardTrace& trace, const SampleLabel& label, std::size_t step) {
  const double q = trace.q.at(label.path.at(step));
  return label.o.at(step) ? q : 1.0 - q;
}

double ce_loss(const ForwardTrace& trace, const IntervalTree& tree, const SampleLabel& label) {
  check_heads(trace.q, tree);
  check_label(trace, label);
  double loss = 0.0;
  for (std::size_t j = 0; j < label.depth(); ++j) loss -= step_log_prob(trace, label, j);
  return loss;
}

double propensity(const ForwardTrace& trace, const SampleLabel& label, std::size_t level,
                  double floor) {
  if (level < 1 || level > label.depth()) {
    throw std::invalid_argument("propensity level " + std::to_string(level) + " outside [1, " +
                                std::to_string(label.depth()) + "]");
  }
  double reach = 1.0;
  for (std::size_t j = 0; j + 1 < level; ++j) reach *= step_probability(trace, label, j);
  return std::clamp(reach, floor, 1.0);
}

std::vector<double> ucl_weights(const ForwardTrace& trace, const SampleLabel& label, double floor) {
  check_label(trace, label);
  std::vector<double> weights(label.depth());
  double reach = 1.0;
  for (std::size_t j = 0; j < label.depth(); ++j) {
    weights[j] = 1.0 / std::clamp(reach, floor, 1.0);
    reach *= step_probability(trace, label, j);
  }
  return weights;
}

double weighted_ce_loss(const ForwardTrace& trace, const SampleLabel& label,
                        std::span<const double> weights) {
  check_label(trace, label);
  if (weights.size() != label.depth()) throw std::invalid_argument("one weight per path step required");
  double loss = 0.0;
  for (std::size_t j = 0; j < label.depth(); ++j) loss -= weights[j] * step_log_prob(trace, label, j);
  return loss;
}

double ce_ucl_loss(const ForwardTrace& trace, const IntervalTree& tree, const SampleLabel& label,
                   double floor) {
  check_heads(trace.q, tree);
  return weighted_ce_loss(trace, label, ucl_weights(trace, label, floor));
}

double reg_loss(double prediction, double y) {
  const double diff = prediction - y;
  return diff * diff;
}

double var_loss(const LeafDistribution& dist) { return variance(dist); }

void weighted_ce_logit_grad(const ForwardTrace& trace, const SampleLabel& label,
                            std::span<const double> weights, double scale,
                            std::span<double> logit_grads) {
  check_label(trace, label);
  if (weights.size() != label.depth()) throw std::invalid_argument("one weight per path step required");
  for (std::size_t j = 0; j < label.depth(); ++j) {
    const NodeId node = label.path[j];
    // d/dz of -log sigmoid(+-z) is sigmoid(z) - o.
    logit_grads[node] += scale * weights[j] * (trace.q[node] - static_cast<double>(label.o[j]));
  }
}

void leaf_linear_logit_grad(std::span<const double> q, const IntervalTree& tree,
                            const LeafDistribution& dist, std::span<const double> values,
                            double scale, std::span<double> logit_grads) {
  check_heads(q, tree);
  if (values.size() != dist.leaf_ids.size()) throw std::invalid_argument("one value per leaf required");
  // subtree[id] = sum over leaves k below id of values[k] * P(k).
  std::vector<double> subtree(full_node_count(tree.global_depth()), 0.0);
  for (std::size_t k = 0; k < dist.leaf_ids.size(); ++k) {
    subtree[dist.leaf_ids[k]] = values[k] * dist.probs[k];
  }
  const auto nodes = tree.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->is_leaf) continue;
    const double left = subtree[*it->left];
    const double right = subtree[*it->right];
    subtree[it->id] = left + right;
    // d log q / dz = 1 - q on the right branch, d log(1-q) / dz = -q on the left.
    logit_grads[it->id] += scale * ((1.0 - q[it->id]) * right - q[it->id] * left);
  }
}

void expectation_logit_grad(std::span<const double> q, const IntervalTree& tree,
                            const LeafDistribution& dist, double scale,
                            std::span<double> logit_grads) {
  leaf_linear_logit_grad(q, tree, dist, dist.midpoints, scale, logit_grads);
}

void variance_logit_grad(std::span<const double> q, const IntervalTree& tree,
                         const LeafDistribution& dist, double scale,
                         std::span<double> logit_grads) {
  // Var = E[m^2] - E[m]^2, so dVar = dE[m^2] - 2 E[m] dE[m]. The clamp at 0 is
  // ignored here; it only triggers on rounding noise.
  const double mean = expected_watch_time(dist);
  std::vector<double> values(dist.midpoints.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = dist.midpoints[k] * dist.midpoints[k] - 2.0 * mean * dist.midpoints[k];
  }
  leaf_linear_logit_grad(q, tree, dist, values, scale, logit_grads);
}

}  // namespace ptpm
