#include "ptpm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ptpm {
namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite value in ") + what);
  }
}

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("labels and predictions differ in length");
  check_finite(y, "labels");
  check_finite(y_hat, "predictions");
}

// Fenwick tree over prediction ranks.
class RankCounter {
 public:
  explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Number of inserted ranks < rank.
  std::uint64_t below(std::size_t rank) const {
    std::uint64_t total = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  if (y.empty()) throw std::invalid_argument("mae of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y_hat[i] - y[i]);
  return total / static_cast<double>(y.size());
}

double xauc(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const std::size_t n = y.size();
  if (n < 2) throw std::invalid_argument("xauc needs at least two samples");

  // Dense ranks of predictions so equal predictions share a rank.
  std::vector<double> sorted_hat(y_hat.begin(), y_hat.end());
  std::sort(sorted_hat.begin(), sorted_hat.end());
  sorted_hat.erase(std::unique(sorted_hat.begin(), sorted_hat.end()), sorted_hat.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(sorted_hat.begin(), sorted_hat.end(), y_hat[i]) -
                                       sorted_hat.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

  // Walk label groups in increasing order; every earlier sample has a strictly
  // smaller label, so a pair is concordant iff its earlier member also has a
  // strictly smaller prediction.
  RankCounter counter(sorted_hat.size());
  std::uint64_t concordant = 0;
  std::uint64_t pairs = 0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && y[order[end]] == y[order[start]]) ++end;
    for (std::size_t k = start; k < end; ++k) concordant += counter.below(rank[order[k]]);
    pairs += static_cast<std::uint64_t>(end - start) * seen;
    for (std::size_t k = start; k < end; ++k) counter.add(rank[order[k]]);
    seen += end - start;
    start = end;
  }
  if (pairs == 0) throw std::invalid_argument("xauc is undefined when every label is tied");
  return static_cast<double>(concordant) / static_cast<double>(pairs);
}

double binary_auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("labels and scores differ in length");
  check_finite(scores, "scores");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with mid-ranks, kept in doubled integer units so that the
  // tie half-credit stays exact.
  std::uint64_t positives = 0;
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    const std::uint64_t doubled_mid_rank = static_cast<std::uint64_t>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]]) {
        ++positives;
        doubled_rank_sum += doubled_mid_rank;
      }
    }
    start = end;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("binary_auc needs both classes");
  const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(positives * negatives));
}

PriorPosterior prior_posterior_ratio(const IntervalTree& tree, std::span<const LeafDistribution> dists,
                                     std::span<const SampleLabel> labels) {
  if (dists.empty()) throw std::invalid_argument("prior/posterior ratio of an empty evaluation set");
  if (dists.size() != labels.size()) throw std::invalid_argument("one label per distribution required");
  const auto& leaves = tree.leaf_ids();
  std::vector<std::size_t> position(full_node_count(tree.global_depth()), leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) position[leaves[k]] = k;

  PriorPosterior out;
  out.predicted.assign(leaves.size(), 0.0);
  out.counts.assign(leaves.size(), 0);
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (dists[i].leaf_ids != leaves) throw std::invalid_argument("distribution is over a different tree");
    for (std::size_t k = 0; k < leaves.size(); ++k) out.predicted[k] += dists[i].probs[k];
    const std::size_t k = position.at(labels[i].leaf);
    if (k == leaves.size()) throw std::invalid_argument("label leaf is not a leaf of the tree");
    ++out.counts[k];
  }
  double deviation = 0.0;
  std::size_t present = 0;
  out.ratios.resize(leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    if (out.counts[k] == 0) continue;
    const double ratio = out.predicted[k] / static_cast<double>(out.counts[k]);
    out.ratios[k] = ratio;
    deviation += std::abs(ratio - 1.0);
    ++present;
  }
  out.mean_abs_deviation = present == 0 ? 0.0 : deviation / static_cast<double>(present);
  return out;
}

ClassifierAuc average_classifier_auc(const IntervalTree& tree,
                                     std::span<const std::vector<double>> q,
                                     std::span<const SampleLabel> labels) {
  if (q.size() != labels.size()) throw std::invalid_argument("one label per trace required");
  const std::size_t heads = tree.classifier_count();
  std::vector<std::vector<std::uint8_t>> node_labels(heads);
  std::vector<std::vector<double>> node_scores(heads);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const SampleLabel& label = labels[i];
    for (std::size_t j = 0; j < label.depth(); ++j) {
      const NodeId node = label.path[j];
      node_labels[node].push_back(label.o[j]);
      node_scores[node].push_back(q[i].at(node));
    }
  }
  ClassifierAuc out;
  double total = 0.0;
  for (std::size_t node = 0; node < heads; ++node) {
    if (!tree.has_node(node) || tree.node(node).is_leaf) continue;
    const auto& l = node_labels[node];
    const auto positives = static_cast<std::size_t>(std::count(l.begin(), l.end(), std::uint8_t{1}));
    if (positives == 0 || positives == l.size()) {
      ++out.skipped;
      continue;
    }
    total += binary_auc(l, node_scores[node]);
    ++out.evaluated;
  }
  out.mean = out.evaluated == 0 ? 0.0 : total / static_cast<double>(out.evaluated);
  return out;
}

}  // namespace ptpm
