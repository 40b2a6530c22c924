#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptpm/interval_tree.hpp"
#include "ptpm/tpm.hpp"

namespace ptpm {

// Mean absolute error. Throws std::invalid_argument on empty or unequal inputs.
double mae(std::span<const double> y, std::span<const double> y_hat);

// Fraction of label-distinct pairs whose predictions are ordered the same way
// as the labels. Label ties are excluded; prediction ties earn nothing.
// O(n log n). Throws when n < 2 or every label is tied.
double xauc(std::span<const double> y, std::span<const double> y_hat);

// Rank-based ROC AUC with half credit for score ties. Throws when either
// class is missing.
double binary_auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct PriorPosterior {
  std::vector<double> predicted;              // sum_i P(leaf k | x_i)
  std::vector<std::size_t> counts;            // #{i : y_i in leaf k}
  std::vector<std::optional<double>> ratios;  // predicted / count; empty when count == 0
  double mean_abs_deviation = 0.0;            // mean |ratio - 1| over present ratios
};

// `dists[i]` is sample i's distribution over the leaves of `tree` and
// `labels[i]` its true leaf. Throws on an empty evaluation set.
PriorPosterior prior_posterior_ratio(const IntervalTree& tree, std::span<const LeafDistribution> dists,
                                     std::span<const SampleLabel> labels);

struct ClassifierAuc {
  double mean = 0.0;
  std::size_t evaluated = 0;  // nodes with both classes present
  std::size_t skipped = 0;
};

// Average AUC of the node classifiers, each evaluated on the samples whose
// label path passes through the node.
ClassifierAuc average_classifier_auc(const IntervalTree& tree,
                                     std::span<const std::vector<double>> q,
                                     std::span<const SampleLabel> labels);

}  // namespace ptpm
