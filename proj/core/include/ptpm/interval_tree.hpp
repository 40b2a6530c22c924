#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ptpm {

// Node ids follow heap (BFS) numbering of the full global tree: the root is 0
// and the children of node i are 2i+1 and 2i+2. Pruned trees keep the ids of
// the global tree, so a node id always names the same label interval.
using NodeId = std::size_t;

struct TreeNode {
  NodeId id = 0;
  std::optional<NodeId> parent;
  std::optional<NodeId> left;
  std::optional<NodeId> right;
  int depth = 0;
  double q_lo = 0.0;
  double q_hi = 1.0;
  double v_lo = 0.0;
  double v_hi = 0.0;
  bool is_leaf = true;

  double midpoint() const { return 0.5 * (v_lo + v_hi); }
};

// Pruning actions over the prunable nodes of a global tree (internal, non-root),
// indexed in BFS order. Prunable index k refers to node id k + 1.
struct PruneMask {
  std::vector<std::uint8_t> actions;

  bool operator==(const PruneMask&) const = default;
};

enum class DedupePolicy {
  kError,   // equal adjacent quantile boundaries are rejected
  kJitter,  // the k-th duplicate is shifted up by k * 1e-9 * v_max
};

// Counts for a full binary tree of the given depth.
constexpr std::size_t full_node_count(int depth) { return (std::size_t{2} << depth) - 1; }
constexpr std::size_t full_leaf_count(int depth) { return std::size_t{1} << depth; }
constexpr std::size_t full_internal_count(int depth) { return full_leaf_count(depth) - 1; }
constexpr std::size_t full_prunable_count(int depth) {
  return depth < 1 ? 0 : full_leaf_count(depth) - 2;
}

constexpr NodeId left_child_id(NodeId id) { return 2 * id + 1; }
constexpr NodeId right_child_id(NodeId id) { return 2 * id + 2; }
constexpr std::size_t prunable_index(NodeId id) { return id - 1; }
constexpr NodeId prunable_node(std::size_t index) { return index + 1; }

// Binary discretization tree over the label range [0, v_max]. Immutable once
// built; pruning returns a new tree.
class IntervalTree {
 public:
  // Full tree of the given depth whose leaf boundaries are nearest-rank
  // quantiles of `labels` at k / 2^depth. Left edge is 0, right edge is
  // max(labels). Throws DataError on degenerate boundaries (see DedupePolicy).
  static IntervalTree build_full(std::span<const double> labels, int depth,
                                 DedupePolicy dedupe = DedupePolicy::kError);

  // Full tree from explicit raw leaf boundaries (2^depth + 1 strictly
  // increasing values starting at 0). Used when restoring checkpoints.
  static IntervalTree from_boundaries(int depth, std::vector<double> boundaries);

  int global_depth() const { return global_depth_; }
  double v_max() const { return boundaries_.back(); }
  // Raw leaf boundaries of the global tree, 2^depth + 1 entries.
  const std::vector<double>& boundaries() const { return boundaries_; }

  std::span<const TreeNode> nodes() const { return nodes_; }
  const std::vector<NodeId>& leaf_ids() const { return leaf_ids_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_ids_.size(); }

  bool has_node(NodeId id) const;
  const TreeNode& node(NodeId id) const;
  const TreeNode& root() const { return nodes_.front(); }

  // Number of classifier heads / pruning heads the global tree needs.
  std::size_t classifier_count() const { return full_internal_count(global_depth_); }
  std::size_t prunable_count() const { return full_prunable_count(global_depth_); }

  // Root-to-leaf node ids; throws std::invalid_argument for non-leaf ids.
  std::vector<NodeId> path_to_leaf(NodeId leaf) const;

  // Leaf whose interval contains y. Intervals are [lo, hi) except the
  // rightmost, which is closed; values above v_max clamp to the rightmost
  // leaf. Throws std::invalid_argument for negative or non-finite y.
  NodeId leaf_for_value(double y) const;

  // Collapses every node whose effective action is 1 into a leaf. An action
  // is ignored when an ancestor is already collapsed.
  IntervalTree apply_prune(const PruneMask& mask) const;

 private:
  IntervalTree() = default;
  static IntervalTree make_full(int depth, std::vector<double> boundaries);
  void index_nodes();

  int global_depth_ = 0;
  std::vector<double> boundaries_;
  std::vector<TreeNode> nodes_;       // ascending id
  std::vector<std::size_t> slot_;     // global id -> position in nodes_, or npos
  std::vector<NodeId> leaf_ids_;      // left to right
};

// Per-prunable-node flag: true when the action can change the realized tree
// (no ancestor of the node has action 1). `actions` must be indexed like
// PruneMask::actions for a tree of `depth`.
std::vector<std::uint8_t> effective_actions(std::span<const std::uint8_t> actions, int depth);

// Number of distinct trees reachable by pruning a full tree of `depth`:
// f(0) = 1, f(d) = 1 + f(d-1)^2. Throws std::overflow_error past 64 bits
// (depth > 6).
std::uint64_t count_valid_subtrees(int depth);

}  // namespace ptpm
