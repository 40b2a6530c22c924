#include "ptpm/interval_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

int depth_of(NodeId id) {
  int depth = 0;
  while (id > 0) {
    id = (id - 1) / 2;
    ++depth;
  }
  return depth;
}

// Nearest-rank quantile: value at index ceil(q * n) - 1 of the sorted sample.
double nearest_rank(const std::vector<double>& sorted, std::size_t num, std::size_t den) {
  const std::size_t n = sorted.size();
  // ceil(num * n / den) without floating point.
  std::size_t rank = (num * n + den - 1) / den;
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

}  // namespace

IntervalTree IntervalTree::build_full(std::span<const double> labels, int depth,
                                      DedupePolicy dedupe) {
  if (depth < 1) throw std::invalid_argument("tree depth must be >= 1");
  if (depth > 20) throw std::invalid_argument("tree depth must be <= 20");
  if (labels.empty()) throw DataError("cannot build a tree from an empty label set");
  for (double y : labels) {
    if (!std::isfinite(y) || y < 0.0) {
      throw DataError("labels must be finite and non-negative, got " + std::to_string(y));
    }
  }

  std::vector<double> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());

  const std::size_t leaves = full_leaf_count(depth);
  std::vector<double> bounds(leaves + 1);
  bounds.front() = 0.0;
  bounds.back() = sorted.back();
  for (std::size_t k = 1; k < leaves; ++k) bounds[k] = nearest_rank(sorted, k, leaves);

  if (dedupe == DedupePolicy::kJitter) {
    // Only interior boundaries move; the edges stay pinned to 0 and v_max.
    const double eps = 1e-9 * sorted.back();
    const std::vector<double> original = bounds;
    std::size_t run = 0;
    for (std::size_t k = 1; k < leaves; ++k) {
      run = original[k] == original[k - 1] ? run + 1 : 0;
      bounds[k] = original[k] + static_cast<double>(run) * eps;
    }
  }

  for (std::size_t k = 1; k < bounds.size(); ++k) {
    if (!(bounds[k] > bounds[k - 1])) {
      throw DataError("degenerate quantiles: leaf boundaries " + std::to_string(k - 1) + " and " +
                      std::to_string(k) + " are both " + std::to_string(bounds[k]) +
                      " (use dedupe=jitter or a shallower tree)");
    }
  }
  return make_full(depth, std::move(bounds));
}

IntervalTree IntervalTree::from_boundaries(int depth, std::vector<double> boundaries) {
  if (depth < 1 || depth > 20) throw std::invalid_argument("tree depth must be in [1, 20]");
  if (boundaries.size() != full_leaf_count(depth) + 1) {
    throw std::invalid_argument("expected " + std::to_string(full_leaf_count(depth) + 1) +
                                " boundaries for depth " + std::to_string(depth));
  }
  if (boundaries.front() != 0.0) throw std::invalid_argument("first boundary must be 0");
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    if (!(boundaries[k] > boundaries[k - 1]) || !std::isfinite(boundaries[k])) {
      throw std::invalid_argument("boundaries must be finite and strictly increasing");
    }
  }
  return make_full(depth, std::move(boundaries));
}

IntervalTree IntervalTree::make_full(int depth, std::vector<double> boundaries) {
  IntervalTree tree;
  tree.global_depth_ = depth;
  tree.boundaries_ = std::move(boundaries);

  const std::size_t count = full_node_count(depth);
  const double leaves = static_cast<double>(full_leaf_count(depth));
  tree.nodes_.resize(count);
  for (NodeId id = 0; id < count; ++id) {
    TreeNode& n = tree.nodes_[id];
    n.id = id;
    n.depth = depth_of(id);
    if (id > 0) n.parent = (id - 1) / 2;
    n.is_leaf = n.depth == depth;
    if (!n.is_leaf) {
      n.left = left_child_id(id);
      n.right = right_child_id(id);
    }
    const std::size_t pos = id - (full_leaf_count(n.depth) - 1);
    const std::size_t span = full_leaf_count(depth - n.depth);
    const std::size_t lo = pos * span;
    const std::size_t hi = lo + span;
    n.q_lo = static_cast<double>(lo) / leaves;
    n.q_hi = static_cast<double>(hi) / leaves;
    n.v_lo = tree.boundaries_[lo];
    n.v_hi = tree.boundaries_[hi];
  }
  tree.index_nodes();
  return tree;
}

void IntervalTree::index_nodes() {
  slot_.assign(full_node_count(global_depth_), kNoSlot);
  for (std::size_t i = 0; i < nodes_.size(); ++i) slot_[nodes_[i].id] = i;

  leaf_ids_.clear();
  // Iterative in-order walk so leaves come out left to right.
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const TreeNode& n = node(stack.back());
    stack.pop_back();
    if (n.is_leaf) {
      leaf_ids_.push_back(n.id);
    } else {
      stack.push_back(*n.right);
      stack.push_back(*n.left);
    }
  }
}

bool IntervalTree::has_node(NodeId id) const { return id < slot_.size() && slot_[id] != kNoSlot; }

const TreeNode& IntervalTree::node(NodeId id) const {
  if (!has_node(id)) throw std::invalid_argument("node " + std::to_string(id) + " is not in the tree");
  return nodes_[slot_[id]];
}

std::vector<NodeId> IntervalTree::path_to_leaf(NodeId leaf) const {
  const TreeNode& n = node(leaf);
  if (!n.is_leaf) throw std::invalid_argument("node " + std::to_string(leaf) + " is not a leaf");
  std::vector<NodeId> path(static_cast<std::size_t>(n.depth) + 1);
  NodeId id = leaf;
  for (std::size_t i = path.size(); i-- > 0;) {
    path[i] = id;
    if (id > 0) id = (id - 1) / 2;
  }
  return path;
}

NodeId IntervalTree::leaf_for_value(double y) const {
  if (!(y >= 0.0)) throw std::invalid_argument("watch time must be non-negative and finite");
  const TreeNode* n = &root();
  while (!n->is_leaf) {
    const TreeNode& right = node(*n->right);
    n = y >= right.v_lo ? &right : &node(*n->left);
  }
  return n->id;
}

std::vector<std::uint8_t> effective_actions(std::span<const std::uint8_t> actions, int depth) {
  const std::size_t count = full_prunable_count(depth);
  if (actions.size() != count) {
    throw std::invalid_argument("mask has " + std::to_string(actions.size()) +
                                " entries, tree has " + std::to_string(count) + " prunable nodes");
  }
  // blocked[k]: some strict ancestor of prunable node k is collapsed.
  std::vector<std::uint8_t> blocked(count, 0);
  std::vector<std::uint8_t> effective(count, 1);
  for (std::size_t k = 0; k < count; ++k) {
    const NodeId id = prunable_node(k);
    const NodeId parent = (id - 1) / 2;
    if (parent > 0) {
      const std::size_t pk = prunable_index(parent);
      blocked[k] = blocked[pk] || actions[pk] != 0;
    }
    effective[k] = blocked[k] ? 0 : 1;
  }
  return effective;
}

IntervalTree IntervalTree::apply_prune(const PruneMask& mask) const {
  const auto effective = effective_actions(mask.actions, global_depth_);
  IntervalTree out;
  out.global_depth_ = global_depth_;
  out.boundaries_ = boundaries_;
  out.nodes_.reserve(nodes_.size());
  // Nodes are stored by ascending id, so parents are visited before children.
  std::vector<std::uint8_t> keep(slot_.size(), 0);
  keep[0] = 1;
  for (const TreeNode& n : nodes_) {
    if (!keep[n.id]) continue;
    TreeNode copy = n;
    if (!n.is_leaf) {
      const bool collapse = n.id > 0 && effective[prunable_index(n.id)] &&
                            mask.actions[prunable_index(n.id)] != 0;
      if (collapse) {
        copy.is_leaf = true;
        copy.left.reset();
        copy.right.reset();
      } else {
        keep[*n.left] = 1;
        keep[*n.right] = 1;
      }
    }
    out.nodes_.push_back(copy);
  }
  out.index_nodes();
  return out;
}

std::uint64_t count_valid_subtrees(int depth) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  std::uint64_t f = 1;
  for (int d = 1; d <= depth; ++d) {
    if (f > std::numeric_limits<std::uint32_t>::max()) {
      throw std::overflow_error("subtree count exceeds 64 bits at depth " + std::to_string(depth));
    }
    f = 1 + f * f;
  }
  return f;
}

}  // namespace ptpm
