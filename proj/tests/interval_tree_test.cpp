#include "ptpm/interval_tree.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

void expect_partition(const IntervalTree& tree) {
  const auto& leaves = tree.leaf_ids();
  ASSERT_FALSE(leaves.empty());
  EXPECT_EQ(tree.node(leaves.front()).v_lo, 0.0);
  EXPECT_EQ(tree.node(leaves.back()).v_hi, tree.v_max());
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const TreeNode& n = tree.node(leaves[k]);
    EXPECT_TRUE(n.is_leaf);
    EXPECT_LT(n.v_lo, n.v_hi);
    EXPECT_LT(n.q_lo, n.q_hi);
    if (k > 0) EXPECT_EQ(tree.node(leaves[k - 1]).v_hi, n.v_lo);
  }
}

TEST(IntervalTreeTest, EightLabelsDepthTwoUsesNearestRankBoundaries) {
  const auto labels = one_to(8);
  const IntervalTree tree = IntervalTree::build_full(labels, 2);
  ASSERT_EQ(tree.leaf_count(), 4u);
  const std::vector<double> expected_lo{0, 2, 4, 6};
  const std::vector<double> expected_mid{1, 3, 5, 7};
  for (std::size_t k = 0; k < 4; ++k) {
    const TreeNode& leaf = tree.node(tree.leaf_ids()[k]);
    EXPECT_DOUBLE_EQ(leaf.v_lo, expected_lo[k]);
    EXPECT_DOUBLE_EQ(leaf.midpoint(), expected_mid[k]);
    EXPECT_DOUBLE_EQ(leaf.q_lo, 0.25 * static_cast<double>(k));
  }
  EXPECT_DOUBLE_EQ(tree.v_max(), 8.0);
  expect_partition(tree);
}

TEST(IntervalTreeTest, AllEqualLabelsAreDegenerate) {
  const std::vector<double> labels{5, 5, 5, 5};
  EXPECT_THROW(IntervalTree::build_full(labels, 1), DataError);
}

TEST(IntervalTreeTest, RejectsEmptyAndNegativeLabels) {
  EXPECT_THROW(IntervalTree::build_full(std::vector<double>{}, 2), DataError);
  EXPECT_THROW(IntervalTree::build_full(std::vector<double>{1.0, -2.0, 3.0}, 1), DataError);
  EXPECT_THROW(IntervalTree::build_full(one_to(8), 0), std::invalid_argument);
}

TEST(IntervalTreeTest, JitterBreaksInteriorTies) {
  // Sorted: 1 1 1 1 1 1 2 9 -> quantiles at 1/4, 2/4, 3/4 are all 1.
  const std::vector<double> labels{1, 1, 1, 1, 1, 1, 2, 9};
  EXPECT_THROW(IntervalTree::build_full(labels, 2), DataError);
  const IntervalTree tree = IntervalTree::build_full(labels, 2, DedupePolicy::kJitter);
  const double eps = 1e-9 * 9.0;
  const auto& b = tree.boundaries();
  EXPECT_DOUBLE_EQ(b[1], 1.0);
  EXPECT_DOUBLE_EQ(b[2], 1.0 + eps);
  EXPECT_DOUBLE_EQ(b[3], 1.0 + 2 * eps);
  expect_partition(tree);
}

TEST(IntervalTreeTest, FullTreeCounts) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> expo(0.1);
  std::vector<double> labels(500);
  for (double& y : labels) y = expo(rng);
  for (int depth = 1; depth <= 6; ++depth) {
    const IntervalTree tree = IntervalTree::build_full(labels, depth);
    EXPECT_EQ(tree.node_count(), full_node_count(depth));
    EXPECT_EQ(tree.leaf_count(), full_leaf_count(depth));
    EXPECT_EQ(tree.prunable_count(), full_prunable_count(depth));
    expect_partition(tree);
  }
  EXPECT_EQ(full_node_count(3), 15u);
  EXPECT_EQ(full_leaf_count(3), 8u);
  EXPECT_EQ(full_prunable_count(3), 6u);
}

TEST(IntervalTreeTest, ChildrenPartitionTheirParent) {
  const IntervalTree tree = IntervalTree::build_full(one_to(64), 4);
  for (const TreeNode& n : tree.nodes()) {
    if (n.is_leaf) continue;
    const TreeNode& l = tree.node(*n.left);
    const TreeNode& r = tree.node(*n.right);
    EXPECT_EQ(l.q_hi, r.q_lo);
    EXPECT_EQ(l.v_hi, r.v_lo);
    EXPECT_EQ(l.q_lo, n.q_lo);
    EXPECT_EQ(r.q_hi, n.q_hi);
    EXPECT_EQ(l.v_lo, n.v_lo);
    EXPECT_EQ(r.v_hi, n.v_hi);
    EXPECT_EQ(l.depth, n.depth + 1);
  }
}

TEST(IntervalTreeTest, PathToLeaf) {
  const IntervalTree d2 = IntervalTree::build_full(one_to(8), 2);
  EXPECT_EQ(d2.path_to_leaf(6), (std::vector<NodeId>{0, 2, 6}));
  const IntervalTree d1 = IntervalTree::build_full(one_to(8), 1);
  EXPECT_EQ(d1.path_to_leaf(1), (std::vector<NodeId>{0, 1}));
  EXPECT_THROW(d2.path_to_leaf(2), std::invalid_argument);
  for (NodeId leaf : d2.leaf_ids()) EXPECT_EQ(d2.path_to_leaf(leaf).front(), 0u);
}

TEST(IntervalTreeTest, LeafForValueConventions) {
  const IntervalTree tree = IntervalTree::build_full(one_to(8), 2);
  const auto& leaves = tree.leaf_ids();
  EXPECT_EQ(tree.leaf_for_value(4.0), leaves[2]);
  EXPECT_EQ(tree.leaf_for_value(3.999), leaves[1]);
  EXPECT_EQ(tree.leaf_for_value(0.0), leaves[0]);
  EXPECT_EQ(tree.leaf_for_value(8.0), leaves[3]);
  EXPECT_EQ(tree.leaf_for_value(100.0), leaves[3]);
  EXPECT_THROW(tree.leaf_for_value(-1.0), std::invalid_argument);
}

TEST(IntervalTreeTest, PathNodesContainTheValue) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 120.0);
  const IntervalTree tree = IntervalTree::build_full(one_to(100), 5);
  for (int trial = 0; trial < 500; ++trial) {
    const double y = u(rng);
    const double clamped = std::min(y, tree.v_max());
    for (NodeId id : tree.path_to_leaf(tree.leaf_for_value(y))) {
      const TreeNode& n = tree.node(id);
      EXPECT_LE(n.v_lo, clamped);
      EXPECT_TRUE(clamped < n.v_hi || n.v_hi == tree.v_max());
    }
  }
}

TEST(IntervalTreeTest, PruneCollapsesNodeOne) {
  const IntervalTree tree = IntervalTree::build_full(one_to(8), 2);
  const IntervalTree pruned = tree.apply_prune(PruneMask{{1, 0}});
  EXPECT_EQ(pruned.leaf_ids(), (std::vector<NodeId>{1, 5, 6}));
  EXPECT_TRUE(pruned.node(1).is_leaf);
  EXPECT_FALSE(pruned.has_node(3));
  expect_partition(pruned);
}

TEST(IntervalTreeTest, ZeroMaskIsIdentity) {
  const IntervalTree tree = IntervalTree::build_full(one_to(64), 4);
  const IntervalTree same = tree.apply_prune(PruneMask{std::vector<std::uint8_t>(tree.prunable_count(), 0)});
  EXPECT_EQ(same.leaf_ids(), tree.leaf_ids());
  EXPECT_EQ(same.node_count(), tree.node_count());
}

TEST(IntervalTreeTest, AncestorDominatesDescendant) {
  const IntervalTree tree = IntervalTree::build_full(one_to(64), 3);
  PruneMask ancestor_only{std::vector<std::uint8_t>(6, 0)};
  ancestor_only.actions[prunable_index(1)] = 1;
  PruneMask both = ancestor_only;
  both.actions[prunable_index(3)] = 1;
  EXPECT_EQ(tree.apply_prune(both).leaf_ids(), tree.apply_prune(ancestor_only).leaf_ids());
  const auto eff = effective_actions(both.actions, 3);
  EXPECT_EQ(eff[prunable_index(3)], 0);
  EXPECT_EQ(eff[prunable_index(1)], 1);
}

TEST(IntervalTreeTest, PruneRejectsWrongLength) {
  const IntervalTree tree = IntervalTree::build_full(one_to(8), 2);
  EXPECT_THROW(tree.apply_prune(PruneMask{{1}}), std::invalid_argument);
}

TEST(IntervalTreeTest, PruneIsIdempotentAndMonotone) {
  const IntervalTree tree = IntervalTree::build_full(one_to(64), 3);
  const auto masks = testing::all_masks(3);
  for (const PruneMask& m : masks) {
    const IntervalTree once = tree.apply_prune(m);
    expect_partition(once);
    EXPECT_EQ(tree.apply_prune(m).leaf_ids(), once.leaf_ids());
    // Adding any further action never increases the leaf count.
    for (std::size_t i = 0; i < m.actions.size(); ++i) {
      if (m.actions[i]) continue;
      PruneMask more = m;
      more.actions[i] = 1;
      EXPECT_LE(tree.apply_prune(more).leaf_count(), once.leaf_count());
    }
  }
}

TEST(IntervalTreeTest, CountValidSubtreesMatchesEnumeration) {
  EXPECT_EQ(count_valid_subtrees(0), 1u);
  EXPECT_EQ(count_valid_subtrees(1), 2u);
  EXPECT_EQ(count_valid_subtrees(2), 5u);
  EXPECT_EQ(count_valid_subtrees(3), 26u);
  EXPECT_EQ(count_valid_subtrees(6), 210066388901ULL);
  EXPECT_THROW(count_valid_subtrees(7), std::overflow_error);
  // A depth-1 tree has no prunable node, so it reaches only itself; the
  // recurrence's extra tree at depth >= 1 is the root collapsed to a leaf,
  // which pruning (root excluded) cannot produce.
  for (int depth = 1; depth <= 3; ++depth) {
    const IntervalTree tree = IntervalTree::build_full(one_to(64), depth);
    EXPECT_EQ(testing::distinct_partitions(tree), count_valid_subtrees(depth) - 1) << "depth " << depth;
  }
}

TEST(IntervalTreeTest, FromBoundariesRoundTrips) {
  const IntervalTree tree = IntervalTree::build_full(one_to(50), 3);
  const IntervalTree copy = IntervalTree::from_boundaries(3, tree.boundaries());
  EXPECT_EQ(copy.boundaries(), tree.boundaries());
  EXPECT_EQ(copy.leaf_ids(), tree.leaf_ids());
  EXPECT_THROW(IntervalTree::from_boundaries(3, {0, 1, 2}), std::invalid_argument);
}

}  // namespace
}  // namespace ptpm
