#include "ptpm/tpm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"

namespace ptpm {
namespace {

IntervalTree small_tree(int depth) {
  std::vector<double> labels(64);
  std::iota(labels.begin(), labels.end(), 1.0);
  return IntervalTree::build_full(labels, depth);
}

IntervalTree eight_tree() {
  std::vector<double> labels(8);
  std::iota(labels.begin(), labels.end(), 1.0);
  return IntervalTree::build_full(labels, 2);
}

TEST(LeafDistributionTest, ProductsAlongPaths) {
  const IntervalTree tree = eight_tree();
  const LeafDistribution dist = leaf_distribution(std::vector<double>{0.6, 0.3, 0.7}, tree);
  const std::vector<double> expected{0.28, 0.12, 0.18, 0.42};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(dist.probs[k], expected[k], 1e-15);
  EXPECT_EQ(dist.midpoints, (std::vector<double>{1, 3, 5, 7}));
  EXPECT_NEAR(expected_watch_time(dist), 4.48, 1e-12);
  EXPECT_NEAR(variance(dist), 6.3696, 1e-12);
  EXPECT_NEAR(var_loss(dist), 6.3696, 1e-12);
}

TEST(LeafDistributionTest, SpecialDistributions) {
  LeafDistribution one_hot{{3, 4, 5, 6}, {0, 0, 1, 0}, {1, 3, 5, 7}};
  EXPECT_DOUBLE_EQ(expected_watch_time(one_hot), 5.0);
  EXPECT_DOUBLE_EQ(variance(one_hot), 0.0);
  LeafDistribution uniform{{3, 4, 5, 6}, {0.25, 0.25, 0.25, 0.25}, {1, 3, 5, 7}};
  EXPECT_DOUBLE_EQ(expected_watch_time(uniform), 4.0);
  EXPECT_DOUBLE_EQ(variance(uniform), 5.0);
  EXPECT_DOUBLE_EQ(expected_watch_time(rescaled(uniform, 0.5)), 2.0);
}

TEST(LeafDistributionTest, PrunedTreeMergesMass) {
  const IntervalTree tree = eight_tree();
  const IntervalTree pruned = tree.apply_prune(PruneMask{{1, 0}});
  const LeafDistribution dist = leaf_distribution(std::vector<double>{0.6, 0.3, 0.7}, pruned);
  ASSERT_EQ(dist.probs.size(), 3u);
  EXPECT_NEAR(dist.probs[0], 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(dist.midpoints[0], 2.0);
  EXPECT_NEAR(expected_leaf_depth(dist, pruned), 0.4 * 1 + 0.6 * 2, 1e-15);
}

TEST(LeafDistributionTest, MatchesBruteForceAndSumsToOne) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int depth = 1; depth <= 5; ++depth) {
    const IntervalTree tree = small_tree(depth);
    std::vector<double> q(tree.classifier_count());
    for (double& v : q) v = u(rng);
    const LeafDistribution dist = leaf_distribution(q, tree);
    double total = 0.0;
    for (std::size_t k = 0; k < dist.probs.size(); ++k) {
      EXPECT_NEAR(dist.probs[k], testing::brute_leaf_prob(q, tree, dist.leaf_ids[k]), 1e-15);
      total += dist.probs[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(variance(dist), testing::brute_variance(dist.probs, dist.midpoints), 1e-9);
  }
}

TEST(LeafDistributionTest, RejectsTooFewHeads) {
  EXPECT_THROW(leaf_distribution(std::vector<double>{0.5}, eight_tree()), std::invalid_argument);
}

TEST(LabelTest, PathAndDirections) {
  const IntervalTree tree = eight_tree();
  const SampleLabel label = make_label(tree, 7.5);
  EXPECT_EQ(label.leaf, 6u);
  EXPECT_EQ(label.path, (std::vector<NodeId>{0, 2, 6}));
  EXPECT_EQ(label.o, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(make_label(tree, 2.5).o, (std::vector<std::uint8_t>{0, 1}));
}

TEST(CeLossTest, SumOfStepLogs) {
  const IntervalTree tree = eight_tree();
  const ForwardTrace t = testing::trace_from_q({0.6, 0.3, 0.7});
  const SampleLabel label = make_label(tree, 7.5);
  EXPECT_NEAR(step_probability(t, label, 0), 0.6, 1e-15);
  EXPECT_NEAR(step_probability(t, label, 1), 0.7, 1e-15);
  EXPECT_NEAR(ce_loss(t, tree, label), -(std::log(0.6) + std::log(0.7)), 1e-12);
  EXPECT_NEAR(ce_loss(t, tree, label), 0.8675, 1e-4);
}

TEST(CeLossTest, SymmetricAndPerfectCases) {
  for (int depth = 1; depth <= 4; ++depth) {
    const IntervalTree tree = small_tree(depth);
    const ForwardTrace half = testing::trace_from_q(std::vector<double>(tree.classifier_count(), 0.5));
    const SampleLabel label = make_label(tree, 3.0);
    EXPECT_NEAR(ce_loss(half, tree, label), depth * std::log(2.0), 1e-12);
  }
  const IntervalTree tree = eight_tree();
  const ForwardTrace sure = testing::trace_from_q({1.0 - 1e-12, 0.5, 1.0 - 1e-12});
  EXPECT_LT(ce_loss(sure, tree, make_label(tree, 7.5)), 1e-9);
}

TEST(PropensityTest, ProductOfEarlierSteps) {
  const IntervalTree tree = IntervalTree::build_full(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}, 3);
  // Right at the root (0.6), right at node 2 (0.7).
  const ForwardTrace t = testing::trace_from_q({0.6, 0.5, 0.7, 0.5, 0.5, 0.5, 0.5});
  const SampleLabel rr = make_label(tree, 7.5);
  EXPECT_DOUBLE_EQ(propensity(t, rr, 1), 1.0);
  EXPECT_NEAR(propensity(t, rr, 2), 0.6, 1e-15);
  EXPECT_NEAR(propensity(t, rr, 3), 0.42, 1e-15);
  EXPECT_THROW(propensity(t, rr, 0), std::invalid_argument);
  EXPECT_THROW(propensity(t, rr, 4), std::invalid_argument);
  const auto w = ucl_weights(t, rr);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_NEAR(w[2], 1.0 / 0.42, 1e-12);
}

TEST(UclLossTest, InverseReachWeights) {
  const IntervalTree tree = eight_tree();
  const SampleLabel label = make_label(tree, 7.5);
  const ForwardTrace t = testing::trace_from_q({0.6, 0.3, 0.7});
  EXPECT_NEAR(ce_ucl_loss(t, tree, label), -std::log(0.6) - std::log(0.7) / 0.6, 1e-12);
  EXPECT_NEAR(ce_ucl_loss(t, tree, label), 1.1053, 1e-4);
}

TEST(UclLossTest, ClampLimitsTheDivisor) {
  const IntervalTree tree = eight_tree();
  const SampleLabel label = make_label(tree, 7.5);
  const ForwardTrace t = testing::trace_from_q({0.01, 0.5, 0.5});
  const auto w = ucl_weights(t, label);
  EXPECT_DOUBLE_EQ(w[1], 1.0 / 0.05);
  EXPECT_NEAR(ce_ucl_loss(t, tree, label), -std::log(0.01) - std::log(0.5) / 0.05, 1e-9);
}

TEST(UclLossTest, DepthOneEqualsPlainCe) {
  const IntervalTree tree = small_tree(1);
  const ForwardTrace t = testing::trace_from_q({0.3});
  const SampleLabel label = make_label(tree, 2.0);
  EXPECT_DOUBLE_EQ(ce_ucl_loss(t, tree, label), ce_loss(t, tree, label));
}

TEST(RegLossTest, SquaredError) {
  EXPECT_DOUBLE_EQ(reg_loss(0.3, 0.1), 0.3 * 0.3 - 0.6 * 0.1 + 0.01);
  EXPECT_DOUBLE_EQ(reg_loss(0.5, 0.5), 0.0);
}

// Gradient checks through the full network against central differences.
class LossGradientTest : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    const int seed = GetParam();
    depth_ = 1 + seed % 4;
    tree_ = small_tree(depth_);
    net_ = testing::random_net(3, {5}, tree_.classifier_count(), 0, static_cast<std::uint64_t>(seed));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 100);
    x_ = testing::random_vector(3, rng);
    std::uniform_real_distribution<double> u(0.0, tree_.v_max());
    y_ = u(rng);
    label_ = make_label(tree_, y_);
  }

  GradientSet analytic(const std::function<void(const ForwardTrace&, std::span<double>)>& fill) const {
    const ForwardTrace t = forward(net_, x_);
    HeadGradients g = HeadGradients::zeros_like(net_);
    fill(t, g.classifier);
    GradientSet out = GradientSet::zeros_like(net_);
    backward_logits(net_, t, g, out);
    return out;
  }

  int depth_ = 1;
  IntervalTree tree_ = small_tree(1);
  MultiHeadNet net_ = MultiHeadNet::init(NetShape{1, {}, 1, 0}, 0);
  std::vector<double> x_;
  double y_ = 0.0;
  SampleLabel label_;
};

TEST_P(LossGradientTest, CrossEntropy) {
  const auto a = analytic([&](const ForwardTrace& t, std::span<double> g) {
    weighted_ce_logit_grad(t, label_, std::vector<double>(label_.depth(), 1.0), 1.0, g);
  });
  const auto f = finite_diff_grad([&](const MultiHeadNet& n) { return ce_loss(forward(n, x_), tree_, label_); },
                                  net_, 1e-5);
  EXPECT_TRUE(testing::compare_gradients(a, f).ok);
}

TEST_P(LossGradientTest, UclWithFrozenWeights) {
  const auto w = ucl_weights(forward(net_, x_), label_);
  const auto a = analytic([&](const ForwardTrace& t, std::span<double> g) {
    weighted_ce_logit_grad(t, label_, w, 1.0, g);
  });
  const auto f = finite_diff_grad(
      [&](const MultiHeadNet& n) { return weighted_ce_loss(forward(n, x_), label_, w); }, net_, 1e-5);
  EXPECT_TRUE(testing::compare_gradients(a, f).ok);
}

TEST_P(LossGradientTest, Regression) {
  const double inv = 1.0 / tree_.v_max();
  const double target = y_ * inv;
  const auto a = analytic([&](const ForwardTrace& t, std::span<double> g) {
    const LeafDistribution d = rescaled(leaf_distribution(t, tree_), inv);
    expectation_logit_grad(t.q, tree_, d, 2.0 * (expected_watch_time(d) - target), g);
  });
  const auto f = finite_diff_grad(
      [&](const MultiHeadNet& n) {
        const LeafDistribution d = rescaled(leaf_distribution(forward(n, x_), tree_), inv);
        return reg_loss(expected_watch_time(d), target);
      },
      net_, 1e-5);
  EXPECT_TRUE(testing::compare_gradients(a, f).ok);
}

TEST_P(LossGradientTest, Variance) {
  const double inv = 1.0 / tree_.v_max();
  const auto a = analytic([&](const ForwardTrace& t, std::span<double> g) {
    variance_logit_grad(t.q, tree_, rescaled(leaf_distribution(t, tree_), inv), 1.0, g);
  });
  const auto f = finite_diff_grad(
      [&](const MultiHeadNet& n) { return var_loss(rescaled(leaf_distribution(forward(n, x_), tree_), inv)); },
      net_, 1e-5);
  EXPECT_TRUE(testing::compare_gradients(a, f).ok);
}

INSTANTIATE_TEST_SUITE_P(Seeds, LossGradientTest, ::testing::Range(0, 12));

TEST(LeafLinearGradTest, PrunedTreeLeavesCollapsedHeadsAlone) {
  const IntervalTree tree = eight_tree().apply_prune(PruneMask{{1, 0}});
  const std::vector<double> q{0.6, 0.3, 0.7};
  const LeafDistribution d = leaf_distribution(q, tree);
  std::vector<double> g(3, 0.0);
  expectation_logit_grad(q, tree, d, 1.0, g);
  EXPECT_EQ(g[1], 0.0);
  // Numeric check on the root logit.
  auto e_at = [&](double z) {
    std::vector<double> qq = q;
    qq[0] = sigmoid(z);
    return expected_watch_time(leaf_distribution(qq, tree));
  };
  const double z0 = std::log(0.6 / 0.4);
  EXPECT_NEAR(g[0], (e_at(z0 + 1e-6) - e_at(z0 - 1e-6)) / 2e-6, 1e-7);
}

}  // namespace
}  // namespace ptpm
