#include "ptpm/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

TEST(NetTest, HeadCountsFollowTreeDepth) {
  const MultiHeadNet net = MultiHeadNet::init(
      NetShape{8, {64, 32}, full_internal_count(6), full_prunable_count(6)}, 1);
  EXPECT_EQ(net.classifier_heads(), 63u);
  EXPECT_EQ(net.pruning_heads(), 62u);
  EXPECT_EQ(net.feature_dim(), 32u);
  const std::size_t expected = (8 * 64 + 64) + (64 * 32 + 32) + (32 * 63 + 63) + (32 * 62 + 62);
  EXPECT_EQ(net.parameter_count(), expected);
}

TEST(NetTest, InitIsDeterministicWithZeroBiases) {
  const NetShape shape{5, {7}, 3, 2};
  const MultiHeadNet a = MultiHeadNet::init(shape, 42);
  const MultiHeadNet b = MultiHeadNet::init(shape, 42);
  const MultiHeadNet c = MultiHeadNet::init(shape, 43);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  EXPECT_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
  const DenseLayout& l = a.trunk_layers().front();
  const double limit = std::sqrt(6.0 / (5.0 + 7.0));
  for (std::size_t k = 0; k < l.in * l.out; ++k) EXPECT_LE(std::abs(a.params()[l.weight_offset + k]), limit);
  for (std::size_t k = 0; k < l.out; ++k) EXPECT_EQ(a.params()[l.bias_offset + k], 0.0);
}

TEST(NetTest, RejectsBadShapesAndInputs) {
  EXPECT_THROW(MultiHeadNet::init(NetShape{0, {4}, 1, 0}, 0), std::invalid_argument);
  EXPECT_THROW(MultiHeadNet::init(NetShape{3, {4}, 0, 0}, 0), std::invalid_argument);
  const MultiHeadNet net = MultiHeadNet::init(NetShape{3, {4}, 1, 0}, 0);
  EXPECT_THROW(forward(net, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(forward(net, std::vector<double>{1.0, std::nan(""), 2.0}), std::invalid_argument);
  EXPECT_THROW(MultiHeadNet::from_parameters(NetShape{3, {4}, 1, 0}, 0, {1.0}), std::invalid_argument);
}

TEST(NetTest, OutputsAreProbabilities) {
  const MultiHeadNet net = testing::random_net(4, {6, 5}, 7, 6, 9, 2.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const ForwardTrace t = forward(net, testing::random_vector(4, rng, 3.0));
    ASSERT_EQ(t.q.size(), 7u);
    ASSERT_EQ(t.p.size(), 6u);
    for (double v : t.q) EXPECT_TRUE(v > 0.0 && v < 1.0);
    for (double v : t.p) EXPECT_TRUE(v > 0.0 && v < 1.0);
  }
}

TEST(NetTest, EmptyTrunkIsLinearHeads) {
  MultiHeadNet net = MultiHeadNet::init(NetShape{2, {}, 1, 0}, 0);
  const DenseLayout& c = net.classifier_layer();
  net.params()[c.weight_offset] = 0.5;
  net.params()[c.weight_offset + 1] = -1.0;
  net.params()[c.bias_offset] = 0.25;
  const ForwardTrace t = forward(net, std::vector<double>{2.0, 1.0});
  EXPECT_DOUBLE_EQ(t.classifier_logits[0], 0.25);
  EXPECT_DOUBLE_EQ(t.q[0], sigmoid(0.25));
}

TEST(NetTest, ForwardReuseMatchesFreshTrace) {
  const MultiHeadNet net = testing::random_net(3, {4}, 3, 2, 5);
  ForwardTrace reused;
  forward(net, std::vector<double>{9.0, 9.0, 9.0}, reused);
  forward(net, std::vector<double>{0.1, -0.2, 0.3}, reused);
  const ForwardTrace fresh = forward(net, std::vector<double>{0.1, -0.2, 0.3});
  EXPECT_EQ(reused.q, fresh.q);
  EXPECT_EQ(reused.p, fresh.p);
}

TEST(NetTest, LogitBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MultiHeadNet net = testing::random_net(3, {5, 4}, 3, 2, seed);
    const auto x = testing::random_vector(3, rng);
    HeadGradients g{testing::random_vector(3, rng), testing::random_vector(2, rng)};
    auto loss = [&](const MultiHeadNet& n) {
      const ForwardTrace t = forward(n, x);
      double s = 0.0;
      for (std::size_t h = 0; h < 3; ++h) s += g.classifier[h] * t.classifier_logits[h];
      for (std::size_t h = 0; h < 2; ++h) s += g.pruning[h] * t.pruning_logits[h];
      return s;
    };
    GradientSet analytic = GradientSet::zeros_like(net);
    backward_logits(net, forward(net, x), g, analytic);
    const auto check = testing::compare_gradients(analytic, finite_diff_grad(loss, net, 1e-5));
    EXPECT_TRUE(check.ok) << "seed " << seed << " rel " << check.worst_relative;
  }
}

TEST(NetTest, OutputBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  const MultiHeadNet net = testing::random_net(4, {6}, 3, 2, 3);
  const auto x = testing::random_vector(4, rng);
  HeadGradients g{testing::random_vector(3, rng), testing::random_vector(2, rng)};
  auto loss = [&](const MultiHeadNet& n) {
    const ForwardTrace t = forward(n, x);
    double s = 0.0;
    for (std::size_t h = 0; h < 3; ++h) s += g.classifier[h] * t.q[h];
    for (std::size_t h = 0; h < 2; ++h) s += g.pruning[h] * t.p[h];
    return s;
  };
  const GradientSet analytic = backward(net, forward(net, x), g);
  EXPECT_TRUE(testing::compare_gradients(analytic, finite_diff_grad(loss, net, 1e-5)).ok);
}

TEST(NetTest, BackwardLogitsAccumulates) {
  const MultiHeadNet net = testing::random_net(2, {3}, 1, 0, 1);
  const ForwardTrace t = forward(net, std::vector<double>{0.5, -0.5});
  HeadGradients g{{1.0}, {}};
  GradientSet once = GradientSet::zeros_like(net);
  backward_logits(net, t, g, once);
  GradientSet twice = GradientSet::zeros_like(net);
  backward_logits(net, t, g, twice);
  backward_logits(net, t, g, twice);
  for (std::size_t k = 0; k < once.values.size(); ++k) EXPECT_DOUBLE_EQ(twice.values[k], 2.0 * once.values[k]);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  MultiHeadNet net = MultiHeadNet::init(NetShape{3, {4}, 2, 1}, 0);
  const std::vector<double> before(net.params().begin(), net.params().end());
  GradientSet g{std::vector<double>(net.parameter_count(), 1.0)};
  AdamState state;
  adam_step(net, g, state, AdamConfig{});
  EXPECT_EQ(state.t, 1u);
  for (std::size_t k = 0; k < before.size(); ++k) EXPECT_NEAR(net.params()[k] - before[k], -1e-3, 1e-10);
}

TEST(AdamTest, ZeroGradientDecaysMomentsOnly) {
  MultiHeadNet net = MultiHeadNet::init(NetShape{3, {4}, 2, 1}, 0);
  AdamState state;
  adam_step(net, GradientSet{std::vector<double>(net.parameter_count(), 1.0)}, state, AdamConfig{});
  const double m_before = state.m[0];
  // Moments are nonzero after one step, so a zero gradient still moves the
  // parameters; check the decay of the moments instead, plus a fresh state.
  adam_step(net, GradientSet::zeros_like(net), state, AdamConfig{});
  EXPECT_DOUBLE_EQ(state.m[0], 0.9 * m_before);
  MultiHeadNet fresh = MultiHeadNet::init(NetShape{3, {4}, 2, 1}, 0);
  const std::vector<double> untouched(fresh.params().begin(), fresh.params().end());
  AdamState empty;
  adam_step(fresh, GradientSet::zeros_like(fresh), empty, AdamConfig{});
  EXPECT_TRUE(std::equal(untouched.begin(), untouched.end(), fresh.params().begin()));
}

TEST(AdamTest, NonFiniteGradientThrows) {
  MultiHeadNet net = MultiHeadNet::init(NetShape{2, {}, 1, 0}, 0);
  GradientSet g = GradientSet::zeros_like(net);
  g.values[0] = std::numeric_limits<double>::infinity();
  AdamState state;
  EXPECT_THROW(adam_step(net, g, state, AdamConfig{}), NumericalError);
}

TEST(AdamTest, IdenticalRunsAreBitIdentical) {
  auto run = [] {
    MultiHeadNet net = MultiHeadNet::init(NetShape{3, {4}, 2, 1}, 7);
    AdamState state;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      GradientSet g{testing::random_vector(net.parameter_count(), rng)};
      adam_step(net, g, state, AdamConfig{});
    }
    return std::vector<double>(net.params().begin(), net.params().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(ActivationTest, SigmoidAndLogSigmoidAreStable) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-800.0)));
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-9);
  EXPECT_NEAR(log_sigmoid(800.0), 0.0, 1e-12);
  EXPECT_NEAR(log_sigmoid(1.3), std::log(sigmoid(1.3)), 1e-14);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
}

}  // namespace
}  // namespace ptpm
