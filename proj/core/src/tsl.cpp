#include "ptpm/tsl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptpm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_probs(std::span<const double> p) {
  for (double v : p) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("pruning probabilities must lie in (0, 1)");
  }
}

}  // namespace

int depth_for_prunable_count(std::size_t count) {
  for (int d = 1; d <= 20; ++d) {
    if (full_prunable_count(d) == count) return d;
  }
  throw std::invalid_argument(std::to_string(count) + " is not a prunable-node count of a full tree");
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ epoch) ^ index));
}

PruneDecision sample_mask(std::span<const double> p, std::mt19937_64& rng) {
  check_probs(p);
  const int depth = depth_for_prunable_count(p.size());
  PruneDecision d;
  d.p.assign(p.begin(), p.end());
  d.mask.actions.resize(p.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) d.mask.actions[i] = unit(rng) < p[i] ? 1 : 0;
  d.effective = effective_actions(d.mask.actions, depth);
  d.logp = mask_log_prob(d.p, d.mask, d.effective);
  return d;
}

PruneMask deterministic_mask(std::span<const double> p, double threshold) {
  depth_for_prunable_count(p.size());
  PruneMask mask;
  mask.actions.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mask.actions[i] = p[i] > threshold ? 1 : 0;
  return mask;
}

double mask_log_prob(std::span<const double> p, const PruneMask& mask,
                     std::span<const std::uint8_t> effective) {
  if (mask.actions.size() != p.size() || effective.size() != p.size()) {
    throw std::invalid_argument("mask, probabilities and effectiveness flags differ in length");
  }
  double logp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!effective[i]) continue;
    logp += mask.actions[i] ? std::log(p[i]) : std::log1p(-p[i]);
  }
  return logp;
}

double sample_reward(std::size_t i, std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || i >= y.size()) throw std::invalid_argument("bad reward inputs");
  std::size_t pairs = 0;
  std::size_t concordant = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == i || y[j] == y[i]) continue;
    ++pairs;
    if ((y_hat[i] - y_hat[j]) * (y[i] - y[j]) > 0.0) ++concordant;
  }
  const double order = pairs == 0 ? 0.5 : static_cast<double>(concordant) / static_cast<double>(pairs);
  const double err = y_hat[i] - y[i];
  return order - err * err;
}

std::vector<double> batch_rewards(std::span<const double> y, std::span<const double> y_hat) {
  std::vector<double> rewards(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) rewards[i] = sample_reward(i, y, y_hat);
  return rewards;
}

double reinforce_loss(const PruneDecision& decision, double advantage) {
  return -advantage * decision.logp;
}

std::vector<double> reinforce_prob_grad(const PruneDecision& decision, double advantage) {
  std::vector<double> grad(decision.p.size(), 0.0);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!decision.effective[i]) continue;
    const double p = decision.p[i];
    grad[i] = -advantage * (decision.mask.actions[i] ? 1.0 / p : -1.0 / (1.0 - p));
  }
  return grad;
}

void reinforce_logit_grad(const PruneDecision& decision, double advantage, double scale,
                          std::span<double> logit_grads) {
  if (logit_grads.size() != decision.p.size()) throw std::invalid_argument("pruning gradient size mismatch");
  for (std::size_t i = 0; i < decision.p.size(); ++i) {
    if (!decision.effective[i]) continue;
    const double a = decision.mask.actions[i] ? 1.0 : 0.0;
    logit_grads[i] += -scale * advantage * (a - decision.p[i]);
  }
}

}  // namespace ptpm
