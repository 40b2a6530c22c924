#include "ptpm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ptpm/errors.hpp"
#include "ptpm/tsl.hpp"

namespace ptpm {
namespace {

// Shuffled mini-batch loop shared by the baselines. `per_sample` fills the
// logit gradients of one sample (already divided by the batch size) and
// returns its loss.
template <typename PerSample>
EpochReport run_epoch(MultiHeadNet& net, AdamState& adam, std::uint64_t epoch, const Dataset& data,
                      const TrainConfig& config, PerSample per_sample) {
  if (data.empty()) throw DataError("training set is empty");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle_rng = sample_rng(config.seed, epoch, ~std::uint64_t{0});
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  EpochReport report;
  ForwardTrace trace;
  HeadGradients hg = HeadGradients::zeros_like(net);
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    const double inv_batch = 1.0 / static_cast<double>(end - start);
    GradientSet grads = GradientSet::zeros_like(net);
    double loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const Sample& s = data.samples[order[k]];
      forward(net, s.x, trace);
      std::fill(hg.classifier.begin(), hg.classifier.end(), 0.0);
      loss += per_sample(trace, s.y, inv_batch, hg.classifier) * inv_batch;
      backward_logits(net, trace, hg, grads);
    }
    if (!std::isfinite(loss)) {
      throw NumericalError("non-finite baseline loss at epoch " + std::to_string(epoch));
    }
    adam_step(net, grads, adam, config.adam);
    LossBreakdown b;
    b.ce = b.total = loss;
    report.batches.push_back(b);
    const double weight = static_cast<double>(end - start) / static_cast<double>(data.size());
    report.mean.ce += loss * weight;
    report.mean.total += loss * weight;
  }
  return report;
}

}  // namespace

OrdinalModel or_init(const IntervalTree& tree, std::size_t input_dim,
                     std::span<const std::size_t> trunk_dims, std::uint64_t seed) {
  return or_init(tree.boundaries(), input_dim, trunk_dims, seed);
}

OrdinalModel or_init(std::vector<double> boundaries, std::size_t input_dim,
                     std::span<const std::size_t> trunk_dims, std::uint64_t seed) {
  if (boundaries.size() < 3) throw std::invalid_argument("ordinal regression needs at least two bins");
  std::vector<double> thresholds(boundaries.begin() + 1, boundaries.end() - 1);
  std::vector<double> midpoints(boundaries.size() - 1);
  for (std::size_t k = 0; k < midpoints.size(); ++k) midpoints[k] = 0.5 * (boundaries[k] + boundaries[k + 1]);
  NetShape shape{input_dim, {trunk_dims.begin(), trunk_dims.end()}, thresholds.size(), 0};
  return OrdinalModel{std::move(thresholds), std::move(midpoints), MultiHeadNet::init(std::move(shape), seed),
                      AdamState{}, 0};
}

EpochReport or_train_epoch(OrdinalModel& model, const Dataset& data, const TrainConfig& config) {
  const auto& thresholds = model.thresholds;
  auto report = run_epoch(model.net, model.adam, model.epochs_done, data, config,
                          [&](const ForwardTrace& trace, double y, double scale, std::span<double> grads) {
                            double loss = 0.0;
                            for (std::size_t k = 0; k < thresholds.size(); ++k) {
                              const double target = y > thresholds[k] ? 1.0 : 0.0;
                              const double z = trace.classifier_logits[k];
                              loss -= target > 0.0 ? log_sigmoid(z) : log_sigmoid(-z);
                              grads[k] += scale * (trace.q[k] - target);
                            }
                            return loss;
                          });
  ++model.epochs_done;
  return report;
}

OrdinalModel or_train(const Dataset& data, int depth, std::span<const std::size_t> trunk_dims,
                      const TrainConfig& config) {
  const auto labels = data.labels();
  const IntervalTree tree = IntervalTree::build_full(labels, depth);
  OrdinalModel model = or_init(tree, data.feature_dim, trunk_dims, config.seed);
  for (std::size_t e = 0; e < config.epochs; ++e) or_train_epoch(model, data, config);
  return model;
}

double or_decode(std::span<const double> exceed_probs, std::span<const double> midpoints) {
  if (midpoints.size() != exceed_probs.size() + 1) throw std::invalid_argument("need K + 1 midpoints for K heads");
  double y = midpoints[0];
  for (std::size_t k = 0; k < exceed_probs.size(); ++k) y += exceed_probs[k] * (midpoints[k + 1] - midpoints[k]);
  return y;
}

double or_predict(const OrdinalModel& model, const ForwardTrace& trace) {
  return or_decode(trace.q, model.midpoints);
}

double or_predict(const OrdinalModel& model, std::span<const double> x) {
  return or_predict(model, forward(model.net, x));
}

MseModel mse_init(double v_max, std::size_t input_dim, std::span<const std::size_t> trunk_dims,
                  std::uint64_t seed) {
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw DataError("label scale must be positive");
  NetShape shape{input_dim, {trunk_dims.begin(), trunk_dims.end()}, 1, 0};
  return MseModel{v_max, MultiHeadNet::init(std::move(shape), seed), AdamState{}, 0};
}

EpochReport mse_train_epoch(MseModel& model, const Dataset& data, const TrainConfig& config) {
  const double inv_vmax = 1.0 / model.v_max;
  auto report = run_epoch(model.net, model.adam, model.epochs_done, data, config,
                          [&](const ForwardTrace& trace, double y, double scale, std::span<double> grads) {
                            const double diff = trace.classifier_logits[0] - y * inv_vmax;
                            grads[0] += scale * 2.0 * diff;
                            return diff * diff;
                          });
  ++model.epochs_done;
  return report;
}

MseModel mse_train(const Dataset& data, std::span<const std::size_t> trunk_dims, const TrainConfig& config) {
  if (data.empty()) throw DataError("training set is empty");
  const auto labels = data.labels();
  MseModel model = mse_init(*std::max_element(labels.begin(), labels.end()), data.feature_dim, trunk_dims,
                            config.seed);
  for (std::size_t e = 0; e < config.epochs; ++e) mse_train_epoch(model, data, config);
  return model;
}

double mse_predict(const MseModel& model, const ForwardTrace& trace) {
  return trace.classifier_logits[0] * model.v_max;
}

double mse_predict(const MseModel& model, std::span<const double> x) {
  return mse_predict(model, forward(model.net, x));
}

}  // namespace ptpm
