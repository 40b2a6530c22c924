#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ptpm {

// Location of one affine block inside the flat parameter vector. Weights are
// stored row-major as out x in, followed by `out` biases.
struct DenseLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct NetShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> trunk_dims;
  std::size_t classifier_heads = 0;
  std::size_t pruning_heads = 0;

  bool operator==(const NetShape&) const = default;
};

// Shared ReLU trunk with two banks of sigmoid heads: one classifier head per
// internal node of the global tree and one pruning head per prunable node.
// All parameters live in a single flat double vector so optimizers, gradient
// checks and checkpoints can treat them uniformly.
class MultiHeadNet {
 public:
  // Glorot-uniform weights, zero biases. Deterministic in `seed`.
  static MultiHeadNet init(NetShape shape, std::uint64_t seed);
  // Rebuilds a network from saved parameters; throws on size mismatch.
  static MultiHeadNet from_parameters(NetShape shape, std::uint64_t seed,
                                      std::vector<double> params);

  const NetShape& shape() const { return shape_; }
  std::size_t input_dim() const { return shape_.input_dim; }
  std::size_t classifier_heads() const { return shape_.classifier_heads; }
  std::size_t pruning_heads() const { return shape_.pruning_heads; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  const std::vector<DenseLayout>& trunk_layers() const { return trunk_; }
  const DenseLayout& classifier_layer() const { return classifier_; }
  const DenseLayout& pruning_layer() const { return pruning_; }
  // Width of the representation the heads read.
  std::size_t feature_dim() const { return classifier_.in; }

 private:
  explicit MultiHeadNet(NetShape shape);

  NetShape shape_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayout> trunk_;
  DenseLayout classifier_;
  DenseLayout pruning_;
  std::vector<double> params_;
};

struct LayerCache {
  std::vector<double> pre;   // affine output
  std::vector<double> post;  // ReLU output
};

// Everything backward needs for one sample. `q[j]` is the probability that the
// label falls in the right child of internal node j; `p[i]` is the pruning
// probability of prunable node i.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<LayerCache> layers;
  std::vector<double> classifier_logits;
  std::vector<double> q;
  std::vector<double> pruning_logits;
  std::vector<double> p;

  std::span<const double> features() const {
    return layers.empty() ? std::span<const double>(input) : std::span<const double>(layers.back().post);
  }
};

// Throws std::invalid_argument on dimension mismatch or non-finite input.
ForwardTrace forward(const MultiHeadNet& net, std::span<const double> x);
// Same as above, reusing the buffers of `trace`.
void forward(const MultiHeadNet& net, std::span<const double> x, ForwardTrace& trace);

// Gradients in the same flat layout as MultiHeadNet::params().
struct GradientSet {
  std::vector<double> values;

  static GradientSet zeros_like(const MultiHeadNet& net) {
    return GradientSet{std::vector<double>(net.parameter_count(), 0.0)};
  }
  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double scale);
  bool all_finite() const;
};

// Per-head scalars, one per classifier head and one per pruning head.
struct HeadGradients {
  std::vector<double> classifier;
  std::vector<double> pruning;

  static HeadGradients zeros_like(const MultiHeadNet& net) {
    return HeadGradients{std::vector<double>(net.classifier_heads(), 0.0),
                         std::vector<double>(net.pruning_heads(), 0.0)};
  }
};

// Accumulates into `grads` the gradient of sum_h g_h * logit_h, where g holds
// derivatives with respect to the head logits (pre-sigmoid).
void backward_logits(const MultiHeadNet& net, const ForwardTrace& trace,
                     const HeadGradients& logit_grads, GradientSet& grads);

// Gradient of sum_h g_h * sigmoid_output_h with respect to every parameter.
GradientSet backward(const MultiHeadNet& net, const ForwardTrace& trace,
                     const HeadGradients& output_grads);

using LossFn = std::function<double(const MultiHeadNet&)>;

// Central differences (L(w + h) - L(w - h)) / 2h, one parameter at a time.
GradientSet finite_diff_grad(const LossFn& loss, const MultiHeadNet& net, double h);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;  // steps taken so far
};

// One bias-corrected Adam update. Increments state.t before use, so the first
// call runs with t = 1. Throws NumericalError on non-finite gradients.
void adam_step(MultiHeadNet& net, const GradientSet& grads, AdamState& state,
               const AdamConfig& config);

double sigmoid(double z);
// log(sigmoid(z)) without overflow.
double log_sigmoid(double z);

}  // namespace ptpm
