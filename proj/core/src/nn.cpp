#include "ptpm/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

DenseLayout place(std::size_t in, std::size_t out, std::size_t& offset) {
  DenseLayout d{in, out, offset, offset + in * out};
  offset = d.bias_offset + out;
  return d;
}

void affine(std::span<const double> params, const DenseLayout& d, std::span<const double> x,
            std::vector<double>& out) {
  out.resize(d.out);
  const double* w = params.data() + d.weight_offset;
  const double* b = params.data() + d.bias_offset;
  for (std::size_t o = 0; o < d.out; ++o) {
    const double* row = w + o * d.in;
    double acc = b[o];
    for (std::size_t i = 0; i < d.in; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

// grads(W) += g x^T, grads(b) += g, and dx += W^T g.
void affine_backward(std::span<const double> params, const DenseLayout& d,
                     std::span<const double> x, std::span<const double> g,
                     std::span<double> grads, std::vector<double>* dx) {
  const double* w = params.data() + d.weight_offset;
  double* gw = grads.data() + d.weight_offset;
  double* gb = grads.data() + d.bias_offset;
  for (std::size_t o = 0; o < d.out; ++o) {
    const double go = g[o];
    if (go == 0.0) continue;
    gb[o] += go;
    double* grow = gw + o * d.in;
    const double* row = w + o * d.in;
    for (std::size_t i = 0; i < d.in; ++i) grow[i] += go * x[i];
    if (dx != nullptr) {
      for (std::size_t i = 0; i < d.in; ++i) (*dx)[i] += go * row[i];
    }
  }
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

MultiHeadNet::MultiHeadNet(NetShape shape) : shape_(std::move(shape)) {
  if (shape_.input_dim == 0) throw std::invalid_argument("input_dim must be >= 1");
  if (shape_.classifier_heads == 0) throw std::invalid_argument("need at least one classifier head");
  std::size_t offset = 0;
  std::size_t width = shape_.input_dim;
  for (std::size_t dim : shape_.trunk_dims) {
    if (dim == 0) throw std::invalid_argument("trunk widths must be >= 1");
    trunk_.push_back(place(width, dim, offset));
    width = dim;
  }
  classifier_ = place(width, shape_.classifier_heads, offset);
  pruning_ = place(width, shape_.pruning_heads, offset);
  params_.assign(offset, 0.0);
}

MultiHeadNet MultiHeadNet::init(NetShape shape, std::uint64_t seed) {
  MultiHeadNet net(std::move(shape));
  net.seed_ = seed;
  std::mt19937_64 rng(seed);
  auto fill = [&](const DenseLayout& d) {
    if (d.out == 0) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(d.in + d.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < d.in * d.out; ++k) net.params_[d.weight_offset + k] = dist(rng);
  };
  for (const auto& d : net.trunk_) fill(d);
  fill(net.classifier_);
  fill(net.pruning_);
  return net;
}

MultiHeadNet MultiHeadNet::from_parameters(NetShape shape, std::uint64_t seed,
                                           std::vector<double> params) {
  MultiHeadNet net(std::move(shape));
  if (params.size() != net.params_.size()) {
    throw std::invalid_argument("expected " + std::to_string(net.params_.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter");
  }
  net.seed_ = seed;
  net.params_ = std::move(params);
  return net;
}

void forward(const MultiHeadNet& net, std::span<const double> x, ForwardTrace& trace) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) + " features, net expects " +
                                std::to_string(net.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite input feature");
  }
  const auto params = net.params();
  trace.input.assign(x.begin(), x.end());
  trace.layers.resize(net.trunk_layers().size());
  std::span<const double> h = trace.input;
  for (std::size_t l = 0; l < net.trunk_layers().size(); ++l) {
    LayerCache& cache = trace.layers[l];
    affine(params, net.trunk_layers()[l], h, cache.pre);
    cache.post.resize(cache.pre.size());
    for (std::size_t i = 0; i < cache.pre.size(); ++i) cache.post[i] = cache.pre[i] > 0.0 ? cache.pre[i] : 0.0;
    h = cache.post;
  }
  affine(params, net.classifier_layer(), h, trace.classifier_logits);
  affine(params, net.pruning_layer(), h, trace.pruning_logits);
  trace.q.resize(trace.classifier_logits.size());
  for (std::size_t j = 0; j < trace.q.size(); ++j) trace.q[j] = sigmoid(trace.classifier_logits[j]);
  trace.p.resize(trace.pruning_logits.size());
  for (std::size_t i = 0; i < trace.p.size(); ++i) trace.p[i] = sigmoid(trace.pruning_logits[i]);
}

ForwardTrace forward(const MultiHeadNet& net, std::span<const double> x) {
  ForwardTrace trace;
  forward(net, x, trace);
  return trace;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.values.size() != values.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) values[k] += other.values[k];
  return *this;
}

GradientSet& GradientSet::operator*=(double scale) {
  for (double& v : values) v *= scale;
  return *this;
}

bool GradientSet::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void backward_logits(const MultiHeadNet& net, const ForwardTrace& trace,
                     const HeadGradients& logit_grads, GradientSet& grads) {
  if (logit_grads.classifier.size() != net.classifier_heads() ||
      logit_grads.pruning.size() != net.pruning_heads()) {
    throw std::invalid_argument("head gradient count does not match the network");
  }
  if (grads.values.size() != net.parameter_count()) {
    throw std::invalid_argument("gradient set does not match the network");
  }
  if (trace.layers.size() != net.trunk_layers().size() || trace.q.size() != net.classifier_heads() ||
      trace.p.size() != net.pruning_heads()) {
    throw std::invalid_argument("trace was not produced by this network");
  }
  const auto params = net.params();
  std::span<double> g = grads.values;

  std::vector<double> dh(net.feature_dim(), 0.0);
  const auto features = trace.features();
  affine_backward(params, net.classifier_layer(), features, logit_grads.classifier, g, &dh);
  affine_backward(params, net.pruning_layer(), features, logit_grads.pruning, g, &dh);

  std::vector<double> dx;
  for (std::size_t l = net.trunk_layers().size(); l-- > 0;) {
    const LayerCache& cache = trace.layers[l];
    for (std::size_t i = 0; i < dh.size(); ++i) {
      if (cache.pre[i] <= 0.0) dh[i] = 0.0;
    }
    const DenseLayout& d = net.trunk_layers()[l];
    std::span<const double> in = l == 0 ? std::span<const double>(trace.input)
                                        : std::span<const double>(trace.layers[l - 1].post);
    dx.assign(d.in, 0.0);
    affine_backward(params, d, in, dh, g, l == 0 ? nullptr : &dx);
    dh.swap(dx);
  }
}

GradientSet backward(const MultiHeadNet& net, const ForwardTrace& trace,
                     const HeadGradients& output_grads) {
  if (output_grads.classifier.size() != trace.q.size() || output_grads.pruning.size() != trace.p.size()) {
    throw std::invalid_argument("head gradient count does not match the trace");
  }
  HeadGradients logit = output_grads;
  for (std::size_t j = 0; j < logit.classifier.size(); ++j) logit.classifier[j] *= trace.q[j] * (1.0 - trace.q[j]);
  for (std::size_t i = 0; i < logit.pruning.size(); ++i) logit.pruning[i] *= trace.p[i] * (1.0 - trace.p[i]);
  GradientSet grads = GradientSet::zeros_like(net);
  backward_logits(net, trace, logit, grads);
  return grads;
}

GradientSet finite_diff_grad(const LossFn& loss, const MultiHeadNet& net, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  MultiHeadNet probe = net;
  GradientSet grads = GradientSet::zeros_like(net);
  auto params = probe.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + h;
    const double up = loss(probe);
    params[k] = saved - h;
    const double down = loss(probe);
    params[k] = saved;
    grads.values[k] = (up - down) / (2.0 * h);
  }
  return grads;
}

void adam_step(MultiHeadNet& net, const GradientSet& grads, AdamState& state,
               const AdamConfig& config) {
  const std::size_t n = net.parameter_count();
  if (grads.values.size() != n) throw std::invalid_argument("gradient shape mismatch");
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!grads.all_finite()) throw NumericalError("non-finite gradient passed to the optimizer");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) throw std::invalid_argument("optimizer state shape mismatch");

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto params = net.params();
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grads.values[k];
    state.m[k] = config.beta1 * state.m[k] + (1.0 - config.beta1) * g;
    state.v[k] = config.beta2 * state.v[k] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace ptpm
