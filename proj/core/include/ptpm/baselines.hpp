#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptpm/data.hpp"
#include "ptpm/interval_tree.hpp"
#include "ptpm/nn.hpp"
#include "ptpm/trainer.hpp"

namespace ptpm {

// Ordinal regression: K sigmoid heads estimating P(y > t_k) for ascending
// thresholds t_1..t_K, decoded as an expectation over the K + 1 induced bins.
struct OrdinalModel {
  std::vector<double> thresholds;
  std::vector<double> midpoints;  // K + 1 bin midpoints over [0, v_max]
  MultiHeadNet net;
  AdamState adam;
  std::uint64_t epochs_done = 0;
};

// Thresholds are the interior leaf boundaries of `tree`.
OrdinalModel or_init(const IntervalTree& tree, std::size_t input_dim,
                     std::span<const std::size_t> trunk_dims, std::uint64_t seed);
OrdinalModel or_init(std::vector<double> boundaries, std::size_t input_dim,
                     std::span<const std::size_t> trunk_dims, std::uint64_t seed);

// Binary cross entropy summed over heads, averaged over the batch. Only the
// adam, batch_size and seed fields of `config` are used. Reports the loss in
// the `ce` and `total` fields.
EpochReport or_train_epoch(OrdinalModel& model, const Dataset& data, const TrainConfig& config);
OrdinalModel or_train(const Dataset& data, int depth, std::span<const std::size_t> trunk_dims,
                      const TrainConfig& config);

// m_0 + sum_k P(y > t_k) * (m_k - m_{k-1}).
double or_decode(std::span<const double> exceed_probs, std::span<const double> midpoints);
double or_predict(const OrdinalModel& model, std::span<const double> x);
double or_predict(const OrdinalModel& model, const ForwardTrace& trace);

// Direct regression: one linear output fitted to y / v_max by squared error.
struct MseModel {
  double v_max = 1.0;
  MultiHeadNet net;
  AdamState adam;
  std::uint64_t epochs_done = 0;
};

MseModel mse_init(double v_max, std::size_t input_dim, std::span<const std::size_t> trunk_dims,
                  std::uint64_t seed);
EpochReport mse_train_epoch(MseModel& model, const Dataset& data, const TrainConfig& config);
MseModel mse_train(const Dataset& data, std::span<const std::size_t> trunk_dims, const TrainConfig& config);
double mse_predict(const MseModel& model, std::span<const double> x);
double mse_predict(const MseModel& model, const ForwardTrace& trace);

}  // namespace ptpm
