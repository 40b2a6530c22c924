#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace ptpm {

struct Sample {
  std::vector<double> x;
  double y = 0.0;  // watch time in seconds
  std::optional<int> cluster;
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::vector<double> labels() const;
};

enum class Family { kLogNormal, kBimodal, kExponential };

// Watch-time distribution of one cluster. Log-normal uses (mu, sigma); the
// bimodal family is a two-component log-normal mixture that draws
// (mu, sigma) with probability 1 - mix_weight and (mu2, sigma2) otherwise;
// exponential uses `rate`.
struct ClusterSpec {
  Family family = Family::kLogNormal;
  double mu = 0.0;
  double sigma = 1.0;
  double mix_weight = 0.5;
  double mu2 = 0.0;
  double sigma2 = 1.0;
  double rate = 1.0;
};

// Each sample picks a cluster uniformly. The first n_clusters features carry
// a one-hot cluster signal of amplitude signal_to_noise * noise; the next
// feature observes a standard normal latent z that scales the watch time by
// exp(latent_strength * z); every feature gets N(0, noise^2) noise. Watch
// times above max_watch_time are redrawn.
struct SynthConfig {
  std::size_t n_samples = 1000;
  std::size_t n_clusters = 2;
  std::size_t feature_dim = 8;
  std::vector<ClusterSpec> clusters;
  double noise = 1.0;
  double signal_to_noise = 3.0;
  double latent_strength = 0.4;
  double max_watch_time = 300.0;
  std::uint64_t seed = 0;
};

// Two clusters: a short-watch log-normal and a bimodal mixture.
SynthConfig default_synth_config(std::size_t n_samples, std::uint64_t seed);

// Throws ConfigError on invalid parameters.
void validate(const SynthConfig& config);
Dataset gen_synthetic(const SynthConfig& config);

// CSV with header `watch_time,f0,...,f{d-1}`. Throws DataError naming the
// offending line on malformed input.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);

// Seeded shuffle, then the first round(fraction * n) samples go to the first
// part. Throws std::invalid_argument unless 0 < fraction < 1.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace ptpm
