#include "ptpm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

constexpr int kMaxRedraws = 1000;

double draw_watch_time(const ClusterSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (spec.family) {
    case Family::kLogNormal:
      return std::exp(spec.mu + spec.sigma * normal(rng));
    case Family::kBimodal: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const bool second = unit(rng) < spec.mix_weight;
      const double mu = second ? spec.mu2 : spec.mu;
      const double sigma = second ? spec.sigma2 : spec.sigma;
      return std::exp(mu + sigma * normal(rng));
    }
    case Family::kExponential: {
      std::exponential_distribution<double> expo(spec.rate);
      return expo(rng);
    }
  }
  return 0.0;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty() || !std::isfinite(value)) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return value;
}

void write_number(std::ofstream& out, double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.write(buf, ptr - buf);
}

}  // namespace

std::vector<double> Dataset::labels() const {
  std::vector<double> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].y;
  return y;
}

SynthConfig default_synth_config(std::size_t n_samples, std::uint64_t seed) {
  SynthConfig config;
  config.n_samples = n_samples;
  config.seed = seed;
  ClusterSpec short_watch;
  short_watch.family = Family::kLogNormal;
  short_watch.mu = std::log(8.0);
  short_watch.sigma = 0.6;
  ClusterSpec bimodal;
  bimodal.family = Family::kBimodal;
  bimodal.mu = std::log(15.0);
  bimodal.sigma = 0.4;
  bimodal.mix_weight = 0.5;
  bimodal.mu2 = std::log(90.0);
  bimodal.sigma2 = 0.35;
  config.clusters = {short_watch, bimodal};
  return config;
}

void validate(const SynthConfig& config) {
  if (config.n_clusters < 1) throw ConfigError("n_clusters must be >= 1");
  if (config.n_samples < config.n_clusters) throw ConfigError("n_samples must be >= n_clusters");
  if (config.clusters.size() != config.n_clusters) {
    throw ConfigError("expected " + std::to_string(config.n_clusters) + " cluster specs, got " +
                      std::to_string(config.clusters.size()));
  }
  if (config.feature_dim < config.n_clusters + 1) {
    throw ConfigError("feature_dim must be at least n_clusters + 1");
  }
  if (!(config.noise > 0.0) || !(config.signal_to_noise >= 0.0) || !std::isfinite(config.latent_strength)) {
    throw ConfigError("noise must be positive and signal_to_noise non-negative");
  }
  if (!(config.max_watch_time > 0.0)) throw ConfigError("max_watch_time must be positive");
  for (const ClusterSpec& c : config.clusters) {
    const bool ok = std::isfinite(c.mu) && c.sigma > 0.0 &&
                    (c.family != Family::kBimodal ||
                     (c.mix_weight >= 0.0 && c.mix_weight <= 1.0 && std::isfinite(c.mu2) && c.sigma2 > 0.0)) &&
                    (c.family != Family::kExponential || c.rate > 0.0);
    if (!ok) throw ConfigError("invalid cluster distribution parameters");
  }
}

Dataset gen_synthetic(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, config.n_clusters - 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.feature_dim = config.feature_dim;
  data.samples.reserve(config.n_samples);
  const std::size_t latent_feature = config.n_clusters;
  for (std::size_t n = 0; n < config.n_samples; ++n) {
    Sample s;
    const std::size_t c = pick(rng);
    s.cluster = static_cast<int>(c);
    const double z = normal(rng);
    s.x.resize(config.feature_dim);
    for (double& f : s.x) f = config.noise * normal(rng);
    s.x[c] += config.signal_to_noise * config.noise;
    s.x[latent_feature] += z;

    const double scale = std::exp(config.latent_strength * z);
    double y = draw_watch_time(config.clusters[c], rng) * scale;
    for (int attempt = 0; y > config.max_watch_time && attempt < kMaxRedraws; ++attempt) {
      y = draw_watch_time(config.clusters[c], rng) * scale;
    }
    s.y = std::min(y, config.max_watch_time);
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_fields(trim_cr(line));
  if (header.empty() || header.front() != "watch_time") {
    throw DataError("line 1: header must start with watch_time");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "f" + std::to_string(k - 1)) {
      throw DataError("line 1: expected column f" + std::to_string(k - 1) + ", got '" +
                      std::string(header[k]) + "'");
    }
  }

  Dataset data;
  data.feature_dim = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim_cr(line);
    if (row.empty()) continue;
    const auto fields = split_fields(row);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(fields.size()));
    }
    Sample s;
    s.y = parse_number(fields[0], line_no);
    if (s.y < 0.0) throw DataError("line " + std::to_string(line_no) + ": negative watch_time");
    s.x.reserve(data.feature_dim);
    for (std::size_t k = 1; k < fields.size(); ++k) s.x.push_back(parse_number(fields[k], line_no));
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "watch_time";
  for (std::size_t k = 0; k < data.feature_dim; ++k) out << ",f" << k;
  out << '\n';
  for (const Sample& s : data.samples) {
    write_number(out, s.y);
    for (double f : s.x) {
      out << ',';
      write_number(out, f);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));

  std::pair<Dataset, Dataset> parts;
  parts.first.feature_dim = parts.second.feature_dim = data.feature_dim;
  parts.first.samples.reserve(cut);
  parts.second.samples.reserve(data.size() - cut);
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < cut ? parts.first : parts.second).samples.push_back(data.samples[order[k]]);
  }
  return parts;
}

}  // namespace ptpm
