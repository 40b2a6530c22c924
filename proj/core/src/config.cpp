#include "ptpm/config.hpp"

#include <array>
#include <fstream>
#include <initializer_list>
#include <string>

#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::kMse, "mse"},
    {Method::kOrdinal, "or"},
    {Method::kTpm, "tpm"},
    {Method::kPtpm, "ptpm"},
    {Method::kPtpmNoTsl, "ptpm-tsl"},
    {Method::kPtpmNoUcl, "ptpm-ucl"},
}};

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kLogNormal: return "lognormal";
    case Family::kBimodal: return "bimodal";
    case Family::kExponential: return "exponential";
  }
  return "lognormal";
}

Family parse_family(const std::string& name) {
  if (name == "lognormal") return Family::kLogNormal;
  if (name == "bimodal") return Family::kBimodal;
  if (name == "exponential") return Family::kExponential;
  throw ConfigError("unknown distribution family '" + name + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path;
}

}  // namespace

std::string_view method_name(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (expected mse, or, tpm, ptpm, ptpm-tsl, ptpm-ucl)");
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& [m, _] : kMethodNames) out.push_back(m);
  return out;
}

bool is_tree_method(Method method) { return method != Method::kMse && method != Method::kOrdinal; }

std::string_view mode_name(PredictMode mode) { return mode == PredictMode::kGlobal ? "global" : "pruned"; }

PredictMode parse_mode(std::string_view name) {
  if (name == "global") return PredictMode::kGlobal;
  if (name == "pruned") return PredictMode::kPruned;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected global or pruned)");
}

void validate(const RunConfig& config) {
  if (config.tree_depth < 1 || config.tree_depth > 12) throw ConfigError("tree_depth must lie in [1, 12]");
  for (std::size_t d : config.trunk_dims) {
    if (d == 0) throw ConfigError("trunk widths must be >= 1");
  }
  validate(config.train);
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (config.methods.empty()) throw ConfigError("methods must not be empty");
  if (config.seeds.empty()) throw ConfigError("seeds must not be empty");
  for (int d : config.sweep_depths) {
    if (d < 1 || d > 12) throw ConfigError("sweep depths must lie in [1, 12]");
  }
  validate(config.synth);
}

nlohmann::json to_json(const SynthConfig& config) {
  json clusters = json::array();
  for (const ClusterSpec& c : config.clusters) {
    json jc{{"family", family_name(c.family)}, {"mu", c.mu}, {"sigma", c.sigma}};
    if (c.family == Family::kBimodal) {
      jc["mix_weight"] = c.mix_weight;
      jc["mu2"] = c.mu2;
      jc["sigma2"] = c.sigma2;
    }
    if (c.family == Family::kExponential) jc["rate"] = c.rate;
    clusters.push_back(std::move(jc));
  }
  return json{{"n_samples", config.n_samples},
              {"n_clusters", config.n_clusters},
              {"feature_dim", config.feature_dim},
              {"noise", config.noise},
              {"signal_to_noise", config.signal_to_noise},
              {"latent_strength", config.latent_strength},
              {"max_watch_time", config.max_watch_time},
              {"seed", config.seed},
              {"clusters", std::move(clusters)}};
}

SynthConfig synth_config_from_json(const json& j, SynthConfig base) {
  check_keys(j, "synth", {"n_samples", "n_clusters", "feature_dim", "noise", "signal_to_noise",
                          "latent_strength", "max_watch_time", "seed", "clusters"});
  read(j, "n_samples", base.n_samples);
  read(j, "n_clusters", base.n_clusters);
  read(j, "feature_dim", base.feature_dim);
  read(j, "noise", base.noise);
  read(j, "signal_to_noise", base.signal_to_noise);
  read(j, "latent_strength", base.latent_strength);
  read(j, "max_watch_time", base.max_watch_time);
  read(j, "seed", base.seed);
  if (j.contains("clusters")) {
    base.clusters.clear();
    for (const json& jc : j.at("clusters")) {
      check_keys(jc, "synth.clusters[]", {"family", "mu", "sigma", "mix_weight", "mu2", "sigma2", "rate"});
      ClusterSpec c;
      std::string family = "lognormal";
      read(jc, "family", family);
      c.family = parse_family(family);
      read(jc, "mu", c.mu);
      read(jc, "sigma", c.sigma);
      read(jc, "mix_weight", c.mix_weight);
      read(jc, "mu2", c.mu2);
      read(jc, "sigma2", c.sigma2);
      read(jc, "rate", c.rate);
      base.clusters.push_back(c);
    }
  }
  return base;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config",
             {"tree_depth", "trunk_dims", "learning_rate", "adam", "batch_size", "epochs", "loss_weights",
              "propensity_floor", "enable_tsl", "enable_ucl", "prune_threshold", "mask_samples", "seed",
              "method", "dedupe", "mode", "train_data", "test_data", "test_fraction", "methods", "seeds",
              "sweep_depths", "synth"});
  RunConfig c;
  read(j, "tree_depth", c.tree_depth);
  read(j, "trunk_dims", c.trunk_dims);
  read(j, "learning_rate", c.train.adam.lr);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    check_keys(a, "adam", {"beta1", "beta2", "eps"});
    read(a, "beta1", c.train.adam.beta1);
    read(a, "beta2", c.train.adam.beta2);
    read(a, "eps", c.train.adam.eps);
  }
  read(j, "batch_size", c.train.batch_size);
  read(j, "epochs", c.train.epochs);
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    check_keys(w, "loss_weights", {"ce", "reg", "var", "tree"});
    read(w, "ce", c.train.weights.ce);
    read(w, "reg", c.train.weights.reg);
    read(w, "var", c.train.weights.var);
    read(w, "tree", c.train.weights.tree);
  }
  read(j, "propensity_floor", c.train.propensity_floor);
  read(j, "enable_tsl", c.train.enable_tsl);
  read(j, "enable_ucl", c.train.enable_ucl);
  read(j, "prune_threshold", c.train.prune_threshold);
  read(j, "mask_samples", c.train.mask_samples);
  read(j, "seed", c.train.seed);
  c.seeds = {c.train.seed};
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("dedupe")) {
    const auto d = j.at("dedupe").get<std::string>();
    if (d == "error") {
      c.dedupe = DedupePolicy::kError;
    } else if (d == "jitter") {
      c.dedupe = DedupePolicy::kJitter;
    } else {
      throw ConfigError("dedupe must be 'error' or 'jitter'");
    }
  }
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("train_data")) c.train_data = resolve(base_dir, j.at("train_data").get<std::string>());
  if (j.contains("test_data")) c.test_data = resolve(base_dir, j.at("test_data").get<std::string>());
  read(j, "test_fraction", c.test_fraction);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  read(j, "seeds", c.seeds);
  read(j, "sweep_depths", c.sweep_depths);
  c.synth.seed = c.train.seed;
  if (j.contains("synth")) c.synth = synth_config_from_json(j.at("synth"), c.synth);
  validate(c);
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  json j{{"tree_depth", c.tree_depth},
         {"trunk_dims", c.trunk_dims},
         {"learning_rate", c.train.adam.lr},
         {"adam", {{"beta1", c.train.adam.beta1}, {"beta2", c.train.adam.beta2}, {"eps", c.train.adam.eps}}},
         {"batch_size", c.train.batch_size},
         {"epochs", c.train.epochs},
         {"loss_weights",
          {{"ce", c.train.weights.ce},
           {"reg", c.train.weights.reg},
           {"var", c.train.weights.var},
           {"tree", c.train.weights.tree}}},
         {"propensity_floor", c.train.propensity_floor},
         {"enable_tsl", c.train.enable_tsl},
         {"enable_ucl", c.train.enable_ucl},
         {"prune_threshold", c.train.prune_threshold},
         {"mask_samples", c.train.mask_samples},
         {"seed", c.train.seed},
         {"method", method_name(c.method)},
         {"dedupe", c.dedupe == DedupePolicy::kJitter ? "jitter" : "error"},
         {"test_fraction", c.test_fraction},
         {"methods", std::move(methods)},
         {"seeds", c.seeds},
         {"sweep_depths", c.sweep_depths},
         {"synth", to_json(c.synth)}};
  if (c.mode) j["mode"] = mode_name(*c.mode);
  if (c.train_data) j["train_data"] = c.train_data->string();
  if (c.test_data) j["test_data"] = c.test_data->string();
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return run_config_from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

TrainConfig train_config_for(Method method, const RunConfig& config, std::uint64_t seed) {
  TrainConfig t = config.train;
  t.seed = seed;
  switch (method) {
    case Method::kTpm:
      t.enable_tsl = false;
      t.enable_ucl = false;
      break;
    case Method::kPtpmNoTsl:
      t.enable_tsl = false;
      t.enable_ucl = true;
      break;
    case Method::kPtpmNoUcl:
      t.enable_tsl = true;
      t.enable_ucl = false;
      break;
    case Method::kPtpm:
      break;
    case Method::kMse:
    case Method::kOrdinal:
      t.enable_tsl = false;
      t.enable_ucl = false;
      break;
  }
  return t;
}

PredictMode default_mode(Method method, const TrainConfig& train) {
  return is_tree_method(method) && train.enable_tsl ? PredictMode::kPruned : PredictMode::kGlobal;
}

}  // namespace ptpm
