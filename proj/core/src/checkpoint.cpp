#include "ptpm/checkpoint.hpp"

#include <fstream>
#include <string>

#include "ptpm/errors.hpp"

namespace ptpm {
namespace {

using nlohmann::json;

json net_json(const MultiHeadNet& net) {
  return json{{"input_dim", net.shape().input_dim},
              {"trunk_dims", net.shape().trunk_dims},
              {"classifier_heads", net.shape().classifier_heads},
              {"pruning_heads", net.shape().pruning_heads},
              {"seed", net.seed()},
              {"parameters", std::vector<double>(net.params().begin(), net.params().end())}};
}

MultiHeadNet net_from_json(const json& j) {
  NetShape shape{j.at("input_dim").get<std::size_t>(), j.at("trunk_dims").get<std::vector<std::size_t>>(),
                 j.at("classifier_heads").get<std::size_t>(), j.at("pruning_heads").get<std::size_t>()};
  return MultiHeadNet::from_parameters(std::move(shape), j.at("seed").get<std::uint64_t>(),
                                       j.at("parameters").get<std::vector<double>>());
}

json adam_json(const AdamState& s) { return json{{"t", s.t}, {"m", s.m}, {"v", s.v}}; }

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.t = j.at("t").get<std::uint64_t>();
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  return s;
}

json tree_json(const IntervalTree& tree) {
  std::vector<double> quantiles(tree.boundaries().size());
  for (std::size_t k = 0; k < quantiles.size(); ++k) {
    quantiles[k] = static_cast<double>(k) / static_cast<double>(quantiles.size() - 1);
  }
  return json{{"depth", tree.global_depth()}, {"quantiles", quantiles}, {"boundaries", tree.boundaries()}};
}

IntervalTree tree_from_json(const json& j) {
  return IntervalTree::from_boundaries(j.at("depth").get<int>(), j.at("boundaries").get<std::vector<double>>());
}

}  // namespace

nlohmann::json to_json(const Checkpoint& c) {
  const TrainedModel& m = c.model;
  json j{{"format_version", kCheckpointFormatVersion},
         {"config", to_json(c.config)},
         {"method", method_name(m.method)},
         {"train", {{"seed", m.train.seed},
                    {"enable_tsl", m.train.enable_tsl},
                    {"enable_ucl", m.train.enable_ucl},
                    {"prune_threshold", m.train.prune_threshold}}},
         {"mode", mode_name(m.mode)}};
  std::uint64_t epochs_done = 0;
  if (const auto* t = std::get_if<TreeModel>(&m.state)) {
    j["tree"] = tree_json(t->tree);
    j["network"] = net_json(t->net);
    j["optimizer"] = adam_json(t->adam);
    epochs_done = t->epochs_done;
  } else if (const auto* o = std::get_if<OrdinalModel>(&m.state)) {
    j["ordinal"] = {{"thresholds", o->thresholds}, {"midpoints", o->midpoints}};
    j["network"] = net_json(o->net);
    j["optimizer"] = adam_json(o->adam);
    epochs_done = o->epochs_done;
  } else if (const auto* r = std::get_if<MseModel>(&m.state)) {
    j["regression"] = {{"v_max", r->v_max}};
    j["network"] = net_json(r->net);
    j["optimizer"] = adam_json(r->adam);
    epochs_done = r->epochs_done;
  }
  j["rng"] = {{"seed", m.train.seed}, {"epochs_done", epochs_done}};
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw DataError("unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint c;
    c.config = run_config_from_json(j.at("config"));
    TrainedModel& m = c.model;
    m.method = parse_method(j.at("method").get<std::string>());
    m.train = train_config_for(m.method, c.config, j.at("train").at("seed").get<std::uint64_t>());
    m.train.enable_tsl = j.at("train").at("enable_tsl").get<bool>();
    m.train.enable_ucl = j.at("train").at("enable_ucl").get<bool>();
    m.train.prune_threshold = j.at("train").at("prune_threshold").get<double>();
    m.mode = parse_mode(j.at("mode").get<std::string>());
    const auto epochs_done = j.at("rng").at("epochs_done").get<std::uint64_t>();
    MultiHeadNet net = net_from_json(j.at("network"));
    AdamState adam = adam_from_json(j.at("optimizer"));
    if (j.contains("tree")) {
      IntervalTree tree = tree_from_json(j.at("tree"));
      if (net.classifier_heads() != tree.classifier_count() || net.pruning_heads() != tree.prunable_count()) {
        throw DataError("checkpoint network heads do not match its tree");
      }
      m.state = TreeModel{std::move(tree), std::move(net), std::move(adam), epochs_done};
    } else if (j.contains("ordinal")) {
      m.state = OrdinalModel{j.at("ordinal").at("thresholds").get<std::vector<double>>(),
                             j.at("ordinal").at("midpoints").get<std::vector<double>>(), std::move(net),
                             std::move(adam), epochs_done};
    } else if (j.contains("regression")) {
      m.state = MseModel{j.at("regression").at("v_max").get<double>(), std::move(net), std::move(adam), epochs_done};
    } else {
      throw DataError("checkpoint holds no model");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("inconsistent checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(checkpoint).dump(1) << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace ptpm
