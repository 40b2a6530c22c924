#include "ptpm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ptpm/errors.hpp"
#include "ptpm/metrics.hpp"

namespace ptpm {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// A diverged network yields NaN predictions; report it as a numerical failure
// rather than a metric precondition error.
void require_finite(std::span<const double> predictions, std::string_view method) {
  for (double p : predictions) {
    if (!std::isfinite(p)) throw NumericalError(std::string(method) + " produced a non-finite prediction");
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

TrainedModel train_model(Method method, const Dataset& train, const RunConfig& config, std::uint64_t seed,
                         const ProgressFn& progress) {
  if (train.empty()) throw DataError("training set is empty");
  TrainedModel model;
  model.method = method;
  model.train = train_config_for(method, config, seed);
  model.mode = config.mode.value_or(default_mode(method, model.train));

  auto report_epoch = [&](std::size_t epoch, const EpochReport& r) {
    if (!progress) return;
    std::ostringstream os;
    os << method_name(method) << " seed " << seed << " epoch " << epoch + 1 << "/" << model.train.epochs
       << " loss " << r.mean.total;
    progress(os.str());
  };

  const auto& trunk = config.trunk_dims;
  switch (method) {
    case Method::kMse: {
      const auto labels = train.labels();
      MseModel m = mse_init(*std::max_element(labels.begin(), labels.end()), train.feature_dim, trunk, seed);
      for (std::size_t e = 0; e < model.train.epochs; ++e) {
        model.history.push_back(mse_train_epoch(m, train, model.train));
        report_epoch(e, model.history.back());
      }
      model.state = std::move(m);
      break;
    }
    case Method::kOrdinal: {
      const auto labels = train.labels();
      const IntervalTree tree = IntervalTree::build_full(labels, config.tree_depth, config.dedupe);
      OrdinalModel m = or_init(tree, train.feature_dim, trunk, seed);
      for (std::size_t e = 0; e < model.train.epochs; ++e) {
        model.history.push_back(or_train_epoch(m, train, model.train));
        report_epoch(e, model.history.back());
      }
      model.state = std::move(m);
      break;
    }
    default: {
      TreeModel m = init_tree_model(train, config.tree_depth, trunk, seed, config.dedupe);
      for (std::size_t e = 0; e < model.train.epochs; ++e) {
        model.history.push_back(train_epoch(m, train, model.train));
        report_epoch(e, model.history.back());
      }
      model.state = std::move(m);
      break;
    }
  }
  return model;
}

std::vector<double> predict_all(const TrainedModel& model, const Dataset& data) {
  std::vector<double> out;
  out.reserve(data.size());
  ForwardTrace trace;
  for (const Sample& s : data.samples) {
    std::visit(Overloaded{
                   [&](const TreeModel& m) {
                     forward(m.net, s.x, trace);
                     out.push_back(predict(trace, m.tree, model.mode, model.train.prune_threshold));
                   },
                   [&](const OrdinalModel& m) {
                     forward(m.net, s.x, trace);
                     out.push_back(or_predict(m, trace));
                   },
                   [&](const MseModel& m) {
                     forward(m.net, s.x, trace);
                     out.push_back(mse_predict(m, trace));
                   },
                   [](std::monostate) { throw std::logic_error("model holds no trained state"); },
               },
               model.state);
  }
  return out;
}

MetricsReport evaluate(const TrainedModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("evaluation set is empty");
  MetricsReport report;
  report.method = std::string(method_name(model.method));
  report.samples = data.size();
  const auto labels = data.labels();

  if (const auto* m = std::get_if<TreeModel>(&model.state)) {
    std::vector<double> predictions;
    std::vector<LeafDistribution> global_dists;
    std::vector<SampleLabel> sample_labels;
    std::vector<std::vector<double>> q;
    predictions.reserve(data.size());
    global_dists.reserve(data.size());
    sample_labels.reserve(data.size());
    q.reserve(data.size());
    double depth_sum = 0.0;
    ForwardTrace trace;
    for (const Sample& s : data.samples) {
      forward(m->net, s.x, trace);
      global_dists.push_back(leaf_distribution(trace, m->tree));
      const IntervalTree served = serving_tree(trace, m->tree, model.mode, model.train.prune_threshold);
      const LeafDistribution dist = model.mode == PredictMode::kGlobal ? global_dists.back()
                                                                       : leaf_distribution(trace, served);
      predictions.push_back(expected_watch_time(dist));
      depth_sum += expected_leaf_depth(dist, served);
      sample_labels.push_back(make_label(m->tree, s.y));
      q.push_back(trace.q);
    }
    require_finite(predictions, report.method);
    report.mae = mae(labels, predictions);
    report.xauc = xauc(labels, predictions);
    const ClassifierAuc auc = average_classifier_auc(m->tree, q, sample_labels);
    if (auc.evaluated > 0) report.avg_classifier_auc = auc.mean;
    report.auc_nodes_evaluated = auc.evaluated;
    report.auc_nodes_skipped = auc.skipped;
    const PriorPosterior ratio = prior_posterior_ratio(m->tree, global_dists, sample_labels);
    report.prior_posterior_ratios = ratio.ratios;
    report.mean_abs_ratio_dev = ratio.mean_abs_deviation;
    report.mean_learned_depth = depth_sum / static_cast<double>(data.size());
  } else {
    const auto predictions = predict_all(model, data);
    require_finite(predictions, report.method);
    report.mae = mae(labels, predictions);
    report.xauc = xauc(labels, predictions);
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  json ratios = json::array();
  for (const auto& v : r.prior_posterior_ratios) ratios.push_back(optional_json(v));
  return json{{"method", r.method},
              {"samples", r.samples},
              {"mae", r.mae},
              {"xauc", r.xauc},
              {"avg_classifier_auc", optional_json(r.avg_classifier_auc)},
              {"auc_nodes_evaluated", r.auc_nodes_evaluated},
              {"auc_nodes_skipped", r.auc_nodes_skipped},
              {"prior_posterior_ratios", std::move(ratios)},
              {"mean_abs_ratio_dev", optional_json(r.mean_abs_ratio_dev)},
              {"mean_learned_depth", optional_json(r.mean_learned_depth)}};
}

std::pair<Dataset, Dataset> resolve_datasets(const RunConfig& config, std::uint64_t seed) {
  Dataset train;
  if (config.train_data) {
    train = load_csv(*config.train_data);
  } else {
    SynthConfig synth = config.synth;
    synth.seed = seed;
    train = gen_synthetic(synth);
  }
  if (train.empty()) throw DataError("training data is empty");
  if (config.test_data) {
    Dataset test = load_csv(*config.test_data);
    if (test.feature_dim != train.feature_dim) {
      throw DataError("test data has " + std::to_string(test.feature_dim) + " features, training data has " +
                      std::to_string(train.feature_dim));
    }
    return {std::move(train), std::move(test)};
  }
  return split(train, 1.0 - config.test_fraction, seed);
}

CompareReport compare(const RunConfig& config, const std::vector<Method>& methods,
                      const std::vector<std::uint64_t>& seeds, const ProgressFn& progress) {
  CompareReport report;
  for (std::uint64_t seed : seeds) {
    const auto [train, test] = resolve_datasets(config, seed);
    for (Method method : methods) {
      const auto start = std::chrono::steady_clock::now();
      const TrainedModel model = train_model(method, train, config, seed, progress);
      const auto stop = std::chrono::steady_clock::now();
      CompareRow row;
      row.metrics = evaluate(model, test);
      row.seed = seed;
      row.train_seconds = std::chrono::duration<double>(stop - start).count();
      if (progress) {
        progress(std::string(method_name(method)) + " seed " + std::to_string(seed) + ": mae " +
                 fixed(row.metrics.mae, 4) + " xauc " + fixed(row.metrics.xauc, 4));
      }
      report.rows.push_back(std::move(row));
    }
  }
  for (Method method : methods) {
    CompareSummary s;
    s.method = std::string(method_name(method));
    double ratio = 0.0;
    double depth = 0.0;
    std::size_t n = 0;
    for (const CompareRow& row : report.rows) {
      if (row.metrics.method != s.method) continue;
      s.mean_mae += row.metrics.mae;
      s.mean_xauc += row.metrics.xauc;
      s.mean_train_seconds += row.train_seconds;
      if (row.metrics.mean_abs_ratio_dev) ratio += *row.metrics.mean_abs_ratio_dev;
      if (row.metrics.mean_learned_depth) depth += *row.metrics.mean_learned_depth;
      ++n;
    }
    const double inv = 1.0 / static_cast<double>(n);
    s.mean_mae *= inv;
    s.mean_xauc *= inv;
    s.mean_train_seconds *= inv;
    if (is_tree_method(method)) {
      s.mean_abs_ratio_dev = ratio * inv;
      s.mean_learned_depth = depth * inv;
    }
    report.summary.push_back(std::move(s));
  }
  return report;
}

nlohmann::json to_json(const CompareReport& report) {
  json rows = json::array();
  for (const CompareRow& row : report.rows) {
    json r = to_json(row.metrics);
    r["seed"] = row.seed;
    r["train_seconds"] = row.train_seconds;
    rows.push_back(std::move(r));
  }
  json summary = json::array();
  for (const CompareSummary& s : report.summary) {
    summary.push_back(json{{"method", s.method},
                           {"mean_mae", s.mean_mae},
                           {"mean_xauc", s.mean_xauc},
                           {"mean_abs_ratio_dev", optional_json(s.mean_abs_ratio_dev)},
                           {"mean_learned_depth", optional_json(s.mean_learned_depth)},
                           {"mean_train_seconds", s.mean_train_seconds}});
  }
  return json{{"rows", std::move(rows)}, {"summary", std::move(summary)}};
}

std::string format_table(const CompareReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %10s %8s %10s %8s %10s\n", "method", "MAE", "XAUC", "ratio_dev",
                "depth", "train_s");
  os << line;
  for (const CompareSummary& s : report.summary) {
    const std::string ratio = s.mean_abs_ratio_dev ? fixed(*s.mean_abs_ratio_dev, 4) : "-";
    const std::string depth = s.mean_learned_depth ? fixed(*s.mean_learned_depth, 2) : "-";
    std::snprintf(line, sizeof(line), "%-10s %10.4f %8.4f %10s %8s %10.2f\n", s.method.c_str(), s.mean_mae,
                  s.mean_xauc, ratio.c_str(), depth.c_str(), s.mean_train_seconds);
    os << line;
  }
  return os.str();
}

std::vector<DepthSweepRow> sweep_depths(const RunConfig& config, const std::vector<int>& depths,
                                        const std::vector<std::uint64_t>& seeds, const ProgressFn& progress) {
  std::vector<DepthSweepRow> rows;
  for (std::uint64_t seed : seeds) {
    const auto [train, test] = resolve_datasets(config, seed);
    for (int depth : depths) {
      RunConfig c = config;
      c.tree_depth = depth;
      const TrainedModel model = train_model(config.method, train, c, seed, progress);
      const MetricsReport m = evaluate(model, test);
      DepthSweepRow row;
      row.depth = depth;
      row.seed = seed;
      row.xauc = m.xauc;
      row.mae = m.mae;
      row.mean_learned_depth = m.mean_learned_depth.value_or(0.0);
      rows.push_back(row);
      if (progress) {
        progress("depth " + std::to_string(depth) + " seed " + std::to_string(seed) + ": xauc " +
                 fixed(row.xauc, 4) + " mean learned depth " + fixed(row.mean_learned_depth, 3));
      }
    }
  }
  return rows;
}

nlohmann::json to_json(const std::vector<DepthSweepRow>& rows) {
  json out = json::array();
  for (const DepthSweepRow& r : rows) {
    out.push_back(json{{"depth", r.depth},
                       {"seed", r.seed},
                       {"xauc", r.xauc},
                       {"mae", r.mae},
                       {"mean_learned_depth", r.mean_learned_depth}});
  }
  return out;
}

std::string format_table(const std::vector<DepthSweepRow>& rows) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%6s %6s %8s %10s %12s\n", "depth", "seed", "XAUC", "MAE", "mean_depth");
  os << line;
  for (const DepthSweepRow& r : rows) {
    std::snprintf(line, sizeof(line), "%6d %6llu %8.4f %10.4f %12.3f\n", r.depth,
                  static_cast<unsigned long long>(r.seed), r.xauc, r.mae, r.mean_learned_depth);
    os << line;
  }
  return os.str();
}

}  // namespace ptpm
