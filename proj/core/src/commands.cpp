#include "ptpm/commands.hpp"

#include <fstream>
#include <iostream>
#include <string>

#include "ptpm/checkpoint.hpp"
#include "ptpm/errors.hpp"
#include "ptpm/experiment.hpp"

namespace ptpm {
namespace {

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config;
  if (options.config) config = load_run_config(*options.config);
  if (options.seed) {
    config.train.seed = *options.seed;
    config.synth.seed = *options.seed;
    config.seeds = {*options.seed};
  }
  if (options.data) config.train_data = *options.data;
  if (options.mode) config.mode = *options.mode;
  if (options.methods) config.methods = *options.methods;
  validate(config);
  return config;
}

std::filesystem::path require_out(const CommandOptions& options, const char* what) {
  if (!options.out) throw ConfigError(std::string("--out is required (") + what + ")");
  return *options.out;
}

std::filesystem::path out_dir(const CommandOptions& options) {
  const auto dir = require_out(options, "output directory");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write " + path.string());
  file << text;
  if (!file) throw DataError("failed writing " + path.string());
}

ProgressFn progress_to(const CommandOptions& options, std::ostream& err) {
  if (options.quiet) return {};
  return [&err](const std::string& line) { err << line << '\n'; };
}

}  // namespace

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_gen_data(const CommandOptions& options, std::ostream& out, std::ostream&) {
  const RunConfig config = resolve_config(options);
  const auto path = require_out(options, "CSV path");
  const Dataset data = gen_synthetic(config.synth);
  save_csv(data, path);
  out << "wrote " << data.size() << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve_config(options);
  const auto dir = out_dir(options);
  const std::uint64_t seed = config.train.seed;
  const auto [train, test] = resolve_datasets(config, seed);

  Checkpoint checkpoint{config, train_model(config.method, train, config, seed, progress_to(options, err))};
  const MetricsReport metrics = evaluate(checkpoint.model, test);
  save_checkpoint(checkpoint, dir / "checkpoint.json");
  write_text(dir / "metrics.json", to_json(metrics).dump(2) + "\n");
  out << "method " << metrics.method << ": mae " << metrics.mae << " xauc " << metrics.xauc << '\n';
  return kExitOk;
}

int cmd_eval(const CommandOptions& options, std::ostream& out, std::ostream&) {
  if (!options.checkpoint) throw ConfigError("--checkpoint is required");
  Checkpoint checkpoint = load_checkpoint(*options.checkpoint);
  if (options.mode) checkpoint.model.mode = *options.mode;

  Dataset eval_set;
  if (options.data) {
    eval_set = load_csv(*options.data);
  } else {
    RunConfig config = options.config ? load_run_config(*options.config) : checkpoint.config;
    eval_set = resolve_datasets(config, checkpoint.model.train.seed).second;
  }
  const MetricsReport metrics = evaluate(checkpoint.model, eval_set);
  const std::string text = to_json(metrics).dump(2) + "\n";
  if (options.out) {
    write_text(*options.out, text);
  } else {
    out << text;
  }
  return kExitOk;
}

int cmd_compare(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve_config(options);
  const auto dir = out_dir(options);
  const CompareReport report = compare(config, config.methods, config.seeds, progress_to(options, err));
  const std::string table = format_table(report);
  write_text(dir / "compare.json", to_json(report).dump(2) + "\n");
  write_text(dir / "compare.txt", table);
  out << table;
  return kExitOk;
}

int cmd_sweep_depth(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve_config(options);
  const auto dir = out_dir(options);
  const auto rows = sweep_depths(config, config.sweep_depths, config.seeds, progress_to(options, err));
  const std::string table = format_table(rows);
  write_text(dir / "sweep.json", to_json(rows).dump(2) + "\n");
  write_text(dir / "sweep.txt", table);
  out << table;
  return kExitOk;
}

}  // namespace ptpm
