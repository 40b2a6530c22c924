// Command-line entry point: gen-data, train, eval, compare, sweep-depth.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptpm/commands.hpp"
#include "ptpm/config.hpp"
#include "ptpm/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::string mode;
  std::string methods;
  bool quiet = false;
};

std::vector<ptpm::Method> parse_methods(const std::string& list) {
  std::vector<ptpm::Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) methods.push_back(ptpm::parse_method(item));
  }
  if (methods.empty()) throw ptpm::ConfigError("--methods is empty");
  return methods;
}

ptpm::CommandOptions to_options(const Flags& f, const CLI::App& sub) {
  ptpm::CommandOptions o;
  if (!f.config.empty()) o.config = f.config;
  if (!f.data.empty()) o.data = f.data;
  if (!f.out.empty()) o.out = f.out;
  if (!f.checkpoint.empty()) o.checkpoint = f.checkpoint;
  if (sub.count("--seed") > 0) o.seed = f.seed;
  if (!f.mode.empty()) o.mode = ptpm::parse_mode(f.mode);
  if (!f.methods.empty()) o.methods = parse_methods(f.methods);
  o.quiet = f.quiet;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-based progressive regression with learned per-sample trees"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--data", flags.data, "CSV data file (watch_time,f0,...)");
    sub->add_option("--out", flags.out, "output path or directory");
    sub->add_option("--seed", flags.seed, "random seed (overrides the config)");
    sub->add_flag("--quiet", flags.quiet, "suppress progress lines");
  };

  auto* gen = app.add_subcommand("gen-data", "write a synthetic watch-time CSV");
  add_common(gen);
  auto* train = app.add_subcommand("train", "train one method; writes checkpoint.json and metrics.json");
  add_common(train);
  train->add_option("--mode", flags.mode, "serving mode: global or pruned");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", flags.checkpoint, "checkpoint.json written by train")->required();
  eval->add_option("--mode", flags.mode, "serving mode: global or pruned");
  auto* cmp = app.add_subcommand("compare", "train and compare methods");
  add_common(cmp);
  cmp->add_option("--methods", flags.methods, "comma list of mse,or,tpm,ptpm,ptpm-tsl,ptpm-ucl");
  cmp->add_option("--mode", flags.mode, "force a serving mode for tree methods");
  auto* sweep = app.add_subcommand("sweep-depth", "XAUC and learned depth across global tree depths");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ptpm::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  return ptpm::run_guarded(
      [&]() {
        const ptpm::CommandOptions options = to_options(flags, *chosen);
        if (chosen == gen) return ptpm::cmd_gen_data(options, std::cout, std::cerr);
        if (chosen == train) return ptpm::cmd_train(options, std::cout, std::cerr);
        if (chosen == eval) return ptpm::cmd_eval(options, std::cout, std::cerr);
        if (chosen == cmp) return ptpm::cmd_compare(options, std::cout, std::cerr);
        return ptpm::cmd_sweep_depth(options, std::cout, std::cerr);
      },
      std::cerr);
}
