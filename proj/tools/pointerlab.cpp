// Command-line driver: pointerlab <subcommand> --config run.json --out dir

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pointerlab/cli/app.hpp"

int main(int argc, char** argv) {
  using namespace pointerlab::cli;

  CLI::App app{"Pointer-state robustness laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;

  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration or manifest (JSON)");
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "time-series format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker threads for trajectory ensembles")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidConfig;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
  } catch (const pointerlab::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  }

  RunOptions opts;
  opts.out_dir = out_dir;
  opts.format = format;
  opts.threads = threads;
  opts.seed = seed;
  return run(subcommand, config, opts, std::cout, std::cerr);
}
