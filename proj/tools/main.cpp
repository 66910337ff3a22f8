#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "config.hpp"
#include "stages.hpp"

using namespace qcdiff::cli;

int main(int argc, char** argv) {
  CLI::App app{"model-set diffraction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  RunOptions opt;
  std::string out_dir, only;
  std::uint64_t seed_override = 0;
  unsigned hw = std::thread::hardware_concurrency();
  opt.threads = hw ? hw : 1;

  app.add_option("--config", config_path, "experiment config (json)")->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--threads", opt.threads, "worker threads")->capture_default_str();
  app.add_option("--only", only, "restrict to one stage")->check(CLI::IsMember(stage_names()));
  auto* seed_opt =
      app.add_option("--seed-override", seed_override, "replace the config seed base");

  // one subcommand per stage, plus `run` for the whole pipeline
  for (const auto& name : stage_names())
    app.add_subcommand(name, "run the " + name + " stage only");
  auto* run = app.add_subcommand("run", "run every stage in order");
  run->add_flag("--strict", opt.strict, "fail on tolerance violations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!out_dir.empty()) opt.out_override = out_dir;
  if (*seed_opt) opt.seed_override = seed_override;
  for (const auto& name : stage_names())
    if (app.get_subcommand(name)->parsed()) opt.stages.insert(name);
  if (!only.empty()) opt.stages.insert(only);

  try {
    ExperimentConfig cfg = load_config(config_path);
    return run_stages(cfg, opt, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  }
}
