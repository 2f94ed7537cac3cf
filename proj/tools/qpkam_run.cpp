#include <CLI11.hpp>

#include "qpkam/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"batch runner for quasi-periodic cocycle reduction experiments"};
  std::string config_path, out_dir = ".", mode;
  int steps = -1, grid = -1;
  std::uint64_t seed = 0;
  bool seed_set = false, verbose = false;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--mode", mode, "theoretical|practical")
      ->check(CLI::IsMember({"theoretical", "practical"}));
  app.add_option("--steps", steps, "step budget override");
  auto* seed_opt = app.add_option("--seed", seed, "perturbation seed override");
  app.add_option("--grid", grid, "residual grid points per dimension");
  app.add_flag("--verbose", verbose, "progress on stderr");
  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  std::map<std::string, std::string> overrides;
  if (!mode.empty()) overrides["experiment.mode"] = mode;
  if (steps >= 0) overrides["experiment.step_budget"] = std::to_string(steps);
  if (seed_set) overrides["system.F_seed"] = std::to_string(seed);
  if (grid > 0) overrides["experiment.grid"] = std::to_string(grid);

  qpkam::ExperimentOptions opt;
  opt.out_dir = out_dir;
  opt.verbose = verbose;
  return qpkam::run_experiment(config_path, opt, overrides);
}
