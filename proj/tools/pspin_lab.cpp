// pspin_lab: batch runner for perturbed-measure experiments.
//
//   pspin_lab --config sweep.json [--out dir] [--seed S] [--workers W]
//   pspin_lab --demo [--out dir]
//   pspin_lab --verify
//
// Exit codes: 0 success, 1 invalid configuration, 2 verification failure,
// 3 runtime error.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pspin/pspin.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for random perturbations of measures on the unit sphere"};

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool demo = false;
  bool verify = false;

  app.add_option("--config", config_path, "sweep configuration (JSON)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--workers", workers, "concurrent grid cells (overrides config)");
  app.add_flag("--demo", demo, "run the shipped demo sweep");
  app.add_flag("--verify", verify, "run the deterministic verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify) {
      const bool ok = pspin::verify_all(std::cout);
      return ok ? 0 : 2;
    }

    pspin::SweepConfig config;
    if (demo) {
      config = pspin::parse_sweep_config(pspin::demo_config());
      config.out_dir = "out";
    } else if (!config_path.empty()) {
      config = pspin::parse_sweep_config_file(config_path);
    } else {
      std::cerr << "nothing to do: pass --config, --demo or --verify (see --help)\n";
      return 1;
    }

    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;

    return pspin::run_sweep(config, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
