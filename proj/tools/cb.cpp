#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cb/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cb: calibrated m-out-of-n resampling inference"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and write its reports");
  std::string scenario;
  run->add_option("scenario", scenario,
                  "one of mean-simple, softthresh-mean, lr-joint, lr-marginal, "
                  "lasso-sim, lasso-diabetes, vonmises-dr")
      ->required();
  std::string config_file;
  run->add_option("--config", config_file, "key=value config file");
  long long seed = -1;
  run->add_option("--seed", seed, "random seed (mandatory for simulation scenarios)");
  int n = 0, p = 0, reps = 0, threads = 0;
  double kappa = 0.0;
  run->add_option("--n", n, "sample size");
  run->add_option("--p", p, "parameter count (exclusive with --kappa)");
  run->add_option("--kappa", kappa, "p/n ratio (exclusive with --p)");
  run->add_option("--reps", reps, "simulation repetitions");
  run->add_option("--threads", threads, "worker threads (CB_THREADS fallback)");
  std::string alpha_list, lambda_str, out_dir;
  run->add_option("--alpha", alpha_list, "comma-separated alpha grid");
  run->add_option("--lambda", lambda_str, "penalty value, or 'cv'");
  run->add_option("--out", out_dir, "output directory");
  bool full_scale = false, emit_hist = false;
  run->add_flag("--full-scale", full_scale, "paper-scale repetitions");
  run->add_flag("--emit-contour-histogram", emit_hist,
                "write per-m contour-value histograms (softthresh-mean)");

  CLI11_PARSE(app, argc, argv);

  try {
    cb::ScenarioConfig cfg;
    if (!config_file.empty()) cb::load_config_file(cfg, config_file);
    cfg.scenario = scenario;
    if (seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.seed_set = true;
    }
    if (n > 0) cfg.n = n;
    if (p > 0) cfg.p = p;
    if (kappa > 0.0) cfg.kappa = kappa;
    if (reps > 0) cfg.reps = reps;
    if (threads > 0) cfg.threads = threads;
    if (!alpha_list.empty()) cb::apply_config_line(cfg, "alpha", alpha_list);
    if (!lambda_str.empty()) cb::apply_config_line(cfg, "lambda", lambda_str);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (full_scale) cfg.full_scale = true;
    if (emit_hist) cfg.emit_contour_histogram = true;

    auto result = cb::run_scenario(cfg);
    std::cout << "wrote " << result.report_path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = e.what();
    err["scenario"] = scenario;
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
