// rydberg: command-line front end for the broadening toolkit.
//
//   rydberg beta     [--channels FILE] [--nstar N] [--json]
//   rydberg predict  --config POINT.json [--channels FILE]
//   rydberg sweep    [--config GRID.json | --omega-min ... ] [--channels FILE]
//   rydberg simulate --config SIM.json|MANIFEST.json [--seed S] [--out-dir DIR] [--threads N]
//   rydberg fit      lorentzian|decay --input FILE.csv [--meta OP.json] [--out-dir DIR]
//   rydberg collapse --input POINTS.csv [--family dipole|vdw] [--out-dir DIR]

#include <CLI11.hpp>

#include <iostream>

#include "rydberg/commands.hpp"

int main(int argc, char** argv) {
  using namespace rydberg::cli;

  CLI::App app{"Driven-dissipative Rydberg lattice broadening toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the random seed")->expected(1);
  app.add_option("--config", global.config, "JSON configuration file");
  app.add_option("--out-dir", global.out_dir, "Directory for output files");
  app.add_option("--threads", global.threads, "Worker threads for lattice steps")->check(CLI::PositiveNumber);

  // beta
  BetaOptions beta;
  double nstar = 0.0;
  auto* beta_cmd = app.add_subcommand("beta", "Interaction volumes beta3 and beta6");
  beta_cmd->add_option("--channels", beta.channels, "Contaminant channel data file");
  auto* nstar_opt = beta_cmd->add_option("--nstar", nstar, "Rescale beta3 to this effective quantum number");
  beta_cmd->add_flag("--json", beta.json, "Print JSON instead of text");

  // predict
  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Dipole and van der Waals predictions for operating points");
  predict_cmd->add_option("--channels", predict.channels, "Contaminant channel data file");
  predict_cmd->add_option("input", predict.input, "Operating point JSON (defaults to --config)");

  // sweep
  SweepOptions sweep;
  double omega_min = 0.003, omega_max = 0.14, f_min = 0.1, f_max = 1.0;
  int omega_n = 10, f_n = 10;
  auto* sweep_cmd = app.add_subcommand("sweep", "Predictions over an (omega, f) grid, collapse-input CSV");
  sweep_cmd->add_option("--channels", sweep.channels, "Contaminant channel data file");
  sweep_cmd->add_option("--omega-min", omega_min, "Smallest omega/2pi in MHz (log spaced)");
  sweep_cmd->add_option("--omega-max", omega_max, "Largest omega/2pi in MHz");
  sweep_cmd->add_option("--omega-n", omega_n, "Number of omega values");
  sweep_cmd->add_option("--f-min", f_min, "Smallest participating fraction");
  sweep_cmd->add_option("--f-max", f_max, "Largest participating fraction");
  sweep_cmd->add_option("--f-n", f_n, "Number of f values");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Mean-field lattice evolution to steady state");

  // fit
  FitOptionsCli fit;
  std::string meta;
  auto* fit_cmd = app.add_subcommand("fit", "Lorentzian spectrum or exponential decay fit");
  fit_cmd->add_option("model", fit.model, "lorentzian or decay")->required()->check(CLI::IsMember({"lorentzian", "decay"}));
  fit_cmd->add_option("--input", fit.input, "Spectrum or trace CSV")->required();
  auto* meta_opt = fit_cmd->add_option("--meta", meta, "Operating point JSON sidecar for spectra");

  // collapse
  CollapseOptions coll;
  auto* coll_cmd = app.add_subcommand("collapse", "Scaling-collapse coordinates and log-log fit");
  coll_cmd->add_option("--input", coll.input, "Collapse input CSV")->required();
  coll_cmd->add_option("--family", coll.family, "dipole or vdw")->check(CLI::IsMember({"dipole", "vdw"}));
  coll_cmd->add_option("--channels", coll.channels, "Contaminant channel data file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) global.seed = seed;

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*beta_cmd) {
    if (nstar_opt->count() > 0) beta.n_star = nstar;
    return cmd_beta(beta, out, err);
  }
  if (*predict_cmd) {
    if (predict.input.empty()) predict.input = global.config;
    if (predict.input.empty()) {
      err << "predict: an operating point file is required\n";
      return kExitUsage;
    }
    return cmd_predict(predict, out, err);
  }
  if (*sweep_cmd) {
    try {
      if (!global.config.empty()) {
        sweep.grid = SweepGrid::from_json(rydberg::io::load_json(global.config), global.config);
      } else {
        sweep.grid.omega_mhz = axis_values(
            {{"min", omega_min}, {"max", omega_max}, {"count", omega_n}, {"spacing", "log"}}, "--omega");
        sweep.grid.f = axis_values({{"min", f_min}, {"max", f_max}, {"count", f_n}}, "--f");
      }
    } catch (const std::exception& e) {
      err << "sweep: " << e.what() << '\n';
      return kExitUsage;
    }
    return cmd_sweep(sweep, out, err);
  }
  if (*sim_cmd) return cmd_simulate(global, out, err);
  if (*fit_cmd) {
    if (meta_opt->count() > 0) fit.meta = meta;
    return cmd_fit(fit, global, out, err);
  }
  if (*coll_cmd) return cmd_collapse(coll, global, out, err);
  return kExitUsage;
}
