#pragma once
// Subcommand implementations behind the `rydberg` tool.
//
// Each cmd_* takes an already-parsed options struct plus output streams and
// returns the process exit code: 0 success, 1 usage or parse error,
// 2 non-convergence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rydberg/channels.hpp"
#include "rydberg/fitting.hpp"
#include "rydberg/io.hpp"
#include "rydberg/kinetics.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/units.hpp"

#ifndef RYDBERG_DATA_DIR
#define RYDBERG_DATA_DIR "data"
#endif

namespace rydberg::cli {

inline constexpr const char* kToolName = "rydberg";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;

inline std::string default_channel_file() {
  return std::string(RYDBERG_DATA_DIR) + "/rb87_18s_channels.v1.json";
}

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
};

// ---------------------------------------------------------------------------
// Operating points

/// Accepts {"omega_MHz", "delta_MHz"?, "f"?, "rho_g_um3"?}; f defaults from
/// rho_g and vice versa using the full density scale.
inline OperatingPoint operating_point_from_json(const io::json& j, std::string_view source) {
  io::require_known_keys(j, {"omega_MHz", "delta_MHz", "f", "rho_g_um3"}, source);
  const double omega = mhz(io::get_required<double>(j, "omega_MHz", source));
  const double delta = mhz(io::get_or<double>(j, "delta_MHz", 0.0, source));
  const bool has_f = j.contains("f"), has_rho = j.contains("rho_g_um3");
  if (!has_f && !has_rho) throw io::ParseError(std::string(source) + ": need 'f' or 'rho_g_um3'");
  OperatingPoint op;
  op.omega = omega;
  op.delta = delta;
  op.fraction_f = has_f ? io::get_required<double>(j, "f", source)
                        : io::get_required<double>(j, "rho_g_um3", source) / defaults::full_density;
  op.rho_g = has_rho ? io::get_required<double>(j, "rho_g_um3", source)
                     : op.fraction_f * defaults::full_density;
  if (op.omega < 0.0) throw io::ParseError(std::string(source) + ": omega_MHz must be >= 0");
  try {
    op.validate();
  } catch (const std::domain_error& e) {
    throw io::ParseError(std::string(source) + ": " + e.what());
  }
  return op;
}

inline io::json operating_point_to_json(const OperatingPoint& op) {
  return {{"omega_MHz", to_mhz(op.omega)},
          {"delta_MHz", to_mhz(op.delta)},
          {"f", op.fraction_f},
          {"rho_g_um3", op.rho_g}};
}

/// Columns shared by `predict`, `sweep` and the collapse input.
inline std::vector<std::string> prediction_header() {
  return {"omega_MHz", "delta_MHz", "f", "rho_g_um3",
          "gamma_MHz", "r0_MHz",    "gamma_vdw_MHz", "r0_vdw_MHz"};
}

inline std::vector<double> prediction_row(const OperatingPoint& op, double beta3, double beta6,
                                          double gamma0) {
  const auto d = predict_dipole(op, beta3);
  const auto v = predict_vdw(op, beta6, gamma0);
  return {to_mhz(op.omega), to_mhz(op.delta), op.fraction_f,  op.rho_g,
          to_mhz(d.gamma),  to_mhz(d.r0),     to_mhz(v.gamma), to_mhz(v.r0)};
}

// ---------------------------------------------------------------------------
// beta

struct BetaOptions {
  std::string channels = default_channel_file();
  std::optional<double> n_star;
  bool json = false;
};

inline int cmd_beta(const BetaOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto channels = load_channels(o.channels);
    const double b3 = beta3(channels);
    const double b6 = beta6(defaults::c6, defaults::gamma0);
    io::json j;
    j["channels_file"] = o.channels;
    j["beta3_um3"] = b3;
    j["beta6_um3"] = b6;
    j["n_star"] = defaults::n_star;
    io::json contrib = io::json::array();
    for (const auto& ch : channels)
      contrib.push_back({{"label", ch.label}, {"contribution_um3", beta3_contribution(ch)}});
    j["contributions"] = contrib;
    if (o.n_star) j["beta3_scaled_um3"] = scale_beta3_with_n(b3, defaults::n_star, *o.n_star);

    if (o.json) {
      out << j.dump(2) << '\n';
    } else {
      for (const auto& c : contrib)
        out << "channel " << c["label"].get<std::string>() << " contribution_um3 "
            << io::fmt_double(c["contribution_um3"].get<double>()) << '\n';
      out << "beta3_um3 " << io::fmt_double(b3) << '\n';
      out << "beta6_um3 " << io::fmt_double(b6) << '\n';
      if (o.n_star)
        out << "beta3_um3 at n* = " << io::fmt_double(*o.n_star) << ": "
            << io::fmt_double(j["beta3_scaled_um3"].get<double>()) << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "beta: " << e.what() << '\n';
    return kExitUsage;
  }
}

// ---------------------------------------------------------------------------
// predict / sweep

struct PredictOptions {
  std::string input;  // JSON operating point or array of points
  std::string channels = default_channel_file();
};

inline int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
  double b3 = 0.0;
  io::json doc;
  try {
    b3 = beta3(load_channels(o.channels));
    doc = io::load_json(o.input);
  } catch (const std::exception& e) {
    err << "predict: " << e.what() << '\n';
    return kExitUsage;
  }
  const double b6 = beta6(defaults::c6, defaults::gamma0);
  const io::json points = doc.is_array() ? doc : io::json::array({doc});
  io::CsvWriter csv(prediction_header());
  int status = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string where = o.input + " (point " + std::to_string(i) + ")";
    try {
      csv.row(prediction_row(operating_point_from_json(points[i], where), b3, b6, defaults::gamma0));
    } catch (const std::exception& e) {
      err << "predict: " << where << ": " << e.what() << '\n';
      status = kExitUsage;
    }
  }
  out << csv.str();
  return status;
}

/// One sweep axis: explicit list or {"min", "max", "count", "spacing": "log"|"linear"}.
inline std::vector<double> axis_values(const io::json& j, std::string_view source) {
  if (j.is_array()) return j.get<std::vector<double>>();
  io::require_known_keys(j, {"min", "max", "count", "spacing"}, source);
  const double lo = io::get_required<double>(j, "min", source);
  const double hi = io::get_required<double>(j, "max", source);
  const int count = io::get_required<int>(j, "count", source);
  const std::string spacing = io::get_or<std::string>(j, "spacing", "linear", source);
  if (count < 0) throw io::ParseError(std::string(source) + ": count must be >= 0");
  std::vector<double> v;
  for (int i = 0; i < count; ++i) {
    const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    if (spacing == "log") {
      if (!(lo > 0.0 && hi > 0.0)) throw io::ParseError(std::string(source) + ": log spacing needs positive bounds");
      v.push_back(lo * std::pow(hi / lo, u));
    } else if (spacing == "linear") {
      v.push_back(lo + (hi - lo) * u);
    } else {
      throw io::ParseError(std::string(source) + ": spacing must be 'log' or 'linear'");
    }
  }
  return v;
}

struct SweepGrid {
  std::vector<double> omega_mhz;
  std::vector<double> f;
  double delta_mhz = 0.0;

  static SweepGrid from_json(const io::json& j, std::string_view source) {
    io::require_known_keys(j, {"omega_MHz", "f", "delta_MHz"}, source);
    SweepGrid g;
    g.omega_mhz = axis_values(j.at("omega_MHz"), std::string(source) + ": omega_MHz");
    g.f = axis_values(j.at("f"), std::string(source) + ": f");
    g.delta_mhz = io::get_or<double>(j, "delta_MHz", 0.0, source);
    return g;
  }
};

struct SweepOptions {
  SweepGrid grid;
  std::string channels = default_channel_file();
};

inline int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  double b3 = 0.0;
  try {
    b3 = beta3(load_channels(o.channels));
  } catch (const std::exception& e) {
    err << "sweep: " << e.what() << '\n';
    return kExitUsage;
  }
  const double b6 = beta6(defaults::c6, defaults::gamma0);
  io::CsvWriter csv(prediction_header());
  int status = kExitOk;
  for (double f : o.grid.f) {
    for (double w : o.grid.omega_mhz) {
      try {
        if (w < 0.0) throw std::domain_error("omega must be >= 0");
        const auto op = OperatingPoint::from_fraction(mhz(w), mhz(o.grid.delta_mhz), f);
        csv.row(prediction_row(op, b3, b6, defaults::gamma0));
      } catch (const std::exception& e) {
        err << "sweep: point (omega_MHz=" << w << ", f=" << f << "): " << e.what() << '\n';
        status = kExitUsage;
      }
    }
  }
  out << csv.str();
  return status;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulationConfig {
  LatticeConfig lattice;
  DriveParams drive;
  Rates rates;
  double c3 = 0.0;  // rad um^3 / us
  SteadyStateOptions steady;
  std::uint64_t seed = 0;

  static constexpr std::uint64_t kDefaultSeed = 1;

  static SimulationConfig from_json(const io::json& j, std::string_view source) {
    io::require_known_keys(j,
                           {"dims", "spacing_um", "cutoff_um", "axis", "omega_MHz", "delta_MHz",
                            "gamma_s_MHz", "gamma_p_MHz", "gamma_r_MHz", "c3_MHz_um3", "dt_us", "tol",
                            "t_max_us", "seed", "check_every"},
                           source);
    SimulationConfig c;
    const auto dims = io::get_required<std::vector<int>>(j, "dims", source);
    if (dims.size() != 3) throw io::ParseError(std::string(source) + ": dims must have 3 entries");
    c.lattice.dims = {dims[0], dims[1], dims[2]};
    c.lattice.spacing = io::get_or<double>(j, "spacing_um", defaults::lattice_spacing, source);
    c.lattice.cutoff_radius = io::get_or<double>(j, "cutoff_um", 5.0 * c.lattice.spacing, source);
    const auto axis = io::get_or<std::vector<double>>(j, "axis", {0.0, 0.0, 1.0}, source);
    if (axis.size() != 3) throw io::ParseError(std::string(source) + ": axis must have 3 entries");
    c.lattice.quantization_axis = Eigen::Vector3d(axis[0], axis[1], axis[2]);
    c.drive.omega = mhz(io::get_required<double>(j, "omega_MHz", source));
    c.drive.delta = mhz(io::get_or<double>(j, "delta_MHz", 0.0, source));
    c.rates.gamma_s = mhz(io::get_required<double>(j, "gamma_s_MHz", source));
    c.rates.gamma_p = mhz(io::get_required<double>(j, "gamma_p_MHz", source));
    c.rates.gamma_r = mhz(io::get_required<double>(j, "gamma_r_MHz", source));
    c.c3 = mhz(io::get_required<double>(j, "c3_MHz_um3", source));
    c.steady.dt = io::get_or<double>(j, "dt_us", 0.0, source);
    c.steady.tol = io::get_or<double>(j, "tol", 1e-9, source);
    c.steady.t_max = io::get_required<double>(j, "t_max_us", source);
    c.steady.check_every = io::get_or<int>(j, "check_every", 50, source);
    c.seed = io::get_or<std::uint64_t>(j, "seed", kDefaultSeed, source);
    try {
      c.lattice.validate();
      c.rates.validate();
      if (c.drive.omega < 0.0) throw std::domain_error("omega must be >= 0");
      if (c.steady.dt < 0.0) throw std::domain_error("dt_us must be >= 0");
      if (!(c.steady.tol > 0.0)) throw std::domain_error("tol must be > 0");
      if (!(c.steady.t_max >= 0.0)) throw std::domain_error("t_max_us must be >= 0");
    } catch (const std::domain_error& e) {
      throw io::ParseError(std::string(source) + ": " + e.what());
    }
    return c;
  }

  [[nodiscard]] io::json to_json() const {
    const auto& ax = lattice.quantization_axis;
    return {{"dims", {lattice.dims[0], lattice.dims[1], lattice.dims[2]}},
            {"spacing_um", lattice.spacing},
            {"cutoff_um", lattice.cutoff_radius},
            {"axis", {ax[0], ax[1], ax[2]}},
            {"omega_MHz", to_mhz(drive.omega)},
            {"delta_MHz", to_mhz(drive.delta)},
            {"gamma_s_MHz", to_mhz(rates.gamma_s)},
            {"gamma_p_MHz", to_mhz(rates.gamma_p)},
            {"gamma_r_MHz", to_mhz(rates.gamma_r)},
            {"c3_MHz_um3", to_mhz(c3)},
            {"dt_us", steady.dt},
            {"tol", steady.tol},
            {"t_max_us", steady.t_max},
            {"check_every", steady.check_every},
            {"seed", seed}};
  }
};

inline io::json report_to_json(const SteadyStateReport& r, const CouplingTable& table) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"t_us", r.t},
          {"dt_us", r.dt},
          {"residual_per_us", r.residual},
          {"max_ps_coherence", r.max_ps_coherence},
          {"populations", {{"g", r.populations[0]}, {"s", r.populations[1]}, {"p", r.populations[2]}}},
          {"max_trace_drift", r.max_trace_drift},
          {"max_hermiticity_defect", r.max_hermiticity_defect},
          {"min_eigenvalue", r.min_eigenvalue},
          {"sites", r.final_state.size()},
          {"coupling_truncation_MHz", to_mhz(table.truncation_error())}};
}

/// Manifest files carry the full config snapshot and can be passed back as --config.
inline bool is_manifest(const io::json& j) { return j.is_object() && j.contains("manifest_version"); }

struct SimulateResult {
  int exit_code = kExitOk;
  std::optional<SteadyStateReport> report;
};

inline SimulateResult run_simulate(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  SimulateResult result;
  SimulationConfig cfg;
  std::string config_text;
  try {
    if (g.config.empty()) throw io::ParseError("simulate: --config is required");
    config_text = io::read_file(g.config);
    auto doc = io::parse_json(config_text, g.config);
    if (is_manifest(doc)) doc = doc.at("config");
    cfg = SimulationConfig::from_json(doc, g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads < 1) throw io::ParseError("simulate: --threads must be >= 1");
    cfg.steady.threads = g.threads;
    fs::create_directories(g.out_dir);
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    result.exit_code = kExitUsage;
    return result;
  }

  const auto started = std::chrono::steady_clock::now();
  const auto table = build_coupling_table(cfg.lattice, cfg.c3);
  const auto init = random_init(cfg.lattice, cfg.seed);
  io::CsvWriter series({"t_us", "pop_g", "pop_s", "pop_p", "max_ps_coherence", "residual"});
  auto opts = cfg.steady;
  opts.observer = [&](const EvolutionSample& s) {
    series.row({s.t, s.populations[0], s.populations[1], s.populations[2], s.max_ps_coherence, s.residual});
  };

  SteadyStateReport rep;
  try {
    rep = evolve_to_steady_state(init, cfg.drive, table, cfg.rates, opts);
  } catch (const StepRejected& e) {
    err << "simulate: aborted: " << e.what() << '\n';
    result.exit_code = kExitNotConverged;
    return result;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path dir(g.out_dir);
  const std::string series_text = series.str();
  const std::string report_text = report_to_json(rep, table).dump(2) + "\n";
  io::write_file(dir / "timeseries.csv", series_text);
  io::write_file(dir / "steady_state.json", report_text);

  io::json manifest;
  manifest["manifest_version"] = 1;
  manifest["tool"] = kToolName;
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = "simulate";
  manifest["config"] = cfg.to_json();
  manifest["seed"] = cfg.seed;
  manifest["threads"] = g.threads;
  manifest["inputs"] = {{{"path", g.config}, {"sha256", io::sha256_hex(config_text)}}};
  manifest["outputs"] = {{{"path", "timeseries.csv"}, {"sha256", io::sha256_hex(series_text)}},
                         {{"path", "steady_state.json"}, {"sha256", io::sha256_hex(report_text)}}};
  manifest["steps"] = rep.iterations;
  manifest["wall_clock_s"] = wall;
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  out << "converged " << (rep.converged ? "true" : "false") << " t_us " << io::fmt_double(rep.t)
      << " residual " << io::fmt_double(rep.residual) << " max_ps_coherence "
      << io::fmt_double(rep.max_ps_coherence) << '\n';
  result.exit_code = rep.converged ? kExitOk : kExitNotConverged;
  result.report = std::move(rep);
  return result;
}

inline int cmd_simulate(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  return run_simulate(g, out, err).exit_code;
}

// ---------------------------------------------------------------------------
// fit

inline Spectrum load_spectrum(const std::string& csv_path, const std::optional<std::string>& meta_path) {
  const auto t = io::CsvTable::load(csv_path);
  t.require_known_columns({"delta_MHz", "signal", "sigma"});
  Spectrum s;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    SpectrumPoint p;
    p.delta = mhz(t.at(r, "delta_MHz"));
    p.signal = t.at(r, "signal");
    p.sigma = t.get(r, "sigma");
    s.points.push_back(p);
  }
  if (meta_path) s.meta = operating_point_from_json(io::load_json(*meta_path), *meta_path);
  try {
    s.validate();
  } catch (const std::domain_error& e) {
    throw io::ParseError(csv_path + ": " + e.what());
  }
  return s;
}

inline DecayTrace load_trace(const std::string& csv_path) {
  const auto t = io::CsvTable::load(csv_path);
  t.require_known_columns({"t_us", "counts"});
  DecayTrace tr;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double counts = t.at(r, "counts");
    if (counts < 0.0)
      throw io::ParseError(t.where(t.line_of_row(r)) + ", column 'counts': negative value");
    tr.points.push_back({t.at(r, "t_us"), counts});
  }
  try {
    tr.validate();
  } catch (const std::domain_error& e) {
    throw io::ParseError(csv_path + ": " + e.what());
  }
  return tr;
}

inline io::json fit_to_json(const FitResult& r, const std::string& model) {
  io::json params, errs;
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    std::string name = r.names[i];
    double v = r.params[i], e = r.stderrs[i];
    if (model == "lorentzian" && (name == "gamma" || name == "center")) {
      name += "_MHz";
      v = to_mhz(v);
      e = to_mhz(e);
    } else if (model == "decay" && name == "tau") {
      name += "_us";
    }
    params[name] = v;
    errs[name] = e;
  }
  return {{"model", model},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"chi2_reduced", r.chi2_reduced},
          {"message", r.message},
          {"params", params},
          {"stderr", errs}};
}

struct FitOptionsCli {
  std::string model;  // "lorentzian" or "decay"
  std::string input;
  std::optional<std::string> meta;
};

inline int cmd_fit(const FitOptionsCli& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  io::json j;
  bool converged = false;
  try {
    if (o.model == "lorentzian") {
      auto meta = o.meta;
      if (!meta) {
        auto sidecar = std::filesystem::path(o.input).replace_extension(".json");
        if (std::filesystem::exists(sidecar)) meta = sidecar.string();
      }
      const auto spec = load_spectrum(o.input, meta);
      const auto r = fit_lorentzian(spec);
      j = fit_to_json(r, o.model);
      j["width_ratio"] = width_ratio(r.value("gamma"), defaults::gamma0);
      if (meta) j["meta"] = operating_point_to_json(spec.meta);
      converged = r.converged;
    } else if (o.model == "decay") {
      const auto r = fit_exp_decay(load_trace(o.input));
      j = fit_to_json(r, o.model);
      converged = r.converged;
    } else {
      throw io::ParseError("fit: model must be 'lorentzian' or 'decay'");
    }
  } catch (const std::exception& e) {
    err << "fit: " << e.what() << '\n';
    return kExitUsage;
  }
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (g.out_dir != ".") {
    std::filesystem::create_directories(g.out_dir);
    io::write_file(std::filesystem::path(g.out_dir) / ("fit_" + o.model + ".json"), text);
  }
  return converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------------------
// collapse

/// Collapse input: omega_MHz, f, gamma_MHz, r0_MHz and optionally rho_g_um3.
/// The remaining prediction columns are accepted and ignored.
inline std::vector<CollapseInput> load_collapse_input(const std::string& csv_path) {
  const auto t = io::CsvTable::load(csv_path);
  t.require_known_columns({"omega_MHz", "delta_MHz", "f", "rho_g_um3", "gamma_MHz", "r0_MHz",
                           "gamma_vdw_MHz", "r0_vdw_MHz", "gamma_stderr_MHz", "r0_stderr_MHz"});
  std::vector<CollapseInput> rows;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    CollapseInput in;
    const double f = t.at(r, "f");
    const auto rho = t.get(r, "rho_g_um3");
    in.op.omega = mhz(t.at(r, "omega_MHz"));
    in.op.delta = mhz(t.get(r, "delta_MHz").value_or(0.0));
    in.op.fraction_f = f;
    in.op.rho_g = rho ? *rho : f * defaults::full_density;
    in.gamma = mhz(t.at(r, "gamma_MHz"));
    in.r0 = mhz(t.at(r, "r0_MHz"));
    if (!(in.op.omega > 0.0) || !(in.op.rho_g > 0.0) || !(in.gamma > 0.0) || !(in.r0 > 0.0))
      throw io::ParseError(t.where(t.line_of_row(r)) + ": omega, density, gamma and r0 must be > 0");
    rows.push_back(in);
  }
  return rows;
}

inline io::json loglog_to_json(const LogLogFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"slope_stderr", f.slope_stderr},
          {"intercept_stderr", f.intercept_stderr},
          {"rms_scatter", f.rms_scatter}};
}

struct CollapseOptions {
  std::string input;
  std::string family = "dipole";
  std::string channels = default_channel_file();
};

inline int cmd_collapse(const CollapseOptions& o, const GlobalOptions& g, std::ostream& out,
                        std::ostream& err) {
  try {
    const auto fam = family_from_string(o.family);
    const auto rows = load_collapse_input(o.input);
    const double b3 = beta3(load_channels(o.channels));
    const double b6 = beta6(defaults::c6, defaults::gamma0);
    const auto table = collapse(rows, b3, b6, defaults::gamma0, fam);

    io::CsvWriter csv({"x", "y", "omega_MHz", "f", "family", "quantity"});
    for (const auto& r : table.rows)
      csv.row({io::fmt_double(to_mhz(r.x_width)), io::fmt_double(to_mhz(r.y_width)),
               io::fmt_double(to_mhz(r.omega)), io::fmt_double(r.fraction_f), o.family, "width"});
    for (const auto& r : table.rows)
      csv.row({io::fmt_double(to_mhz(r.x_rate)), io::fmt_double(to_mhz(r.y_rate)),
               io::fmt_double(to_mhz(r.omega)), io::fmt_double(r.fraction_f), o.family, "rate"});
    io::json summary = {{"family", o.family},
                        {"rows", table.rows.size()},
                        {"beta3_um3", b3},
                        {"beta6_um3", b6},
                        {"width", loglog_to_json(table.width)},
                        {"rate", loglog_to_json(table.rate)}};

    std::filesystem::create_directories(g.out_dir);
    const std::filesystem::path dir(g.out_dir);
    io::write_file(dir / ("collapse_" + o.family + ".csv"), csv.str());
    io::write_file(dir / ("collapse_" + o.family + "_summary.json"), summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "collapse: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace rydberg::cli
