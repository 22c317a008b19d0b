#pragma once
// Lineshape and lifetime fitting plus the scaling-collapse transform.
//
// Both fitters share one damped Gauss-Newton (Levenberg-Marquardt) core that
// works on any model exposing its parameter count, value and analytic
// gradient. Only steps that do not increase the weighted sum of squares are
// accepted.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydberg/kinetics.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

struct SpectrumPoint {
  double delta = 0.0;  // rad/us
  double signal = 0.0;
  std::optional<double> sigma;
};

struct Spectrum {
  std::vector<SpectrumPoint> points;
  OperatingPoint meta;

  void validate() const {
    if (points.size() < 4) throw std::domain_error("spectrum needs at least 4 points");
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(), [](auto& a, auto& b) {
      return a.delta < b.delta;
    });
    if (lo->delta == hi->delta) throw std::domain_error("spectrum detunings are all equal");
    for (const auto& p : points) {
      if (!std::isfinite(p.delta) || !std::isfinite(p.signal))
        throw std::domain_error("spectrum contains non-finite values");
      if (p.sigma && !(*p.sigma > 0.0)) throw std::domain_error("spectrum sigma must be > 0");
    }
  }
};

struct TracePoint {
  double t = 0.0;  // us
  double counts = 0.0;
};

struct DecayTrace {
  std::vector<TracePoint> points;

  void validate() const {
    if (points.size() < 4) throw std::domain_error("decay trace needs at least 4 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i].t) || !std::isfinite(points[i].counts))
        throw std::domain_error("decay trace contains non-finite values");
      if (points[i].counts < 0.0) throw std::domain_error("decay trace counts must be >= 0");
      if (i > 0 && !(points[i].t > points[i - 1].t))
        throw std::domain_error("decay trace times must be strictly increasing");
    }
  }
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> stderrs;
  double chi2_reduced = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Weighted sum of squares after each accepted step, starting with the initial guess.
  std::vector<double> objective_history;
  std::string message;

  [[nodiscard]] double value(std::string_view name) const { return params.at(index(name)); }
  [[nodiscard]] double error(std::string_view name) const { return stderrs.at(index(name)); }

 private:
  [[nodiscard]] std::size_t index(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::out_of_range("FitResult: no parameter named " + std::string(name));
  }
};

struct FitOptions {
  int max_iterations = 200;
  double rel_tol = 1e-10;  // on ||step|| / ||params||
  double lambda0 = 1e-3;
};

/// a / (1 + 4 (x - x0)^2 / gamma^2) + c, parameters (a, gamma, x0, c).
struct LorentzianModel {
  static constexpr int n_params = 4;
  static constexpr std::array<const char*, 4> names{"amplitude", "gamma", "center", "offset"};
  using Params = Eigen::Matrix<double, n_params, 1>;

  static double value(double x, const Params& p) {
    const double u = 2.0 * (x - p[2]) / p[1];
    return p[0] / (1.0 + u * u) + p[3];
  }
  static Params gradient(double x, const Params& p) {
    const double d = x - p[2];
    const double g = p[1];
    const double denom = 1.0 + 4.0 * d * d / (g * g);
    const double inv = 1.0 / denom;
    const double inv2 = inv * inv;
    Params out;
    out[0] = inv;
    out[1] = p[0] * inv2 * 8.0 * d * d / (g * g * g);
    out[2] = p[0] * inv2 * 8.0 * d / (g * g);
    out[3] = 1.0;
    return out;
  }
};

/// a exp(-t / tau) + c, parameters (a, tau, c).
struct ExpDecayModel {
  static constexpr int n_params = 3;
  static constexpr std::array<const char*, 3> names{"amplitude", "tau", "offset"};
  using Params = Eigen::Matrix<double, n_params, 1>;

  static double value(double t, const Params& p) { return p[0] * std::exp(-t / p[1]) + p[2]; }
  static Params gradient(double t, const Params& p) {
    const double e = std::exp(-t / p[1]);
    Params out;
    out[0] = e;
    out[1] = p[0] * e * t / (p[1] * p[1]);
    out[2] = 1.0;
    return out;
  }
};

namespace detail {

template <class Model>
double weighted_ssq(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                    const typename Model::Params& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - Model::value(x[i], p);
    s += w[i] * r * r;
  }
  return s;
}

}  // namespace detail

/// Damped Gauss-Newton minimisation of sum w_i (y_i - model(x_i))^2.
template <class Model>
FitResult gauss_newton_fit(std::span<const double> x, std::span<const double> y,
                           std::span<const double> w, typename Model::Params p,
                           const FitOptions& opts = {}) {
  constexpr int np = Model::n_params;
  using Params = typename Model::Params;
  using Normal = Eigen::Matrix<double, np, np>;
  const std::size_t n = x.size();

  FitResult res;
  res.names.assign(Model::names.begin(), Model::names.end());

  auto build = [&](const Params& q, Normal& a, Params& g) {
    a.setZero();
    g.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const Params j = Model::gradient(x[i], q);
      const double r = y[i] - Model::value(x[i], q);
      a.noalias() += w[i] * j * j.transpose();
      g += w[i] * r * j;
    }
  };

  double s = detail::weighted_ssq<Model>(x, y, w, p);
  if (!std::isfinite(s)) throw std::domain_error("gauss_newton_fit: initial guess gives non-finite residuals");
  res.objective_history.push_back(s);
  double lambda = opts.lambda0;
  Normal a;
  Params g;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    res.iterations = it;
    build(p, a, g);
    if (s == 0.0) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    Params step = Params::Zero();
    while (lambda < 1e16) {
      Normal damped = a;
      for (int k = 0; k < np; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-300);
      step = damped.ldlt().solve(g);
      const Params trial = p + step;
      const double s_trial = detail::weighted_ssq<Model>(x, y, w, trial);
      if (std::isfinite(s_trial) && s_trial <= s) {
        p = trial;
        s = s_trial;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left: either at a minimum limited by rounding or stuck.
      const double gnorm = g.norm();
      const double scale = std::sqrt(a.diagonal().sum() * s);
      res.converged = gnorm <= 1e-6 * scale;
      res.message = res.converged ? "stationary point" : "damping exhausted";
      break;
    }
    res.objective_history.push_back(s);
    if (step.norm() <= opts.rel_tol * p.norm()) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged && res.message.empty()) res.message = "iteration limit reached";

  build(p, a, g);
  const auto dof = static_cast<double>(n) - np;
  res.chi2_reduced = dof > 0 ? s / dof : 0.0;
  const Normal cov = a.completeOrthogonalDecomposition().pseudoInverse() * res.chi2_reduced;
  for (int k = 0; k < np; ++k) {
    res.params.push_back(p[k]);
    res.stderrs.push_back(std::sqrt(std::max(cov(k, k), 0.0)));
  }
  return res;
}

namespace detail {
inline std::vector<double> weights_from_sigma(const std::vector<std::optional<double>>& sigma) {
  const auto with = std::count_if(sigma.begin(), sigma.end(), [](auto& s) { return s.has_value(); });
  std::vector<double> w(sigma.size(), 1.0);
  if (with == 0) return w;
  if (static_cast<std::size_t>(with) != sigma.size())
    throw std::domain_error("uncertainties must be given for every point or none");
  for (std::size_t i = 0; i < sigma.size(); ++i) w[i] = 1.0 / (*sigma[i] * *sigma[i]);
  return w;
}
}  // namespace detail

/// Starting point for the Lorentzian fit from peak height, location and
/// half-height crossings.
inline LorentzianModel::Params lorentzian_initial_guess(std::span<const double> x, std::span<const double> y) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> xs, ys;
  for (auto i : order) {
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
  if (!(hi - lo > 1e-12 * scale)) throw std::invalid_argument("fit_lorentzian: flat spectrum");

  const auto peak = static_cast<std::size_t>(hi_it - ys.begin());
  const double half = lo + 0.5 * (hi - lo);
  std::optional<double> left, right;
  for (std::size_t i = peak; i-- > 0;) {
    if (ys[i] <= half) {
      left = xs[i] + (half - ys[i]) * (xs[i + 1] - xs[i]) / (ys[i + 1] - ys[i]);
      break;
    }
  }
  for (std::size_t i = peak + 1; i < ys.size(); ++i) {
    if (ys[i] <= half) {
      right = xs[i - 1] + (ys[i - 1] - half) * (xs[i] - xs[i - 1]) / (ys[i - 1] - ys[i]);
      break;
    }
  }
  double fwhm;
  if (left && right) fwhm = *right - *left;
  else if (left) fwhm = 2.0 * (xs[peak] - *left);
  else if (right) fwhm = 2.0 * (*right - xs[peak]);
  else fwhm = 0.25 * (xs.back() - xs.front());
  if (!(fwhm > 0.0)) fwhm = 0.25 * (xs.back() - xs.front());

  LorentzianModel::Params p;
  p << hi - lo, fwhm, xs[peak], lo;
  return p;
}

/// Fits a / (1 + 4 (delta - delta0)^2 / gamma^2) + c. Throws on flat data.
inline FitResult fit_lorentzian(const Spectrum& spec, const FitOptions& opts = {}) {
  spec.validate();
  std::vector<double> x, y;
  std::vector<std::optional<double>> sig;
  for (const auto& pt : spec.points) {
    x.push_back(pt.delta);
    y.push_back(pt.signal);
    sig.push_back(pt.sigma);
  }
  const auto w = detail::weights_from_sigma(sig);
  auto res = gauss_newton_fit<LorentzianModel>(x, y, w, lorentzian_initial_guess(x, y), opts);
  res.params[1] = std::abs(res.params[1]);  // the model is even in gamma
  if (!(res.params[1] > 0.0) || !std::isfinite(res.params[1])) {
    res.converged = false;
    res.message = "non-positive width";
  }
  return res;
}

/// Fits a exp(-t / tau) + c. Data that do not decay yield converged = false.
inline FitResult fit_exp_decay(const DecayTrace& trace, const FitOptions& opts = {}) {
  trace.validate();
  std::vector<double> t, y;
  for (const auto& pt : trace.points) {
    t.push_back(pt.t);
    y.push_back(pt.counts);
  }
  const std::size_t n = t.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  const double c0 = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(tail), y.end(), 0.0) /
                    static_cast<double>(tail);
  const double a0 = y.front() - c0;
  const double span = t.back() - t.front();

  FitResult nonconv;
  nonconv.names.assign(ExpDecayModel::names.begin(), ExpDecayModel::names.end());
  nonconv.params = {a0, std::numeric_limits<double>::infinity(), c0};
  nonconv.stderrs.assign(3, std::numeric_limits<double>::quiet_NaN());
  const double yscale = std::max(std::abs(y.front()), std::abs(c0));
  if (!(a0 > 1e-12 * std::max(yscale, 1e-300))) {
    nonconv.message = "trace does not decay";
    return nonconv;
  }

  // first 1/e crossing relative to the initial point
  double tau0 = 0.5 * span;
  const double target = c0 + a0 / std::exp(1.0);
  for (std::size_t i = 1; i < n; ++i) {
    if (y[i] <= target) {
      const double frac = (y[i - 1] - target) / (y[i - 1] - y[i]);
      tau0 = (t[i - 1] + frac * (t[i] - t[i - 1])) - t.front();
      break;
    }
  }
  if (!(tau0 > 0.0)) tau0 = 0.5 * span;
  ExpDecayModel::Params p0;
  // amplitude referenced to t = 0, not to the first sample
  p0 << a0 * std::exp(t.front() / tau0), tau0, c0;

  const std::vector<double> w(n, 1.0);
  auto res = gauss_newton_fit<ExpDecayModel>(t, y, w, p0, opts);
  const double tau = res.params[1];
  if (!(tau > 0.0) || !std::isfinite(tau) || tau > 1e3 * span || !(res.params[0] > 0.0)) {
    res.converged = false;
    res.message = "trace does not decay";
  }
  return res;
}

/// Measured width in units of the natural linewidth.
inline double width_ratio(double gamma_fit, double gamma0) {
  if (!(gamma0 > 0.0)) throw std::domain_error("width_ratio: gamma0 must be > 0");
  return gamma_fit / gamma0;
}

// ---------------------------------------------------------------------------
// Scaling collapse

enum class Family { dipole, vdw };

inline std::string to_string(Family f) { return f == Family::dipole ? "dipole" : "vdw"; }
inline Family family_from_string(std::string_view s) {
  if (s == "dipole") return Family::dipole;
  if (s == "vdw") return Family::vdw;
  throw std::invalid_argument("unknown collapse family '" + std::string(s) + "'");
}

struct CollapseInput {
  OperatingPoint op;
  double gamma = 0.0;  // fitted width, rad/us
  double r0 = 0.0;     // fitted peak rate, rad/us
};

struct CollapseRow {
  double x_width = 0.0;  // predicted-width coordinate
  double y_width = 0.0;  // measured gamma
  double x_rate = 0.0;   // predicted-rate coordinate
  double y_rate = 0.0;   // measured r0
  double omega = 0.0;
  double fraction_f = 0.0;
};

/// ln y = slope ln x + intercept by ordinary least squares.
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double rms_scatter = 0.0;  // RMS of ln residuals
};

struct CollapseTable {
  Family family = Family::dipole;
  std::vector<CollapseRow> rows;
  LogLogFit width;
  LogLogFit rate;
};

/// Collapse coordinates of a single operating point.
inline std::pair<double, double> collapse_coordinates(const OperatingPoint& op, Family family,
                                                      double beta3, double beta6, double gamma0) {
  const auto pred = family == Family::dipole ? predict_dipole(op, beta3) : predict_vdw(op, beta6, gamma0);
  return {pred.gamma, pred.r0};
}

/// Recovers (omega, rho_g) from a row's two collapse coordinates.
inline std::pair<double, double> invert_collapse(double x_width, double x_rate, Family family,
                                                 double beta3, double beta6, double gamma0) {
  if (!(x_width > 0.0) || !(x_rate > 0.0)) throw std::domain_error("invert_collapse: coordinates must be > 0");
  // both families satisfy x_width * x_rate = omega^2
  const double omega = std::sqrt(x_width * x_rate);
  const double ratio = x_width / x_rate;
  if (family == Family::dipole) return {omega, ratio / beta3};
  // ratio = (omega^2 / gamma0^2)^(1/3) (rho beta6)^(4/3)
  const double rb = std::pow(ratio / std::cbrt(omega * omega / (gamma0 * gamma0)), 0.75);
  return {omega, rb / beta6};
}

inline LogLogFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) throw std::domain_error("loglog_fit: need at least 2 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("loglog_fit: values must be > 0");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("loglog_fit: all x values are equal");
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ssr += r * r;
  }
  f.rms_scatter = std::sqrt(ssr / static_cast<double>(n));
  if (n > 2) {
    const double s2 = ssr / static_cast<double>(n - 2);
    f.slope_stderr = std::sqrt(s2 / sxx);
    f.intercept_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  }
  return f;
}

inline CollapseTable collapse(std::span<const CollapseInput> points, double beta3, double beta6,
                              double gamma0, Family family) {
  if (points.size() < 2) throw std::domain_error("collapse: need at least 2 rows");
  CollapseTable table;
  table.family = family;
  std::vector<double> xw, yw, xr, yr;
  for (const auto& pt : points) {
    if (!(pt.gamma > 0.0) || !(pt.r0 > 0.0))
      throw std::domain_error("collapse: fitted gamma and r0 must be > 0");
    const auto [xg, xrate] = collapse_coordinates(pt.op, family, beta3, beta6, gamma0);
    table.rows.push_back({xg, pt.gamma, xrate, pt.r0, pt.op.omega, pt.op.fraction_f});
    xw.push_back(xg);
    yw.push_back(pt.gamma);
    xr.push_back(xrate);
    yr.push_back(pt.r0);
  }
  table.width = loglog_fit(xw, yw);
  table.rate = loglog_fit(xr, yr);
  return table;
}

}  // namespace rydberg
