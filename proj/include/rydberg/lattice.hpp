#pragma once
// Inhomogeneous product-state (Gutzwiller) mean-field evolution of a lattice
// of three-level atoms: ground g, driven Rydberg s and contaminant p.
//
// Each site carries its own 3x3 density matrix. Sites talk to each other only
// through the s-p coherence <sigma^ps>_j = rho_j(s, p), which enters the local
// Hamiltonian of site i as an effective s-p drive sum_j V_ij <sigma^ps>_j.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydberg/units.hpp"

namespace rydberg {

using cplx = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;

enum Level : int { kG = 0, kS = 1, kP = 2 };

struct SiteState {
  Matrix3c rho = Matrix3c::Zero();

  static SiteState pure(Level level) {
    SiteState st;
    st.rho(level, level) = 1.0;
    return st;
  }

  [[nodiscard]] cplx ps_coherence() const { return rho(kS, kP); }
  [[nodiscard]] double trace() const { return rho.trace().real(); }
  [[nodiscard]] double hermiticity_defect() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  }
  [[nodiscard]] double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  [[nodiscard]] std::array<double, 3> populations() const {
    return {rho(kG, kG).real(), rho(kS, kS).real(), rho(kP, kP).real()};
  }
};

using LatticeState = std::vector<SiteState>;

struct LatticeConfig {
  std::array<int, 3> dims{1, 1, 1};
  double spacing = defaults::lattice_spacing;  // um
  Eigen::Vector3d quantization_axis = Eigen::Vector3d::UnitZ();
  double cutoff_radius = 5.0 * defaults::lattice_spacing;  // um
  // Only open boundaries are modelled.

  void validate() const {
    for (int d : dims)
      if (d < 1) throw std::domain_error("lattice dims must be >= 1");
    if (!(spacing > 0.0)) throw std::domain_error("lattice spacing must be > 0");
    if (!(cutoff_radius >= spacing)) throw std::domain_error("cutoff radius must be >= spacing");
    if (!(quantization_axis.norm() > 0.0)) throw std::domain_error("quantization axis must be nonzero");
  }

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  /// Site i sits at spacing * (ix, iy, iz), x fastest.
  [[nodiscard]] Eigen::Vector3d position(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return spacing * Eigen::Vector3d(static_cast<double>(i % nx),
                                     static_cast<double>((i / nx) % ny),
                                     static_cast<double>(i / (nx * ny)));
  }
};

struct Rates {
  double gamma_s = 0.0;  // s -> g
  double gamma_p = 0.0;  // p -> g
  double gamma_r = 0.0;  // s -> p

  void validate() const {
    if (gamma_s < 0.0 || gamma_p < 0.0 || gamma_r < 0.0)
      throw std::domain_error("decay rates must be >= 0");
  }
  [[nodiscard]] double total() const { return gamma_s + gamma_p + gamma_r; }
};

/// V = c3 / r^3 (1 - 3 cos^2 theta), theta measured from `axis`.
inline double dipole_coupling(const Eigen::Vector3d& r_vec, double c3, const Eigen::Vector3d& axis) {
  const double r2 = r_vec.squaredNorm();
  if (!(r2 > 0.0)) throw std::domain_error("dipole_coupling: zero separation");
  const double proj = r_vec.dot(axis.normalized());
  const double cos2 = proj * proj / r2;
  return c3 / (r2 * std::sqrt(r2)) * (1.0 - 3.0 * cos2);
}

/// Sparse symmetric table of pair couplings, stored row by row.
class CouplingTable {
 public:
  struct Entry {
    std::size_t site;
    double v;  // rad/us
  };

  CouplingTable() = default;

  [[nodiscard]] std::size_t sites() const { return row_start_.empty() ? 0 : row_start_.size() - 1; }
  [[nodiscard]] std::span<const Entry> row(std::size_t i) const {
    return {entries_.data() + row_start_.at(i), entries_.data() + row_start_.at(i + 1)};
  }
  /// Number of ordered pairs (i, j) within the cutoff.
  [[nodiscard]] std::size_t ordered_pairs() const { return entries_.size(); }
  [[nodiscard]] std::size_t unordered_pairs() const { return entries_.size() / 2; }
  [[nodiscard]] double max_abs_coupling() const { return max_abs_; }
  /// Largest per-site sum of |V_ij| over pairs beyond the cutoff.
  [[nodiscard]] double truncation_error() const { return truncation_error_; }

  /// V_ij, or nullopt when the pair is not in the table.
  [[nodiscard]] std::optional<double> find(std::size_t i, std::size_t j) const {
    for (const auto& e : row(i))
      if (e.site == j) return e.v;
    return std::nullopt;
  }

 private:
  friend CouplingTable build_coupling_table(const LatticeConfig&, double);
  std::vector<std::size_t> row_start_;
  std::vector<Entry> entries_;
  double max_abs_ = 0.0;
  double truncation_error_ = 0.0;
};

inline CouplingTable build_coupling_table(const LatticeConfig& lattice, double c3) {
  lattice.validate();
  const std::size_t n = lattice.size();
  // small slack so that sites exactly at the cutoff are kept
  const double cutoff2 = lattice.cutoff_radius * lattice.cutoff_radius * (1.0 + 1e-12);
  CouplingTable t;
  t.row_start_.reserve(n + 1);
  t.row_start_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ri = lattice.position(i);
    double beyond = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Eigen::Vector3d rij = lattice.position(j) - ri;
      const double v = dipole_coupling(rij, c3, lattice.quantization_axis);
      if (rij.squaredNorm() <= cutoff2) {
        t.entries_.push_back({j, v});
        t.max_abs_ = std::max(t.max_abs_, std::abs(v));
      } else {
        beyond += std::abs(v);
      }
    }
    t.truncation_error_ = std::max(t.truncation_error_, beyond);
    t.row_start_.push_back(t.entries_.size());
  }
  return t;
}

/// Local Hamiltonian of `site` given the s-p coherence of every site
/// (indexed by site number).
inline Matrix3c effective_hamiltonian(std::size_t site, const DriveParams& drive,
                                      const CouplingTable& table, std::span<const cplx> coherences) {
  cplx field = 0.0;
  for (const auto& e : table.row(site)) {
    if (e.site >= coherences.size())
      throw std::out_of_range("effective_hamiltonian: no coherence for neighbor " +
                              std::to_string(e.site));
    field += e.v * coherences[e.site];
  }
  Matrix3c h = Matrix3c::Zero();
  h(kS, kS) = -drive.delta;
  h(kS, kG) = h(kG, kS) = 0.5 * drive.omega;
  h(kS, kP) = field;
  h(kP, kS) = std::conj(field);
  return h;
}

/// Same as above with coherences given sparsely; every neighbor must be present.
inline Matrix3c effective_hamiltonian(std::size_t site, const DriveParams& drive,
                                      const CouplingTable& table,
                                      const std::map<std::size_t, cplx>& neighbor_coherences) {
  cplx field = 0.0;
  for (const auto& e : table.row(site)) {
    auto it = neighbor_coherences.find(e.site);
    if (it == neighbor_coherences.end())
      throw std::out_of_range("effective_hamiltonian: no coherence for neighbor " +
                              std::to_string(e.site));
    field += e.v * it->second;
  }
  Matrix3c h = Matrix3c::Zero();
  h(kS, kS) = -drive.delta;
  h(kS, kG) = h(kG, kS) = 0.5 * drive.omega;
  h(kS, kP) = field;
  h(kP, kS) = std::conj(field);
  return h;
}

namespace detail {
// rate * (J rho J^dag - 1/2 {J^dag J, rho}) for J = |to><from|
inline void add_dissipator(Matrix3c& out, const Matrix3c& rho, int to, int from, double rate) {
  if (rate == 0.0) return;
  out(to, to) += rate * rho(from, from);
  const double half = 0.5 * rate;
  for (int k = 0; k < 3; ++k) {
    out(from, k) -= half * rho(from, k);
    out(k, from) -= half * rho(k, from);
  }
}
}  // namespace detail

/// -i[H, rho] + Gs D[sigma^gs] + Gp D[sigma^gp] + Gr D[sigma^ps].
inline Matrix3c lindblad_rhs(const Matrix3c& rho, const Matrix3c& h, const Rates& rates) {
  Matrix3c out = cplx(0.0, -1.0) * (h * rho - rho * h);
  detail::add_dissipator(out, rho, kG, kS, rates.gamma_s);
  detail::add_dissipator(out, rho, kG, kP, rates.gamma_p);
  detail::add_dissipator(out, rho, kP, kS, rates.gamma_r);
  return out;
}

inline Matrix3c lindblad_rhs(const SiteState& st, const Matrix3c& h, const Rates& rates) {
  return lindblad_rhs(st.rho, h, rates);
}

/// Thrown when a step violates trace conservation beyond tolerance.
class StepRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kTraceRejectThreshold = 1e-6;

namespace detail {

inline void gather_coherences(const std::vector<Matrix3c>& in, std::vector<cplx>& coh) {
  coh.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) coh[i] = in[i](kS, kP);
}

// out[i] = rhs of site i, all sites reading coherences of the same input.
inline void lattice_rhs(const std::vector<Matrix3c>& in, std::vector<Matrix3c>& out,
                        const DriveParams& drive, const CouplingTable& table, const Rates& rates,
                        int threads, std::vector<cplx>& coh) {
  gather_coherences(in, coh);
  out.resize(in.size());
  const auto n = static_cast<std::int64_t>(in.size());
  const std::span<const cplx> cs(coh);
#pragma omp parallel for num_threads(threads) if (threads > 1) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto site = static_cast<std::size_t>(i);
    out[site] = lindblad_rhs(in[site], effective_hamiltonian(site, drive, table, cs), rates);
  }
}

}  // namespace detail

/// Classical RK4 step of the whole lattice. Every stage evaluates all sites
/// from the same stage input, so the result does not depend on `threads`.
inline LatticeState rk4_step(const LatticeState& state, double dt, const DriveParams& drive,
                             const CouplingTable& table, const Rates& rates, int threads = 1) {
  if (!(dt > 0.0)) throw std::domain_error("rk4_step: dt must be > 0");
  if (table.sites() != state.size())
    throw std::invalid_argument("rk4_step: coupling table does not match lattice size");
  const std::size_t n = state.size();
  std::vector<Matrix3c> y0(n), y(n), k(n), acc(n);
  std::vector<cplx> coh;
  for (std::size_t i = 0; i < n; ++i) y0[i] = state[i].rho;

  detail::lattice_rhs(y0, k, drive, table, rates, threads, coh);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = k[i];
    y[i] = y0[i] + (0.5 * dt) * k[i];
  }
  detail::lattice_rhs(y, k, drive, table, rates, threads, coh);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += 2.0 * k[i];
    y[i] = y0[i] + (0.5 * dt) * k[i];
  }
  detail::lattice_rhs(y, k, drive, table, rates, threads, coh);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += 2.0 * k[i];
    y[i] = y0[i] + dt * k[i];
  }
  detail::lattice_rhs(y, k, drive, table, rates, threads, coh);

  LatticeState next(n);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += k[i];
    next[i].rho = y0[i] + (dt / 6.0) * acc[i];
    const double drift = std::abs(next[i].rho.trace().real() - y0[i].trace().real());
    if (!(drift <= kTraceRejectThreshold))
      throw StepRejected("rk4_step: trace drift " + std::to_string(drift) + " at site " +
                         std::to_string(i) + " with dt = " + std::to_string(dt) +
                         " us; reduce the time step");
  }
  return next;
}

/// Random density matrices A A^dag / tr(A A^dag) with complex Gaussian A.
/// Sites are filled in index order from one generator seeded with `seed`.
inline LatticeState random_init(std::size_t n_sites, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatticeState out(n_sites);
  for (auto& site : out) {
    Matrix3c a;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        const double re = normal(gen);
        const double im = normal(gen);
        a(r, c) = cplx(re, im);
      }
    Matrix3c rho = a * a.adjoint();
    rho /= rho.trace().real();
    // exact Hermitian symmetry
    site.rho = 0.5 * (rho + rho.adjoint());
  }
  return out;
}

inline LatticeState random_init(const LatticeConfig& lattice, std::uint64_t seed) {
  lattice.validate();
  return random_init(lattice.size(), seed);
}

/// Largest rate in the problem sets the RK4 step: 0.01 / max(|delta|, Omega, V, Gamma).
inline double default_time_step(const DriveParams& drive, const CouplingTable& table,
                                const Rates& rates) {
  const double scale = std::max({std::abs(drive.delta), std::abs(drive.omega),
                                 table.max_abs_coupling(), rates.total()});
  if (!(scale > 0.0)) throw std::domain_error("default_time_step: all rates are zero");
  return 0.01 / scale;
}

/// Lattice averages written at each convergence check.
struct EvolutionSample {
  double t = 0.0;  // us
  std::array<double, 3> populations{};
  double max_ps_coherence = 0.0;
  double residual = 0.0;  // 1/us
};

struct SteadyStateOptions {
  double tol = 1e-9;       // 1/us, on the max site RHS Frobenius norm
  double t_max = 1000.0;   // us
  double dt = 0.0;         // us; 0 selects default_time_step
  int check_every = 50;    // steps between residual checks
  int required_checks = 10;
  int threads = 1;
  int max_rejections = 4;  // dt is halved on each rejected step
  std::function<void(const EvolutionSample&)> observer;
};

struct SteadyStateReport {
  double max_ps_coherence = 0.0;
  std::array<double, 3> populations{};  // lattice averages of (g, s, p)
  std::uint64_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
  double t = 0.0;
  double dt = 0.0;
  // conservation diagnostics over all checked times
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;  // at the final state
  LatticeState final_state;
};

namespace detail {
inline double max_residual(const LatticeState& state, const DriveParams& drive,
                           const CouplingTable& table, const Rates& rates) {
  std::vector<cplx> coh(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) coh[i] = state[i].ps_coherence();
  double worst = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto h = effective_hamiltonian(i, drive, table, coh);
    worst = std::max(worst, lindblad_rhs(state[i].rho, h, rates).norm());
  }
  return worst;
}

inline EvolutionSample sample(double t, const LatticeState& state, double residual) {
  EvolutionSample s;
  s.t = t;
  s.residual = residual;
  for (const auto& site : state) {
    const auto p = site.populations();
    for (int k = 0; k < 3; ++k) s.populations[k] += p[k];
    s.max_ps_coherence = std::max(s.max_ps_coherence, std::abs(site.ps_coherence()));
  }
  for (auto& p : s.populations) p /= static_cast<double>(std::max<std::size_t>(state.size(), 1));
  return s;
}
}  // namespace detail

/// Integrates until the residual stays below tol for `required_checks`
/// consecutive checks, or until t_max. Non-convergence is reported, not thrown.
inline SteadyStateReport evolve_to_steady_state(const LatticeState& init, const DriveParams& drive,
                                                const CouplingTable& table, const Rates& rates,
                                                const SteadyStateOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw std::domain_error("evolve_to_steady_state: tol must be > 0");
  if (opts.check_every < 1 || opts.required_checks < 1)
    throw std::domain_error("evolve_to_steady_state: check counts must be >= 1");
  rates.validate();

  SteadyStateReport rep;
  rep.dt = opts.dt > 0.0 ? opts.dt : default_time_step(drive, table, rates);
  LatticeState state = init;
  std::uint64_t step = 0;
  double t = 0.0;
  int below = 0;
  int rejections = 0;

  while (true) {
    if (step % static_cast<std::uint64_t>(opts.check_every) == 0) {
      const double res = detail::max_residual(state, drive, table, rates);
      for (const auto& site : state) {
        rep.max_trace_drift = std::max(rep.max_trace_drift, std::abs(site.trace() - 1.0));
        rep.max_hermiticity_defect = std::max(rep.max_hermiticity_defect, site.hermiticity_defect());
      }
      if (opts.observer) opts.observer(detail::sample(t, state, res));
      rep.residual = res;
      below = res < opts.tol ? below + 1 : 0;
      if (below >= opts.required_checks) {
        rep.converged = true;
        break;
      }
      if (t >= opts.t_max) break;
    }
    try {
      state = rk4_step(state, rep.dt, drive, table, rates, opts.threads);
    } catch (const StepRejected& e) {
      if (++rejections > opts.max_rejections)
        throw StepRejected(std::string(e.what()) + " (after " + std::to_string(rejections - 1) +
                           " step-size reductions at t = " + std::to_string(t) + " us)");
      rep.dt *= 0.5;
      continue;
    }
    t += rep.dt;
    ++step;
  }

  rep.iterations = step;
  rep.t = t;
  const auto last = detail::sample(rep.t, state, rep.residual);
  rep.populations = last.populations;
  rep.max_ps_coherence = last.max_ps_coherence;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& site : state) rep.min_eigenvalue = std::min(rep.min_eigenvalue, site.min_eigenvalue());
  rep.final_state = std::move(state);
  return rep;
}

}  // namespace rydberg
