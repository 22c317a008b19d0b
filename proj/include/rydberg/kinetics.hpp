#pragma once
// Closed-form broadening and kinetics relations.
//
// Widths are full widths at half maximum in rad/us; R0 is carried in the same
// angular units as Omega, so Gamma * R0 = Omega^2 holds without 2pi factors.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydberg/units.hpp"

namespace rydberg {

struct OperatingPoint {
  double omega = 0.0;       // rad/us
  double delta = 0.0;       // rad/us
  double rho_g = 0.0;       // um^-3
  double fraction_f = 0.0;  // participating fraction

  static OperatingPoint from_fraction(double omega, double delta, double f,
                                      double full_density = defaults::full_density) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::domain_error("fraction f must lie in [0, 1]");
    return {omega, delta, f * full_density, f};
  }

  void validate() const {
    if (!(rho_g >= 0.0)) throw std::domain_error("rho_g must be >= 0");
    if (!(fraction_f >= 0.0 && fraction_f <= 1.0))
      throw std::domain_error("fraction f must lie in [0, 1]");
  }
};

/// Predicted width and peak rate for one broadening family.
struct BroadeningPrediction {
  double gamma = 0.0;  // rad/us
  double r0 = 0.0;     // rad/us
};

struct SteadyStateDensities {
  double rho_s = 0.0;
  std::vector<double> rho_np;  // one per channel, same order as AtomicSystem::channels
};

/// Lorentzian excitation rate R0 / (1 + 4 delta^2 / gamma^2).
inline double lorentzian_rate(double delta, double r0, double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("lorentzian_rate: gamma must be > 0");
  const double x = 2.0 * delta / gamma;
  return r0 / (1.0 + x * x);
}

/// Resonant dipole broadening: Gamma = Omega sqrt(rho_g beta3), R0 = Omega / sqrt(rho_g beta3).
inline BroadeningPrediction predict_dipole(const OperatingPoint& op, double beta3) {
  const double volume = op.rho_g * beta3;
  if (!(volume > 0.0))
    throw std::domain_error("predict_dipole: rho_g * beta3 must be > 0 (non-interacting limit)");
  const double root = std::sqrt(volume);
  return {op.omega * root, op.omega / root};
}

/// van der Waals broadening from Gamma = C6 rho_s^2 closed with R0 = Omega^2 / Gamma.
inline BroadeningPrediction predict_vdw(const OperatingPoint& op, double beta6, double gamma0) {
  const double volume = op.rho_g * beta6;
  if (!(volume > 0.0)) throw std::domain_error("predict_vdw: rho_g * beta6 must be > 0");
  if (!(gamma0 > 0.0)) throw std::domain_error("predict_vdw: gamma0 must be > 0");
  const double w2 = op.omega * op.omega;
  const double v23 = std::cbrt(volume * volume);
  return {std::cbrt(w2 * w2 / gamma0) * v23, std::cbrt(w2 * gamma0) / v23};
}

inline SteadyStateDensities steady_state_densities(const OperatingPoint& op, double r0,
                                                   const AtomicSystem& system) {
  if (r0 < 0.0) throw std::domain_error("steady_state_densities: r0 must be >= 0");
  if (!(system.gamma0 > 0.0)) throw std::domain_error("steady_state_densities: gamma0 must be > 0");
  SteadyStateDensities out;
  out.rho_s = op.rho_g * r0 / system.gamma0;
  out.rho_np.reserve(system.channels.size());
  for (const auto& ch : system.channels) {
    ch.validate();
    out.rho_np.push_back(op.rho_g * r0 * ch.branching / ch.gamma_np);
  }
  return out;
}

/// Receives a message when a far-detuned formula is used outside its regime.
using WarningSink = std::function<void(const std::string&)>;

/// Single-atom off-resonant scattering time 4 delta^2 / (gamma0 Omega^2), in us.
inline double scattering_time(double delta, double omega, double gamma0,
                              const WarningSink& warn = {}) {
  if (!(omega > 0.0)) throw std::domain_error("scattering_time: omega must be > 0");
  if (!(gamma0 > 0.0)) throw std::domain_error("scattering_time: gamma0 must be > 0");
  if (warn && std::abs(delta) < 10.0 * std::max(omega, gamma0))
    warn("scattering_time: |delta| < 10 max(omega, gamma0); far-detuned formula is inaccurate");
  return 4.0 * delta * delta / (gamma0 * omega * omega);
}

/// Expected wait before the first contaminant atom appears among n0 atoms.
inline double first_contaminant_time(double tau_s, double b, double n0) {
  if (!(b > 0.0)) throw std::domain_error("first_contaminant_time: branching must be > 0");
  if (!(n0 >= 1.0)) throw std::domain_error("first_contaminant_time: need at least one atom");
  return tau_s / (b * n0);
}

/// Contaminant density above which the dipole interaction with a contaminant
/// exceeds the dressed interaction, Omega^2 / (|delta| C3).
inline double dressing_threshold(double omega, double delta, double c3) {
  if (delta == 0.0) throw std::domain_error("dressing_threshold: zero detuning");
  if (!(c3 > 0.0)) throw std::domain_error("dressing_threshold: c3 must be > 0");
  return omega * omega / (std::abs(delta) * c3);
}

inline double threshold_n_scaling(double threshold_ref, double n_star_ref, double n_star_new) {
  if (!(n_star_ref > 0.0) || !(n_star_new > 0.0))
    throw std::domain_error("threshold_n_scaling: effective quantum numbers must be > 0");
  return threshold_ref * std::pow(n_star_new / n_star_ref, -4);
}

}  // namespace rydberg
