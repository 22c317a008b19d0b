#pragma once
// Unit conventions and atomic constants.
//
// Internally every frequency is an angular rate in rad/us, lengths are in um
// and times in us. Files and command-line values use ordinary frequency in
// MHz; convert with mhz() / to_mhz() at the boundary only.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydberg {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz -> angular frequency in rad/us.
constexpr double mhz(double f_mhz) { return two_pi * f_mhz; }
/// Angular frequency in rad/us -> ordinary frequency in MHz.
constexpr double to_mhz(double w) { return w / two_pi; }
constexpr double khz(double f_khz) { return mhz(f_khz * 1e-3); }

/// Angular average of (1 - 3 cos^2 theta) in the RMS sense, 2/sqrt(5).
inline const double rms_angular_factor = 2.0 / std::sqrt(5.0);

namespace defaults {
/// Natural decay rate of 18s, 2pi x 45 kHz.
inline constexpr double gamma0 = mhz(0.045);
/// Fraction of 18s decay that does not return to the initial ground state.
inline constexpr double branch_other = 0.45;
/// Full ground density scale: rho_g = f * 57 um^-3.
inline constexpr double full_density = 57.0;
/// Minimum lattice separation in um.
inline constexpr double lattice_spacing = 0.406;
/// C6 such that C6 / r^6 equals gamma0 at r = 0.8 um.
inline const double c6 = gamma0 * std::pow(0.8, 6);
/// Effective principal quantum number of Rb 18s (quantum defect 3.131).
inline constexpr double n_star = 18.0 - 3.131;
}  // namespace defaults

struct ContaminantChannel {
  std::string label;
  double c3_abs = 0.0;    // rad um^3 / us, RMS angular factor folded in
  double branching = 0.0; // b_np from the s-state
  double gamma_np = 1.0;  // rad / us

  void validate() const {
    if (!(c3_abs >= 0.0) || !std::isfinite(c3_abs))
      throw std::domain_error("channel " + label + ": c3_abs must be >= 0");
    if (!(branching >= 0.0 && branching <= 1.0))
      throw std::domain_error("channel " + label + ": branching must lie in [0, 1]");
    if (!(gamma_np > 0.0) || !std::isfinite(gamma_np))
      throw std::domain_error("channel " + label + ": gamma_np must be > 0");
  }
};

struct AtomicSystem {
  double gamma0 = defaults::gamma0;
  double branch_other = defaults::branch_other;
  std::vector<ContaminantChannel> channels;
  double c6 = defaults::c6;
  double n_star = defaults::n_star;

  void validate() const {
    if (!(gamma0 > 0.0)) throw std::domain_error("gamma0 must be > 0");
    if (!(branch_other >= 0.0 && branch_other <= 1.0))
      throw std::domain_error("branch_other must lie in [0, 1]");
    if (!(c6 >= 0.0)) throw std::domain_error("c6 must be >= 0");
    double total = 0.0;
    for (const auto& ch : channels) {
      ch.validate();
      total += ch.branching;
    }
    if (total > 1.0 + 1e-12)
      throw std::domain_error("channel branching ratios sum to more than 1");
  }
};

/// Drive parameters. The lattice model only uses omega and delta; the
/// single-photon legs are kept for calibration bookkeeping.
struct DriveParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double delta_int = 0.0;
  double omega = 0.0;
  double delta = 0.0;
};

/// AC Stark shift of a single far-detuned leg, omega^2 / (4 delta_int).
inline double light_shift(double omega_single, double delta_int) {
  if (delta_int == 0.0) throw std::domain_error("light_shift: zero intermediate detuning");
  return omega_single * omega_single / (4.0 * delta_int);
}

/// Single-photon Rabi frequency from a measured light shift. Inverse of light_shift.
inline double calibrate_rabi(double shift, double delta_int) {
  const double prod = shift * delta_int;
  if (prod < 0.0)
    throw std::domain_error("calibrate_rabi: shift sign inconsistent with detuning");
  return 2.0 * std::sqrt(prod);
}

inline double two_photon_rabi(double omega1, double omega2, double delta_int) {
  if (delta_int == 0.0) throw std::domain_error("two_photon_rabi: zero intermediate detuning");
  return omega1 * omega2 / (2.0 * delta_int);
}

/// Dipole contribution of one channel, |C3| b / Gamma_np, in um^3.
inline double beta3_contribution(const ContaminantChannel& ch) {
  ch.validate();
  return ch.c3_abs * ch.branching / ch.gamma_np;
}

/// Dipole interaction volume summed over contaminant channels (um^3).
inline double beta3(std::span<const ContaminantChannel> channels) {
  if (channels.empty()) throw std::domain_error("beta3: no contaminant channels");
  double sum = 0.0;
  for (const auto& ch : channels) sum += beta3_contribution(ch);
  return sum;
}

/// van der Waals interaction volume sqrt(C6 / gamma0) (um^3).
inline double beta6(double c6, double gamma0) {
  if (c6 < 0.0) throw std::domain_error("beta6: negative C6");
  if (!(gamma0 > 0.0)) throw std::domain_error("beta6: gamma0 must be > 0");
  return std::sqrt(c6 / gamma0);
}

/// beta3 grows as n*^7.
inline double scale_beta3_with_n(double beta3_ref, double n_star_ref, double n_star_new) {
  if (!(n_star_ref > 0.0) || !(n_star_new > 0.0))
    throw std::domain_error("scale_beta3_with_n: effective quantum numbers must be > 0");
  return beta3_ref * std::pow(n_star_new / n_star_ref, 7);
}

}  // namespace rydberg
