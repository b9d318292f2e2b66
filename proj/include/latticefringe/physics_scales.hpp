#pragma once

// Closed-form physical scales of a lattice release experiment.

#include <numbers>
#include <optional>
#include <string>

#include "latticefringe/core_model.hpp"

namespace latticefringe {

namespace constants {
inline constexpr double planck = 6.62607015e-34;  // J s
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);  // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
// 86.909180527 u
inline constexpr double rubidium87_mass = 1.443160648e-25;  // kg
}  // namespace constants

/// E_R = ħ²k²/(2m) with k = π/d.
double recoil_energy(double lattice_period, double mass);

/// D = h t / (m d), spacing of the time-of-flight fringes.
double fringe_period(double expansion_time, double mass, double lattice_period);

/// Z₀ = ħ t / (m ℓ).
double expansion_width(double expansion_time, double mass, double onsite_width);

/// ℓ = sqrt(ħ / (2 m ω_z)).
double onsite_width(double omega_z, double mass);

/// J(V0) / J(V0_ref) under J ∝ E_R exp(-2 sqrt(V0/E_R)). Only the ratio is
/// defined; there is no absolute prefactor.
double tunneling_ratio(double depth, double reference_depth, double recoil);

enum class SqueezingRegime { poissonian, squeezed, mott };

std::string to_string(SqueezingRegime regime);

struct SqueezingPrediction {
  SqueezingRegime regime = SqueezingRegime::poissonian;
  double sigma = 0.0;  // predicted on-site number standard deviation
  bool sigma_is_upper_bound = false;  // set in the Mott regime (σ < 1)
};

/// Classifies the on-site number statistics from tunneling J, on-site
/// interaction U and mean occupation n0.
///
/// The three regimes sit at J ≳ n0·U (Poissonian, σ = √n0), J ~ U
/// (squeezed, σ ~ n0^¼) and J ~ U/n0 (Mott, σ < 1). Cutoffs between
/// neighbouring regimes are the geometric midpoints of their anchor points:
/// J ≥ √n0·U is Poissonian, J ≤ U/√n0 is Mott, anything between is squeezed.
/// In the Mott regime σ is estimated as √n0·J/U, which stays at or below 1
/// there and is flagged as an upper bound.
/// Those cutoffs are a convention of this library; the physics only fixes
/// orders of magnitude.
SqueezingPrediction squeezing_regime(double tunneling, double interaction, double n0);

struct ScalesReport {
  double recoil_energy_joule = 0.0;
  double recoil_energy_hz = 0.0;
  double fringe_period = 0.0;
  double expansion_width = 0.0;
  double onsite_width = 0.0;
  std::optional<double> lattice_depth_in_ER;
};

/// Scales for one configuration. When `params.axial_trap_freq` is set, ℓ is
/// derived from it; otherwise params.onsite_width is used. `lattice_depth`
/// is V0 in joules.
ScalesReport make_scales_report(const PhysicalParams& params,
                                std::optional<double> lattice_depth = std::nullopt);

std::string format_scales_table(const ScalesReport& report);

}  // namespace latticefringe
