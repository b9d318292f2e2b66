#include "latticefringe/physics_scales.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace latticefringe {

using constants::hbar;
using constants::planck;

double recoil_energy(double lattice_period, double mass) {
  const double k = std::numbers::pi / lattice_period;
  return hbar * hbar * k * k / (2.0 * mass);
}

double fringe_period(double expansion_time, double mass, double lattice_period) {
  return planck * expansion_time / (mass * lattice_period);
}

double expansion_width(double expansion_time, double mass, double onsite_width) {
  return hbar * expansion_time / (mass * onsite_width);
}

double onsite_width(double omega_z, double mass) {
  return std::sqrt(hbar / (2.0 * mass * omega_z));
}

double tunneling_ratio(double depth, double reference_depth, double recoil) {
  if (depth < 0.0 || reference_depth < 0.0 || !(recoil > 0.0))
    throw ConfigError("tunneling_ratio: depths must be >= 0 and E_R > 0");
  return std::exp(-2.0 * (std::sqrt(depth / recoil) - std::sqrt(reference_depth / recoil)));
}

std::string to_string(SqueezingRegime regime) {
  switch (regime) {
    case SqueezingRegime::poissonian:
      return "poissonian";
    case SqueezingRegime::squeezed:
      return "squeezed";
    case SqueezingRegime::mott:
      return "mott";
  }
  return "unknown";
}

SqueezingPrediction squeezing_regime(double tunneling, double interaction, double n0) {
  if (tunneling < 0.0 || !(interaction > 0.0) || !(n0 >= 1.0))
    throw ConfigError("squeezing_regime: need J >= 0, U > 0, n0 >= 1");
  const double root_n0 = std::sqrt(n0);
  SqueezingPrediction p;
  if (tunneling >= root_n0 * interaction) {
    p.regime = SqueezingRegime::poissonian;
    p.sigma = root_n0;
  } else if (tunneling > interaction / root_n0) {
    p.regime = SqueezingRegime::squeezed;
    p.sigma = std::sqrt(root_n0);
  } else {
    p.regime = SqueezingRegime::mott;
    p.sigma = root_n0 * tunneling / interaction;
    p.sigma_is_upper_bound = true;
  }
  return p;
}

ScalesReport make_scales_report(const PhysicalParams& params, std::optional<double> lattice_depth) {
  require_valid(params, "PhysicalParams");
  ScalesReport r;
  r.recoil_energy_joule = recoil_energy(params.lattice_period, params.mass);
  r.recoil_energy_hz = r.recoil_energy_joule / planck;
  r.fringe_period = fringe_period(params.expansion_time, params.mass, params.lattice_period);
  r.onsite_width = params.axial_trap_freq ? onsite_width(*params.axial_trap_freq, params.mass)
                                          : params.onsite_width;
  r.expansion_width = expansion_width(params.expansion_time, params.mass, r.onsite_width);
  if (lattice_depth) r.lattice_depth_in_ER = *lattice_depth / r.recoil_energy_joule;
  return r;
}

std::string format_scales_table(const ScalesReport& r) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << std::left << std::setw(24) << "recoil energy E_R" << r.recoil_energy_joule << " J  (h x "
      << r.recoil_energy_hz << " Hz)\n";
  out << std::setw(24) << "fringe period D" << r.fringe_period * 1e6 << " um\n";
  out << std::setw(24) << "expansion width Z0" << r.expansion_width * 1e6 << " um\n";
  out << std::setw(24) << "on-site width l" << r.onsite_width * 1e9 << " nm\n";
  if (r.lattice_depth_in_ER) out << std::setw(24) << "lattice depth V0" << *r.lattice_depth_in_ER << " E_R\n";
  return out.str();
}

}  // namespace latticefringe
