#include "latticefringe/core_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "latticefringe/physics_scales.hpp"

namespace latticefringe {

double wrap_phase(double phase) {
  double r = std::fmod(phase, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number plus 2π can round up to exactly 2π.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double kernel_sigma(double width, KernelWidthConvention convention) {
  static const double half_max = std::sqrt(2.0 * std::log(2.0));
  switch (convention) {
    case KernelWidthConvention::sigma:
      return width;
    case KernelWidthConvention::hwhm:
      return width / half_max;
    case KernelWidthConvention::fwhm:
      return width / (2.0 * half_max);
  }
  return width;
}

PhysicalParams PhysicalParams::rubidium_reference() {
  PhysicalParams p;
  p.mass = constants::rubidium87_mass;
  p.lattice_period = 2.7e-6;
  p.expansion_time = 22e-3;
  p.onsite_width = 120e-9;
  p.imaging_resolution = 5e-6;
  p.imaging_convention = KernelWidthConvention::hwhm;
  return p;
}

LatticeShot LatticeShot::make(Eigen::VectorXd amplitudes, Eigen::VectorXd phases) {
  LatticeShot shot;
  shot.site_count = static_cast<int>(amplitudes.size());
  shot.amplitudes = std::move(amplitudes);
  shot.phases = phases.unaryExpr([](double p) { return wrap_phase(p); });
  require_valid(shot, "LatticeShot");
  return shot;
}

LatticeShot LatticeShot::uniform(Eigen::VectorXd phases) {
  Eigen::VectorXd amplitudes = Eigen::VectorXd::Ones(phases.size());
  return make(std::move(amplitudes), std::move(phases));
}

DensityProfile DensityProfile::make(double z_first, double step, Eigen::VectorXd values) {
  DensityProfile profile;
  const Eigen::Index n = values.size();
  profile.z = Eigen::VectorXd::NullaryExpr(
      n, [&](Eigen::Index i) { return z_first + step * static_cast<double>(i); });
  profile.values = std::move(values);
  profile.grid_step = step;
  require_valid(profile, "DensityProfile");
  return profile;
}

int HarmonicSpectrum::highest_order() const {
  int highest = 0;
  for (const auto& e : entries) highest = std::max(highest, e.order);
  return highest;
}

void Histogram::add(double value) {
  if (counts.empty()) return;
  const auto bins = static_cast<double>(counts.size());
  auto bin = static_cast<std::ptrdiff_t>(std::floor((value - lower) / (upper - lower) * bins));
  bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(counts.size()) - 1);
  ++counts[static_cast<std::size_t>(bin)];
}

std::int64_t Histogram::total() const {
  std::int64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

void ValidationReport::merge(const ValidationReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i];
  }
  return out.str();
}

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::string ratio_warning(const char* name, double ratio) {
  std::ostringstream out;
  out << "far-field ratio " << name << " = " << ratio << " >= " << kFarFieldRatio;
  return out.str();
}

}  // namespace

ValidationReport check(const PhysicalParams& p) {
  ValidationReport r;
  if (!positive_finite(p.mass)) r.violations.push_back("mass must be positive");
  if (!positive_finite(p.lattice_period)) r.violations.push_back("lattice_period must be positive");
  if (!positive_finite(p.expansion_time)) r.violations.push_back("expansion_time must be positive");
  if (!positive_finite(p.onsite_width)) r.violations.push_back("onsite_width must be positive");
  if (!positive_finite(p.imaging_resolution))
    r.violations.push_back("imaging_resolution must be positive");
  if (p.axial_trap_freq && !positive_finite(*p.axial_trap_freq))
    r.violations.push_back("axial_trap_freq must be positive");
  if (r.ok() && p.onsite_width / p.lattice_period >= kFarFieldRatio)
    r.warnings.push_back(ratio_warning("l/d", p.onsite_width / p.lattice_period));
  return r;
}

ValidationReport check(const LatticeShot& shot) {
  ValidationReport r;
  if (shot.site_count < 1) r.violations.push_back("site_count must be >= 1");
  if (shot.amplitudes.size() != shot.site_count)
    r.violations.push_back("amplitudes length mismatch");
  if (shot.phases.size() != shot.site_count) r.violations.push_back("phases length mismatch");
  if (!shot.amplitudes.allFinite() || (shot.amplitudes.array() < 0.0).any())
    r.violations.push_back("amplitudes must be finite and non-negative");
  else if (shot.amplitudes.size() > 0 && shot.amplitudes.maxCoeff() <= 0.0)
    r.violations.push_back("at least one amplitude must be positive");
  if (!shot.phases.allFinite() || (shot.phases.array() < 0.0).any() ||
      (shot.phases.array() >= kTwoPi).any())
    r.violations.push_back("phases must lie in [0, 2pi)");
  return r;
}

ValidationReport check(const DensityProfile& p) {
  ValidationReport r;
  const Eigen::Index n = p.values.size();
  if (n < 2) r.violations.push_back("profile needs at least 2 points");
  if (p.z.size() != n) r.violations.push_back("z_grid and values length mismatch");
  if (!(p.grid_step > 0.0)) r.violations.push_back("grid_step must be positive");
  if (!r.ok()) return r;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double step = p.z[i] - p.z[i - 1];
    if (!(std::abs(step - p.grid_step) <= 1e-12 * p.grid_step +
                                             4.0 * std::numeric_limits<double>::epsilon() *
                                                 std::max(std::abs(p.z[i]), std::abs(p.z[i - 1])))) {
      r.violations.push_back("z_grid is not uniform with grid_step");
      break;
    }
  }
  if (!p.values.allFinite()) {
    r.violations.push_back("values must be finite");
  } else {
    const double peak = p.values.cwiseAbs().maxCoeff();
    if (p.values.minCoeff() < -1e-12 * peak) r.violations.push_back("values must be non-negative");
  }
  return r;
}

ValidationReport check(const HarmonicSpectrum& s) {
  ValidationReport r;
  if (!positive_finite(s.period)) r.violations.push_back("period must be positive");
  std::set<int> seen;
  for (const auto& e : s.entries) {
    if (e.order < 1) r.violations.push_back("harmonic order must be >= 1");
    if (s.site_count > 0 && e.order > s.site_count - 1)
      r.violations.push_back("harmonic order exceeds N-1");
    if (!seen.insert(e.order).second) r.violations.push_back("duplicate harmonic order");
    if (!(e.amplitude >= 0.0) || e.amplitude > 2.0 + 1e-12)
      r.violations.push_back("harmonic amplitude must lie in [0, 2]");
    if (!(e.phase >= 0.0 && e.phase < kTwoPi)) r.violations.push_back("harmonic phase out of range");
  }
  return r;
}

ValidationReport check(const FringeFit& f) {
  ValidationReport r;
  if (!(f.amplitude >= 0.0)) r.violations.push_back("amplitude must be non-negative");
  if (!(f.phase >= 0.0 && f.phase < kTwoPi)) r.violations.push_back("phase out of range");
  if (f.converged) {
    if (!std::isfinite(f.residual_rms)) r.violations.push_back("converged fit with non-finite residual");
    if (!(f.envelope.width > 0.0)) r.violations.push_back("converged fit with non-positive width");
  }
  return r;
}

ValidationReport check(const Lattice3DShot& s) {
  ValidationReport r;
  for (int d : s.dims) {
    if (d < 1) {
      r.violations.push_back("dims must be positive");
      return r;
    }
  }
  if (s.phases.size() != s.site_total()) r.violations.push_back("phases shape mismatch");
  if (s.amplitudes.size() != s.site_total()) r.violations.push_back("amplitudes shape mismatch");
  if (!r.ok()) return r;
  if ((s.amplitudes.array() < 0.0).any() || !s.amplitudes.allFinite())
    r.violations.push_back("amplitudes must be finite and non-negative");
  if (!s.phases.allFinite() || (s.phases.array() < 0.0).any() || (s.phases.array() >= kTwoPi).any())
    r.violations.push_back("phases must lie in [0, 2pi)");
  return r;
}

ValidationReport check(const EnsembleStats& s) {
  ValidationReport r;
  if (s.trials < 1) r.violations.push_back("trials must be >= 1");
  if (!(s.circular_resultant_length_B1 >= 0.0 && s.circular_resultant_length_B1 <= 1.0 + 1e-12))
    r.violations.push_back("circular resultant length outside [0, 1]");
  if (!s.histogram_A1.counts.empty() && s.histogram_A1.total() != s.trials)
    r.violations.push_back("A1 histogram does not sum to trials");
  if (!s.histogram_B1.counts.empty() && s.histogram_B1.total() != s.trials)
    r.violations.push_back("B1 histogram does not sum to trials");
  return r;
}

Lattice3DShot Lattice3DShot::make(std::array<int, 3> dims, Eigen::VectorXd phases,
                                  std::optional<Eigen::VectorXd> amplitudes) {
  Lattice3DShot shot;
  shot.dims = dims;
  shot.phases = phases.unaryExpr([](double p) { return wrap_phase(p); });
  shot.amplitudes = amplitudes ? std::move(*amplitudes) : Eigen::VectorXd::Ones(phases.size());
  require_valid(shot, "Lattice3DShot");
  return shot;
}

ValidationReport validate(const PhysicalParams& params, const LatticeShot& shot) {
  ValidationReport r = check(params);
  r.merge(check(shot));
  if (check(params).ok() && shot.site_count > 0) {
    const double z0 = expansion_width(params.expansion_time, params.mass, params.onsite_width);
    const double extent = shot.site_count * params.lattice_period;
    if (extent / z0 >= kFarFieldRatio) r.warnings.push_back(ratio_warning("N*d/Z0", extent / z0));
  }
  return r;
}

}  // namespace latticefringe
