#pragma once

// Domain types shared by every module: physical configuration, single-shot
// lattice realizations, sampled profiles, harmonic spectra, fit results and
// Monte-Carlo summaries. The types are plain values; invariants are checked
// by the `check`/`validate` free functions and enforced at operation entry
// through `require_valid`.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace latticefringe {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error hierarchy. The CLI maps these onto exit codes 1, 2 and 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

/// Reduce an angle to the canonical interval [0, 2π).
double wrap_phase(double phase);

/// How a quoted imaging "width" maps onto the standard deviation of the
/// Gaussian kernel exp(-z²/(2σ²)).
///
///   sigma: width is σ itself
///   hwhm:  width is the half width at half maximum, σ = w / sqrt(2 ln 2)
///   fwhm:  width is the full width at half maximum, σ = w / (2 sqrt(2 ln 2))
///
/// The default is hwhm: a 5 µm half-width-at-half-maximum kernel (σ ≈ 4.25
/// µm) reproduces the reference single-shot fringe statistics
/// (⟨A₁⟩ = 0.31, σ_A₁ = 0.16); reading 5 µm as σ gives ⟨A₁⟩ ≈ 0.28.
enum class KernelWidthConvention { sigma, hwhm, fwhm };

double kernel_sigma(double width, KernelWidthConvention convention);

/// One experimental configuration. SI units throughout.
struct PhysicalParams {
  double mass = 0.0;                // kg
  double lattice_period = 0.0;      // m, site spacing d
  double expansion_time = 0.0;      // s, time of flight t
  double onsite_width = 0.0;        // m, on-site Gaussian width ℓ
  double imaging_resolution = 0.0;  // m, quoted width of the imaging PSF
  KernelWidthConvention imaging_convention = KernelWidthConvention::hwhm;
  std::optional<double> axial_trap_freq;  // rad/s, only used to derive ℓ

  /// ⁸⁷Rb released after 22 ms from a 2.7 µm lattice, ℓ = 120 nm,
  /// 5 µm imaging resolution.
  static PhysicalParams rubidium_reference();

  /// σ of the imaging kernel under the configured width convention.
  double imaging_sigma() const {
    return kernel_sigma(imaging_resolution, imaging_convention);
  }
};

/// One realization of the 1D array: N sites with weights α_n and phases φ_n
/// (n = 1..N stored at indices 0..N-1).
struct LatticeShot {
  int site_count = 0;
  Eigen::VectorXd amplitudes;
  Eigen::VectorXd phases;

  /// Builds a shot with phases reduced to [0, 2π); throws ConfigError if the
  /// result violates an invariant.
  static LatticeShot make(Eigen::VectorXd amplitudes, Eigen::VectorXd phases);
  static LatticeShot uniform(Eigen::VectorXd phases);
};

/// Density sampled on a uniform grid.
struct DensityProfile {
  Eigen::VectorXd z;
  Eigen::VectorXd values;
  double grid_step = 0.0;

  static DensityProfile make(double z_first, double step, Eigen::VectorXd values);
  Eigen::Index size() const { return values.size(); }
};

struct HarmonicEntry {
  int order = 0;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Period D plus (A_n, B_n) entries of F(z) = 1 + Σ A_n cos(B_n + 2πnz/D).
/// `site_count` bounds the admissible orders (n ≤ N-1); 0 means unbounded.
struct HarmonicSpectrum {
  double period = 0.0;
  std::vector<HarmonicEntry> entries;
  int site_count = 0;

  int highest_order() const;
};

struct Envelope {
  double height = 0.0;
  double center = 0.0;
  double width = 0.0;  // Gaussian σ: G(z) = h exp(-(z-c)²/(2w²))

  double operator()(double z) const {
    const double u = (z - center) / width;
    return height * std::exp(-0.5 * u * u);
  }
};

struct FringeFit {
  double amplitude = 0.0;      // A₁ ≥ 0
  double phase = 0.0;          // B₁ in [0, 2π)
  double fitted_period = 0.0;  // m
  Envelope envelope;
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
  // False when A₁ is too small for B₁ to carry information.
  bool phase_resolved = true;
};

/// 3D lattice realization. Site (ix, iy, iz) lives at flat index
/// ix + Nx (iy + Ny iz).
struct Lattice3DShot {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::VectorXd phases;
  Eigen::VectorXd amplitudes;

  static Lattice3DShot make(std::array<int, 3> dims, Eigen::VectorXd phases,
                            std::optional<Eigen::VectorXd> amplitudes = std::nullopt);

  Eigen::Index site_total() const {
    return Eigen::Index{dims[0]} * dims[1] * dims[2];
  }
  Eigen::Index index(int ix, int iy, int iz) const {
    return ix + Eigen::Index{dims[0]} * (iy + Eigen::Index{dims[1]} * iz);
  }
};

struct Histogram {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::int64_t> counts;

  void add(double value);
  std::int64_t total() const;
};

struct EnsembleStats {
  std::int64_t trials = 0;  // accepted trials; histograms sum to this
  std::int64_t failed_fits = 0;
  double mean_A1 = 0.0;
  double std_A1 = 0.0;
  double circular_mean_B1 = 0.0;
  double circular_resultant_length_B1 = 0.0;
  double mean_Fmax = 0.0;
  double mean_Fmin = 0.0;
  Histogram histogram_A1;
  Histogram histogram_B1;
  std::uint64_t seed = 0;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  void merge(const ValidationReport& other);
  std::string summary() const;
};

ValidationReport check(const PhysicalParams& params);
ValidationReport check(const LatticeShot& shot);
ValidationReport check(const DensityProfile& profile);
ValidationReport check(const HarmonicSpectrum& spectrum);
ValidationReport check(const FringeFit& fit);
ValidationReport check(const Lattice3DShot& shot);
ValidationReport check(const EnsembleStats& stats);

/// Hard invariants of both inputs plus far-field ratio warnings
/// (ℓ/d and N·d/Z₀, each expected below 0.1).
ValidationReport validate(const PhysicalParams& params, const LatticeShot& shot);

inline constexpr double kFarFieldRatio = 0.1;

template <class T>
void require_valid(const T& value, const char* what) {
  const ValidationReport report = check(value);
  if (!report.ok()) {
    throw ConfigError(std::string(what) + ": " + report.summary());
  }
}

}  // namespace latticefringe
