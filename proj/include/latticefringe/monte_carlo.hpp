#pragma once

// Seeded Monte-Carlo ensembles over random site phases. Trial i always
// draws from PhaseStream(seed, i) and per-trial results are reduced in index
// order, so every statistic is bit-identical for any worker count.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latticefringe/core_model.hpp"
#include "latticefringe/density_synthesis.hpp"
#include "latticefringe/fringe_fitting.hpp"
#include "latticefringe/rng.hpp"

namespace latticefringe {

enum class AmplitudeProfile {
  uniform,
  thomas_fermi,  // α_n ∝ n (N - n), n = 1..N
};

Eigen::VectorXd site_amplitudes(int site_count, AmplitudeProfile profile);

struct EnsembleConfig {
  int trials = 1000;
  int site_count = 30;
  AmplitudeProfile amplitude_profile = AmplitudeProfile::thomas_fermi;
  bool apply_convolution = true;
  std::uint64_t seed = 1;
  PhysicalParams params = PhysicalParams::rubidium_reference();
  GridSpec grid{-400e-6, 400e-6, 2001};
  Propagation propagation = Propagation::exact;
  // Replaces the random phases in every trial (e.g. all zeros).
  std::optional<std::vector<double>> phase_override;
  FitOptions fit;

  /// Reference 1D configuration: N = 30, Thomas-Fermi weights, imaging
  /// blur on, ⁸⁷Rb parameters.
  static EnsembleConfig reference();
};

ValidationReport check(const EnsembleConfig& config);

struct TrialResult {
  std::int64_t trial = 0;
  double A1 = 0.0;
  double B1 = 0.0;
  double Fmax = 0.0;
  double Fmin = 0.0;
  bool fit_ok = false;
};

struct EnsembleRun {
  EnsembleStats stats;
  std::vector<TrialResult> trials;
};

/// Builds the shot used by trial `trial_index` of `config`.
LatticeShot ensemble_shot(const EnsembleConfig& config, std::uint64_t trial_index);

/// Per trial: phases, density, optional imaging blur, fringe fit, and the
/// F extrema of the unblurred spectrum. Failed or unconverged fits are
/// excluded from the A₁/B₁ statistics; more than 5% failures throws
/// NumericError.
EnsembleRun run_ensemble(const EnsembleConfig& config, int workers = 1);

struct AveragedProfile {
  DensityProfile profile;
  double residual_A1 = 0.0;
};

/// Mean of M mass-normalized single-shot profiles (trials first_trial ..
/// first_trial + M - 1 of `config`) and the first-harmonic amplitude left
/// in the average.
AveragedProfile average_profiles(const EnsembleConfig& config, int shot_count,
                                 std::uint64_t first_trial = 0, int workers = 1);

struct ScalingRow {
  int site_count = 0;
  std::int64_t trials = 0;
  double Fmax_mean = 0.0;
  double Fmax_stderr = 0.0;
  double Fmin_mean = 0.0;
  double Fmin_stderr = 0.0;
  double A1sq_mean = 0.0;
  double A1sq_stderr = 0.0;
};

/// Pure phasor statistics per N (equal weights, no synthesis or fitting):
/// ensemble means of f_extrema and of A₁².
std::vector<ScalingRow> scaling_study(std::span<const int> site_counts, int trials, std::uint64_t seed,
                                      int workers = 1);

/// Harmonic content of a one-atom-per-site Mott state, 4(N - n)/[N(N - 1)].
double mott_Cn_analytic(int site_count, int order);

/// Detected atom positions ζ_1..ζ_N of one shot.
struct DetectionSet {
  std::vector<double> coordinates;
};

/// Independent inverse-CDF draws from a profile treated as piecewise
/// constant over cells of one grid step.
DetectionSet sample_detections(const DensityProfile& profile, int count, PhaseStream& stream);

struct MottEstimate {
  double real = 0.0;
  double real_stderr = 0.0;
  double imag = 0.0;
  double imag_stderr = 0.0;
  std::int64_t shots = 0;
  double coherent_target = 0.0;  // 4(N - n)/N²
  double mott_target = 0.0;      // 4(N - n)/[N(N - 1)]
  std::string matches;           // "coherent", "mott", "both" or "neither"
};

/// Two-point estimator (4/[N(N-1)]) Σ_j Σ_{j'≠j} e^{i2π(ζ_j - ζ_j')n/D}
/// averaged over shots. Each shot draws random phases, synthesizes the
/// equal-weight single-shot density and samples N detections from it
/// independently. Independent sampling makes the expectation the coherent
/// value 4(N - n)/N² rather than the exact Mott value; `matches` reports
/// which target lies within 3 standard errors.
MottEstimate mott_Cn_sampled(int site_count, int order, int shots, std::uint64_t seed,
                             const PhysicalParams& params, const GridSpec& grid,
                             Propagation propagation = Propagation::exact, int workers = 1);

}  // namespace latticefringe
