#pragma once

// Analysis chain applied to simulated or measured profiles: imaging blur,
// radial band averaging of 2D images, the Gaussian-envelope fringe fit and
// direct harmonic projection.

#include <Eigen/Dense>

#include "latticefringe/core_model.hpp"

namespace latticefringe {

/// Density image; rows follow r_grid, columns follow z_grid.
struct Image2D {
  Eigen::VectorXd r_grid;
  Eigen::VectorXd z_grid;
  Eigen::MatrixXd values;
};

ValidationReport check(const Image2D& image);

/// Convolution with exp(-z²/(2σ²)), normalized and truncated at ±6σ.
/// Mass that would leave the grid is redistributed onto the in-range part
/// of each sample's kernel, so Σ values is preserved exactly. σ = 0 is the
/// identity; otherwise the grid step must be below σ/4.
DensityProfile convolve_psf(const DensityProfile& profile, double sigma);

/// Mean over the rows with |r| ≤ band_halfwidth.
DensityProfile radial_average(const Image2D& image, double band_halfwidth);

/// Envelope from the zeroth, first and second moments of the profile.
Envelope moment_envelope(const DensityProfile& profile);

struct FitOptions {
  // Fit window |z - c| ≤ window_halfwidth · w around the moment envelope.
  double window_halfwidth = 2.0;
  int max_iterations = 200;
  // Below this amplitude B₁ is reported as unresolved.
  double min_resolvable_amplitude = 0.01;
};

/// Least-squares fit of [1 + A₁ cos(B₁ + 2πz/D)] G(z) with
/// G(z) = h exp(-(z - c)²/(2w²)).
///
/// Initialization is deterministic: G from moments, (A₁, B₁) from
/// extract_harmonic against that envelope, D = expected_period. The
/// optimizer is Levenberg-damped Gauss-Newton on the analytic Jacobian,
/// unweighted. A negative raw amplitude is folded into (|A|, B + π).
/// When fit_period is false D stays at expected_period.
FringeFit fit_fringes(const DensityProfile& profile, double expected_period, bool fit_period,
                      const FitOptions& options = {});

struct HarmonicEstimate {
  double amplitude = 0.0;
  double phase = 0.0;  // in [0, 2π), phase convention of cos(B + 2πnz/D)
};

/// Amplitude and phase of harmonic n of profile / envelope over
/// |z - c| ≤ window_halfwidth · w, by linear least squares on
/// {1, cos(2πkz/D), sin(2πkz/D) : k = 1..n}. The result is normalized by the
/// constant term, so [1 + A cos(B + 2πnz/D)] G(z) returns (A, B).
HarmonicEstimate extract_harmonic(const DensityProfile& profile, const Envelope& envelope, int order,
                                  double period, double window_halfwidth = 1.5);

}  // namespace latticefringe
