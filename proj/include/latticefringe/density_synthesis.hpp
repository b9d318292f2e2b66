#pragma once

// Time-of-flight density of a 1D array of condensates and the periodic
// contrast function F built from its phases.
//
// Sign convention. The propagator in synthesize_density is the free-particle
// kernel exp(+i m (z - z_n)² / (2ħt)). Expanding the cross term between
// sites j and j-n gives cos(arg S_n - 2πnz/D), whereas F is written as
// 1 + Σ A_n cos(B_n + 2πnz/D) with B_n = arg S_n. In the far field the
// synthesized density is therefore envelope(z) · F(-z). Statistics of
// A_n and of uniformly distributed B_n are unaffected.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "latticefringe/core_model.hpp"

namespace latticefringe {

struct GridSpec {
  double z_min = 0.0;
  double z_max = 0.0;
  int point_count = 0;

  double step() const { return (z_max - z_min) / (point_count - 1); }
  Eigen::VectorXd points() const;
};

ValidationReport check(const GridSpec& grid);

enum class Propagation {
  // Full expression: per-site Gaussian centred on z_n and the site-dependent
  // quadratic phase m(z - z_n)²/(2ħt).
  exact,
  // Fraunhofer limit ℓ, z_n ≪ Z₀, sqrt(ħt/m): the envelope is evaluated at z
  // and only the linear phase -m z z_n/(ħt) is kept.
  far_field,
};

/// Site positions z_n = (n - (N+1)/2) d, n = 1..N (array centred on 0).
Eigen::VectorXd site_positions(int site_count, double lattice_period);

/// |Σ α_n e^{iφ_n} e^{i m (z - z_n)²/(2ħt)} e^{-(z - z_n)²/Z₀²}|² on the grid,
/// Z₀ = ħt/(mℓ). No normalization is applied.
DensityProfile synthesize_density(const LatticeShot& shot, const PhysicalParams& params,
                                  const GridSpec& grid, Propagation propagation = Propagation::exact);

/// Lag phasor sums S_n = 2 Σ_j α_j α_{j-n} e^{i(φ_j - φ_{j-n})} / Σ_j α_j²,
/// A_n = |S_n|, B_n = arg S_n, for n = 1..N-1. With equal weights this is
/// (2/N) Σ_{j=n+1}^{N} e^{i(φ_j - φ_{j-n})}. Direct O(N²) summation in a
/// fixed order.
HarmonicSpectrum harmonics_from_phases(const LatticeShot& shot, double period);

/// Same spectrum through a zero-padded FFT autocorrelation, O(N log N).
HarmonicSpectrum harmonics_from_phases_fft(const LatticeShot& shot, double period);

/// F(z) = 1 + Σ A_n cos(B_n + 2πnz/D).
double evaluate_F_at(const HarmonicSpectrum& spectrum, double z);
Eigen::VectorXd evaluate_F(const HarmonicSpectrum& spectrum, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd evaluate_F(const HarmonicSpectrum& spectrum, const GridSpec& grid);

/// F sampled at z_k = k D / M, k = 0..M-1, by one inverse FFT.
Eigen::VectorXd sample_F_period(const HarmonicSpectrum& spectrum, int samples_per_period);

/// Grating function sin²(Nπz/D) / (N sin²(πz/D)); equals N at z = pD.
double coherent_F_at(int site_count, double z, double period);
Eigen::VectorXd coherent_F(int site_count, const GridSpec& grid, double period);

struct Extrema {
  double max = 0.0;
  double min = 0.0;
  double argmax = 0.0;  // position within [0, D)
  double argmin = 0.0;
};

/// Minimum sampling density accepted by f_extrema: 64 per harmonic order,
/// i.e. 64·(highest order + 1).
int min_samples_per_period(const HarmonicSpectrum& spectrum);

/// Single-shot maximum and minimum of F over one period: FFT sampling on
/// `samples_per_period` points, then golden-section polish of the best few
/// local extrema on the direct harmonic sum.
Extrema f_extrema(const HarmonicSpectrum& spectrum, int samples_per_period);

// ---------------------------------------------------------------------------
// 3D lattices

struct LagHarmonic {
  std::array<int, 3> lag{0, 0, 0};
  double amplitude = 0.0;
  double phase = 0.0;
};

/// F(r) = 1 + Σ A_n cos(B_n + 2π n·r/D) over lag vectors n; one
/// representative per ±n pair (first nonzero component positive).
struct HarmonicSpectrum3D {
  double period = 1.0;
  std::vector<LagHarmonic> entries;
};

HarmonicSpectrum3D harmonics_3d(const Lattice3DShot& shot, double period = 1.0);

double evaluate_F3_at(const HarmonicSpectrum3D& spectrum, const Eigen::Vector3d& r);

/// |Σ_j α_j e^{iφ_j} e^{i2π j·r/D}|² / Σ α_j², the closed form of the same F.
double direct_F3_at(const Lattice3DShot& shot, const Eigen::Vector3d& r, double period = 1.0);

struct Extrema3D {
  double max = 0.0;
  double min = 0.0;
  Eigen::Vector3d argmax = Eigen::Vector3d::Zero();
  Eigen::Vector3d argmin = Eigen::Vector3d::Zero();
};

/// Extrema of F(r) over one unit cell: FFT sampling on a cubic grid with
/// `samples_per_axis` points per axis, then coordinate-wise golden-section
/// polish of the best local extrema on direct_F3_at.
Extrema3D f_extrema_3d(const Lattice3DShot& shot, int samples_per_axis);

enum class Axis { x = 0, y = 1, z = 2 };

struct GridSpec2D {
  GridSpec u;  // first remaining axis (x for axis=z)
  GridSpec v;  // second remaining axis
};

/// Harmonics that survive integration along `axis`: lag vectors with zero
/// component on that axis, entries carry the lag in 3D form.
HarmonicSpectrum3D line_of_sight_spectrum(const Lattice3DShot& shot, Axis axis, double period = 1.0);

/// F integrated (averaged over one period) along `axis`, sampled on a 2D
/// grid of the two remaining coordinates. Rows follow grid.u, columns grid.v.
Eigen::MatrixXd integrate_line_of_sight(const Lattice3DShot& shot, Axis axis, const GridSpec2D& grid,
                                        double period = 1.0);

}  // namespace latticefringe
