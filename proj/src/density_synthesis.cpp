#include "latticefringe/density_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "latticefringe/physics_scales.hpp"

namespace latticefringe {

using cd = std::complex<double>;

Eigen::VectorXd GridSpec::points() const {
  const double h = step();
  return Eigen::VectorXd::NullaryExpr(point_count,
                                      [&](Eigen::Index i) { return z_min + h * static_cast<double>(i); });
}

ValidationReport check(const GridSpec& grid) {
  ValidationReport r;
  if (grid.point_count < 2) r.violations.push_back("grid point_count must be >= 2");
  if (!(std::isfinite(grid.z_min) && std::isfinite(grid.z_max) && grid.z_min < grid.z_max))
    r.violations.push_back("grid needs z_min < z_max");
  return r;
}

Eigen::VectorXd site_positions(int site_count, double lattice_period) {
  const double middle = 0.5 * (site_count + 1);
  return Eigen::VectorXd::NullaryExpr(site_count, [&](Eigen::Index i) {
    return (static_cast<double>(i + 1) - middle) * lattice_period;
  });
}

DensityProfile synthesize_density(const LatticeShot& shot, const PhysicalParams& params,
                                  const GridSpec& grid, Propagation propagation) {
  require_valid(grid, "GridSpec");
  require_valid(params, "PhysicalParams");
  require_valid(shot, "LatticeShot");

  const double z0 = expansion_width(params.expansion_time, params.mass, params.onsite_width);
  const double inv_z0_sq = 1.0 / (z0 * z0);
  // m / (2ħt)
  const double chirp = params.mass / (2.0 * constants::hbar * params.expansion_time);
  const Eigen::VectorXd sites = site_positions(shot.site_count, params.lattice_period);
  const Eigen::VectorXd z = grid.points();

  Eigen::VectorXd values(grid.point_count);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double zk = z[k];
    cd sum{0.0, 0.0};
    if (propagation == Propagation::exact) {
      for (int n = 0; n < shot.site_count; ++n) {
        const double dz = zk - sites[n];
        const double weight = shot.amplitudes[n] * std::exp(-dz * dz * inv_z0_sq);
        sum += std::polar(weight, shot.phases[n] + chirp * dz * dz);
      }
      values[k] = std::norm(sum);
    } else {
      for (int n = 0; n < shot.site_count; ++n)
        sum += std::polar(shot.amplitudes[n], shot.phases[n] - 2.0 * chirp * zk * sites[n]);
      values[k] = std::exp(-2.0 * zk * zk * inv_z0_sq) * std::norm(sum);
    }
  }
  return DensityProfile::make(grid.z_min, grid.step(), std::move(values));
}

namespace {

HarmonicSpectrum spectrum_from_lag_sums(const std::vector<cd>& lag_sums, double norm, int site_count,
                                        double period) {
  HarmonicSpectrum spectrum;
  spectrum.period = period;
  spectrum.site_count = site_count;
  spectrum.entries.reserve(static_cast<std::size_t>(site_count - 1));
  for (int n = 1; n < site_count; ++n) {
    const cd s = 2.0 * lag_sums[static_cast<std::size_t>(n)] / norm;
    spectrum.entries.push_back({n, std::min(std::abs(s), 2.0), wrap_phase(std::arg(s))});
  }
  return spectrum;
}

}  // namespace

HarmonicSpectrum harmonics_from_phases(const LatticeShot& shot, double period) {
  require_valid(shot, "LatticeShot");
  const int n_sites = shot.site_count;
  std::vector<cd> c(static_cast<std::size_t>(n_sites));
  for (int j = 0; j < n_sites; ++j) c[static_cast<std::size_t>(j)] = std::polar(shot.amplitudes[j], shot.phases[j]);
  const double norm = shot.amplitudes.squaredNorm();

  std::vector<cd> lag_sums(static_cast<std::size_t>(n_sites), cd{0.0, 0.0});
  for (int n = 1; n < n_sites; ++n) {
    cd s{0.0, 0.0};
    for (int j = n; j < n_sites; ++j) s += c[static_cast<std::size_t>(j)] * std::conj(c[static_cast<std::size_t>(j - n)]);
    lag_sums[static_cast<std::size_t>(n)] = s;
  }
  return spectrum_from_lag_sums(lag_sums, norm, n_sites, period);
}

HarmonicSpectrum harmonics_from_phases_fft(const LatticeShot& shot, double period) {
  require_valid(shot, "LatticeShot");
  const int n_sites = shot.site_count;
  std::size_t padded = 1;
  while (padded < 2 * static_cast<std::size_t>(n_sites)) padded <<= 1;

  std::vector<cd> c(padded, cd{0.0, 0.0});
  for (int j = 0; j < n_sites; ++j) c[static_cast<std::size_t>(j)] = std::polar(shot.amplitudes[j], shot.phases[j]);

  Eigen::FFT<double> fft;
  std::vector<cd> spectrum;
  fft.fwd(spectrum, c);
  for (auto& x : spectrum) x = std::norm(x);
  std::vector<cd> autocorr;
  fft.inv(autocorr, spectrum);
  return spectrum_from_lag_sums(autocorr, shot.amplitudes.squaredNorm(), n_sites, period);
}

double evaluate_F_at(const HarmonicSpectrum& spectrum, double z) {
  const double x = z / spectrum.period;
  const double frac = x - std::floor(x);
  double f = 1.0;
  for (const auto& e : spectrum.entries) {
    // Reduce n·frac before scaling by 2π to keep the cosine argument small.
    const double t = static_cast<double>(e.order) * frac;
    f += e.amplitude * std::cos(e.phase + kTwoPi * (t - std::floor(t)));
  }
  return f;
}

Eigen::VectorXd evaluate_F(const HarmonicSpectrum& spectrum, const Eigen::Ref<const Eigen::VectorXd>& z) {
  require_valid(spectrum, "HarmonicSpectrum");
  return z.unaryExpr([&](double zk) { return evaluate_F_at(spectrum, zk); });
}

Eigen::VectorXd evaluate_F(const HarmonicSpectrum& spectrum, const GridSpec& grid) {
  require_valid(grid, "GridSpec");
  return evaluate_F(spectrum, grid.points());
}

Eigen::VectorXd sample_F_period(const HarmonicSpectrum& spectrum, int samples_per_period) {
  if (samples_per_period <= spectrum.highest_order())
    throw ConfigError("sample_F_period: need more samples than the highest harmonic order");
  std::vector<cd> coeffs(static_cast<std::size_t>(samples_per_period), cd{0.0, 0.0});
  coeffs[0] = 1.0;
  for (const auto& e : spectrum.entries) coeffs[static_cast<std::size_t>(e.order)] += std::polar(e.amplitude, e.phase);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<cd> samples;
  fft.inv(samples, coeffs);
  Eigen::VectorXd out(samples_per_period);
  for (int k = 0; k < samples_per_period; ++k) out[k] = samples[static_cast<std::size_t>(k)].real();
  return out;
}

double coherent_F_at(int site_count, double z, double period) {
  const double n = static_cast<double>(site_count);
  const double x = z / period;
  double u = x - std::floor(x);  // [0, 1)
  // Distance to the nearest principal peak, in units of π·D.
  const double eps = std::numbers::pi * (u > 0.5 ? u - 1.0 : u);
  if (std::abs(std::sin(eps)) < 1e-8) return n * (1.0 - (n * n - 1.0) * eps * eps / 3.0);
  const double w = n * u;
  const double num = std::sin(std::numbers::pi * (w - 2.0 * std::floor(0.5 * w)));
  const double den = std::sin(std::numbers::pi * u);
  return num * num / (n * den * den);
}

Eigen::VectorXd coherent_F(int site_count, const GridSpec& grid, double period) {
  if (site_count < 1) throw ConfigError("coherent_F: N must be >= 1");
  require_valid(grid, "GridSpec");
  return grid.points().unaryExpr([&](double z) { return coherent_F_at(site_count, z, period); });
}

int min_samples_per_period(const HarmonicSpectrum& spectrum) {
  return 64 * (spectrum.highest_order() + 1);
}

namespace {

constexpr double kGolden = 0.6180339887498949;

// Golden-section search for the maximum of f on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tolerance) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tolerance) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

constexpr int kPolishCandidates = 4;

// Indices of the `count` largest circular local maxima of sign·v.
std::vector<Eigen::Index> best_local_peaks(const Eigen::VectorXd& v, double sign, int count) {
  const Eigen::Index m = v.size();
  std::vector<Eigen::Index> peaks;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double here = sign * v[k];
    if (here >= sign * v[(k + m - 1) % m] && here >= sign * v[(k + 1) % m]) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](Eigen::Index a, Eigen::Index b) { return sign * v[a] > sign * v[b]; });
  if (peaks.size() > static_cast<std::size_t>(count)) peaks.resize(static_cast<std::size_t>(count));
  return peaks;
}

}  // namespace

Extrema f_extrema(const HarmonicSpectrum& spectrum, int samples_per_period) {
  require_valid(spectrum, "HarmonicSpectrum");
  if (samples_per_period < min_samples_per_period(spectrum))
    throw ConfigError("f_extrema: samples_per_period must be >= 64 per harmonic order");

  const double period = spectrum.period;
  const Eigen::VectorXd samples = sample_F_period(spectrum, samples_per_period);
  const double cell = period / samples_per_period;
  const double tolerance = 1e-8 * cell;

  Extrema out;
  Eigen::Index kmax = 0, kmin = 0;
  out.max = samples.maxCoeff(&kmax);
  out.min = samples.minCoeff(&kmin);
  out.argmax = static_cast<double>(kmax) * cell;
  out.argmin = static_cast<double>(kmin) * cell;

  for (double sign : {1.0, -1.0}) {
    for (Eigen::Index k : best_local_peaks(samples, sign, kPolishCandidates)) {
      const double center = static_cast<double>(k) * cell;
      auto [z, value] = golden_max([&](double zz) { return sign * evaluate_F_at(spectrum, zz); },
                                   center - cell, center + cell, tolerance);
      value *= sign;
      const double wrapped = z - period * std::floor(z / period);
      if (sign > 0 && value > out.max) {
        out.max = value;
        out.argmax = wrapped;
      } else if (sign < 0 && value < out.min) {
        out.min = value;
        out.argmin = wrapped;
      }
    }
  }
  return out;
}

}  // namespace latticefringe
