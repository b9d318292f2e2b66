#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "latticefringe/density_synthesis.hpp"
#include "latticefringe/physics_scales.hpp"
#include "latticefringe/rng.hpp"

using namespace latticefringe;

namespace {

constexpr double kPi = std::numbers::pi;

double reference_period() {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  return fringe_period(p.expansion_time, p.mass, p.lattice_period);
}

LatticeShot random_shot(int n, std::uint64_t seed, std::uint64_t trial = 0) {
  PhaseStream stream(seed, trial);
  return LatticeShot::uniform(sample_phases(n, stream));
}

// Uniform grid over [0, D) with m points, as a vector.
Eigen::VectorXd period_points(double period, int m) {
  return Eigen::VectorXd::LinSpaced(m, 0.0, period * (m - 1) / m);
}

}  // namespace

TEST_CASE("sites are centered on the origin") {
  const Eigen::VectorXd z = site_positions(4, 2.0);
  CHECK(z[0] == doctest::Approx(-3.0));
  CHECK(z[3] == doctest::Approx(3.0));
  CHECK(site_positions(5, 1.0).sum() == doctest::Approx(0.0));
}

TEST_CASE("single site gives a Gaussian of 1/e half-width Z0/sqrt2") {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  const double z0 = expansion_width(p.expansion_time, p.mass, p.onsite_width);
  const GridSpec grid{-400e-6, 400e-6, 4001};
  const LatticeShot shot = LatticeShot::make(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 2.3));
  const DensityProfile d = synthesize_density(shot, p, grid);
  const Eigen::VectorXd z = grid.points();
  for (Eigen::Index k = 0; k < z.size(); k += 97)
    CHECK(d.values[k] == doctest::Approx(std::exp(-2.0 * z[k] * z[k] / (z0 * z0))).epsilon(1e-12));
  Eigen::Index peak = 0;
  d.values.maxCoeff(&peak);
  CHECK(z[peak] == doctest::Approx(0.0));
}

TEST_CASE("two in-phase sites give unit visibility at the center") {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  const double D = reference_period();
  const GridSpec grid{-0.5 * D, 0.5 * D, 2001};
  const DensityProfile d = synthesize_density(LatticeShot::uniform(Eigen::VectorXd::Zero(2)), p, grid);
  const double vmax = d.values.maxCoeff(), vmin = d.values.minCoeff();
  CHECK((vmax - vmin) / (vmax + vmin) > 0.99);
}

TEST_CASE("coherent Thomas-Fermi array gives peaks spaced by D") {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  const double D = reference_period();
  CHECK(D == doctest::Approx(37.4e-6).epsilon(0.005));
  const int n = 30;
  Eigen::VectorXd amps(n);
  for (int i = 0; i < n; ++i) amps[i] = (i + 1.0) * (n - i - 1.0);
  const GridSpec grid{-2.5 * D, 2.5 * D, 5001};
  const DensityProfile d =
      synthesize_density(LatticeShot::make(amps, Eigen::VectorXd::Zero(n)), p, grid, Propagation::far_field);
  std::vector<double> peaks;
  for (Eigen::Index k = 1; k + 1 < d.size(); ++k)
    if (d.values[k] > d.values[k - 1] && d.values[k] >= d.values[k + 1] && d.values[k] > 0.05 * d.values.maxCoeff())
      peaks.push_back(d.z[k]);
  REQUIRE(peaks.size() == 5);
  for (std::size_t i = 0; i < peaks.size(); ++i)
    CHECK(std::abs(peaks[i] - (static_cast<double>(i) - 2.0) * D) <= 1.5 * d.grid_step);
}

TEST_CASE("coherent phasor sums") {
  const int n = 30;
  const HarmonicSpectrum s = harmonics_from_phases(LatticeShot::uniform(Eigen::VectorXd::Zero(n)), 1.0);
  REQUIRE(s.entries.size() == static_cast<std::size_t>(n - 1));
  for (const auto& e : s.entries) {
    CHECK(e.amplitude == doctest::Approx(2.0 * (n - e.order) / n).epsilon(1e-14));
    CHECK(std::min(e.phase, kTwoPi - e.phase) < 1e-14);
  }
  CHECK(s.entries.front().amplitude == doctest::Approx(58.0 / 30.0));

  Eigen::VectorXd alternating(n);
  for (int i = 0; i < n; ++i) alternating[i] = (i + 1) * kPi;
  const HarmonicSpectrum a = harmonics_from_phases(LatticeShot::uniform(alternating), 1.0);
  CHECK(a.entries[0].phase == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(a.entries[0].amplitude == doctest::Approx(2.0 * (n - 1) / n).epsilon(1e-12));
}

TEST_CASE("mean square first harmonic for random phases") {
  const int n = 30, draws = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double a = harmonics_from_phases(random_shot(n, 11, i), 1.0).entries[0].amplitude;
    sum += a * a;
    sum_sq += a * a * a * a;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / (draws - 1));
  CHECK(std::abs(mean - 4.0 * 29.0 / 900.0) < 3.0 * se);
}

TEST_CASE("evaluate_F special cases") {
  HarmonicSpectrum empty{2.0, {}, 1};
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(11, -3.0, 3.0);
  CHECK((evaluate_F(empty, z).array() == 1.0).all());

  HarmonicSpectrum one{2.0, {{1, 0.5, 0.0}}, 2};
  const Eigen::VectorXd f = evaluate_F(one, GridSpec{-2.0, 2.0, 801});
  CHECK(f.maxCoeff() == doctest::Approx(1.5));
  CHECK(f.minCoeff() == doctest::Approx(0.5));
  CHECK(evaluate_F_at(one, 0.5) == doctest::Approx(1.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("coherent spectrum reproduces the grating closed form") {
  const int n = 30;
  const double D = 37.4e-6;
  const HarmonicSpectrum s = harmonics_from_phases(LatticeShot::uniform(Eigen::VectorXd::Zero(n)), D);
  const GridSpec grid{-1.5 * D, 1.5 * D, 3001};
  const Eigen::VectorXd f = evaluate_F(s, grid);
  const Eigen::VectorXd g = coherent_F(n, grid, D);
  for (Eigen::Index k = 0; k < f.size(); ++k) CHECK(std::abs(f[k] - g[k]) <= 1e-9 * std::max(1.0, g[k]));
}

TEST_CASE("closed form values") {
  const double D = 37.4e-6;
  CHECK(coherent_F_at(30, 0.0, D) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(coherent_F_at(30, 3.0 * D, D) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(std::abs(coherent_F_at(30, 0.5 * D, D)) < 1e-12);
  CHECK(coherent_F_at(2, 0.25 * D, D) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(coherent_F_at(7, 1e-13 * D, D) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(coherent_F_at(1, 0.3 * D, D) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("extrema of simple spectra") {
  const HarmonicSpectrum coherent = harmonics_from_phases(LatticeShot::uniform(Eigen::VectorXd::Zero(30)), 1.0);
  const Extrema e = f_extrema(coherent, min_samples_per_period(coherent));
  CHECK(std::abs(e.max - 30.0) < 1e-6);
  CHECK(e.min <= 1e-6);
  CHECK(std::min(e.argmax, 1.0 - e.argmax) < 1e-6);

  const HarmonicSpectrum one{1.0, {{1, 0.5, 0.0}}, 2};
  const Extrema o = f_extrema(one, min_samples_per_period(one));
  CHECK(o.max == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(o.min == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(o.argmin == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(f_extrema(one, 64), ConfigError);
}

TEST_CASE("extrema agree with dense brute-force sampling") {
  for (int trial = 0; trial < 5; ++trial) {
    const HarmonicSpectrum s = harmonics_from_phases(random_shot(20, 5, trial), 1.0);
    const Extrema e = f_extrema(s, min_samples_per_period(s));
    const Eigen::VectorXd dense = evaluate_F(s, period_points(1.0, 200000));
    CHECK(e.max >= dense.maxCoeff() - 1e-12);
    CHECK(e.max - dense.maxCoeff() < 1e-6);
    CHECK(e.min <= dense.minCoeff() + 1e-12);
    CHECK(dense.minCoeff() - e.min < 1e-6);
    CHECK(evaluate_F_at(s, e.argmax) == doctest::Approx(e.max).epsilon(1e-12));
  }
}

TEST_CASE("period average of F is one and Parseval holds") {
  for (int trial = 0; trial < 10; ++trial) {
    const LatticeShot shot = random_shot(2 + 7 * trial, 3, trial);
    const HarmonicSpectrum s = harmonics_from_phases(shot, 2.5);
    const int m = 4 * (s.highest_order() + 1);
    const Eigen::VectorXd f = evaluate_F(s, period_points(2.5, m));
    CHECK(f.mean() == doctest::Approx(1.0).epsilon(1e-10));
    double parseval = 1.0;
    for (const auto& e : s.entries) parseval += 0.5 * e.amplitude * e.amplitude;
    CHECK(f.squaredNorm() / m == doctest::Approx(parseval).epsilon(1e-10));
    const Eigen::VectorXd fft = sample_F_period(s, m);
    CHECK((fft - f).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("global phase invariance") {
  const LatticeShot shot = random_shot(25, 8);
  const LatticeShot shifted = LatticeShot::make(shot.amplitudes, shot.phases.array() + 1.234);
  const HarmonicSpectrum a = harmonics_from_phases(shot, 1.0), b = harmonics_from_phases(shifted, 1.0);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(std::abs(a.entries[i].amplitude - b.entries[i].amplitude) < 1e-12);
    const double dphi = std::remainder(a.entries[i].phase - b.entries[i].phase, kTwoPi);
    CHECK(std::abs(dphi) < 1e-12 / std::max(a.entries[i].amplitude, 1e-3));
  }
}

TEST_CASE("linear phase ramp shifts B_n by n delta and translates F") {
  const double delta = 0.7, D = 3.0;
  const LatticeShot shot = random_shot(25, 9);
  Eigen::VectorXd ramp = shot.phases;
  for (Eigen::Index j = 0; j < ramp.size(); ++j) ramp[j] += static_cast<double>(j + 1) * delta;
  const HarmonicSpectrum a = harmonics_from_phases(shot, D);
  const HarmonicSpectrum b = harmonics_from_phases(LatticeShot::make(shot.amplitudes, ramp), D);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(std::abs(a.entries[i].amplitude - b.entries[i].amplitude) < 1e-12);
    const double expected = a.entries[i].phase + a.entries[i].order * delta;
    CHECK(std::abs(std::remainder(b.entries[i].phase - expected, kTwoPi)) < 1e-9);
  }
  for (double z : {-1.0, 0.0, 0.37, 2.2})
    CHECK(evaluate_F_at(b, z) == doctest::Approx(evaluate_F_at(a, z + delta * D / kTwoPi)).epsilon(1e-9));
}

TEST_CASE("FFT and direct lag sums agree for weighted shots") {
  for (int n : {2, 17, 64, 257}) {
    PhaseStream stream(4, static_cast<std::uint64_t>(n));
    Eigen::VectorXd amps(n);
    for (int i = 0; i < n; ++i) amps[i] = 0.5 + stream.next_unit();
    const LatticeShot shot = LatticeShot::make(amps, sample_phases(n, stream));
    const HarmonicSpectrum a = harmonics_from_phases(shot, 1.0), b = harmonics_from_phases_fft(shot, 1.0);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(std::abs(a.entries[i].amplitude - b.entries[i].amplitude) < 1e-12);
      const std::complex<double> za = std::polar(a.entries[i].amplitude, a.entries[i].phase);
      const std::complex<double> zb = std::polar(b.entries[i].amplitude, b.entries[i].phase);
      CHECK(std::abs(za - zb) < 1e-12);
    }
  }
}

TEST_CASE("exact propagation reduces to envelope times F(-z) in the far field") {
  // Long expansion: N d and l are both far below Z0 and sqrt(hbar t / m).
  PhysicalParams p = PhysicalParams::rubidium_reference();
  p.expansion_time = 100.0;
  const int n = 5;
  const double D = fringe_period(p.expansion_time, p.mass, p.lattice_period);
  const double z0 = expansion_width(p.expansion_time, p.mass, p.onsite_width);
  CHECK(n * p.lattice_period / z0 < 1e-4);
  for (int trial = 0; trial < 5; ++trial) {
    const LatticeShot shot = random_shot(n, 21, trial);
    const HarmonicSpectrum s = harmonics_from_phases(shot, D);
    const GridSpec grid{-1.5 * D, 1.5 * D, 1201};
    const DensityProfile d = synthesize_density(shot, p, grid);
    const Eigen::VectorXd z = grid.points();
    Eigen::VectorXd ratio(z.size()), f(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      ratio[k] = d.values[k] / (n * std::exp(-2.0 * z[k] * z[k] / (z0 * z0)));
      f[k] = evaluate_F_at(s, -z[k]);
    }
    CHECK((ratio - f).cwiseAbs().maxCoeff() < 0.02 * f.maxCoeff());
    const DensityProfile far = synthesize_density(shot, p, grid, Propagation::far_field);
    CHECK((far.values - d.values).cwiseAbs().maxCoeff() < 1e-3 * d.values.maxCoeff());
  }
}
