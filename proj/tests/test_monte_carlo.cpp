#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "latticefringe/monte_carlo.hpp"
#include "latticefringe/physics_scales.hpp"

using namespace latticefringe;

namespace {

double reference_period() {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  return fringe_period(p.expansion_time, p.mass, p.lattice_period);
}

bool same_trials(const std::vector<TrialResult>& a, const std::vector<TrialResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].trial != b[i].trial || a[i].A1 != b[i].A1 || a[i].B1 != b[i].B1 || a[i].Fmax != b[i].Fmax ||
        a[i].Fmin != b[i].Fmin || a[i].fit_ok != b[i].fit_ok)
      return false;
  return true;
}

}  // namespace

TEST_CASE("site amplitude profiles") {
  const Eigen::VectorXd tf = site_amplitudes(5, AmplitudeProfile::thomas_fermi);
  CHECK(tf[0] == 4.0);
  CHECK(tf[1] == 6.0);
  CHECK(tf[2] == 6.0);
  CHECK(tf[4] == 0.0);
  CHECK((site_amplitudes(5, AmplitudeProfile::uniform).array() == 1.0).all());
}

TEST_CASE("ensemble results are bit-identical for any worker count") {
  EnsembleConfig config = EnsembleConfig::reference();
  config.trials = 24;
  config.seed = 99;
  const EnsembleRun one = run_ensemble(config, 1);
  for (int workers : {2, 4}) {
    const EnsembleRun many = run_ensemble(config, workers);
    CHECK(same_trials(one.trials, many.trials));
    CHECK(one.stats.mean_A1 == many.stats.mean_A1);
    CHECK(one.stats.std_A1 == many.stats.std_A1);
    CHECK(one.stats.circular_mean_B1 == many.stats.circular_mean_B1);
    CHECK(one.stats.mean_Fmax == many.stats.mean_Fmax);
    CHECK(one.stats.histogram_A1.counts == many.stats.histogram_A1.counts);
  }
  config.seed = 100;
  CHECK_FALSE(same_trials(one.trials, run_ensemble(config, 1).trials));
}

TEST_CASE("a single coherent trial returns the blurred coherent first harmonic") {
  EnsembleConfig config = EnsembleConfig::reference();
  config.trials = 1;
  config.phase_override = std::vector<double>(30, 0.0);
  config.propagation = Propagation::far_field;
  const EnsembleRun run = run_ensemble(config, 1);
  REQUIRE(run.stats.trials == 1);
  const double D = reference_period();
  const double sigma = config.params.imaging_sigma();
  const LatticeShot shot = ensemble_shot(config, 0);
  const double s1 = harmonics_from_phases(shot, D).entries.front().amplitude;
  const double expected = s1 * std::exp(-2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma / (D * D));
  CHECK(run.trials[0].A1 == doctest::Approx(expected).epsilon(0.02));
  CHECK(std::abs(std::remainder(run.trials[0].B1, kTwoPi)) < 0.01);
}

TEST_CASE("reference ensemble: uniform fringe phases and consistent bookkeeping") {
  const EnsembleConfig config = EnsembleConfig::reference();
  const EnsembleRun run = run_ensemble(config, 2);
  CHECK(check(run.stats).ok());
  CHECK(run.stats.trials + run.stats.failed_fits == 1000);
  CHECK(run.stats.circular_resultant_length_B1 < 0.06);
  CHECK(run.stats.histogram_A1.total() == run.stats.trials);
  CHECK(run.stats.histogram_B1.total() == run.stats.trials);
  CHECK(run.stats.mean_Fmax > 1.0);
  CHECK(run.stats.mean_Fmin >= 0.0);
}

TEST_CASE("averaging a single shot keeps its fringe; averaging many removes it") {
  EnsembleConfig config = EnsembleConfig::reference();
  double single_sum = 0.0;
  for (std::uint64_t i = 0; i < 40; ++i) single_sum += average_profiles(config, 1, i).residual_A1;
  config.trials = 40;
  const EnsembleRun run = run_ensemble(config, 1);
  CHECK(std::abs(single_sum / 40.0 - run.stats.mean_A1) < 0.02);

  const AveragedProfile one = average_profiles(config, 1, 7);
  CHECK(one.profile.values.sum() * one.profile.grid_step == doctest::Approx(1.0).epsilon(1e-12));

  const AveragedProfile many = average_profiles(config, 200, 0, 2);
  CHECK(many.residual_A1 < 0.05);
  CHECK((many.profile.values - average_profiles(config, 200, 0, 1).profile.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("first-harmonic power matches 4(N-1)/N^2 at N = 30") {
  const std::array<int, 1> n{30};
  const auto rows = scaling_study(n, 4000, 5);
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0].A1sq_mean - 4.0 * 29.0 / 900.0) < 3.0 * rows[0].A1sq_stderr);
  const auto again = scaling_study(n, 4000, 5, 3);
  CHECK(again[0].Fmax_mean == rows[0].Fmax_mean);
  CHECK(again[0].Fmin_mean == rows[0].Fmin_mean);
}

TEST_CASE("unblurred first-harmonic amplitude is Rayleigh distributed") {
  const int n = 30, draws = 10000;
  std::vector<double> a(draws);
  for (int i = 0; i < draws; ++i) {
    PhaseStream stream(31, static_cast<std::uint64_t>(i));
    a[static_cast<std::size_t>(i)] =
        harmonics_from_phases(LatticeShot::uniform(sample_phases(n, stream)), 1.0).entries[0].amplitude;
  }
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= draws;
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (draws - 1));
  const double c1 = 4.0 * (n - 1) / (n * n);
  CHECK(mean == doctest::Approx(std::sqrt(std::numbers::pi * c1) / 2.0).epsilon(0.05));
  CHECK(sd == doctest::Approx(std::sqrt((4.0 - std::numbers::pi) * c1 / 4.0)).epsilon(0.05));
  CHECK(mean == doctest::Approx(0.318).epsilon(0.05));
  CHECK(sd == doctest::Approx(0.166).epsilon(0.05));
}

TEST_CASE("averaged two-site patterns versus a many-site single shot") {
  // Harmonic content of a period-sampled contrast function, via FFT.
  auto harmonic_moduli = [](const Eigen::VectorXd& f) {
    Eigen::FFT<double> fft;
    std::vector<double> in(f.data(), f.data() + f.size());
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);
    std::vector<double> mod(out.size() / 2);
    for (std::size_t k = 1; k < mod.size(); ++k) mod[k] = 2.0 * std::abs(out[k]) / static_cast<double>(f.size());
    return mod;
  };
  const int m_samples = 128;
  const Eigen::VectorXd cell = Eigen::VectorXd::LinSpaced(m_samples, 0.0, (m_samples - 1.0) / m_samples);

  std::vector<double> rms;
  for (int m : {10, 40, 160}) {
    const int repeats = 300;
    double power = 0.0, higher = 0.0;
    for (int r = 0; r < repeats; ++r) {
      Eigen::VectorXd avg = Eigen::VectorXd::Zero(m_samples);
      for (int k = 0; k < m; ++k) {
        PhaseStream stream(41, static_cast<std::uint64_t>(r) * 1000 + static_cast<std::uint64_t>(k));
        const HarmonicSpectrum s = harmonics_from_phases(LatticeShot::uniform(sample_phases(2, stream)), 1.0);
        REQUIRE(s.entries.size() == 1);
        CHECK(s.entries[0].amplitude == doctest::Approx(1.0));
        avg += evaluate_F(s, cell);
      }
      avg /= m;
      const auto mod = harmonic_moduli(avg);
      power += mod[1] * mod[1];
      for (std::size_t k = 2; k < mod.size(); ++k) higher = std::max(higher, mod[k]);
    }
    CHECK(higher < 1e-12);
    rms.push_back(std::sqrt(power / repeats));
  }
  CHECK(rms[0] * std::sqrt(10.0) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(rms[1] / rms[0] == doctest::Approx(0.5).epsilon(0.15));
  CHECK(rms[2] / rms[0] == doctest::Approx(0.25).epsilon(0.15));

  PhaseStream stream(42, 0);
  const HarmonicSpectrum single = harmonics_from_phases(LatticeShot::uniform(sample_phases(30, stream)), 1.0);
  const auto mod = harmonic_moduli(evaluate_F(single, cell));
  int nonzero = 0;
  for (std::size_t k = 1; k < mod.size(); ++k)
    if (mod[k] > 1e-9) ++nonzero;
  CHECK(nonzero == 29);
}

TEST_CASE("Mott harmonic content, closed form") {
  CHECK(mott_Cn_analytic(30, 1) == doctest::Approx(116.0 / 870.0).epsilon(1e-15));
  CHECK(mott_Cn_analytic(2, 1) == doctest::Approx(2.0));
  for (int n : {3, 10, 30}) CHECK(mott_Cn_analytic(n, n - 1) == doctest::Approx(4.0 / (n * (n - 1.0))));
  CHECK_THROWS_AS(mott_Cn_analytic(30, 30), ConfigError);
}

TEST_CASE("detections follow the profile") {
  const int count = 200000;
  Eigen::VectorXd v(101);
  for (int i = 0; i <= 100; ++i) v[i] = i;  // linear ramp on [0, 1]
  const DensityProfile ramp = DensityProfile::make(0.0, 0.01, v);
  PhaseStream stream(3, 0);
  const DetectionSet set = sample_detections(ramp, count, stream);
  double mean = 0.0;
  for (double z : set.coordinates) mean += z;
  mean /= count;
  // Cell-wise constant density c_i on [z_i - h/2, z_i + h/2]: mean is Σ c_i z_i / Σ c_i.
  CHECK(mean == doctest::Approx(v.dot(ramp.z) / v.sum()).epsilon(0.005));
  CHECK(*std::min_element(set.coordinates.begin(), set.coordinates.end()) >= -0.005);
}

TEST_CASE("sampled Mott estimator converges to the coherent target") {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  const double D = reference_period();
  const GridSpec grid{-400e-6, 400e-6, static_cast<int>(std::ceil(800e-6 / (D / 40.0))) + 1};

  const MottEstimate two = mott_Cn_sampled(2, 1, 10000, 1, p, grid, Propagation::exact, 2);
  CHECK(std::abs(two.real - two.coherent_target) <= 3.0 * two.real_stderr);
  CHECK(two.coherent_target == doctest::Approx(1.0));
  CHECK(two.mott_target == doctest::Approx(2.0));
  CHECK(two.matches == "coherent");
  CHECK(std::abs(two.imag) <= 3.0 * two.imag_stderr + 1e-12);

  const MottEstimate thirty = mott_Cn_sampled(30, 1, 4000, 2, p, grid, Propagation::exact, 2);
  CHECK(std::abs(thirty.real - 4.0 * 29.0 / 900.0) <= 3.0 * thirty.real_stderr);
  CHECK(std::abs(thirty.imag) <= 3.0 * thirty.imag_stderr + 1e-12);

  const MottEstimate serial = mott_Cn_sampled(30, 1, 200, 2, p, grid, Propagation::exact, 1);
  const MottEstimate parallel = mott_Cn_sampled(30, 1, 200, 2, p, grid, Propagation::exact, 3);
  CHECK(serial.real == parallel.real);
  CHECK_THROWS_AS(mott_Cn_sampled(30, 1, 50, 2, p, grid), ConfigError);
}
