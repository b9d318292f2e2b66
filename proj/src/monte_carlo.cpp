#include "latticefringe/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "latticefringe/parallel.hpp"
#include "latticefringe/physics_scales.hpp"

namespace latticefringe {

namespace {

constexpr int kHistogramBinsA1 = 40;
constexpr int kHistogramBinsB1 = 36;
constexpr double kMaxFailureFraction = 0.05;
// Above this N the lag sums go through the FFT autocorrelation.
constexpr int kDirectHarmonicsLimit = 512;

struct MeanAndError {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanAndError mean_and_error(const std::vector<double>& values) {
  MeanAndError out;
  const auto n = static_cast<double>(values.size());
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

double expected_period(const PhysicalParams& p) {
  return fringe_period(p.expansion_time, p.mass, p.lattice_period);
}

}  // namespace

Eigen::VectorXd site_amplitudes(int site_count, AmplitudeProfile profile) {
  if (site_count < 2) throw ConfigError("site_amplitudes: N must be >= 2");
  if (profile == AmplitudeProfile::uniform) return Eigen::VectorXd::Ones(site_count);
  return Eigen::VectorXd::NullaryExpr(site_count, [&](Eigen::Index i) {
    const double n = static_cast<double>(i + 1);
    return n * (site_count - n);
  });
}

EnsembleConfig EnsembleConfig::reference() { return EnsembleConfig{}; }

ValidationReport check(const EnsembleConfig& config) {
  ValidationReport r;
  if (config.trials < 1) r.violations.push_back("trials must be >= 1");
  if (config.site_count < 2) r.violations.push_back("site_count must be >= 2");
  if (config.phase_override &&
      static_cast<int>(config.phase_override->size()) != config.site_count)
    r.violations.push_back("phase_override length must equal site_count");
  r.merge(check(config.params));
  r.merge(check(config.grid));
  return r;
}

LatticeShot ensemble_shot(const EnsembleConfig& config, std::uint64_t trial_index) {
  Eigen::VectorXd phases;
  if (config.phase_override) {
    phases = Eigen::Map<const Eigen::VectorXd>(config.phase_override->data(),
                                               static_cast<Eigen::Index>(config.phase_override->size()));
  } else {
    PhaseStream stream(config.seed, trial_index);
    phases = sample_phases(config.site_count, stream);
  }
  return LatticeShot::make(site_amplitudes(config.site_count, config.amplitude_profile), std::move(phases));
}

EnsembleRun run_ensemble(const EnsembleConfig& config, int workers) {
  require_valid(config, "EnsembleConfig");
  const double period = expected_period(config.params);
  const double sigma = config.params.imaging_sigma();

  std::vector<TrialResult> results(static_cast<std::size_t>(config.trials));
  parallel_for_index(results.size(), workers, [&](std::size_t i) {
    TrialResult& out = results[i];
    out.trial = static_cast<std::int64_t>(i);
    const LatticeShot shot = ensemble_shot(config, i);

    const HarmonicSpectrum spectrum = harmonics_from_phases(shot, period);
    const Extrema extrema = f_extrema(spectrum, min_samples_per_period(spectrum));
    out.Fmax = extrema.max;
    out.Fmin = extrema.min;

    DensityProfile profile = synthesize_density(shot, config.params, config.grid, config.propagation);
    if (config.apply_convolution) profile = convolve_psf(profile, sigma);
    try {
      const FringeFit fit = fit_fringes(profile, period, true, config.fit);
      out.A1 = fit.amplitude;
      out.B1 = fit.phase;
      out.fit_ok = fit.converged;
    } catch (const NumericError&) {
      out.fit_ok = false;
    }
  });

  EnsembleRun run;
  EnsembleStats& stats = run.stats;
  stats.seed = config.seed;
  stats.histogram_A1 = Histogram{0.0, 2.0, std::vector<std::int64_t>(kHistogramBinsA1, 0)};
  stats.histogram_B1 = Histogram{0.0, kTwoPi, std::vector<std::int64_t>(kHistogramBinsB1, 0)};

  double sum_a = 0.0, sum_cos = 0.0, sum_sin = 0.0, sum_fmax = 0.0, sum_fmin = 0.0;
  for (const auto& t : results) {
    sum_fmax += t.Fmax;
    sum_fmin += t.Fmin;
    if (!t.fit_ok) {
      ++stats.failed_fits;
      continue;
    }
    ++stats.trials;
    sum_a += t.A1;
    sum_cos += std::cos(t.B1);
    sum_sin += std::sin(t.B1);
    stats.histogram_A1.add(t.A1);
    stats.histogram_B1.add(t.B1);
  }
  if (static_cast<double>(stats.failed_fits) > kMaxFailureFraction * config.trials || stats.trials == 0)
    throw NumericError("run_ensemble: " + std::to_string(stats.failed_fits) + " of " +
                       std::to_string(config.trials) + " fits failed");

  const auto accepted = static_cast<double>(stats.trials);
  stats.mean_A1 = sum_a / accepted;
  double ss = 0.0;
  for (const auto& t : results)
    if (t.fit_ok) ss += (t.A1 - stats.mean_A1) * (t.A1 - stats.mean_A1);
  stats.std_A1 = stats.trials > 1 ? std::sqrt(ss / (accepted - 1.0)) : 0.0;
  stats.circular_mean_B1 = wrap_phase(std::atan2(sum_sin, sum_cos));
  stats.circular_resultant_length_B1 = std::min(1.0, std::hypot(sum_cos, sum_sin) / accepted);
  stats.mean_Fmax = sum_fmax / config.trials;
  stats.mean_Fmin = sum_fmin / config.trials;

  run.trials = std::move(results);
  return run;
}

AveragedProfile average_profiles(const EnsembleConfig& config, int shot_count, std::uint64_t first_trial,
                                 int workers) {
  require_valid(config, "EnsembleConfig");
  if (shot_count < 1) throw ConfigError("average_profiles: M must be >= 1");
  const double period = expected_period(config.params);
  const double sigma = config.params.imaging_sigma();

  std::vector<Eigen::VectorXd> normalized(static_cast<std::size_t>(shot_count));
  parallel_for_index(normalized.size(), workers, [&](std::size_t i) {
    const LatticeShot shot = ensemble_shot(config, first_trial + i);
    DensityProfile profile = synthesize_density(shot, config.params, config.grid, config.propagation);
    if (config.apply_convolution) profile = convolve_psf(profile, sigma);
    normalized[i] = profile.values / (profile.values.sum() * profile.grid_step);
  });

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(config.grid.point_count);
  for (const auto& v : normalized) sum += v;

  AveragedProfile out;
  out.profile = DensityProfile::make(config.grid.z_min, config.grid.step(), sum / shot_count);
  const FringeFit fit = fit_fringes(out.profile, period, false, config.fit);
  out.residual_A1 = extract_harmonic(out.profile, fit.envelope, 1, period).amplitude;
  return out;
}

std::vector<ScalingRow> scaling_study(std::span<const int> site_counts, int trials, std::uint64_t seed,
                                      int workers) {
  if (trials < 1) throw ConfigError("scaling_study: trials must be >= 1");
  std::vector<ScalingRow> table;
  for (int n_sites : site_counts) {
    if (n_sites < 2) throw ConfigError("scaling_study: each N must be >= 2");
    std::vector<double> fmax(static_cast<std::size_t>(trials));
    std::vector<double> fmin(fmax.size());
    std::vector<double> a1sq(fmax.size());
    parallel_for_index(fmax.size(), workers, [&](std::size_t i) {
      PhaseStream stream(seed, (static_cast<std::uint64_t>(n_sites) << 32) | i);
      const LatticeShot shot = LatticeShot::uniform(sample_phases(n_sites, stream));
      const HarmonicSpectrum spectrum = n_sites <= kDirectHarmonicsLimit
                                            ? harmonics_from_phases(shot, 1.0)
                                            : harmonics_from_phases_fft(shot, 1.0);
      const Extrema e = f_extrema(spectrum, min_samples_per_period(spectrum));
      fmax[i] = e.max;
      fmin[i] = e.min;
      a1sq[i] = spectrum.entries.front().amplitude * spectrum.entries.front().amplitude;
    });
    ScalingRow row;
    row.site_count = n_sites;
    row.trials = trials;
    const auto mx = mean_and_error(fmax), mn = mean_and_error(fmin), a = mean_and_error(a1sq);
    row.Fmax_mean = mx.mean;
    row.Fmax_stderr = mx.stderr_;
    row.Fmin_mean = mn.mean;
    row.Fmin_stderr = mn.stderr_;
    row.A1sq_mean = a.mean;
    row.A1sq_stderr = a.stderr_;
    table.push_back(row);
  }
  return table;
}

double mott_Cn_analytic(int site_count, int order) {
  if (site_count < 2 || order < 1 || order > site_count - 1)
    throw ConfigError("mott_Cn_analytic: need N >= 2 and 1 <= n <= N-1");
  const double n_sites = site_count;
  return 4.0 * (n_sites - order) / (n_sites * (n_sites - 1.0));
}

DetectionSet sample_detections(const DensityProfile& profile, int count, PhaseStream& stream) {
  Eigen::VectorXd cdf(profile.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < profile.size(); ++i) {
    running += std::max(0.0, profile.values[i]);
    cdf[i] = running;
  }
  if (!(running > 0.0)) throw NumericError("sample_detections: profile has no mass");
  DetectionSet set;
  set.coordinates.reserve(static_cast<std::size_t>(count));
  const double* begin = cdf.data();
  const double* end = begin + cdf.size();
  for (int k = 0; k < count; ++k) {
    const double target = stream.next_unit() * running;
    const Eigen::Index cell = std::min<Eigen::Index>(std::upper_bound(begin, end, target) - begin, cdf.size() - 1);
    const double below = cell > 0 ? cdf[cell - 1] : 0.0;
    const double mass = cdf[cell] - below;
    const double within = mass > 0.0 ? (target - below) / mass : 0.5;
    set.coordinates.push_back(profile.z[cell] + (within - 0.5) * profile.grid_step);
  }
  return set;
}

MottEstimate mott_Cn_sampled(int site_count, int order, int shots, std::uint64_t seed,
                             const PhysicalParams& params, const GridSpec& grid, Propagation propagation,
                             int workers) {
  if (site_count < 2 || order < 1 || order > site_count - 1)
    throw ConfigError("mott_Cn_sampled: need N >= 2 and 1 <= n <= N-1");
  if (shots < 100) throw ConfigError("mott_Cn_sampled: need at least 100 shots");
  require_valid(params, "PhysicalParams");
  require_valid(grid, "GridSpec");
  const double period = expected_period(params);
  if (grid.step() > period / 32.0) throw ConfigError("mott_Cn_sampled: grid step must be <= D/32");

  const double wave = kTwoPi * order / period;
  const double prefactor = 4.0 / (static_cast<double>(site_count) * (site_count - 1.0));
  std::vector<double> re(static_cast<std::size_t>(shots)), im(re.size());
  parallel_for_index(re.size(), workers, [&](std::size_t s) {
    PhaseStream stream(seed, s);
    const LatticeShot shot = LatticeShot::uniform(sample_phases(site_count, stream));
    const DensityProfile profile = synthesize_density(shot, params, grid, propagation);
    const DetectionSet atoms = sample_detections(profile, site_count, stream);
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t j = 0; j < atoms.coordinates.size(); ++j)
      for (std::size_t k = 0; k < atoms.coordinates.size(); ++k)
        if (j != k) sum += std::polar(1.0, wave * (atoms.coordinates[j] - atoms.coordinates[k]));
    re[s] = prefactor * sum.real();
    im[s] = prefactor * sum.imag();
  });

  MottEstimate est;
  const auto r = mean_and_error(re), i = mean_and_error(im);
  est.real = r.mean;
  est.real_stderr = r.stderr_;
  est.imag = i.mean;
  est.imag_stderr = i.stderr_;
  est.shots = shots;
  est.coherent_target = 4.0 * (site_count - order) / (static_cast<double>(site_count) * site_count);
  est.mott_target = mott_Cn_analytic(site_count, order);
  const bool coherent = std::abs(est.real - est.coherent_target) <= 3.0 * est.real_stderr;
  const bool mott = std::abs(est.real - est.mott_target) <= 3.0 * est.real_stderr;
  est.matches = coherent && mott ? "both" : coherent ? "coherent" : mott ? "mott" : "neither";
  return est;
}

}  // namespace latticefringe
