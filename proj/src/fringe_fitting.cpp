#include "latticefringe/fringe_fitting.hpp"

#include <algorithm>
#include <cmath>

namespace latticefringe {

ValidationReport check(const Image2D& image) {
  ValidationReport r;
  auto uniform_axis = [&](const Eigen::VectorXd& axis, const char* name) {
    if (axis.size() < 1) {
      r.violations.push_back(std::string(name) + " is empty");
      return;
    }
    if (axis.size() < 2) return;
    const double step = axis[1] - axis[0];
    if (!(step > 0.0)) {
      r.violations.push_back(std::string(name) + " must be strictly increasing");
      return;
    }
    for (Eigen::Index i = 1; i < axis.size(); ++i)
      if (std::abs(axis[i] - axis[i - 1] - step) > 1e-9 * step) {
        r.violations.push_back(std::string(name) + " must be uniform");
        return;
      }
  };
  uniform_axis(image.r_grid, "r_grid");
  uniform_axis(image.z_grid, "z_grid");
  if (image.values.rows() != image.r_grid.size() || image.values.cols() != image.z_grid.size())
    r.violations.push_back("image shape does not match axes");
  else if (!image.values.allFinite() || (image.values.array() < 0.0).any())
    r.violations.push_back("image values must be finite and non-negative");
  return r;
}

DensityProfile convolve_psf(const DensityProfile& profile, double sigma) {
  require_valid(profile, "DensityProfile");
  if (!(sigma >= 0.0)) throw ConfigError("convolve_psf: sigma must be >= 0");
  if (sigma == 0.0) return profile;
  const double step = profile.grid_step;
  if (!(step < sigma / 4.0)) throw ConfigError("convolve_psf: grid step must be below sigma/4");

  const auto half = static_cast<Eigen::Index>(std::floor(6.0 * sigma / step));
  Eigen::VectorXd kernel(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) * step / sigma;
    kernel[k + half] = std::exp(-0.5 * u * u);
  }
  kernel /= kernel.sum();

  const Eigen::Index n = profile.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = profile.values[i];
    if (v == 0.0) continue;
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    double weight = 1.0;
    if (i - half < 0 || i + half > n - 1) weight = kernel.segment(lo - i + half, hi - lo + 1).sum();
    const double scale = v / weight;
    for (Eigen::Index j = lo; j <= hi; ++j) out[j] += scale * kernel[j - i + half];
  }
  out = out.cwiseMax(0.0);
  DensityProfile result = profile;
  result.values = std::move(out);
  return result;
}

DensityProfile radial_average(const Image2D& image, double band_halfwidth) {
  require_valid(image, "Image2D");
  if (!(band_halfwidth >= 0.0)) throw ConfigError("radial_average: band half-width must be >= 0");
  // A grid starting at r >= 0 is a radius; otherwise the band must fit on both sides.
  const double r_min = image.r_grid.minCoeff();
  if (band_halfwidth > image.r_grid.maxCoeff() || (r_min < 0.0 && -band_halfwidth < r_min))
    throw ConfigError("radial_average: band does not fit inside the radial extent");
  if (image.z_grid.size() < 2) throw ConfigError("radial_average: need at least two z columns");

  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(image.z_grid.size());
  int rows = 0;
  for (Eigen::Index i = 0; i < image.r_grid.size(); ++i) {
    if (std::abs(image.r_grid[i]) <= band_halfwidth) {
      sum += image.values.row(i);
      ++rows;
    }
  }
  if (rows == 0) throw ConfigError("radial_average: no rows inside the band");
  DensityProfile profile;
  profile.z = image.z_grid;
  profile.values = sum.transpose() / rows;
  profile.grid_step = image.z_grid[1] - image.z_grid[0];
  require_valid(profile, "DensityProfile");
  return profile;
}

Envelope moment_envelope(const DensityProfile& profile) {
  const double mass = profile.values.sum();
  if (!(mass > 0.0)) throw NumericError("moment_envelope: profile has no mass");
  const double center = profile.values.dot(profile.z) / mass;
  const double variance = profile.values.dot((profile.z.array() - center).square().matrix()) / mass;
  Envelope env;
  env.center = center;
  env.width = std::sqrt(variance);
  env.height = mass * profile.grid_step / (env.width * std::sqrt(kTwoPi));
  return env;
}

namespace {

// Least-squares harmonic projection on the samples with lo ≤ z ≤ hi.
HarmonicEstimate project_harmonic(const DensityProfile& profile, const Envelope& envelope, int order,
                                  double period, double lo, double hi) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < profile.size(); ++i)
    if (profile.z[i] >= lo && profile.z[i] <= hi) rows.push_back(i);
  const auto cols = static_cast<Eigen::Index>(2 * order + 1);
  if (static_cast<Eigen::Index>(rows.size()) < 2 * cols)
    throw NumericError("extract_harmonic: too few samples in the analysis window");

  Eigen::MatrixXd basis(static_cast<Eigen::Index>(rows.size()), cols);
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double z = profile.z[rows[r]];
    const double g = envelope(z);
    if (!(g > 0.0)) throw NumericError("extract_harmonic: envelope vanishes inside the window");
    const auto row = static_cast<Eigen::Index>(r);
    target[row] = profile.values[rows[r]] / g;
    basis(row, 0) = 1.0;
    const double x = z / period;
    for (int k = 1; k <= order; ++k) {
      const double t = k * x;
      const double theta = kTwoPi * (t - std::floor(t));
      basis(row, 2 * k - 1) = std::cos(theta);
      basis(row, 2 * k) = std::sin(theta);
    }
  }
  const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(target);
  const double a = coef[2 * order - 1];
  const double b = coef[2 * order];
  if (!(std::abs(coef[0]) > 0.0)) throw NumericError("extract_harmonic: zero mean level");
  HarmonicEstimate est;
  est.amplitude = std::hypot(a, b) / std::abs(coef[0]);
  est.phase = wrap_phase(std::atan2(-b, a) + (coef[0] < 0.0 ? std::numbers::pi : 0.0));
  return est;
}

}  // namespace

HarmonicEstimate extract_harmonic(const DensityProfile& profile, const Envelope& envelope, int order,
                                  double period, double window_halfwidth) {
  require_valid(profile, "DensityProfile");
  if (order < 1) throw ConfigError("extract_harmonic: order must be >= 1");
  if (!(period > 0.0)) throw ConfigError("extract_harmonic: period must be positive");
  if (!(envelope.height > 0.0 && envelope.width > 0.0))
    throw NumericError("extract_harmonic: envelope must be strictly positive");
  const double lo = envelope.center - window_halfwidth * envelope.width;
  const double hi = envelope.center + window_halfwidth * envelope.width;
  if (lo < profile.z[0] || hi > profile.z[profile.size() - 1])
    throw NumericError("extract_harmonic: analysis window clipped by the grid");
  return project_harmonic(profile, envelope, order, period, lo, hi);
}

namespace {

// Parameters in scaled units: u = (z - c0)/D0, values divided by y_scale.
// p = (A, beta, period/D0, height/y_scale, (c - c0)/D0, width/D0) where the
// fringe argument is beta + 2πu/(period/D0).
struct ScaledModel {
  Eigen::VectorXd u;
  Eigen::VectorXd y;
  bool fit_period = true;

  Eigen::Index free_count() const { return fit_period ? 6 : 5; }

  // Maps the reduced vector onto the full six parameters.
  Eigen::Matrix<double, 6, 1> expand(const Eigen::VectorXd& q, double fixed_period) const {
    Eigen::Matrix<double, 6, 1> p;
    if (fit_period) {
      p = q;
    } else {
      p << q[0], q[1], fixed_period, q[2], q[3], q[4];
    }
    return p;
  }

  void residuals(const Eigen::Matrix<double, 6, 1>& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    const double amp = p[0], beta = p[1], per = p[2], h = p[3], mu = p[4], s = p[5];
    r.resize(u.size());
    if (jac) jac->resize(u.size(), free_count());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double du = u[i] - mu;
      const double g = h * std::exp(-0.5 * du * du / (s * s));
      const double theta = beta + kTwoPi * u[i] / per;
      const double c = std::cos(theta), sn = std::sin(theta);
      const double mod = 1.0 + amp * c;
      r[i] = mod * g - y[i];
      if (!jac) continue;
      Eigen::Index col = 0;
      (*jac)(i, col++) = c * g;
      (*jac)(i, col++) = -amp * sn * g;
      if (fit_period) (*jac)(i, col++) = amp * sn * g * kTwoPi * u[i] / (per * per);
      (*jac)(i, col++) = mod * g / h;
      (*jac)(i, col++) = mod * g * du / (s * s);
      (*jac)(i, col++) = mod * g * du * du / (s * s * s);
    }
  }
};

}  // namespace

FringeFit fit_fringes(const DensityProfile& profile, double expected_period, bool fit_period,
                      const FitOptions& options) {
  require_valid(profile, "DensityProfile");
  if (!(expected_period > 0.0)) throw ConfigError("fit_fringes: expected period must be positive");
  if (profile.grid_step > expected_period / 8.0)
    throw ConfigError("fit_fringes: need at least 8 samples per expected period");

  const double peak = profile.values.maxCoeff();
  const double mean = profile.values.mean();
  const double variance = (profile.values.array() - mean).square().mean();
  if (!(peak > 0.0) || variance < 1e-15 * peak * peak)
    throw NumericError("fit_fringes: degenerate flat profile");

  const Envelope start = moment_envelope(profile);
  const double lo = start.center - options.window_halfwidth * start.width;
  const double hi = start.center + options.window_halfwidth * start.width;
  const double init_lo = std::max(start.center - 1.5 * start.width, profile.z[0]);
  const double init_hi = std::min(start.center + 1.5 * start.width, profile.z[profile.size() - 1]);
  const HarmonicEstimate first = project_harmonic(profile, start, 1, expected_period, init_lo, init_hi);

  const double d0 = expected_period;
  const double c0 = start.center;
  ScaledModel model;
  model.fit_period = fit_period;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < profile.size(); ++i)
    if (profile.z[i] >= lo && profile.z[i] <= hi) rows.push_back(i);
  if (rows.size() < 16) throw NumericError("fit_fringes: too few samples in the fit window");
  model.u.resize(static_cast<Eigen::Index>(rows.size()));
  model.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    model.u[static_cast<Eigen::Index>(k)] = (profile.z[rows[k]] - c0) / d0;
    model.y[static_cast<Eigen::Index>(k)] = profile.values[rows[k]] / peak;
  }

  // Fringe argument about c0: B + 2πz/D = beta + 2π(z - c0)/D.
  const double beta0 = first.phase + kTwoPi * c0 / d0;
  Eigen::VectorXd q(model.free_count());
  if (fit_period)
    q << first.amplitude, beta0, 1.0, start.height / peak, 0.0, start.width / d0;
  else
    q << first.amplitude, beta0, start.height / peak, 0.0, start.width / d0;

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  model.residuals(model.expand(q, 1.0), r, &jac);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  const double cost_floor = 1e-30 * static_cast<double>(r.size());

  for (; iter < options.max_iterations && !converged; ++iter) {
    if (cost <= cost_floor) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(floor);

    const Eigen::MatrixXd damped = jtj + lambda * Eigen::MatrixXd(diag.asDiagonal());
    const Eigen::VectorXd step = damped.ldlt().solve(-grad);
    if (!step.allFinite()) throw NumericError("fit_fringes: singular normal equations");

    const Eigen::VectorXd trial = q + step;
    Eigen::VectorXd r_trial;
    Eigen::MatrixXd jac_trial;
    const auto p_trial = model.expand(trial, 1.0);
    bool usable = p_trial[5] != 0.0 && p_trial[2] > 0.0;
    double cost_trial = std::numeric_limits<double>::infinity();
    if (usable) {
      model.residuals(p_trial, r_trial, &jac_trial);
      cost_trial = 0.5 * r_trial.squaredNorm();
    }
    const bool small_step = step.norm() < 1e-8 * (q.norm() + 1e-8);
    if (usable && std::isfinite(cost_trial) && cost_trial < cost) {
      const double decrease = (cost - cost_trial) / cost;
      q = trial;
      r = std::move(r_trial);
      jac = std::move(jac_trial);
      cost = cost_trial;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (decrease < 1e-10 || small_step) converged = true;
    } else {
      if (small_step) converged = true;
      lambda = std::min(lambda * 4.0, 1e16);
    }
  }

  const auto p = model.expand(q, 1.0);
  FringeFit fit;
  double amp = p[0];
  double beta = p[1];
  if (amp < 0.0) {
    amp = -amp;
    beta += std::numbers::pi;
  }
  fit.amplitude = amp;
  fit.fitted_period = p[2] * d0;
  fit.phase = wrap_phase(beta - kTwoPi * c0 / fit.fitted_period);
  fit.envelope.height = p[3] * peak;
  fit.envelope.center = c0 + p[4] * d0;
  fit.envelope.width = std::abs(p[5]) * d0;
  fit.residual_rms = std::sqrt(2.0 * cost / static_cast<double>(r.size())) * peak;
  fit.converged = converged && std::isfinite(cost) && fit.envelope.width > 0.0;
  fit.iterations = iter;
  fit.phase_resolved = fit.amplitude >= options.min_resolvable_amplitude;
  return fit;
}

}  // namespace latticefringe
