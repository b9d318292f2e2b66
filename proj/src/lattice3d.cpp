#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "latticefringe/density_synthesis.hpp"

namespace latticefringe {

using cd = std::complex<double>;

namespace {

bool is_representative(const std::array<int, 3>& lag) {
  if (lag[0] != 0) return lag[0] > 0;
  if (lag[1] != 0) return lag[1] > 0;
  return lag[2] > 0;
}

std::vector<cd> site_phasors(const Lattice3DShot& shot) {
  std::vector<cd> c(static_cast<std::size_t>(shot.site_total()));
  for (Eigen::Index j = 0; j < shot.site_total(); ++j)
    c[static_cast<std::size_t>(j)] = std::polar(shot.amplitudes[j], shot.phases[j]);
  return c;
}

// Σ c_{j+lag} conj(c_j) over all sites j with j + lag inside the lattice.
cd lag_sum(const Lattice3DShot& shot, const std::vector<cd>& c, const std::array<int, 3>& lag) {
  const auto& d = shot.dims;
  cd s{0.0, 0.0};
  for (int iz = std::max(0, -lag[2]); iz < std::min(d[2], d[2] - lag[2]); ++iz)
    for (int iy = std::max(0, -lag[1]); iy < std::min(d[1], d[1] - lag[1]); ++iy)
      for (int ix = std::max(0, -lag[0]); ix < std::min(d[0], d[0] - lag[0]); ++ix)
        s += c[static_cast<std::size_t>(shot.index(ix + lag[0], iy + lag[1], iz + lag[2]))] *
             std::conj(c[static_cast<std::size_t>(shot.index(ix, iy, iz))]);
  return s;
}

HarmonicSpectrum3D spectrum_over_lags(const Lattice3DShot& shot, double period, int fixed_axis) {
  require_valid(shot, "Lattice3DShot");
  const std::vector<cd> c = site_phasors(shot);
  const double norm = shot.amplitudes.squaredNorm();
  const auto& d = shot.dims;
  HarmonicSpectrum3D spectrum;
  spectrum.period = period;
  std::array<int, 3> lag{};
  for (lag[0] = -(d[0] - 1); lag[0] <= d[0] - 1; ++lag[0])
    for (lag[1] = -(d[1] - 1); lag[1] <= d[1] - 1; ++lag[1])
      for (lag[2] = -(d[2] - 1); lag[2] <= d[2] - 1; ++lag[2]) {
        if (!is_representative(lag)) continue;
        if (fixed_axis >= 0 && lag[static_cast<std::size_t>(fixed_axis)] != 0) continue;
        const cd s = 2.0 * lag_sum(shot, c, lag) / norm;
        spectrum.entries.push_back({lag, std::abs(s), wrap_phase(std::arg(s))});
      }
  return spectrum;
}

double fractional(double x) {
  const double f = x - std::floor(x);
  return f < 1.0 ? f : 0.0;
}

}  // namespace

HarmonicSpectrum3D harmonics_3d(const Lattice3DShot& shot, double period) {
  return spectrum_over_lags(shot, period, -1);
}

HarmonicSpectrum3D line_of_sight_spectrum(const Lattice3DShot& shot, Axis axis, double period) {
  return spectrum_over_lags(shot, period, static_cast<int>(axis));
}

double evaluate_F3_at(const HarmonicSpectrum3D& spectrum, const Eigen::Vector3d& r) {
  const Eigen::Vector3d x = r / spectrum.period;
  double f = 1.0;
  for (const auto& e : spectrum.entries) {
    const double t = e.lag[0] * fractional(x[0]) + e.lag[1] * fractional(x[1]) + e.lag[2] * fractional(x[2]);
    f += e.amplitude * std::cos(e.phase + kTwoPi * fractional(t));
  }
  return f;
}

namespace {

// |Σ c_j e^{i2π j·r}|² / Σ α² with r in units of the period; phasors cached.
class DirectF3 {
 public:
  explicit DirectF3(const Lattice3DShot& shot)
      : shot_(shot), c_(site_phasors(shot)), norm_(shot.amplitudes.squaredNorm()) {
    for (std::size_t a = 0; a < 3; ++a) tables_[a].resize(static_cast<std::size_t>(shot.dims[a]));
  }

  double operator()(const Eigen::Vector3d& r) {
    const auto& d = shot_.dims;
    for (std::size_t a = 0; a < 3; ++a) {
      const double frac = fractional(r[static_cast<Eigen::Index>(a)]);
      for (int i = 0; i < d[a]; ++i)
        tables_[a][static_cast<std::size_t>(i)] = std::polar(1.0, kTwoPi * fractional(i * frac));
    }
    cd total{0.0, 0.0};
    std::size_t j = 0;
    for (int iz = 0; iz < d[2]; ++iz) {
      cd plane{0.0, 0.0};
      for (int iy = 0; iy < d[1]; ++iy) {
        cd row{0.0, 0.0};
        for (int ix = 0; ix < d[0]; ++ix, ++j) row += c_[j] * tables_[0][static_cast<std::size_t>(ix)];
        plane += row * tables_[1][static_cast<std::size_t>(iy)];
      }
      total += plane * tables_[2][static_cast<std::size_t>(iz)];
    }
    return std::norm(total) / norm_;
  }

 private:
  const Lattice3DShot& shot_;
  std::vector<cd> c_;
  double norm_;
  std::array<std::vector<cd>, 3> tables_;
};

}  // namespace

double direct_F3_at(const Lattice3DShot& shot, const Eigen::Vector3d& r, double period) {
  require_valid(shot, "Lattice3DShot");
  DirectF3 f(shot);
  return f(r / period);
}

Extrema3D f_extrema_3d(const Lattice3DShot& shot, int samples_per_axis) {
  require_valid(shot, "Lattice3DShot");
  const auto& d = shot.dims;
  const int m = samples_per_axis;
  if (m < 2 * *std::max_element(d.begin(), d.end()))
    throw ConfigError("f_extrema_3d: samples_per_axis must be >= 2 * max(dims)");

  // Unscaled inverse DFT of the zero-padded phasor grid, one axis at a time.
  const auto mm = static_cast<std::size_t>(m);
  std::vector<cd> grid(mm * mm * mm, cd{0.0, 0.0});
  auto at = [&](int x, int y, int z) -> cd& {
    return grid[static_cast<std::size_t>(x) + mm * (static_cast<std::size_t>(y) + mm * static_cast<std::size_t>(z))];
  };
  for (int iz = 0; iz < d[2]; ++iz)
    for (int iy = 0; iy < d[1]; ++iy)
      for (int ix = 0; ix < d[0]; ++ix) {
        const Eigen::Index j = shot.index(ix, iy, iz);
        at(ix, iy, iz) = std::polar(shot.amplitudes[j], shot.phases[j]);
      }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<cd> line(mm), out;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < m; ++x) line[static_cast<std::size_t>(x)] = at(x, y, z);
      fft.inv(out, line);
      for (int x = 0; x < m; ++x) at(x, y, z) = out[static_cast<std::size_t>(x)];
    }
  for (int z = 0; z < d[2]; ++z)
    for (int x = 0; x < m; ++x) {
      for (int y = 0; y < m; ++y) line[static_cast<std::size_t>(y)] = at(x, y, z);
      fft.inv(out, line);
      for (int y = 0; y < m; ++y) at(x, y, z) = out[static_cast<std::size_t>(y)];
    }
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x) {
      for (int z = 0; z < m; ++z) line[static_cast<std::size_t>(z)] = at(x, y, z);
      fft.inv(out, line);
      for (int z = 0; z < m; ++z) at(x, y, z) = out[static_cast<std::size_t>(z)];
    }

  const double norm = shot.amplitudes.squaredNorm();
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = std::norm(grid[i]) / norm;

  const double cell = 1.0 / m;  // in units of the period
  auto coord = [&](std::size_t i) -> Eigen::Vector3d {
    return Eigen::Vector3d(static_cast<double>(i % mm), static_cast<double>((i / mm) % mm),
                           static_cast<double>(i / (mm * mm))) *
           cell;
  };

  DirectF3 direct(shot);
  Extrema3D result;
  constexpr int kCandidates = 4;
  for (double sign : {1.0, -1.0}) {
    std::vector<std::size_t> order(f.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + kCandidates, order.end(),
                      [&](std::size_t a, std::size_t b) { return sign * f[a] > sign * f[b]; });

    double best = sign * f[order[0]];
    Eigen::Vector3d best_at = coord(order[0]);
    for (int c = 0; c < kCandidates; ++c) {
      Eigen::Vector3d r = coord(order[static_cast<std::size_t>(c)]);
      double value = sign * f[order[static_cast<std::size_t>(c)]];
      // Cyclic coordinate golden-section search within one grid cell.
      for (int sweep = 0; sweep < 6; ++sweep) {
        for (int axis = 0; axis < 3; ++axis) {
          double a = r[axis] - cell, b = r[axis] + cell;
          double x1 = b - 0.6180339887498949 * (b - a), x2 = a + 0.6180339887498949 * (b - a);
          auto eval = [&](double t) {
            Eigen::Vector3d p = r;
            p[axis] = t;
            return sign * direct(p);
          };
          double f1 = eval(x1), f2 = eval(x2);
          while (b - a > 1e-7 * cell) {
            if (f1 >= f2) {
              b = x2; x2 = x1; f2 = f1; x1 = b - 0.6180339887498949 * (b - a); f1 = eval(x1);
            } else {
              a = x1; x1 = x2; f1 = f2; x2 = a + 0.6180339887498949 * (b - a); f2 = eval(x2);
            }
          }
          const double t = f1 >= f2 ? x1 : x2;
          const double ft = std::max(f1, f2);
          if (ft > value) {
            value = ft;
            r[axis] = t;
          }
        }
      }
      if (value > best) {
        best = value;
        best_at = r;
      }
    }
    for (int a = 0; a < 3; ++a) best_at[a] = fractional(best_at[a]);
    if (sign > 0) {
      result.max = best;
      result.argmax = best_at;
    } else {
      result.min = -best;
      result.argmin = best_at;
    }
  }
  return result;
}

Eigen::MatrixXd integrate_line_of_sight(const Lattice3DShot& shot, Axis axis, const GridSpec2D& grid,
                                        double period) {
  require_valid(grid.u, "GridSpec");
  require_valid(grid.v, "GridSpec");
  const HarmonicSpectrum3D spectrum = line_of_sight_spectrum(shot, axis, period);
  const int along = static_cast<int>(axis);
  const int first = along == 0 ? 1 : 0;
  const int second = along == 2 ? 1 : 2;

  const Eigen::VectorXd u = grid.u.points();
  const Eigen::VectorXd v = grid.v.points();
  Eigen::MatrixXd out(u.size(), v.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      Eigen::Vector3d r = Eigen::Vector3d::Zero();
      r[first] = u[i];
      r[second] = v[j];
      out(i, j) = evaluate_F3_at(spectrum, r);
    }
  return out;
}

}  // namespace latticefringe
