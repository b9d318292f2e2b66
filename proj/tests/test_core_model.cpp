#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "latticefringe/core_model.hpp"

using namespace latticefringe;

namespace {

bool has(const std::vector<std::string>& list, const std::string& prefix) {
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
}

}  // namespace

TEST_CASE("wrap_phase maps into [0, 2pi)") {
  CHECK(wrap_phase(0.0) == 0.0);
  CHECK(wrap_phase(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_phase(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_phase(7.0 * kTwoPi + 1.0) == doctest::Approx(1.0));
  for (double x : {-1e3, -kTwoPi, -1e-18, 3.0, 1e4}) {
    const double w = wrap_phase(x);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
  }
}

TEST_CASE("kernel width conventions") {
  CHECK(kernel_sigma(5e-6, KernelWidthConvention::sigma) == 5e-6);
  CHECK(kernel_sigma(5e-6, KernelWidthConvention::hwhm) == doctest::Approx(5e-6 / std::sqrt(2.0 * std::log(2.0))));
  CHECK(kernel_sigma(5e-6, KernelWidthConvention::fwhm) ==
        doctest::Approx(5e-6 / (2.0 * std::sqrt(2.0 * std::log(2.0)))));
}

TEST_CASE("reference rubidium configuration validates") {
  const PhysicalParams p = PhysicalParams::rubidium_reference();
  const LatticeShot shot = LatticeShot::uniform(Eigen::VectorXd::Zero(30));
  const ValidationReport r = validate(p, shot);
  CHECK(r.ok());
  CHECK(r.violations.empty());
  CHECK_FALSE(has(r.warnings, "far-field ratio l/d"));
  // N d / Z0 = 81 um / 134 um is not small against 0.1.
  CHECK(has(r.warnings, "far-field ratio N*d/Z0"));
}

TEST_CASE("length mismatch is reported") {
  LatticeShot shot;
  shot.site_count = 30;
  shot.amplitudes = Eigen::VectorXd::Ones(30);
  shot.phases = Eigen::VectorXd::Zero(29);
  const ValidationReport r = check(shot);
  CHECK_FALSE(r.ok());
  CHECK(has(r.violations, "phases length mismatch"));
  CHECK_THROWS_AS(LatticeShot::make(Eigen::VectorXd::Ones(30), Eigen::VectorXd::Zero(29)), ConfigError);
}

TEST_CASE("onsite width equal to lattice period warns") {
  PhysicalParams p = PhysicalParams::rubidium_reference();
  p.onsite_width = p.lattice_period;
  const ValidationReport r = check(p);
  CHECK(r.ok());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings.front() == "far-field ratio l/d = 1 >= 0.1");
}

TEST_CASE("non-positive physical parameters are violations") {
  PhysicalParams p = PhysicalParams::rubidium_reference();
  p.expansion_time = 0.0;
  CHECK_FALSE(check(p).ok());
  p = PhysicalParams::rubidium_reference();
  p.mass = -1.0;
  CHECK_FALSE(check(p).ok());
  p = PhysicalParams::rubidium_reference();
  p.axial_trap_freq = -3.0;
  CHECK_FALSE(check(p).ok());
}

TEST_CASE("LatticeShot canonicalizes phases and rejects bad amplitudes") {
  const LatticeShot shot = LatticeShot::make(Eigen::VectorXd::Ones(3), Eigen::Vector3d(-1.0, kTwoPi, 10.0));
  CHECK(shot.phases[0] == doctest::Approx(kTwoPi - 1.0));
  CHECK(shot.phases[1] == doctest::Approx(0.0));
  CHECK(shot.phases[2] == doctest::Approx(10.0 - kTwoPi));
  CHECK_THROWS_AS(LatticeShot::make(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)), ConfigError);
  CHECK_THROWS_AS(LatticeShot::make(Eigen::Vector3d(1.0, -1.0, 1.0), Eigen::VectorXd::Zero(3)), ConfigError);
  CHECK_NOTHROW(LatticeShot::uniform(Eigen::VectorXd::Zero(1)));
}

TEST_CASE("DensityProfile grid and sign checks") {
  DensityProfile p = DensityProfile::make(-1.0, 0.25, Eigen::VectorXd::Ones(9));
  CHECK(check(p).ok());
  CHECK(p.z[8] == doctest::Approx(1.0));

  DensityProfile bent = p;
  bent.z[4] += 1e-6;
  CHECK_FALSE(check(bent).ok());

  DensityProfile negative = p;
  negative.values[3] = -1e-3;
  CHECK_FALSE(check(negative).ok());

  DensityProfile tiny = p;
  tiny.values[3] = -1e-14;
  CHECK(check(tiny).ok());
}

TEST_CASE("HarmonicSpectrum invariants") {
  HarmonicSpectrum s;
  s.period = 1.0;
  s.site_count = 4;
  s.entries = {{1, 1.5, 0.0}, {2, 0.5, 1.0}, {3, 0.1, 6.0}};
  CHECK(check(s).ok());
  CHECK(s.highest_order() == 3);

  auto dup = s;
  dup.entries.push_back({2, 0.1, 0.0});
  CHECK_FALSE(check(dup).ok());

  auto too_high = s;
  too_high.entries.push_back({4, 0.1, 0.0});
  CHECK_FALSE(check(too_high).ok());

  auto too_big = s;
  too_big.entries[0].amplitude = 2.1;
  CHECK_FALSE(check(too_big).ok());
}

TEST_CASE("FringeFit invariants") {
  FringeFit f;
  f.amplitude = 0.3;
  f.phase = 1.0;
  f.converged = true;
  f.residual_rms = 0.0;
  f.envelope = {1.0, 0.0, 1e-4};
  CHECK(check(f).ok());
  f.envelope.width = 0.0;
  CHECK_FALSE(check(f).ok());
  f.envelope.width = 1e-4;
  f.residual_rms = std::nan("");
  CHECK_FALSE(check(f).ok());
  f.converged = false;
  CHECK(check(f).ok());
}

TEST_CASE("Lattice3DShot indexing and shape") {
  const Lattice3DShot s = Lattice3DShot::make({2, 3, 4}, Eigen::VectorXd::Zero(24));
  CHECK(s.site_total() == 24);
  CHECK(s.index(1, 2, 3) == 1 + 2 * (2 + 3 * 3));
  CHECK(s.amplitudes.size() == 24);
  CHECK_THROWS_AS(Lattice3DShot::make({2, 3, 4}, Eigen::VectorXd::Zero(23)), ConfigError);
}

TEST_CASE("Histogram and EnsembleStats consistency") {
  Histogram h{0.0, 2.0, std::vector<std::int64_t>(4, 0)};
  h.add(0.1);
  h.add(1.99);
  h.add(2.0);
  h.add(-1.0);
  CHECK(h.total() == 4);
  CHECK(h.counts.front() == 2);
  CHECK(h.counts.back() == 2);

  EnsembleStats s;
  s.trials = 4;
  s.histogram_A1 = h;
  s.circular_resultant_length_B1 = 0.5;
  CHECK(check(s).ok());
  s.trials = 5;
  CHECK_FALSE(check(s).ok());
  s.trials = 4;
  s.circular_resultant_length_B1 = 1.5;
  CHECK_FALSE(check(s).ok());
}
