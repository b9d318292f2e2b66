#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latticefringe/io.hpp"

namespace latticefringe::cli {

enum ExitCode : int { ok = 0, config_error = 1, numeric_error = 2, io_error = 3 };

enum class OutputFormat { csv, json };

struct SimulateConfig {
  int site_count = 30;
  AmplitudeProfile amplitude_profile = AmplitudeProfile::thomas_fermi;
  bool apply_convolution = true;
  std::uint64_t seed = 1;
  PhysicalParams params = PhysicalParams::rubidium_reference();
  GridSpec grid{-400e-6, 400e-6, 2001};
  Propagation propagation = Propagation::exact;
  std::optional<std::vector<double>> phases;
};

struct ScalingConfig {
  std::vector<int> site_counts{10, 100, 1000};
  int trials = 500;
  std::uint64_t seed = 1;
};

struct FitConfig {
  std::string input;
  std::optional<double> period;  // defaults to h t / (m d) from params
  bool fit_period = true;
  PhysicalParams params = PhysicalParams::rubidium_reference();
  std::optional<double> band_halfwidth;  // images only; default is the full r extent
  FitOptions fit;
};

struct LineOfSightConfig {
  Axis axis = Axis::z;
  GridSpec2D grid{{0.0, 1.0, 65}, {0.0, 1.0, 65}};
};

struct Lattice3DConfig {
  std::array<int, 3> dims{20, 20, 20};
  int draws = 1;
  std::uint64_t seed = 1;
  int samples_per_axis = 0;  // 0 picks the smallest power of two >= 2 max(dims)
  std::optional<LineOfSightConfig> line_of_sight;
};

struct ScalesConfig {
  PhysicalParams params = PhysicalParams::rubidium_reference();
  std::optional<double> lattice_depth_hz;
};

void to_json(json& j, const SimulateConfig& c);
void from_json(const json& j, SimulateConfig& c);
void to_json(json& j, const ScalingConfig& c);
void from_json(const json& j, ScalingConfig& c);
void to_json(json& j, const FitConfig& c);
void from_json(const json& j, FitConfig& c);
void to_json(json& j, const Lattice3DConfig& c);
void from_json(const json& j, Lattice3DConfig& c);
void to_json(json& j, const ScalesConfig& c);
void from_json(const json& j, ScalesConfig& c);

/// Worker count: the flag when given, else LATTICEFRINGE_WORKERS, else 1.
int resolve_workers(std::optional<int> flag);

/// Full command line, argv[0] included. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latticefringe::cli
