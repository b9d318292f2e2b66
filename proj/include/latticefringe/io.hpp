#pragma once

// JSON mirrors of the domain types and the CSV layouts used for profiles,
// spectra and ensemble tables.
//
// JSON readers are strict: unknown keys throw ConfigError. Keys that are
// absent keep the default of the target object. Reals are written with 17
// significant digits so values round-trip exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "latticefringe/core_model.hpp"
#include "latticefringe/density_synthesis.hpp"
#include "latticefringe/fringe_fitting.hpp"
#include "latticefringe/monte_carlo.hpp"
#include "latticefringe/physics_scales.hpp"

namespace latticefringe {

using nlohmann::json;

std::string to_string(KernelWidthConvention c);
std::string to_string(AmplitudeProfile p);
std::string to_string(Propagation p);
KernelWidthConvention parse_kernel_convention(const std::string& s);
AmplitudeProfile parse_amplitude_profile(const std::string& s);
Propagation parse_propagation(const std::string& s);

void to_json(json& j, const PhysicalParams& p);
void from_json(const json& j, PhysicalParams& p);
void to_json(json& j, const LatticeShot& s);
void from_json(const json& j, LatticeShot& s);
void to_json(json& j, const DensityProfile& p);
void from_json(const json& j, DensityProfile& p);
void to_json(json& j, const HarmonicSpectrum& s);
void from_json(const json& j, HarmonicSpectrum& s);
void to_json(json& j, const Envelope& e);
void from_json(const json& j, Envelope& e);
void to_json(json& j, const FringeFit& f);
void from_json(const json& j, FringeFit& f);
void to_json(json& j, const Lattice3DShot& s);
void from_json(const json& j, Lattice3DShot& s);
void to_json(json& j, const Histogram& h);
void from_json(const json& j, Histogram& h);
void to_json(json& j, const EnsembleStats& s);
void from_json(const json& j, EnsembleStats& s);
void to_json(json& j, const GridSpec& g);
void from_json(const json& j, GridSpec& g);
void to_json(json& j, const FitOptions& o);
void from_json(const json& j, FitOptions& o);
void to_json(json& j, const EnsembleConfig& c);
void from_json(const json& j, EnsembleConfig& c);
void to_json(json& j, const Image2D& image);
void from_json(const json& j, Image2D& image);
void to_json(json& j, const ScalesReport& r);
void to_json(json& j, const ScalingRow& r);
void to_json(json& j, const MottEstimate& m);
void to_json(json& j, const HarmonicSpectrum3D& s);

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const char* what);

/// Shortest decimal form that round-trips the double.
std::string format_real(double value);

// CSV layouts
void write_profile_csv(std::ostream& out, const DensityProfile& profile);     // z,value
void write_spectrum_csv(std::ostream& out, const HarmonicSpectrum& spectrum);  // n,A,B
void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials);  // trial,A1,B1,Fmax,Fmin
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);
void write_fit_csv(std::ostream& out, const std::vector<FringeFit>& fits);  // A1,B1,...
/// Tidy u,v,F rows.
void write_grid2d_csv(std::ostream& out, const GridSpec2D& grid, const Eigen::MatrixXd& values);

DensityProfile read_profile_csv(std::istream& in);
/// First row: a label followed by the z values; each further row: r then
/// one value per z column.
Image2D read_image_csv(std::istream& in);
void write_image_csv(std::ostream& out, const Image2D& image);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace latticefringe
