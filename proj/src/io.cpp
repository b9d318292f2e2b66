#include "latticefringe/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace latticefringe {

std::string to_string(KernelWidthConvention c) {
  switch (c) {
    case KernelWidthConvention::sigma:
      return "sigma";
    case KernelWidthConvention::hwhm:
      return "hwhm";
    case KernelWidthConvention::fwhm:
      return "fwhm";
  }
  return "sigma";
}

std::string to_string(AmplitudeProfile p) {
  return p == AmplitudeProfile::uniform ? "uniform" : "thomas_fermi";
}

std::string to_string(Propagation p) { return p == Propagation::exact ? "exact" : "far_field"; }

KernelWidthConvention parse_kernel_convention(const std::string& s) {
  if (s == "sigma") return KernelWidthConvention::sigma;
  if (s == "hwhm") return KernelWidthConvention::hwhm;
  if (s == "fwhm") return KernelWidthConvention::fwhm;
  throw ConfigError("unknown imaging_convention '" + s + "' (sigma|hwhm|fwhm)");
}

AmplitudeProfile parse_amplitude_profile(const std::string& s) {
  if (s == "uniform") return AmplitudeProfile::uniform;
  if (s == "thomas_fermi") return AmplitudeProfile::thomas_fermi;
  throw ConfigError("unknown amplitude_profile '" + s + "' (uniform|thomas_fermi)");
}

Propagation parse_propagation(const std::string& s) {
  if (s == "exact") return Propagation::exact;
  if (s == "far_field") return Propagation::far_field;
  throw ConfigError("unknown propagation '" + s + "' (exact|far_field)");
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* key) { return item.key() == key; });
    if (!known) throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(target);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

template <class T>
void read_required(const json& j, const char* key, T& target, const char* what) {
  if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing key '" + key + "'");
  read_if(j, key, target);
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j, const char* key, const char* what) {
  std::vector<double> values;
  read_required(j, key, values, what);
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void to_json(json& j, const PhysicalParams& p) {
  j = json{{"mass", p.mass},
           {"lattice_period", p.lattice_period},
           {"expansion_time", p.expansion_time},
           {"onsite_width", p.onsite_width},
           {"imaging_resolution", p.imaging_resolution},
           {"imaging_convention", to_string(p.imaging_convention)}};
  j["axial_trap_freq"] = p.axial_trap_freq ? json(*p.axial_trap_freq) : json(nullptr);
}

void from_json(const json& j, PhysicalParams& p) {
  reject_unknown_keys(j,
                      {"mass", "lattice_period", "expansion_time", "onsite_width", "imaging_resolution",
                       "imaging_convention", "axial_trap_freq"},
                      "PhysicalParams");
  read_if(j, "mass", p.mass);
  read_if(j, "lattice_period", p.lattice_period);
  read_if(j, "expansion_time", p.expansion_time);
  read_if(j, "onsite_width", p.onsite_width);
  read_if(j, "imaging_resolution", p.imaging_resolution);
  if (j.contains("imaging_convention"))
    p.imaging_convention = parse_kernel_convention(j.at("imaging_convention").get<std::string>());
  if (j.contains("axial_trap_freq")) {
    if (j.at("axial_trap_freq").is_null())
      p.axial_trap_freq.reset();
    else
      p.axial_trap_freq = j.at("axial_trap_freq").get<double>();
  }
}

void to_json(json& j, const LatticeShot& s) {
  j = json{{"site_count", s.site_count}, {"amplitudes", vector_json(s.amplitudes)}, {"phases", vector_json(s.phases)}};
}

void from_json(const json& j, LatticeShot& s) {
  reject_unknown_keys(j, {"site_count", "amplitudes", "phases"}, "LatticeShot");
  read_required(j, "site_count", s.site_count, "LatticeShot");
  s.amplitudes = vector_from(j, "amplitudes", "LatticeShot");
  s.phases = vector_from(j, "phases", "LatticeShot");
}

void to_json(json& j, const DensityProfile& p) {
  j = json{{"z_grid", vector_json(p.z)}, {"values", vector_json(p.values)}, {"grid_step", p.grid_step}};
}

void from_json(const json& j, DensityProfile& p) {
  reject_unknown_keys(j, {"z_grid", "values", "grid_step"}, "DensityProfile");
  p.z = vector_from(j, "z_grid", "DensityProfile");
  p.values = vector_from(j, "values", "DensityProfile");
  read_required(j, "grid_step", p.grid_step, "DensityProfile");
}

void to_json(json& j, const HarmonicSpectrum& s) {
  json entries = json::array();
  for (const auto& e : s.entries) entries.push_back({{"order", e.order}, {"amplitude", e.amplitude}, {"phase", e.phase}});
  j = json{{"period", s.period}, {"entries", entries}, {"site_count", s.site_count}};
}

void from_json(const json& j, HarmonicSpectrum& s) {
  reject_unknown_keys(j, {"period", "entries", "site_count"}, "HarmonicSpectrum");
  read_required(j, "period", s.period, "HarmonicSpectrum");
  read_if(j, "site_count", s.site_count);
  s.entries.clear();
  if (!j.contains("entries")) return;
  for (const auto& e : j.at("entries")) {
    reject_unknown_keys(e, {"order", "amplitude", "phase"}, "HarmonicSpectrum entry");
    HarmonicEntry entry;
    read_required(e, "order", entry.order, "HarmonicSpectrum entry");
    read_required(e, "amplitude", entry.amplitude, "HarmonicSpectrum entry");
    read_required(e, "phase", entry.phase, "HarmonicSpectrum entry");
    s.entries.push_back(entry);
  }
}

void to_json(json& j, const Envelope& e) {
  j = json{{"height", e.height}, {"center", e.center}, {"width", e.width}};
}

void from_json(const json& j, Envelope& e) {
  reject_unknown_keys(j, {"height", "center", "width"}, "Envelope");
  read_required(j, "height", e.height, "Envelope");
  read_required(j, "center", e.center, "Envelope");
  read_required(j, "width", e.width, "Envelope");
}

void to_json(json& j, const FringeFit& f) {
  j = json{{"amplitude", f.amplitude},       {"phase", f.phase},
           {"fitted_period", f.fitted_period}, {"envelope", f.envelope},
           {"residual_rms", f.residual_rms},   {"converged", f.converged},
           {"iterations", f.iterations},       {"phase_resolved", f.phase_resolved}};
}

void from_json(const json& j, FringeFit& f) {
  reject_unknown_keys(j,
                      {"amplitude", "phase", "fitted_period", "envelope", "residual_rms", "converged",
                       "iterations", "phase_resolved"},
                      "FringeFit");
  read_required(j, "amplitude", f.amplitude, "FringeFit");
  read_required(j, "phase", f.phase, "FringeFit");
  read_required(j, "fitted_period", f.fitted_period, "FringeFit");
  read_required(j, "envelope", f.envelope, "FringeFit");
  read_required(j, "residual_rms", f.residual_rms, "FringeFit");
  read_required(j, "converged", f.converged, "FringeFit");
  read_required(j, "iterations", f.iterations, "FringeFit");
  read_if(j, "phase_resolved", f.phase_resolved);
}

void to_json(json& j, const Lattice3DShot& s) {
  j = json{{"dims", s.dims}, {"phases", vector_json(s.phases)}, {"amplitudes", vector_json(s.amplitudes)}};
}

void from_json(const json& j, Lattice3DShot& s) {
  reject_unknown_keys(j, {"dims", "phases", "amplitudes"}, "Lattice3DShot");
  read_required(j, "dims", s.dims, "Lattice3DShot");
  s.phases = vector_from(j, "phases", "Lattice3DShot");
  s.amplitudes = j.contains("amplitudes") ? vector_from(j, "amplitudes", "Lattice3DShot")
                                          : Eigen::VectorXd::Ones(s.phases.size());
}

void to_json(json& j, const Histogram& h) {
  j = json{{"lower", h.lower}, {"upper", h.upper}, {"counts", h.counts}};
}

void from_json(const json& j, Histogram& h) {
  reject_unknown_keys(j, {"lower", "upper", "counts"}, "Histogram");
  read_required(j, "lower", h.lower, "Histogram");
  read_required(j, "upper", h.upper, "Histogram");
  read_required(j, "counts", h.counts, "Histogram");
}

void to_json(json& j, const EnsembleStats& s) {
  j = json{{"trials", s.trials},
           {"failed_fits", s.failed_fits},
           {"mean_A1", s.mean_A1},
           {"std_A1", s.std_A1},
           {"circular_mean_B1", s.circular_mean_B1},
           {"circular_resultant_length_B1", s.circular_resultant_length_B1},
           {"mean_Fmax", s.mean_Fmax},
           {"mean_Fmin", s.mean_Fmin},
           {"histograms", {{"A1", s.histogram_A1}, {"B1", s.histogram_B1}}},
           {"seed", s.seed}};
}

void from_json(const json& j, EnsembleStats& s) {
  reject_unknown_keys(j,
                      {"trials", "failed_fits", "mean_A1", "std_A1", "circular_mean_B1",
                       "circular_resultant_length_B1", "mean_Fmax", "mean_Fmin", "histograms", "seed"},
                      "EnsembleStats");
  read_required(j, "trials", s.trials, "EnsembleStats");
  read_if(j, "failed_fits", s.failed_fits);
  read_required(j, "mean_A1", s.mean_A1, "EnsembleStats");
  read_required(j, "std_A1", s.std_A1, "EnsembleStats");
  read_required(j, "circular_mean_B1", s.circular_mean_B1, "EnsembleStats");
  read_required(j, "circular_resultant_length_B1", s.circular_resultant_length_B1, "EnsembleStats");
  read_required(j, "mean_Fmax", s.mean_Fmax, "EnsembleStats");
  read_required(j, "mean_Fmin", s.mean_Fmin, "EnsembleStats");
  read_required(j, "seed", s.seed, "EnsembleStats");
  if (j.contains("histograms")) {
    const json& h = j.at("histograms");
    reject_unknown_keys(h, {"A1", "B1"}, "EnsembleStats.histograms");
    read_if(h, "A1", s.histogram_A1);
    read_if(h, "B1", s.histogram_B1);
  }
}

void to_json(json& j, const GridSpec& g) {
  j = json{{"z_min", g.z_min}, {"z_max", g.z_max}, {"point_count", g.point_count}};
}

void from_json(const json& j, GridSpec& g) {
  reject_unknown_keys(j, {"z_min", "z_max", "point_count"}, "GridSpec");
  read_if(j, "z_min", g.z_min);
  read_if(j, "z_max", g.z_max);
  read_if(j, "point_count", g.point_count);
}

void to_json(json& j, const FitOptions& o) {
  j = json{{"window_halfwidth", o.window_halfwidth},
           {"max_iterations", o.max_iterations},
           {"min_resolvable_amplitude", o.min_resolvable_amplitude}};
}

void from_json(const json& j, FitOptions& o) {
  reject_unknown_keys(j, {"window_halfwidth", "max_iterations", "min_resolvable_amplitude"}, "FitOptions");
  read_if(j, "window_halfwidth", o.window_halfwidth);
  read_if(j, "max_iterations", o.max_iterations);
  read_if(j, "min_resolvable_amplitude", o.min_resolvable_amplitude);
}

void to_json(json& j, const EnsembleConfig& c) {
  j = json{{"trials", c.trials},
           {"site_count", c.site_count},
           {"amplitude_profile", to_string(c.amplitude_profile)},
           {"apply_convolution", c.apply_convolution},
           {"seed", c.seed},
           {"params", c.params},
           {"grid", c.grid},
           {"propagation", to_string(c.propagation)},
           {"fit", c.fit}};
  j["phase_override"] = c.phase_override ? json(*c.phase_override) : json(nullptr);
}

void from_json(const json& j, EnsembleConfig& c) {
  reject_unknown_keys(j,
                      {"trials", "site_count", "amplitude_profile", "apply_convolution", "seed", "params",
                       "grid", "propagation", "phase_override", "fit"},
                      "EnsembleConfig");
  read_if(j, "trials", c.trials);
  read_if(j, "site_count", c.site_count);
  if (j.contains("amplitude_profile"))
    c.amplitude_profile = parse_amplitude_profile(j.at("amplitude_profile").get<std::string>());
  read_if(j, "apply_convolution", c.apply_convolution);
  read_if(j, "seed", c.seed);
  if (j.contains("params")) from_json(j.at("params"), c.params);
  if (j.contains("grid")) from_json(j.at("grid"), c.grid);
  if (j.contains("propagation")) c.propagation = parse_propagation(j.at("propagation").get<std::string>());
  if (j.contains("phase_override")) {
    if (j.at("phase_override").is_null())
      c.phase_override.reset();
    else
      c.phase_override = j.at("phase_override").get<std::vector<double>>();
  }
  if (j.contains("fit")) from_json(j.at("fit"), c.fit);
}

void to_json(json& j, const Image2D& image) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < image.values.rows(); ++i) {
    const Eigen::VectorXd row = image.values.row(i).transpose();
    rows.push_back(vector_json(row));
  }
  j = json{{"r_grid", vector_json(image.r_grid)}, {"z_grid", vector_json(image.z_grid)}, {"values", rows}};
}

void from_json(const json& j, Image2D& image) {
  reject_unknown_keys(j, {"r_grid", "z_grid", "values"}, "Image2D");
  image.r_grid = vector_from(j, "r_grid", "Image2D");
  image.z_grid = vector_from(j, "z_grid", "Image2D");
  std::vector<std::vector<double>> rows;
  read_required(j, "values", rows, "Image2D");
  image.values.resize(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != image.values.cols())
      throw ConfigError("Image2D: ragged values rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      image.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
}

void to_json(json& j, const ScalesReport& r) {
  j = json{{"recoil_energy", {{"joule", r.recoil_energy_joule}, {"hz", r.recoil_energy_hz}}},
           {"fringe_period", r.fringe_period},
           {"expansion_width", r.expansion_width},
           {"onsite_width", r.onsite_width}};
  j["lattice_depth_in_ER"] = r.lattice_depth_in_ER ? json(*r.lattice_depth_in_ER) : json(nullptr);
}

void to_json(json& j, const ScalingRow& r) {
  j = json{{"N", r.site_count},          {"trials", r.trials},
           {"Fmax_mean", r.Fmax_mean},   {"Fmax_stderr", r.Fmax_stderr},
           {"Fmin_mean", r.Fmin_mean},   {"Fmin_stderr", r.Fmin_stderr},
           {"A1sq_mean", r.A1sq_mean},   {"A1sq_stderr", r.A1sq_stderr}};
}

void to_json(json& j, const MottEstimate& m) {
  j = json{{"real", m.real},
           {"real_stderr", m.real_stderr},
           {"imag", m.imag},
           {"imag_stderr", m.imag_stderr},
           {"shots", m.shots},
           {"coherent_target", m.coherent_target},
           {"mott_target", m.mott_target},
           {"matches", m.matches}};
}

void to_json(json& j, const HarmonicSpectrum3D& s) {
  json entries = json::array();
  for (const auto& e : s.entries) entries.push_back({{"lag", e.lag}, {"amplitude", e.amplitude}, {"phase", e.phase}});
  j = json{{"period", s.period}, {"entries", entries}};
}

std::string format_real(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_profile_csv(std::ostream& out, const DensityProfile& profile) {
  out << "z,value\n";
  for (Eigen::Index i = 0; i < profile.size(); ++i)
    out << format_real(profile.z[i]) << ',' << format_real(profile.values[i]) << '\n';
}

void write_spectrum_csv(std::ostream& out, const HarmonicSpectrum& spectrum) {
  out << "n,A,B\n";
  for (const auto& e : spectrum.entries)
    out << e.order << ',' << format_real(e.amplitude) << ',' << format_real(e.phase) << '\n';
}

void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << "trial,A1,B1,Fmax,Fmin\n";
  for (const auto& t : trials) {
    out << t.trial << ',';
    if (t.fit_ok)
      out << format_real(t.A1) << ',' << format_real(t.B1);
    else
      out << "nan,nan";
    out << ',' << format_real(t.Fmax) << ',' << format_real(t.Fmin) << '\n';
  }
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "N,Fmax_mean,Fmin_mean,A1sq_mean,Fmax_stderr,Fmin_stderr,A1sq_stderr\n";
  for (const auto& r : rows)
    out << r.site_count << ',' << format_real(r.Fmax_mean) << ',' << format_real(r.Fmin_mean) << ','
        << format_real(r.A1sq_mean) << ',' << format_real(r.Fmax_stderr) << ',' << format_real(r.Fmin_stderr)
        << ',' << format_real(r.A1sq_stderr) << '\n';
}

void write_fit_csv(std::ostream& out, const std::vector<FringeFit>& fits) {
  out << "A1,B1,period,height,center,width,residual_rms,converged,iterations\n";
  for (const auto& f : fits)
    out << format_real(f.amplitude) << ',' << format_real(f.phase) << ',' << format_real(f.fitted_period) << ','
        << format_real(f.envelope.height) << ',' << format_real(f.envelope.center) << ','
        << format_real(f.envelope.width) << ',' << format_real(f.residual_rms) << ',' << (f.converged ? 1 : 0)
        << ',' << f.iterations << '\n';
}

void write_grid2d_csv(std::ostream& out, const GridSpec2D& grid, const Eigen::MatrixXd& values) {
  const Eigen::VectorXd u = grid.u.points(), v = grid.v.points();
  out << "u,v,F\n";
  for (Eigen::Index i = 0; i < u.size(); ++i)
    for (Eigen::Index k = 0; k < v.size(); ++k)
      out << format_real(u[i]) << ',' << format_real(v[k]) << ',' << format_real(values(i, k)) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    cells.push_back(cell);
  }
  return cells;
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw ConfigError("CSV: cannot parse number '" + text + "'");
  return value;
}

}  // namespace

DensityProfile read_profile_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("profile CSV: empty input");
  const auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "z" || header[1] != "value")
    throw ConfigError("profile CSV: expected header 'z,value'");
  std::vector<double> z, values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw ConfigError("profile CSV: expected two columns");
    z.push_back(parse_real(cells[0]));
    values.push_back(parse_real(cells[1]));
  }
  if (z.size() < 2) throw ConfigError("profile CSV: need at least two rows");
  DensityProfile profile;
  profile.z = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  profile.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  profile.grid_step = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
  require_valid(profile, "profile CSV");
  return profile;
}

Image2D read_image_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("image CSV: empty input");
  const auto header = split_csv_line(line);
  if (header.size() < 3) throw ConfigError("image CSV: header needs a label and at least two z values");
  std::vector<double> z;
  for (std::size_t k = 1; k < header.size(); ++k) z.push_back(parse_real(header[k]));
  std::vector<double> r;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ConfigError("image CSV: ragged row");
    r.push_back(parse_real(cells[0]));
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_real(cells[k]));
    rows.push_back(std::move(row));
  }
  Image2D image;
  image.r_grid = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  image.z_grid = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  image.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < z.size(); ++k)
      image.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  require_valid(image, "image CSV");
  return image;
}

void write_image_csv(std::ostream& out, const Image2D& image) {
  out << "r\\z";
  for (Eigen::Index k = 0; k < image.z_grid.size(); ++k) out << ',' << format_real(image.z_grid[k]);
  out << '\n';
  for (Eigen::Index i = 0; i < image.r_grid.size(); ++i) {
    out << format_real(image.r_grid[i]);
    for (Eigen::Index k = 0; k < image.z_grid.size(); ++k) out << ',' << format_real(image.values(i, k));
    out << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace latticefringe
