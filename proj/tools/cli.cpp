#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"

#include "latticefringe/density_synthesis.hpp"
#include "latticefringe/monte_carlo.hpp"
#include "latticefringe/parallel.hpp"
#include "latticefringe/physics_scales.hpp"
#include "latticefringe/rng.hpp"

namespace latticefringe::cli {

namespace fs = std::filesystem;

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
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& target) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    target.reset();
    return;
  }
  T value{};
  read_if(j, key, value);
  target = value;
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::x:
      return "x";
    case Axis::y:
      return "y";
    case Axis::z:
      return "z";
  }
  return "z";
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw ConfigError("unknown axis '" + s + "' (x|y|z)");
}

}  // namespace

void to_json(json& j, const SimulateConfig& c) {
  j = json{{"site_count", c.site_count},
           {"amplitude_profile", to_string(c.amplitude_profile)},
           {"apply_convolution", c.apply_convolution},
           {"seed", c.seed},
           {"params", c.params},
           {"grid", c.grid},
           {"propagation", to_string(c.propagation)},
           {"phases", optional_json(c.phases)}};
}

void from_json(const json& j, SimulateConfig& c) {
  reject_unknown_keys(j,
                      {"site_count", "amplitude_profile", "apply_convolution", "seed", "params", "grid",
                       "propagation", "phases"},
                      "simulate config");
  read_if(j, "site_count", c.site_count);
  if (j.contains("amplitude_profile"))
    c.amplitude_profile = parse_amplitude_profile(j.at("amplitude_profile").get<std::string>());
  read_if(j, "apply_convolution", c.apply_convolution);
  read_if(j, "seed", c.seed);
  if (j.contains("params")) latticefringe::from_json(j.at("params"), c.params);
  if (j.contains("grid")) latticefringe::from_json(j.at("grid"), c.grid);
  if (j.contains("propagation")) c.propagation = parse_propagation(j.at("propagation").get<std::string>());
  read_optional(j, "phases", c.phases);
  if (c.phases && !j.contains("site_count")) c.site_count = static_cast<int>(c.phases->size());
}

void to_json(json& j, const ScalingConfig& c) {
  j = json{{"site_counts", c.site_counts}, {"trials", c.trials}, {"seed", c.seed}};
}

void from_json(const json& j, ScalingConfig& c) {
  reject_unknown_keys(j, {"site_counts", "trials", "seed"}, "scaling config");
  read_if(j, "site_counts", c.site_counts);
  read_if(j, "trials", c.trials);
  read_if(j, "seed", c.seed);
}

void to_json(json& j, const FitConfig& c) {
  j = json{{"input", c.input},
           {"period", optional_json(c.period)},
           {"fit_period", c.fit_period},
           {"params", c.params},
           {"band_halfwidth", optional_json(c.band_halfwidth)},
           {"fit", c.fit}};
}

void from_json(const json& j, FitConfig& c) {
  reject_unknown_keys(j, {"input", "period", "fit_period", "params", "band_halfwidth", "fit"}, "fit config");
  read_if(j, "input", c.input);
  read_optional(j, "period", c.period);
  read_if(j, "fit_period", c.fit_period);
  if (j.contains("params")) latticefringe::from_json(j.at("params"), c.params);
  read_optional(j, "band_halfwidth", c.band_halfwidth);
  if (j.contains("fit")) latticefringe::from_json(j.at("fit"), c.fit);
}

void to_json(json& j, const Lattice3DConfig& c) {
  j = json{{"dims", c.dims}, {"draws", c.draws}, {"seed", c.seed}, {"samples_per_axis", c.samples_per_axis}};
  if (c.line_of_sight)
    j["line_of_sight"] = {{"axis", axis_name(c.line_of_sight->axis)},
                          {"u", c.line_of_sight->grid.u},
                          {"v", c.line_of_sight->grid.v}};
  else
    j["line_of_sight"] = nullptr;
}

void from_json(const json& j, Lattice3DConfig& c) {
  reject_unknown_keys(j, {"dims", "draws", "seed", "samples_per_axis", "line_of_sight"}, "lattice3d config");
  read_if(j, "dims", c.dims);
  read_if(j, "draws", c.draws);
  read_if(j, "seed", c.seed);
  read_if(j, "samples_per_axis", c.samples_per_axis);
  if (j.contains("line_of_sight")) {
    const json& los = j.at("line_of_sight");
    if (los.is_null()) {
      c.line_of_sight.reset();
    } else {
      reject_unknown_keys(los, {"axis", "u", "v"}, "line_of_sight");
      LineOfSightConfig cfg;
      if (los.contains("axis")) cfg.axis = parse_axis(los.at("axis").get<std::string>());
      if (los.contains("u")) latticefringe::from_json(los.at("u"), cfg.grid.u);
      if (los.contains("v")) latticefringe::from_json(los.at("v"), cfg.grid.v);
      c.line_of_sight = cfg;
    }
  }
}

void to_json(json& j, const ScalesConfig& c) {
  j = json{{"params", c.params}, {"lattice_depth_hz", optional_json(c.lattice_depth_hz)}};
}

void from_json(const json& j, ScalesConfig& c) {
  reject_unknown_keys(j, {"params", "lattice_depth_hz"}, "scales config");
  if (j.contains("params")) latticefringe::from_json(j.at("params"), c.params);
  read_optional(j, "lattice_depth_hz", c.lattice_depth_hz);
}

int resolve_workers(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--workers must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("LATTICEFRINGE_WORKERS"); env && *env) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1 || value > 4096)
      throw ConfigError(std::string("LATTICEFRINGE_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<int>(value);
  }
  return 1;
}

namespace {

struct Session {
  std::string command;
  fs::path config_path;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
  int workers = 1;
  OutputFormat format = OutputFormat::csv;
  std::string input;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  template <class Config>
  Config load_config() const {
    Config config;
    if (config_path.empty()) return config;
    json j = read_json_file(config_path);
    if (j.is_object() && j.contains("command") && j.contains("config")) {
      const std::string recorded = j.at("command").get<std::string>();
      if (recorded != command)
        throw ConfigError("manifest '" + config_path.string() + "' was written by '" + recorded + "', not '" +
                          command + "'");
      j = j.at("config");
    }
    from_json(j, config);
    return config;
  }

  void write(const std::string& name, const std::string& text) {
    write_text_file(out_dir / name, text);
    outputs.push_back(name);
  }

  void note(const ValidationReport& report) {
    for (const auto& w : report.warnings) {
      *err << "warning: " << w << '\n';
      warnings.push_back(w);
    }
  }

  std::string table_name(const std::string& stem) const {
    return stem + (format == OutputFormat::csv ? ".csv" : ".json");
  }
};

void require_ok(const ValidationReport& report, const char* what) {
  if (!report.ok()) throw ConfigError(std::string(what) + ": " + report.summary());
}

template <class Writer>
std::string render(Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json command_simulate(Session& s) {
  auto config = s.load_config<SimulateConfig>();
  if (s.seed) config.seed = *s.seed;

  EnsembleConfig ensemble;
  ensemble.site_count = config.site_count;
  ensemble.amplitude_profile = config.amplitude_profile;
  ensemble.seed = config.seed;
  ensemble.phase_override = config.phases;
  if (config.phases && static_cast<int>(config.phases->size()) != config.site_count)
    throw ConfigError("simulate config: phases length mismatch with site_count");
  if (config.site_count < 1) throw ConfigError("simulate config: site_count must be >= 1");

  const LatticeShot shot = ensemble_shot(ensemble, 0);
  ValidationReport report = validate(config.params, shot);
  report.merge(check(config.grid));
  require_ok(report, "simulate config");
  s.note(report);

  DensityProfile profile = synthesize_density(shot, config.params, config.grid, config.propagation);
  if (config.apply_convolution) profile = convolve_psf(profile, config.params.imaging_sigma());
  const HarmonicSpectrum spectrum = harmonics_from_phases(shot, fringe_period(config.params.expansion_time,
                                                                              config.params.mass,
                                                                              config.params.lattice_period));

  if (s.format == OutputFormat::csv) {
    s.write("profile.csv", render([&](std::ostream& o) { write_profile_csv(o, profile); }));
    s.write("spectrum.csv", render([&](std::ostream& o) { write_spectrum_csv(o, spectrum); }));
  } else {
    s.write("profile.json", dump(json(profile)));
    s.write("spectrum.json", dump(json(spectrum)));
  }
  json sidecar = shot;
  sidecar["seed"] = config.seed;
  sidecar["phases_explicit"] = config.phases.has_value();
  s.write("shot.json", dump(sidecar));
  *s.out << "simulated N=" << shot.site_count << " on " << profile.size() << " points\n";
  return config;
}

json command_ensemble(Session& s) {
  auto config = s.load_config<EnsembleConfig>();
  if (s.seed) config.seed = *s.seed;
  const ValidationReport report = check(config);
  require_ok(report, "ensemble config");
  s.note(report);

  const EnsembleRun run = run_ensemble(config, s.workers);
  s.write("summary.json", dump(json(run.stats)));
  if (s.format == OutputFormat::csv) {
    s.write("trials.csv", render([&](std::ostream& o) { write_trials_csv(o, run.trials); }));
  } else {
    json rows = json::array();
    for (const auto& t : run.trials)
      rows.push_back({{"trial", t.trial},
                      {"A1", t.fit_ok ? json(t.A1) : json(nullptr)},
                      {"B1", t.fit_ok ? json(t.B1) : json(nullptr)},
                      {"Fmax", t.Fmax},
                      {"Fmin", t.Fmin}});
    s.write("trials.json", dump(rows));
  }
  *s.out << "mean_A1=" << format_real(run.stats.mean_A1) << " std_A1=" << format_real(run.stats.std_A1)
         << " accepted=" << run.stats.trials << " failed=" << run.stats.failed_fits << '\n';
  return config;
}

json command_scaling(Session& s) {
  auto config = s.load_config<ScalingConfig>();
  if (s.seed) config.seed = *s.seed;
  if (config.site_counts.empty()) throw ConfigError("scaling config: site_counts is empty");
  const auto rows = scaling_study(config.site_counts, config.trials, config.seed, s.workers);
  if (s.format == OutputFormat::csv)
    s.write("scaling.csv", render([&](std::ostream& o) { write_scaling_csv(o, rows); }));
  else
    s.write("scaling.json", dump(json(rows)));
  for (const auto& r : rows)
    *s.out << "N=" << r.site_count << " Fmax=" << format_real(r.Fmax_mean) << " Fmin=" << format_real(r.Fmin_mean)
           << '\n';
  return config;
}

bool looks_like_profile_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string header;
  std::getline(in, header);
  return header.rfind("z,value", 0) == 0;
}

json command_fit(Session& s) {
  auto config = s.load_config<FitConfig>();
  if (!s.input.empty()) config.input = s.input;
  if (config.input.empty()) throw ConfigError("fit: no input file (set 'input' or pass --input)");
  require_ok(check(config.params), "fit params");
  const fs::path input = config.input;
  if (!fs::exists(input)) throw IoError("input '" + input.string() + "' does not exist");

  std::optional<DensityProfile> profile;
  std::optional<Image2D> image;
  if (input.extension() == ".json") {
    const json j = read_json_file(input);
    if (j.contains("r_grid"))
      image = j.get<Image2D>();
    else
      profile = j.get<DensityProfile>();
  } else if (looks_like_profile_csv(input)) {
    std::ifstream in(input);
    profile = read_profile_csv(in);
  } else {
    std::ifstream in(input);
    image = read_image_csv(in);
  }
  if (image) {
    require_valid(*image, "input image");
    const double band = config.band_halfwidth.value_or(image->r_grid.cwiseAbs().maxCoeff());
    profile = radial_average(*image, band);
    s.write("radial_profile.csv", render([&](std::ostream& o) { write_profile_csv(o, *profile); }));
  }
  require_valid(*profile, "input profile");

  const double period = config.period.value_or(
      fringe_period(config.params.expansion_time, config.params.mass, config.params.lattice_period));
  const FringeFit fit = fit_fringes(*profile, period, config.fit_period, config.fit);
  s.write("fit.json", dump(json(fit)));
  s.write("fit.csv", render([&](std::ostream& o) { write_fit_csv(o, {fit}); }));
  *s.out << "A1=" << format_real(fit.amplitude) << " B1=" << format_real(fit.phase)
         << " D=" << format_real(fit.fitted_period) << (fit.converged ? "" : " (not converged)") << '\n';
  return config;
}

int default_samples(const std::array<int, 3>& dims) {
  const int need = 2 * std::max({dims[0], dims[1], dims[2]});
  int m = 1;
  while (m < need) m *= 2;
  return m;
}

json command_lattice3d(Session& s) {
  auto config = s.load_config<Lattice3DConfig>();
  if (s.seed) config.seed = *s.seed;
  if (config.draws < 1) throw ConfigError("lattice3d config: draws must be >= 1");
  const int samples = config.samples_per_axis > 0 ? config.samples_per_axis : default_samples(config.dims);

  std::vector<Extrema3D> extrema(static_cast<std::size_t>(config.draws));
  std::vector<Lattice3DShot> shots(extrema.size());
  for (std::size_t i = 0; i < extrema.size(); ++i) {
    const Eigen::Index total = Eigen::Index{config.dims[0]} * config.dims[1] * config.dims[2];
    PhaseStream stream(config.seed, i);
    shots[i] = Lattice3DShot::make(config.dims, sample_phases(static_cast<int>(total), stream));
  }
  require_valid(shots.front(), "lattice3d shot");
  parallel_for_index(extrema.size(), s.workers,
                     [&](std::size_t i) { extrema[i] = f_extrema_3d(shots[i], samples); });

  double mean_max = 0.0;
  for (const auto& e : extrema) mean_max += e.max;
  mean_max /= static_cast<double>(extrema.size());

  json draws = json::array();
  std::ostringstream csv;
  csv << "draw,Fmax,Fmin,argmax_x,argmax_y,argmax_z\n";
  for (std::size_t i = 0; i < extrema.size(); ++i) {
    const auto& e = extrema[i];
    draws.push_back({{"draw", i},
                     {"Fmax", e.max},
                     {"Fmin", e.min},
                     {"argmax", {e.argmax.x(), e.argmax.y(), e.argmax.z()}}});
    csv << i << ',' << format_real(e.max) << ',' << format_real(e.min) << ',' << format_real(e.argmax.x()) << ','
        << format_real(e.argmax.y()) << ',' << format_real(e.argmax.z()) << '\n';
  }
  s.write("summary.json", dump({{"mean_Fmax", mean_max}, {"samples_per_axis", samples}, {"draws", draws.size()}}));
  if (s.format == OutputFormat::csv)
    s.write("draws.csv", csv.str());
  else
    s.write("draws.json", dump(draws));

  if (config.line_of_sight) {
    const auto& los = *config.line_of_sight;
    const Eigen::MatrixXd map = integrate_line_of_sight(shots.front(), los.axis, los.grid);
    if (s.format == OutputFormat::csv) {
      s.write("line_of_sight.csv", render([&](std::ostream& o) { write_grid2d_csv(o, los.grid, map); }));
    } else {
      json rows = json::array();
      for (Eigen::Index i = 0; i < map.rows(); ++i) {
        const Eigen::VectorXd row = map.row(i).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
      }
      s.write("line_of_sight.json", dump({{"u", los.grid.u}, {"v", los.grid.v}, {"F", rows}}));
    }
  }
  *s.out << "mean_Fmax=" << format_real(mean_max) << " over " << extrema.size() << " draws\n";
  return config;
}

json command_scales(Session& s) {
  const auto config = s.load_config<ScalesConfig>();
  const ValidationReport report = check(config.params);
  require_ok(report, "scales params");
  s.note(report);
  std::optional<double> depth;
  if (config.lattice_depth_hz) depth = *config.lattice_depth_hz * constants::planck;
  const ScalesReport scales = make_scales_report(config.params, depth);
  *s.out << format_scales_table(scales);
  s.write("scales.json", dump(json(scales)));
  return config;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interference of independent condensates released from an optical lattice"};
  app.set_version_flag("--version", LATTICEFRINGE_VERSION);
  app.require_subcommand(1);

  Session session;
  session.out = &out;
  session.err = &err;
  std::string config_path, out_dir = ".", format = "csv";
  std::uint64_t seed = 0;
  int workers = 0;

  auto add_common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--config", config_path, "JSON config file (or a manifest from an earlier run)");
    if (seeded) sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--workers", workers, "Worker threads (else LATTICEFRINGE_WORKERS, else 1)");
    sub->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };

  using Handler = json (*)(Session&);
  const std::vector<std::tuple<const char*, const char*, Handler, bool>> commands{
      {"simulate", "Single-shot density profile", command_simulate, true},
      {"ensemble", "Random-phase ensemble with fringe fits", command_ensemble, true},
      {"scaling", "Extrema and harmonic statistics versus N", command_scaling, true},
      {"fit", "Fit a measured or simulated profile or image", command_fit, false},
      {"lattice3d", "3D lattice extrema and line-of-sight maps", command_lattice3d, true},
      {"scales", "Physical scales table", command_scales, false},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, handler, seeded] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, seeded);
    if (std::string(name) == "fit") sub->add_option("--input", session.input, "Profile or image file");
    subs.push_back(sub);
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::config_error;
  }

  std::size_t chosen = 0;
  while (!subs[chosen]->parsed()) ++chosen;
  CLI::App* sub = subs[chosen];
  const Handler handler = std::get<2>(commands[chosen]);
  session.command = sub->get_name();

  try {
    const auto started = std::chrono::steady_clock::now();
    session.config_path = config_path;
    if (std::get<3>(commands[chosen]) && sub->count("--seed") > 0) session.seed = seed;
    session.out_dir = out_dir;
    session.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
    session.workers = resolve_workers(sub->count("--workers") > 0 ? std::optional<int>(workers) : std::nullopt);
    std::error_code ec;
    fs::create_directories(session.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + session.out_dir.string() + "': " + ec.message());

    const json effective = handler(session);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"command", session.command},
                  {"config", effective},
                  {"version", LATTICEFRINGE_VERSION},
                  {"format", format},
                  {"workers", session.workers},
                  {"wall_time_s", wall},
                  {"outputs", session.outputs},
                  {"warnings", session.warnings}};
    manifest["seed"] = effective.contains("seed") ? effective.at("seed") : json(nullptr);
    write_text_file(session.out_dir / "manifest.json", dump(manifest));
    return ExitCode::ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return ExitCode::config_error;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return ExitCode::numeric_error;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return ExitCode::io_error;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return ExitCode::config_error;
  }
}

}  // namespace latticefringe::cli
