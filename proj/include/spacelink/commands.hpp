#ifndef SPACELINK_COMMANDS_HPP
#define SPACELINK_COMMANDS_HPP

// Command implementations behind the `spacelink` executable. Each returns the
// process exit code: 0 success, 2 configuration or usage error, 3 runtime or
// simulation error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spacelink/analysis.hpp"
#include "spacelink/config.hpp"
#include "spacelink/experiments.hpp"
#include "spacelink/geometry.hpp"
#include "spacelink/report.hpp"

namespace spacelink {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct WindowsOptions {
  std::optional<std::string> config_path;
  std::vector<std::string> stations;
  std::optional<double> min_elevation_deg;
  double horizon_s = kSecondsPerDay;
  double max_delta_longitude_deg = 25.0;
  double statistics_horizon_s = 10.0 * kSecondsPerDay;
  bool json = false;
};

struct ExpOptions {
  Experiment experiment = Experiment::exp1;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> duration_s;
  std::optional<double> min_elevation_deg;
  bool json = false;
  bool write_logs = true;
};

namespace detail {

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

inline Scenario scenario_from(const std::optional<std::string>& path, std::optional<Experiment> experiment) {
  if (path) return load_scenario(*path, experiment);
  Scenario s = default_scenario(experiment.value_or(Experiment::exp1));
  resolve_stations(s);
  return s;
}

inline void print_problems(std::ostream& err, const ConfigError& e) {
  err << "error: invalid configuration\n";
  for (const auto& p : e.problems()) err << "  " << p << "\n";
}

}  // namespace detail

inline int cmd_windows(const WindowsOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    Scenario s = detail::scenario_from(opt.config_path, std::nullopt);
    if (!opt.stations.empty()) {
      s.station_names = opt.stations;
      resolve_stations(s);
    }
    if (opt.min_elevation_deg) s.config.min_elevation_deg = *opt.min_elevation_deg;
    std::vector<std::string> problems;
    if (!(s.config.min_elevation_deg >= 0.0 && s.config.min_elevation_deg <= 90.0)) {
      problems.push_back("min elevation must be in [0, 90]");
    }
    if (!(opt.horizon_s > 0.0)) problems.push_back("horizon must be positive");
    if (s.config.stations.empty() || s.config.stations.size() > 2) problems.push_back("give one or two stations");
    if (!problems.empty()) throw ConfigError(problems);

    const auto& c = s.config;
    const auto& a = c.stations[0];
    const bool joint = c.stations.size() == 2;
    const auto windows = joint ? joint_windows(c.orbit, a, c.stations[1], c.min_elevation_deg, opt.horizon_s)
                               : link_windows(c.orbit, a, c.min_elevation_deg, opt.horizon_s);
    if (windows.empty()) err << "warning: no windows above " << c.min_elevation_deg << " deg in the horizon\n";

    Json stats;
    if (joint) {
      const auto js = joint_pass_summary(c.orbit, a, c.stations[1], c.min_elevation_deg, opt.statistics_horizon_s);
      stats = {{"statistics_horizon_s", opt.statistics_horizon_s},
               {"joint_passes", js.windows},
               {"joint_links_per_day", js.links_per_day},
               {"longitudinal_range_deg", js.longitudinal_range_deg},
               {"distance_km", great_circle_distance(a, c.stations[1])}};
    } else {
      const auto ps = useful_pass_statistics(c.orbit, a, opt.max_delta_longitude_deg, opt.statistics_horizon_s);
      stats = {{"statistics_horizon_s", opt.statistics_horizon_s},
               {"max_delta_longitude_deg", opt.max_delta_longitude_deg},
               {"orbits", ps.orbits},
               {"useful_orbits", ps.useful_orbits},
               {"fraction_of_orbits", ps.fraction_of_orbits},
               {"links_per_day", ps.links_per_day}};
    }

    if (opt.json) {
      Json ws = Json::array();
      for (const auto& w : windows) ws.push_back(to_json(w));
      out << Json{{"min_elevation_deg", c.min_elevation_deg}, {"horizon_s", opt.horizon_s}, {"windows", ws},
                  {"statistics", stats}}
                 .dump(2)
          << "\n";
      return kExitOk;
    }
    out << "stations,start_s,end_s,duration_s,max_elevation_deg,delta_longitude_deg,ascending\n";
    for (const auto& w : windows) {
      std::string names;
      for (const auto& n : w.stations) names += (names.empty() ? "" : "+") + n;
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f,%.3f,%.3f,%d\n", names.c_str(), w.start_s, w.end_s,
                    w.duration(), w.max_elevation_deg, w.delta_longitude_deg, w.ascending ? 1 : 0);
      out << buf;
    }
    for (const auto& [k, v] : stats.items()) out << "# " << k << "=" << v.dump() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    detail::print_problems(err, e);
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

inline int cmd_exp(const ExpOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = detail::scenario_from(opt.config_path, opt.experiment);
    if (opt.seed) s.config.seed = *opt.seed;
    if (opt.duration_s) s.config.duration_s = *opt.duration_s;
    if (opt.min_elevation_deg) s.config.min_elevation_deg = *opt.min_elevation_deg;
    if (auto problems = validate_scenario(s); !problems.empty()) throw ConfigError(problems);
  } catch (const ConfigError& e) {
    detail::print_problems(err, e);
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions ro;
    ro.keep_logs = opt.out_dir.has_value() && opt.write_logs;
    const auto result = run_experiment(s, ro);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto report = to_json(result, wall);
    if (opt.out_dir) write_run_artifacts(*opt.out_dir, result, report);
    if (opt.json) out << report.dump(2) << "\n";
    else print_text_report(out, result);
    return kExitOk;
  } catch (const ConfigError& e) {
    detail::print_problems(err, e);
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

// ------------------------------------------------------------ calculators

struct CalcOptions {
  std::string subcommand;
  bool json = false;
  // sensitivity
  double n_photons = 1e16;
  // godel
  double rho_kg_m3 = 2e-28;
  double baseline_sigma_rad_s = 1e-16;
  double baseline_time_years = 1.0;
  double scaling_exponent = 1.0;
  double enhancement = 1.0;
  // sagnac
  double radius_m = 1.0;
  double omega_rad_s = 7.2921159e-5;
  double wavelength_m = 1.55e-6;
  int samples = 4096;
  // spacelike
  double decision_time_s = 1.0;
  std::optional<double> separation_km;
  std::optional<double> time_difference_s;
  // collapse
  double distance_km = 1638.0;
  double alignment_s = 5e-12;
};

namespace detail {

// Rigid rotation about z: h_0i = (Omega x r)_i / c on a circle of radius R.
inline double sagnac_rigid_rotation(double radius_m, double omega, double wavelength_m, int samples) {
  std::vector<Vec3> path, field;
  for (int k = 0; k <= samples; ++k) {
    const double phi = 2.0 * std::numbers::pi * (k == samples ? 0 : k) / samples;
    const Vec3 r{radius_m * std::cos(phi), radius_m * std::sin(phi), 0.0};
    path.push_back(r);
    field.push_back(cross(Vec3{0.0, 0.0, omega}, r) * (1.0 / kSpeedOfLightMPerS));
  }
  return sagnac_phase(path, field, wavelength_m);
}

}  // namespace detail

inline int cmd_calc(const CalcOptions& o, std::ostream& out, std::ostream& err) {
  Json j;
  std::vector<std::string> lines;
  try {
    if (o.subcommand == "sensitivity") {
      const double sql = phase_sensitivity(o.n_photons, SensitivityRegime::standard);
      const double hl = phase_sensitivity(o.n_photons, SensitivityRegime::entangled);
      j = {{"n_photons", o.n_photons}, {"standard_rad", sql}, {"entangled_rad", hl}, {"enhancement", sql / hl}};
      lines = {"standard quantum limit: " + detail::fmt("%.6g", sql) + " rad",
               "entangled (Heisenberg):  " + detail::fmt("%.6g", hl) + " rad",
               "enhancement:             " + detail::fmt("%.6g", sql / hl)};
    } else if (o.subcommand == "godel") {
      require(o.enhancement >= 1.0, "enhancement must be >= 1");
      const double omega = godel_rotation_rate(o.rho_kg_m3);
      const auto lt = earth_lense_thirring();
      const double sigma = o.baseline_sigma_rad_s / o.enhancement;
      const double t_years =
          integration_time(omega, sigma, o.baseline_time_years * kSecondsPerYear, o.scaling_exponent) /
          kSecondsPerYear;
      j = {{"rho_kg_m3", o.rho_kg_m3},
           {"omega_rad_s", omega},
           {"lense_thirring_rad_s", lt.omega_rad_s},
           {"ratio_to_lense_thirring", omega / lt.omega_rad_s},
           {"baseline_sigma_rad_s", sigma},
           {"scaling_exponent", o.scaling_exponent},
           {"integration_time_years", t_years}};
      lines = {"Goedel rotation rate: " + detail::fmt("%.4g", omega) + " rad/s",
               "ratio to Lense-Thirring (1e-14 rad/s): " + detail::fmt("%.3g", omega / lt.omega_rad_s),
               "integration time: " + detail::fmt("%.4g", t_years) + " years"};
    } else if (o.subcommand == "sagnac") {
      require(o.samples >= 3, "samples must be >= 3");
      const double numeric = detail::sagnac_rigid_rotation(o.radius_m, o.omega_rad_s, o.wavelength_m, o.samples);
      const double area = std::numbers::pi * o.radius_m * o.radius_m;
      const double closed = -8.0 * std::numbers::pi * area * o.omega_rad_s / (o.wavelength_m * kSpeedOfLightMPerS);
      j = {{"radius_m", o.radius_m},   {"omega_rad_s", o.omega_rad_s}, {"wavelength_m", o.wavelength_m},
           {"samples", o.samples},     {"phase_rad", numeric},         {"closed_form_rad", closed},
           {"relative_error", std::abs(numeric - closed) / std::abs(closed)}};
      lines = {"Sagnac phase (contour): " + detail::fmt("%.10g", numeric) + " rad",
               "closed form:            " + detail::fmt("%.10g", closed) + " rad"};
    } else if (o.subcommand == "spacelike") {
      const double d = min_separation_for_free_choice(o.decision_time_s);
      j = {{"decision_time_s", o.decision_time_s}, {"min_separation_km", d}};
      lines = {"minimum separation: " + detail::fmt("%.1f", d) + " km"};
      if (o.separation_km || o.time_difference_s) {
        require(o.separation_km && o.time_difference_s, "--separation-km and --time-difference go together");
        const bool sl = spacelike_separated({{*o.separation_km, 0.0, 0.0}, *o.time_difference_s}, {{}, 0.0});
        j["spacelike"] = sl;
        lines.push_back(std::string("events spacelike separated: ") + (sl ? "yes" : "no"));
      }
    } else if (o.subcommand == "collapse") {
      const double v = collapse_speed_lower_bound(o.distance_km, o.alignment_s);
      j = {{"distance_km", o.distance_km}, {"alignment_s", o.alignment_s}, {"lower_bound_c", v}};
      lines = {"collapse speed lower bound: " + detail::fmt("%.4g", v) + " c"};
    } else {
      err << "error: unknown calculator '" << o.subcommand << "'\n";
      return kExitConfig;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (o.json) out << j.dump(2) << "\n";
  else for (const auto& l : lines) out << l << "\n";
  return kExitOk;
}

}  // namespace spacelink

#endif  // SPACELINK_COMMANDS_HPP
