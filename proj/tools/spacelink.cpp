// spacelink: link windows, experiment runs and calculators.
//
//   spacelink windows --station Tenerife --min-elevation 10
//   spacelink exp exp1 --seed 7 --out run1
//   spacelink calc godel --rho 2e-28

#include <iostream>

#include <CLI11.hpp>

#include "spacelink/commands.hpp"

int main(int argc, char** argv) {
  using namespace spacelink;
  CLI::App app{"Entangled-photon satellite link simulator"};
  app.require_subcommand(1);

  WindowsOptions wopt;
  auto* windows = app.add_subcommand("windows", "Predict link windows and pass statistics");
  windows->add_option("--config", wopt.config_path, "Scenario file");
  windows->add_option("--station", wopt.stations, "Station name (repeat for a joint window search)");
  windows->add_option("--min-elevation", wopt.min_elevation_deg, "Minimum elevation, degrees");
  windows->add_option("--horizon", wopt.horizon_s, "Search horizon, seconds");
  windows->add_option("--max-delta-longitude", wopt.max_delta_longitude_deg, "Useful-pass longitude limit, degrees");
  windows->add_option("--statistics-horizon", wopt.statistics_horizon_s, "Horizon for pass statistics, seconds");
  windows->add_flag("--json", wopt.json, "JSON output");

  ExpOptions eopt;
  std::string experiment = "exp1";
  bool no_logs = false;
  auto* exp = app.add_subcommand("exp", "Run experiment exp1, exp2 or exp3");
  exp->add_option("experiment", experiment, "exp1, exp2 or exp3")->required()->check(CLI::IsMember({"exp1", "exp2", "exp3"}));
  exp->add_option("--config", eopt.config_path, "Scenario file");
  exp->add_option("--seed", eopt.seed, "Master seed");
  exp->add_option("--out", eopt.out_dir, "Output directory for logs, keys and report.json");
  exp->add_option("--duration", eopt.duration_s, "Quantum-communication duration, seconds");
  exp->add_option("--min-elevation", eopt.min_elevation_deg, "Minimum elevation, degrees");
  exp->add_flag("--json", eopt.json, "Print the JSON report");
  exp->add_flag("--no-logs", no_logs, "Do not write event logs");

  CalcOptions copt;
  auto* calc = app.add_subcommand("calc", "Fundamental-physics calculators");
  calc->require_subcommand(1);
  calc->add_flag("--json", copt.json, "JSON output");
  auto* sens = calc->add_subcommand("sensitivity", "Phase sensitivity, standard vs entangled");
  sens->add_option("--n", copt.n_photons, "Photon number")->required();
  auto* godel = calc->add_subcommand("godel", "Goedel rotation rate and integration time");
  godel->add_option("--rho", copt.rho_kg_m3, "Mass density, kg/m^3");
  godel->add_option("--baseline-sigma", copt.baseline_sigma_rad_s, "Resolution after the baseline time, rad/s");
  godel->add_option("--baseline-years", copt.baseline_time_years, "Baseline averaging time, years");
  godel->add_option("--exponent", copt.scaling_exponent, "Resolution scales as T^-p")->check(CLI::IsMember({0.5, 1.0}));
  godel->add_option("--enhancement", copt.enhancement, "Entanglement gain on the baseline resolution");
  auto* sagnac = calc->add_subcommand("sagnac", "Sagnac phase of a rigidly rotating circular loop");
  sagnac->add_option("--radius", copt.radius_m, "Loop radius, m");
  sagnac->add_option("--omega", copt.omega_rad_s, "Rotation rate, rad/s");
  sagnac->add_option("--wavelength", copt.wavelength_m, "Wavelength, m");
  sagnac->add_option("--samples", copt.samples, "Contour samples");
  auto* spacelike = calc->add_subcommand("spacelike", "Free-choice separation and spacelike check");
  spacelike->add_option("--decision-time", copt.decision_time_s, "Decision time, s");
  spacelike->add_option("--separation-km", copt.separation_km, "Event separation, km");
  spacelike->add_option("--time-difference", copt.time_difference_s, "Event time difference, s");
  auto* collapse = calc->add_subcommand("collapse", "Collapse-speed lower bound");
  collapse->add_option("--distance", copt.distance_km, "Detector separation, km");
  collapse->add_option("--alignment", copt.alignment_s, "Time alignment uncertainty, s");
  for (auto* sub : {sens, godel, sagnac, spacelike, collapse}) sub->add_flag("--json", copt.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*windows) return cmd_windows(wopt, std::cout, std::cerr);
  if (*exp) {
    eopt.experiment = *parse_experiment(experiment);
    eopt.write_logs = !no_logs;
    return cmd_exp(eopt, std::cout, std::cerr);
  }
  for (auto* sub : calc->get_subcommands()) copt.subcommand = sub->get_name();
  return cmd_calc(copt, std::cout, std::cerr);
}
