#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "spacelink/commands.hpp"

using namespace spacelink;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("spacelink_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

bool mentions(const std::vector<std::string>& problems, const std::string& what) {
  return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) { return p.find(what) != std::string::npos; });
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPACELINK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(EventLog, RoundTripIsExact) {
  auto s = default_scenario(Experiment::exp1);
  resolve_stations(s);
  s.config.duration_s = 2.0;
  const auto& c = s.config;
  const auto w = *select_window(link_windows(c.orbit, c.stations[0], 10.0, c.search_horizon_s), 20.0);
  Rng rng(3);
  const auto run = run_single_downlink(c, c.stations[0], w, rng);
  ASSERT_GT(run.log_a.size(), 10000u);
  for (const auto* log : {&run.log_a, &run.log_b}) {
    std::stringstream ss;
    write_event_log(ss, *log);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, kEventLogHeader.size() + 1), std::string(kEventLogHeader) + "\n");
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(text.find('"'), std::string::npos);
    EXPECT_EQ(read_event_log(ss), *log);
  }
}

TEST(EventLog, FixedRowFormat) {
  std::stringstream ss;
  write_event_log(ss, {{-12, 22.5f, 2, 1, 1, Channel::background}, {1234567890123, 0.0f, 0, 0, 0, Channel::signal}});
  EXPECT_EQ(ss.str(),
            "t_ns,terminal,basis_label,angle_deg,outcome,channel\n"
            "-12,2,1,22.5,1,background\n"
            "1234567890123,0,0,0,0,signal\n");
}

TEST(EventLog, MalformedInputRejected) {
  for (const char* text : {"", "t,terminal\n", "t_ns,terminal,basis_label,angle_deg,outcome,channel\n1,0,0,0,2,signal\n",
                           "t_ns,terminal,basis_label,angle_deg,outcome,channel\n1,0,0,0,1,laser\n",
                           "t_ns,terminal,basis_label,angle_deg,outcome,channel\n1.5,0,0,0,1,signal\n",
                           "t_ns,terminal,basis_label,angle_deg,outcome,channel\n1,0,0,0,1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_event_log(in), FormatError) << text;
  }
}

TEST(Config, ParsesSectionsAndKeepsExperimentDefaults) {
  std::istringstream in(
      "# comment\n[scenario]\nexperiment = exp3\nseed = 42\nduration_s = 120\n"
      "[source]\nvisibility = 0.9 ; trailing\n[stations]\nnames = Tenerife, Calar Alto\n"
      "[channel_b]\nbackground_rate = 500\n[protocol]\nqber_sample_fraction = 0.25\n");
  const auto s = parse_scenario(in);
  EXPECT_EQ(s.config.experiment, Experiment::exp3);
  EXPECT_EQ(s.config.seed, 42u);
  EXPECT_EQ(s.config.duration_s, 120.0);
  EXPECT_EQ(s.config.source.visibility, 0.9);
  EXPECT_EQ(s.config.channel_b.background_rate, 500.0);
  EXPECT_EQ(s.config.schedule, BasisSchedule::e91);
  ASSERT_EQ(s.config.stations.size(), 2u);
  EXPECT_EQ(s.config.stations[1].name, "Calar Alto");
}

TEST(Config, EveryViolationIsListed) {
  std::istringstream in(
      "[scenario]\nduration_s = -5\ncoincidence_window_ns = abc\n[source]\npair_rate = -1\nvisibility = 1.5\n"
      "[channel_a]\nbackground_rate = -3\n[channel_b]\nattenuation_db = -2\n[orbit]\ncolour = blue\n[bogus]\n");
  try {
    parse_scenario(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    EXPECT_TRUE(mentions(p, "scenario.duration_s"));
    EXPECT_TRUE(mentions(p, "scenario.coincidence_window_ns"));
    EXPECT_TRUE(mentions(p, "source.pair_rate"));
    EXPECT_TRUE(mentions(p, "source.visibility"));
    EXPECT_TRUE(mentions(p, "channel_a.background_rate"));
    EXPECT_TRUE(mentions(p, "channel_b.attenuation_db"));
    EXPECT_TRUE(mentions(p, "orbit.colour"));
    EXPECT_TRUE(mentions(p, "[bogus]"));
  }
}

TEST(Config, WindowOutsideHorizonRejected) {
  std::istringstream in("[scenario]\nsearch_horizon_s = 86400\nwindow_start_s = 90000\n");
  EXPECT_THROW(parse_scenario(in), ConfigError);
}

TEST(Config, UnknownStationRejected) {
  std::istringstream in("[stations]\nnames = Atlantis\n");
  try {
    parse_scenario(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(mentions(e.problems(), "Atlantis"));
  }
}

TEST(CmdWindows, OgsDayListsWindowsAndUsefulPasses) {
  WindowsOptions o;
  o.stations = {"Tenerife"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_windows(o, out, err), kExitOk);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "stations,start_s,end_s,duration_s,max_elevation_deg,delta_longitude_deg,ascending");
  int rows = 0;
  double links_per_day = -1;
  while (std::getline(lines, line)) {
    if (line.rfind("Tenerife,", 0) == 0) ++rows;
    if (line.rfind("# links_per_day=", 0) == 0) links_per_day = std::stod(line.substr(16));
  }
  EXPECT_GE(rows, 1);
  EXPECT_LE(rows, 4);
  EXPECT_NEAR(links_per_day, 2.0, 0.5);
}

TEST(CmdWindows, ZenithOnlyIsEmptyWithWarning) {
  WindowsOptions o;
  o.stations = {"Tenerife"};
  o.min_elevation_deg = 90.0;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_windows(o, out, err), kExitOk);
  EXPECT_NE(err.str().find("warning"), std::string::npos);
  EXPECT_EQ(out.str().find("Tenerife,"), std::string::npos);
}

TEST(CmdWindows, JointSearchReportsLongitudinalRange) {
  WindowsOptions o;
  o.stations = {"Calar Alto", "Sierra Nevada"};
  o.json = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_windows(o, out, err), kExitOk);
  const auto j = Json::parse(out.str());
  ASSERT_FALSE(j["windows"].empty());
  EXPECT_EQ(j["windows"][0]["stations"].size(), 2u);
  EXPECT_GT(j["statistics"]["longitudinal_range_deg"].get<double>(), 0.0);
  EXPECT_NEAR(j["statistics"]["distance_km"].get<double>(), 76.0, 1.5);
}

TEST(CmdWindows, UnknownStationIsConfigError) {
  WindowsOptions o;
  o.stations = {"Atlantis"};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_windows(o, out, err), kExitConfig);
}

TEST(CmdExp, SameSeedGivesIdenticalArtifacts) {
  for (auto e : {Experiment::exp1, Experiment::exp3}) {
    std::vector<fs::path> dirs{scratch("det_a"), scratch("det_b")};
    for (const auto& d : dirs) {
      ExpOptions o;
      o.experiment = e;
      o.seed = 11;
      o.out_dir = d.string();
      if (e == Experiment::exp1) o.duration_s = 5.0;
      std::ostringstream out, err;
      ASSERT_EQ(cmd_exp(o, out, err), kExitOk) << err.str();
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      const auto other = dirs[1] / name;
      ASSERT_TRUE(fs::exists(other)) << name;
      if (name == "report.json") {
        auto a = Json::parse(slurp(entry.path())), b = Json::parse(slurp(other));
        a.erase("wall_clock_s");
        b.erase("wall_clock_s");
        EXPECT_EQ(a.dump(), b.dump());
      } else {
        EXPECT_EQ(slurp(entry.path()), slurp(other)) << name;
      }
      ++compared;
    }
    EXPECT_EQ(compared, 5u);
  }
}

TEST(CmdExp, ArtifactsAreReadable) {
  const auto d = scratch("artifacts");
  ExpOptions o;
  o.experiment = Experiment::exp3;
  o.seed = 2;
  o.out_dir = d.string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_exp(o, out, err), kExitOk);
  const auto log = read_event_log((d / "exp3_receiver_a.csv").string());
  EXPECT_GT(log.size(), 100000u);
  const auto key = slurp(d / "exp3_key_a.txt");
  EXPECT_EQ(key.rfind("# length=", 0), 0u);
  EXPECT_NE(key.find("# qber="), std::string::npos);
  EXPECT_NE(key.find("# security_flag="), std::string::npos);
  const auto report = Json::parse(slurp(d / "report.json"));
  const auto& session = report["sessions"][0];
  for (const auto& row : session["rates"]) {
    EXPECT_TRUE(row.contains("expected_per_s"));
    EXPECT_TRUE(row.contains("simulated_per_s"));
  }
  ASSERT_TRUE(session.contains("chsh"));
  if (session["chsh"].is_null()) {
    EXPECT_EQ(session["security_flag"], "unchecked");
  }
  EXPECT_EQ(report["scenario"]["seed"], 2u);
  EXPECT_TRUE(report.contains("wall_clock_s"));
  EXPECT_FALSE(report["notes"].empty());
}

TEST(CmdExp, RelayRecoversRemoteKey) {
  ExpOptions o;
  o.experiment = Experiment::exp2;
  o.seed = 4;
  o.duration_s = 60.0;
  o.json = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_exp(o, out, err), kExitOk) << err.str();
  const auto j = Json::parse(out.str());
  EXPECT_EQ(j["sessions"].size(), 2u);
  EXPECT_TRUE(j["relay"]["remote_key_recovered_exactly"].get<bool>());
}

TEST(CmdExp, ExitCodes) {
  const auto d = scratch("codes");
  ExpOptions bad;
  bad.config_path = write_file(d / "bad.conf", "[source]\npair_rate = -1\n").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_exp(bad, out, err), kExitConfig);
  EXPECT_NE(err.str().find("source.pair_rate"), std::string::npos);

  ExpOptions missing;
  missing.config_path = (d / "does_not_exist.conf").string();
  EXPECT_EQ(cmd_exp(missing, out, err), kExitConfig);

  ExpOptions no_window;
  no_window.experiment = Experiment::exp3;
  no_window.min_elevation_deg = 89.0;
  EXPECT_EQ(cmd_exp(no_window, out, err), kExitRuntime);
}

TEST(CmdCalc, Values) {
  auto run = [](CalcOptions o) {
    o.json = true;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_calc(o, out, err), kExitOk) << err.str();
    return Json::parse(out.str());
  };
  CalcOptions o;
  o.subcommand = "spacelike";
  EXPECT_NEAR(run(o)["min_separation_km"].get<double>(), 599584.916, 1e-3);
  o.subcommand = "sensitivity";
  EXPECT_DOUBLE_EQ(run(o)["enhancement"].get<double>(), 1e8);
  o.subcommand = "godel";
  EXPECT_NEAR(run(o)["omega_rad_s"].get<double>(), 4.1e-19, 0.05 * 4.1e-19);
  o.subcommand = "sagnac";
  EXPECT_LT(run(o)["relative_error"].get<double>(), 1e-6);
  o.subcommand = "collapse";
  EXPECT_GT(run(o)["lower_bound_c"].get<double>(), 1e8);
}

TEST(CmdCalc, UsageErrors) {
  std::ostringstream out, err;
  CalcOptions o;
  o.subcommand = "warp";
  EXPECT_EQ(cmd_calc(o, out, err), kExitConfig);
  o.subcommand = "sensitivity";
  o.n_photons = 0.5;
  EXPECT_EQ(cmd_calc(o, out, err), kExitConfig);
}

TEST(Executable, ExitCodes) {
  EXPECT_EQ(run_cli("calc spacelike --decision-time 1"), 0);
  EXPECT_EQ(run_cli("calc sensitivity"), 2);
  EXPECT_EQ(run_cli("exp exp9"), 2);
  EXPECT_EQ(run_cli("windows --station Atlantis"), 2);
  EXPECT_EQ(run_cli("--bogus"), 2);
}
