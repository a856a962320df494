#ifndef SPACELINK_CONFIG_HPP
#define SPACELINK_CONFIG_HPP

// Scenario files: flat `key = value` lines grouped under [section] headers.
// `#` and `;` start comments. Unknown sections or keys are errors, and every
// problem in a file is reported at once.
//
//   [scenario]    experiment seed duration_s coincidence_window_ns
//                 min_elevation_deg search_horizon_s window_start_s
//   [orbit]       altitude_km inclination_deg period_s raan_deg phase_at_epoch_deg
//   [stations]    catalog names          (names comma separated)
//   [source]      pair_rate state visibility
//   [channel_a]   attenuation_db detection_loss_db background_rate
//   [channel_b]   rotation_amplitude_deg rotation_period_s
//                 compensation_rate_hz compensation_noise_deg
//   [clocks]      max_offset_s drift jitter_s
//   [protocol]    schedule fixed_angle_deg qber_sample_fraction ranging_rate_hz
//   [transmitter] detection_loss_db pat_acquisition_s

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spacelink/catalog.hpp"
#include "spacelink/linksim.hpp"

namespace spacelink {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& p : v) s += "\n  " + p;
    return s;
  }
  std::vector<std::string> problems_;
};

// Everything a run needs beyond ScenarioConfig.
struct Scenario {
  ScenarioConfig config;
  std::vector<std::string> station_names;
  std::string catalog_path;  // empty: built-in catalog
  std::optional<double> window_start_s;
};

inline std::string_view to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::exp1: return "exp1";
    case Experiment::exp2: return "exp2";
    case Experiment::exp3: return "exp3";
  }
  return "?";
}

inline std::optional<Experiment> parse_experiment(std::string_view s) {
  if (s == "exp1") return Experiment::exp1;
  if (s == "exp2") return Experiment::exp2;
  if (s == "exp3") return Experiment::exp3;
  return std::nullopt;
}

inline std::string_view to_string(BasisSchedule s) noexcept {
  switch (s) {
    case BasisSchedule::random_standard: return "random_standard";
    case BasisSchedule::fixed: return "fixed";
    case BasisSchedule::chsh: return "chsh";
    case BasisSchedule::e91: return "e91";
  }
  return "?";
}

inline std::string_view to_string(StateFamily s) noexcept {
  return s == StateFamily::phi_plus ? "phi_plus" : "psi_minus";
}

inline std::vector<std::string> default_station_names(Experiment e) {
  switch (e) {
    case Experiment::exp1: return {"Tenerife"};
    case Experiment::exp2: return {"Tenerife", "Matera"};
    case Experiment::exp3: return {"Calar Alto", "Sierra Nevada"};
  }
  return {};
}

// Experiment defaults; exp3 uses the four-angle e91 schedule.
inline Scenario default_scenario(Experiment e) {
  Scenario s;
  s.config.experiment = e;
  s.station_names = default_station_names(e);
  if (e == Experiment::exp3) s.config.schedule = BasisSchedule::e91;
  return s;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(Scenario& s) : s_(s) { register_keys(); }

  void read(std::istream& in) {
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      std::string text = trim(cut == std::string::npos ? line : line.substr(0, cut));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') {
          problem(lineno, "malformed section header");
          continue;
        }
        section = trim(text.substr(1, text.size() - 2));
        if (!known_sections_.count(section)) problem(lineno, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) {
        problem(lineno, "expected key = value");
        continue;
      }
      const std::string key = section + "." + trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      auto it = setters_.find(key);
      if (it == setters_.end()) {
        if (known_sections_.count(section)) problem(lineno, "unknown key " + key);
        continue;
      }
      if (auto err = it->second(value)) problem(lineno, key + ": " + *err);
    }
  }

  std::vector<std::string>& problems() { return problems_; }

 private:
  using Setter = std::function<std::optional<std::string>(const std::string&)>;

  void problem(int lineno, const std::string& what) {
    problems_.push_back("line " + std::to_string(lineno) + ": " + what);
  }

  static std::optional<double> number(const std::string& v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x)) return std::nullopt;
    return x;
  }

  void real(const std::string& key, double& target) {
    setters_[key] = [&target](const std::string& v) -> std::optional<std::string> {
      auto x = number(v);
      if (!x) return "not a number: '" + v + "'";
      target = *x;
      return std::nullopt;
    };
  }

  void register_channel(const std::string& sec, ChannelModel& c) {
    real(sec + ".attenuation_db", c.attenuation_db);
    real(sec + ".detection_loss_db", c.detection_loss_db);
    real(sec + ".background_rate", c.background_rate);
    real(sec + ".rotation_amplitude_deg", c.rotation_amplitude_deg);
    real(sec + ".rotation_period_s", c.rotation_period_s);
    real(sec + ".compensation_rate_hz", c.compensation_rate_hz);
    real(sec + ".compensation_noise_deg", c.compensation_noise_deg);
  }

  void register_keys() {
    auto& c = s_.config;
    setters_["scenario.experiment"] = [&c](const std::string& v) -> std::optional<std::string> {
      auto e = parse_experiment(v);
      if (!e) return "expected exp1, exp2 or exp3";
      c.experiment = *e;
      return std::nullopt;
    };
    setters_["scenario.seed"] = [&c](const std::string& v) -> std::optional<std::string> {
      std::uint64_t x = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc{} || p != v.data() + v.size()) return "expected a non-negative integer";
      c.seed = x;
      return std::nullopt;
    };
    real("scenario.duration_s", c.duration_s);
    real("scenario.coincidence_window_ns", c.coincidence_window_ns);
    real("scenario.min_elevation_deg", c.min_elevation_deg);
    real("scenario.search_horizon_s", c.search_horizon_s);
    setters_["scenario.window_start_s"] = [this](const std::string& v) -> std::optional<std::string> {
      auto x = number(v);
      if (!x) return "not a number: '" + v + "'";
      s_.window_start_s = *x;
      return std::nullopt;
    };

    real("orbit.altitude_km", c.orbit.altitude_km);
    real("orbit.inclination_deg", c.orbit.inclination_deg);
    real("orbit.period_s", c.orbit.period_s);
    real("orbit.raan_deg", c.orbit.raan_deg);
    real("orbit.phase_at_epoch_deg", c.orbit.phase_at_epoch_deg);

    setters_["stations.catalog"] = [this](const std::string& v) -> std::optional<std::string> {
      s_.catalog_path = v;
      return std::nullopt;
    };
    setters_["stations.names"] = [this](const std::string& v) -> std::optional<std::string> {
      s_.station_names.clear();
      std::stringstream ss(v);
      std::string name;
      while (std::getline(ss, name, ',')) {
        name = trim(name);
        if (!name.empty()) s_.station_names.push_back(name);
      }
      if (s_.station_names.empty()) return "no station names given";
      return std::nullopt;
    };

    real("source.pair_rate", c.source.pair_rate);
    real("source.visibility", c.source.visibility);
    setters_["source.state"] = [&c](const std::string& v) -> std::optional<std::string> {
      if (v == "phi_plus") c.source.state = StateFamily::phi_plus;
      else if (v == "psi_minus") c.source.state = StateFamily::psi_minus;
      else return "expected phi_plus or psi_minus";
      return std::nullopt;
    };

    register_channel("channel_a", c.channel_a);
    register_channel("channel_b", c.channel_b);

    real("clocks.max_offset_s", c.clocks.max_offset_s);
    real("clocks.drift", c.clocks.drift);
    real("clocks.jitter_s", c.clocks.jitter_s);

    setters_["protocol.schedule"] = [&c](const std::string& v) -> std::optional<std::string> {
      if (v == "random_standard") c.schedule = BasisSchedule::random_standard;
      else if (v == "fixed") c.schedule = BasisSchedule::fixed;
      else if (v == "chsh") c.schedule = BasisSchedule::chsh;
      else if (v == "e91") c.schedule = BasisSchedule::e91;
      else return "expected random_standard, fixed, chsh or e91";
      return std::nullopt;
    };
    real("protocol.fixed_angle_deg", c.fixed_angle_deg);
    real("protocol.qber_sample_fraction", c.qber_sample_fraction);
    real("protocol.ranging_rate_hz", c.ranging_rate_hz);

    real("transmitter.detection_loss_db", c.transmitter_detection_loss_db);
    real("transmitter.pat_acquisition_s", c.pat_acquisition_s);

    for (const auto& [key, _] : setters_) known_sections_[key.substr(0, key.find('.'))] = true;
  }

  Scenario& s_;
  std::map<std::string, Setter> setters_;
  std::map<std::string, bool> known_sections_;
  std::vector<std::string> problems_;
};

inline void check(std::vector<std::string>& problems, bool ok, const std::string& what) {
  if (!ok) problems.push_back(what);
}

inline void check_channel(std::vector<std::string>& p, const std::string& name, const ChannelModel& c) {
  check(p, c.attenuation_db >= 0.0, name + ".attenuation_db must be >= 0");
  check(p, c.detection_loss_db >= 0.0, name + ".detection_loss_db must be >= 0");
  check(p, c.background_rate >= 0.0, name + ".background_rate must be >= 0");
  check(p, c.rotation_period_s >= 0.0, name + ".rotation_period_s must be >= 0");
  check(p, c.compensation_rate_hz > 0.0, name + ".compensation_rate_hz must be positive");
  check(p, c.compensation_noise_deg >= 0.0, name + ".compensation_noise_deg must be >= 0");
}

}  // namespace detail

// Every violated constraint, empty when the scenario is runnable.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
  using detail::check;
  std::vector<std::string> p;
  const auto& c = s.config;
  check(p, c.duration_s > 0.0, "scenario.duration_s must be positive");
  check(p, c.coincidence_window_ns > 0.0, "scenario.coincidence_window_ns must be positive");
  check(p, c.min_elevation_deg >= 0.0 && c.min_elevation_deg < 90.0, "scenario.min_elevation_deg must be in [0, 90)");
  check(p, c.search_horizon_s > 0.0 && c.search_horizon_s <= 60.0 * kSecondsPerDay,
        "scenario.search_horizon_s must be in (0, 60 days]");
  if (s.window_start_s) {
    check(p, *s.window_start_s >= 0.0 && *s.window_start_s < c.search_horizon_s,
          "scenario.window_start_s must lie inside the search horizon");
  }
  check(p, c.orbit.altitude_km > 0.0, "orbit.altitude_km must be positive");
  check(p, c.orbit.inclination_deg >= 0.0 && c.orbit.inclination_deg <= 180.0,
        "orbit.inclination_deg must be in [0, 180]");
  check(p, c.orbit.period_s > 0.0, "orbit.period_s must be positive");
  check(p, c.source.pair_rate > 0.0, "source.pair_rate must be positive");
  check(p, c.source.visibility >= 0.0 && c.source.visibility <= 1.0, "source.visibility must be in [0, 1]");
  detail::check_channel(p, "channel_a", c.channel_a);
  detail::check_channel(p, "channel_b", c.channel_b);
  check(p, c.clocks.max_offset_s >= 0.0, "clocks.max_offset_s must be >= 0");
  check(p, c.clocks.jitter_s >= 0.0, "clocks.jitter_s must be >= 0");
  check(p, std::abs(c.clocks.drift) < 1e-3, "clocks.drift must be below 1e-3 in magnitude");
  check(p, c.qber_sample_fraction > 0.0 && c.qber_sample_fraction <= 1.0,
        "protocol.qber_sample_fraction must be in (0, 1]");
  check(p, c.ranging_rate_hz > 0.0, "protocol.ranging_rate_hz must be positive");
  check(p, c.transmitter_detection_loss_db >= 0.0, "transmitter.detection_loss_db must be >= 0");
  check(p, c.pat_acquisition_s >= 0.0, "transmitter.pat_acquisition_s must be >= 0");
  const std::size_t need = c.required_stations();
  check(p, s.station_names.size() >= need,
        "stations.names needs " + std::to_string(need) + " station(s) for " + std::string(to_string(c.experiment)));
  return p;
}

// Resolves station names against the catalog; unknown names are config errors.
inline void resolve_stations(Scenario& s) {
  std::vector<GroundStation> catalog;
  try {
    catalog = s.catalog_path.empty() ? default_station_catalog() : load_station_catalog(s.catalog_path);
  } catch (const std::exception& e) {
    throw ConfigError({"stations.catalog: " + std::string(e.what())});
  }
  std::vector<std::string> problems;
  s.config.stations.clear();
  for (const auto& name : s.station_names) {
    if (auto st = find_station(catalog, name)) s.config.stations.push_back(*st);
    else problems.push_back("stations.names: unknown station '" + name + "'");
  }
  if (!problems.empty()) throw ConfigError(problems);
}

// Parses, validates and resolves. Missing keys keep the experiment defaults.
inline Scenario parse_scenario(std::istream& in, std::optional<Experiment> experiment = std::nullopt) {
  Scenario probe;
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  {
    std::istringstream first(text);
    detail::ConfigReader reader(probe);
    reader.read(first);
  }
  Scenario s = default_scenario(experiment.value_or(probe.config.experiment));
  std::istringstream again(text);
  detail::ConfigReader reader(s);
  reader.read(again);
  if (experiment) s.config.experiment = *experiment;
  auto problems = reader.problems();
  for (auto& p : validate_scenario(s)) problems.push_back(std::move(p));
  if (!problems.empty()) throw ConfigError(problems);
  resolve_stations(s);
  return s;
}

inline Scenario load_scenario(const std::string& path, std::optional<Experiment> experiment = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  return parse_scenario(in, experiment);
}

}  // namespace spacelink

#endif  // SPACELINK_CONFIG_HPP
