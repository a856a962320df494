#ifndef SPACELINK_REPORT_HPP
#define SPACELINK_REPORT_HPP

// Run reports (JSON and plain text) and persisted run artifacts.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "spacelink/experiments.hpp"

namespace spacelink {

using Json = nlohmann::ordered_json;

inline Json to_json(const LinkWindow& w) {
  return {{"stations", w.stations},
          {"start_s", w.start_s},
          {"end_s", w.end_s},
          {"duration_s", w.duration()},
          {"max_elevation_deg", w.max_elevation_deg},
          {"delta_longitude_deg", w.delta_longitude_deg},
          {"ascending", w.ascending}};
}

inline Json to_json(const ChshResult& r) {
  Json settings = Json::array();
  for (std::size_t k = 0; k < 4; ++k) {
    settings.push_back({{"angle_a_deg", kChshSettings[k][0]},
                        {"angle_b_deg", kChshSettings[k][1]},
                        {"correlation", r.correlations[k]},
                        {"count", r.totals[k]}});
  }
  return {{"s", r.s}, {"sigma_s", r.sigma_s}, {"settings", settings}};
}

inline Json to_json(const SessionResult& s) {
  Json rates = Json::array();
  for (const auto& r : s.rates) {
    rates.push_back({{"name", r.name}, {"expected_per_s", r.expected}, {"simulated_per_s", r.simulated}, {"count", r.count}});
  }
  Json trace = Json::array();
  for (const auto& t : s.trace) trace.push_back({{"mode", to_string(t.mode)}, {"time_s", t.time_entered_s}});
  Json j = {
      {"label", s.label},
      {"window", to_json(s.window)},
      {"terminal_trace", trace},
      {"qc_start_s", s.qc_start_s},
      {"qc_duration_s", s.qc_duration_s},
      {"rates", rates},
      {"matched", s.matched},
      {"matched_true", s.matched_true},
      {"matched_accidental", s.matched_accidental},
      {"net_matched", s.net_matched},
      {"timing",
       {{"estimated_offset_a_s", s.timing.estimated_a.offset_s},
        {"estimated_drift_a", s.timing.estimated_a.drift},
        {"estimated_offset_b_s", s.timing.estimated_b.offset_s},
        {"estimated_drift_b", s.timing.estimated_b.drift},
        {"true_pairs", s.timing.true_pairs},
        {"true_pair_recall", s.timing.recall()},
        {"true_pairs_within_2ns", s.timing.true_pairs_within_2ns},
        {"out_of_span", s.timing.out_of_span}}},
      {"sifted_bits", s.sifted_bits},
      {"sifted_fraction", s.sifted_fraction},
      {"expected_sifted_fraction", s.expected_sifted_fraction},
      {"qber_sampled_bits", s.qber.sampled},
      {"qber_mismatches", s.qber.mismatches},
      {"bit_mismatch_rate", s.qber.mismatch_rate},
      {"qber", s.reported_qber},
      {"expected_qber", s.expected_qber},
      {"key_length", s.key_a.bits.size()},
      {"security_flag", to_string(s.security)},
  };
  j["chsh"] = s.chsh ? to_json(*s.chsh) : Json(nullptr);
  return j;
}

inline Json scenario_json(const Scenario& sc) {
  const auto& c = sc.config;
  Json stations = Json::array();
  for (const auto& st : c.stations) {
    stations.push_back({{"name", st.name}, {"latitude_deg", st.latitude_deg}, {"longitude_deg", st.longitude_deg},
                        {"altitude_km", st.altitude_km}});
  }
  return {{"experiment", to_string(c.experiment)},
          {"seed", c.seed},
          {"duration_s", c.duration_s},
          {"coincidence_window_ns", c.coincidence_window_ns},
          {"min_elevation_deg", c.min_elevation_deg},
          {"stations", stations},
          {"pair_rate", c.source.pair_rate},
          {"state", to_string(c.source.state)},
          {"visibility", c.source.visibility},
          {"schedule", to_string(c.schedule)},
          {"loss_a_db", c.experiment == Experiment::exp3 ? c.channel_a.total_loss_db()
                                                         : c.transmitter_detection_loss_db},
          {"loss_b_db", c.channel_b.total_loss_db()},
          {"background_a_per_s", c.experiment == Experiment::exp3 ? c.channel_a.background_rate : 0.0},
          {"background_b_per_s", c.channel_b.background_rate}};
}

// Everything except wall-clock time is a function of config and seed.
inline Json to_json(const ExperimentResult& r, double wall_clock_s) {
  Json sessions = Json::array();
  for (const auto& s : r.sessions) sessions.push_back(to_json(s));
  Json j = {{"scenario", scenario_json(r.scenario)}, {"sessions", sessions}};
  if (r.relay) {
    j["relay"] = {{"broadcast_bits", r.relay->broadcast.size()},
                  {"remote_key_recovered_exactly", r.relay->exact},
                  {"end_to_end_mismatch", r.relay->end_to_end_mismatch}};
  }
  j["notes"] = r.notes;
  j["wall_clock_s"] = wall_clock_s;
  return j;
}

namespace detail {

inline std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

}  // namespace detail

inline void print_text_report(std::ostream& out, const ExperimentResult& r) {
  char buf[256];
  out << "experiment " << to_string(r.scenario.config.experiment) << "  seed " << r.scenario.config.seed << "\n";
  for (const auto& s : r.sessions) {
    std::snprintf(buf, sizeof buf, "\n[%s] window %.1f-%.1f s (%.1f s, max elevation %.1f deg), QC %.1f s\n",
                  s.label.c_str(), s.window.start_s, s.window.end_s, s.window.duration(), s.window.max_elevation_deg,
                  s.qc_duration_s);
    out << buf;
    out << "  rate                expected/s   simulated/s\n";
    for (const auto& row : s.rates) {
      std::snprintf(buf, sizeof buf, "  %-16s %12.4f  %12.4f\n", row.name.c_str(), row.expected, row.simulated);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  matched %zu (net %.1f)  sifted %zu (fraction %.3f)  key %zu bits\n", s.matched,
                  s.net_matched, s.sifted_bits, s.sifted_fraction, s.key_a.bits.size());
    out << buf;
    const std::string qber = s.qber.sampled ? detail::percent(s.reported_qber) : "n/a (no bits sampled)";
    std::snprintf(buf, sizeof buf, "  QBER %s (expected %s)  security %s\n", qber.c_str(),
                  detail::percent(s.expected_qber).c_str(), std::string(to_string(s.security)).c_str());
    out << buf;
    if (s.chsh) {
      std::snprintf(buf, sizeof buf, "  CHSH S = %.3f +- %.3f\n", s.chsh->s, s.chsh->sigma_s);
      out << buf;
    }
  }
  if (r.relay) {
    std::snprintf(buf, sizeof buf, "\nrelay: %zu bits broadcast, remote key recovered exactly: %s, end-to-end mismatch %.2f%%\n",
                  r.relay->broadcast.size(), r.relay->exact ? "yes" : "no", 100.0 * r.relay->end_to_end_mismatch);
    out << buf;
  }
  for (const auto& n : r.notes) out << "note: " << n << "\n";
}

inline void write_key_file(const std::filesystem::path& path, const KeyMaterial& key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError("cannot write " + path.string());
  char buf[64];
  char raw[64];
  std::snprintf(buf, sizeof buf, "%.6f", reported_qber(key.qber_estimate));
  std::snprintf(raw, sizeof raw, "%.6f", key.qber_estimate);
  out << "# length=" << key.bits.size() << "\n"
      << "# qber=" << buf << "\n"
      << "# bit_mismatch=" << raw << "\n"
      << "# security_flag=" << to_string(key.security_flag) << "\n"
      << to_hex(key.bits) << "\n";
}

// Writes event logs (when kept), key material and report.json into out_dir.
inline void write_run_artifacts(const std::filesystem::path& out_dir, const ExperimentResult& r, const Json& report) {
  std::filesystem::create_directories(out_dir);
  const std::string exp(to_string(r.scenario.config.experiment));
  for (std::size_t k = 0; k < r.sessions.size(); ++k) {
    const auto& s = r.sessions[k];
    const std::string stem = exp + (r.sessions.size() > 1 ? "_leg" + std::to_string(k) : "");
    const bool dual = r.scenario.config.experiment == Experiment::exp3;
    if (!s.run.log_a.empty() || !s.run.log_b.empty()) {
      write_event_log((out_dir / (stem + (dual ? "_receiver_a.csv" : "_transmitter.csv"))).string(), s.run.log_a);
      write_event_log((out_dir / (stem + (dual ? "_receiver_b.csv" : "_receiver.csv"))).string(), s.run.log_b);
    }
    write_key_file(out_dir / (stem + "_key_a.txt"), s.key_a);
    write_key_file(out_dir / (stem + "_key_b.txt"), s.key_b);
  }
  if (r.relay) {
    std::ofstream out(out_dir / (exp + "_relay_broadcast.txt"), std::ios::binary);
    out << "# length=" << r.relay->broadcast.size() << "\n" << to_hex(r.relay->broadcast) << "\n";
  }
  std::ofstream out(out_dir / "report.json", std::ios::binary);
  if (!out) throw SimulationError("cannot write report.json");
  out << report.dump(2) << "\n";
}

}  // namespace spacelink

#endif  // SPACELINK_REPORT_HPP
