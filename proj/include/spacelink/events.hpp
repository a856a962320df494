#ifndef SPACELINK_EVENTS_HPP
#define SPACELINK_EVENTS_HPP

// Detection records and the event-log CSV format.
//
//   t_ns,terminal,basis_label,angle_deg,outcome,channel
//   1000000123,1,0,0,1,signal
//
// t_ns is an integer on the terminal's local clock, terminal and basis_label
// are small integers, angle_deg is the shortest decimal that round-trips the
// stored float, outcome is 0 or 1, channel is `signal` or `background`.
// LF line endings, no quoting, header mandatory.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "spacelink/common.hpp"

namespace spacelink {

enum class Channel : std::uint8_t { signal, background };

enum TerminalId : std::uint8_t { kTransmitter = 0, kReceiverA = 1, kReceiverB = 2 };

// Time is std::int64_t (raw local nanoseconds) or double (corrected nanoseconds).
template <typename Time>
struct BasicDetectionEvent {
  Time t{};
  float angle_deg = 0.0f;
  std::uint8_t terminal = 0;
  std::uint8_t basis = 0;
  std::uint8_t outcome = 0;
  // Diagnostic truth tag; protocol code never reads it.
  Channel channel = Channel::signal;

  friend bool operator==(const BasicDetectionEvent&, const BasicDetectionEvent&) = default;
};

using DetectionEvent = BasicDetectionEvent<std::int64_t>;
using CorrectedEvent = BasicDetectionEvent<double>;

template <typename Time>
using BasicEventLog = std::vector<BasicDetectionEvent<Time>>;

using EventLog = BasicEventLog<std::int64_t>;
using CorrectedLog = BasicEventLog<double>;

inline constexpr std::string_view kEventLogHeader = "t_ns,terminal,basis_label,angle_deg,outcome,channel";

inline std::string_view to_string(Channel c) noexcept { return c == Channel::signal ? "signal" : "background"; }

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_event_log(std::ostream& out, const EventLog& log) {
  std::string buf;
  buf.reserve(1 << 20);
  buf.append(kEventLogHeader).push_back('\n');
  char tmp[32];
  auto put = [&](auto value) {
    auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, value);
    buf.append(tmp, p);
  };
  for (const auto& e : log) {
    put(e.t);
    buf.push_back(',');
    put(static_cast<unsigned>(e.terminal));
    buf.push_back(',');
    put(static_cast<unsigned>(e.basis));
    buf.push_back(',');
    put(e.angle_deg);
    buf.push_back(',');
    buf.push_back(e.outcome ? '1' : '0');
    buf.push_back(',');
    buf.append(to_string(e.channel));
    buf.push_back('\n');
    if (buf.size() > (1u << 20) - 64) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_event_log(const std::string& path, const EventLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_event_log(out, log);
}

namespace detail {

template <typename T>
T parse_field(std::string_view field, int lineno) {
  T v{};
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size()) {
    throw FormatError("event log line " + std::to_string(lineno) + ": bad field '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace detail

inline EventLog read_event_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kEventLogHeader) throw FormatError("event log: missing or wrong header");
  EventLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string_view rest = line;
    std::string_view f[6];
    for (int i = 0; i < 6; ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i == 5)) {
        throw FormatError("event log line " + std::to_string(lineno) + ": expected 6 fields");
      }
      f[i] = rest.substr(0, comma);
      if (i < 5) rest.remove_prefix(comma + 1);
    }
    DetectionEvent e;
    e.t = detail::parse_field<std::int64_t>(f[0], lineno);
    e.terminal = static_cast<std::uint8_t>(detail::parse_field<unsigned>(f[1], lineno));
    e.basis = static_cast<std::uint8_t>(detail::parse_field<unsigned>(f[2], lineno));
    e.angle_deg = detail::parse_field<float>(f[3], lineno);
    const auto outcome = detail::parse_field<unsigned>(f[4], lineno);
    if (outcome > 1) throw FormatError("event log line " + std::to_string(lineno) + ": outcome must be 0 or 1");
    e.outcome = static_cast<std::uint8_t>(outcome);
    if (f[5] == "signal") e.channel = Channel::signal;
    else if (f[5] == "background") e.channel = Channel::background;
    else throw FormatError("event log line " + std::to_string(lineno) + ": unknown channel");
    log.push_back(e);
  }
  return log;
}

inline EventLog read_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  return read_event_log(in);
}

// Copy with every truth tag reset, for checking that analysis ignores them.
template <typename Time>
BasicEventLog<Time> strip_truth_tags(BasicEventLog<Time> log) {
  for (auto& e : log) e.channel = Channel::signal;
  return log;
}

}  // namespace spacelink

#endif  // SPACELINK_EVENTS_HPP
