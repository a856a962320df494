#ifndef SPACELINK_LINKSIM_HPP
#define SPACELINK_LINKSIM_HPP

// Detection-stream generation for the single and dual downlink experiments.
//
// Rather than drawing every emitted pair and thinning it through the losses,
// the generator draws only detected events. Each survivor class (pair seen on
// both sides, seen only on side A, only on side B, background on each side) is
// an independent Poisson process with the analytically thinned rate; all of
// them are realised together over the quantum-communication interval.
// This is statistically identical to full emission and costs O(detections).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spacelink/common.hpp"
#include "spacelink/events.hpp"
#include "spacelink/geometry.hpp"
#include "spacelink/photonics.hpp"
#include "spacelink/random.hpp"
#include "spacelink/timing.hpp"

namespace spacelink {

enum class TerminalMode { standby, pat, quantum_communication };

struct TerminalState {
  TerminalMode mode = TerminalMode::standby;
  double time_entered_s = 0.0;

  friend bool operator==(const TerminalState&, const TerminalState&) = default;
};

inline std::string_view to_string(TerminalMode m) noexcept {
  switch (m) {
    case TerminalMode::standby: return "standby";
    case TerminalMode::pat: return "pat";
    case TerminalMode::quantum_communication: return "quantum_communication";
  }
  return "?";
}

// Allowed transitions: standby -> pat when the link becomes available,
// pat -> quantum_communication once acquisition time has elapsed with the link
// still available, quantum_communication -> standby when the link is lost.
// `elapsed_s` is measured from state.time_entered_s.
inline TerminalState advance_terminal(const TerminalState& state, bool link_available, double elapsed_s,
                                      double pat_acquisition_s) {
  const double now = state.time_entered_s + elapsed_s;
  switch (state.mode) {
    case TerminalMode::standby:
      if (link_available) return {TerminalMode::pat, now};
      break;
    case TerminalMode::pat:
      if (link_available && elapsed_s >= pat_acquisition_s) {
        return {TerminalMode::quantum_communication, state.time_entered_s + pat_acquisition_s};
      }
      break;
    case TerminalMode::quantum_communication:
      if (!link_available) return {TerminalMode::standby, now};
      break;
  }
  return state;
}

enum class Experiment { exp1, exp2, exp3 };

// Which analyzer orientations each side draws from, uniformly per detection.
//   random_standard  both sides {0, 45}
//   fixed            both sides at fixed_angle_deg
//   chsh             side A {0, 45}, side B {22.5, 67.5}
//   e91              both sides {0, 45, 22.5, 67.5}
enum class BasisSchedule { random_standard, fixed, chsh, e91 };

struct ClockSettings {
  double max_offset_s = 1e-3;  // ground clock offsets uniform in +-max_offset_s
  double drift = 1e-9;
  double jitter_s = 0.25e-9;
};

struct ScenarioConfig {
  Experiment experiment = Experiment::exp1;
  CircularOrbit orbit;
  std::vector<GroundStation> stations;
  PairSourceModel source;
  // Local detection of the trigger photon on board (single downlink only).
  double transmitter_detection_loss_db = 6.5;
  ChannelModel channel_a;
  ChannelModel channel_b;
  ClockSettings clocks;
  BasisSchedule schedule = BasisSchedule::random_standard;
  double fixed_angle_deg = 0.0;
  double coincidence_window_ns = 13.7;
  double duration_s = 300.0;
  double pat_acquisition_s = 10.0;
  double min_elevation_deg = 10.0;
  double search_horizon_s = 3.0 * kSecondsPerDay;
  double ranging_rate_hz = 1.0;
  double qber_sample_fraction = 0.5;
  std::uint64_t seed = 1;

  std::size_t required_stations() const noexcept { return experiment == Experiment::exp1 ? 1 : 2; }
};

inline BasisSet side_bases(BasisSchedule schedule, int side, double fixed_angle_deg) {
  switch (schedule) {
    case BasisSchedule::random_standard: return standard_bases();
    case BasisSchedule::fixed: return {{"FIX", fixed_angle_deg}};
    case BasisSchedule::chsh: return side == 0 ? standard_bases() : rotated_bases();
    case BasisSchedule::e91: return all_bases();
  }
  return standard_bases();
}

// Channel rotation minus its reference-laser estimate. The polarimeter tracks
// theta(t) continuously; each estimate carries Gaussian noise that is redrawn
// at compensation_rate_hz and held in between.
class ResidualRotation {
 public:
  ResidualRotation() = default;

  ResidualRotation(const ChannelModel& channel, double start_s, double end_s, Rng& rng)
      : channel_(channel), start_s_(start_s), rate_(channel.compensation_rate_hz) {
    const auto n = static_cast<std::size_t>(std::ceil((end_s - start_s) * rate_)) + 2;
    noise_.resize(n);
    for (auto& v : noise_) v = channel.compensation_noise_deg * rng.normal();
  }

  double at(double t) const {
    if (noise_.empty()) return 0.0;
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor((t - start_s_) * rate_)));
    k = std::min(k, noise_.size() - 1);
    const double theta = channel_.rotation_deg(t);
    return theta - (theta + noise_[k]);
  }

 private:
  ChannelModel channel_;
  double start_s_ = 0.0;
  double rate_ = 1.0;
  std::vector<double> noise_;
};

// Reference-pulse record of one downlink: emission times on the transmitter
// clock, arrival times on the receiver clock, and the delay predicted from the
// known orbit.
struct RangingRecord {
  std::vector<double> emission_s;
  std::vector<double> arrival_local_s;
  std::vector<double> predicted_delay_s;
};

struct TruePair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
};

struct LinkRun {
  LinkWindow window;
  double qc_start_s = 0.0;
  double qc_end_s = 0.0;
  // Single downlink: a = transmitter, b = receiver. Dual: a, b = receivers.
  EventLog log_a;
  EventLog log_b;
  ClockModel clock_a;
  ClockModel clock_b;
  // Empty for the on-board side of a single downlink.
  RangingRecord ranging_a;
  RangingRecord ranging_b;
  std::vector<TruePair> truth;
  std::vector<TerminalState> trace;

  double qc_duration() const noexcept { return std::max(0.0, qc_end_s - qc_start_s); }
};

namespace detail {

// Terminal-mode trace over one window; returns the quantum-communication
// interval, empty when acquisition does not finish before the window closes.
inline std::vector<TerminalState> terminal_trace(const LinkWindow& window, double pat_s, double duration_s,
                                                 double& qc_start, double& qc_end) {
  std::vector<TerminalState> trace;
  TerminalState s{TerminalMode::standby, window.start_s};
  trace.push_back(s);
  s = advance_terminal(s, true, 0.0, pat_s);
  trace.push_back(s);
  const double until_end = window.end_s - s.time_entered_s;
  const auto next = advance_terminal(s, until_end >= pat_s, std::min(until_end, pat_s), pat_s);
  qc_start = qc_end = window.end_s;
  if (next.mode == TerminalMode::quantum_communication) {
    trace.push_back(next);
    qc_start = next.time_entered_s;
    qc_end = std::min(window.end_s, qc_start + duration_s);
    // The run ends after the requested duration or at loss of line of sight.
    trace.push_back(advance_terminal(next, false, qc_end - qc_start, pat_s));
  }
  return trace;
}

struct SideGeometry {
  bool on_board = false;
  Vec3 site{};
};

inline double true_delay(const CircularOrbit& orbit, const SideGeometry& side, double t) {
  if (side.on_board) return 0.0;
  return propagation_delay(norm(earth_fixed_position(orbit, t) - side.site));
}

inline std::int64_t local_ns(const ClockModel& clock, double true_s, Rng& rng) {
  const double local = clock.local_from_true(true_s) + clock.jitter_s * rng.normal();
  return static_cast<std::int64_t>(std::llrint(local * 1e9));
}

// One side's log with a parallel pair-id column. Events are produced in
// emission order, and the arrival-time map t + delay(t) is increasing, so only
// jitter can put neighbours out of order; an insertion pass repairs that in
// linear time.
struct SideBuffer {
  EventLog events;
  std::vector<std::int32_t> pair_id;  // -1 unless part of a true pair

  void reserve(std::size_t n) {
    events.reserve(n);
    pair_id.reserve(n);
  }

  void push(const DetectionEvent& e, std::int32_t id) {
    events.push_back(e);
    pair_id.push_back(id);
  }

  void fix_order() {
    for (std::size_t i = 1; i < events.size(); ++i) {
      if (events[i].t >= events[i - 1].t) continue;
      const auto e = events[i];
      const auto id = pair_id[i];
      std::size_t j = i;
      while (j > 0 && events[j - 1].t > e.t) {
        events[j] = events[j - 1];
        pair_id[j] = pair_id[j - 1];
        --j;
      }
      events[j] = e;
      pair_id[j] = id;
    }
  }
};

struct SideModel {
  SideGeometry geometry;
  BasisSet bases;
  ClockModel clock;
  ResidualRotation residual;
  std::uint8_t terminal = 0;
};

// Rates of the detected-event classes, per second.
struct SurvivorRates {
  double pair = 0.0;    // both photons detected
  double a_only = 0.0;  // partner lost
  double b_only = 0.0;
  double background_a = 0.0;
  double background_b = 0.0;

  double total() const noexcept { return pair + a_only + b_only + background_a + background_b; }
};

// The union of the independent class processes is one Poisson process of the
// summed rate whose events are labelled by class with probability
// proportional to the class rate. Generating it that way yields both logs in
// time order without merging.
class StreamGenerator {
 public:
  StreamGenerator(const ScenarioConfig& config, const SideModel& a, const SideModel& b, Rng& rng)
      : config_(config), a_(a), b_(b), rng_(rng) {}

  void generate(const SurvivorRates& rates, double start_s, double end_s, SideBuffer& out_a, SideBuffer& out_b) {
    const double total = rates.total();
    if (total <= 0.0 || end_s <= start_s) return;
    const double span = end_s - start_s;
    auto expect = [&](double r) {
      const double n = r * span;
      return static_cast<std::size_t>(n + 6.0 * std::sqrt(n) + 16.0);
    };
    out_a.reserve(expect(rates.pair + rates.a_only + rates.background_a));
    out_b.reserve(expect(rates.pair + rates.b_only + rates.background_b));
    const double c_pair = rates.pair;
    const double c_a = c_pair + rates.a_only;
    const double c_b = c_a + rates.b_only;
    const double c_bga = c_b + rates.background_a;
    std::int32_t id = 0;
    double t = start_s + rng_.exponential(total);
    while (t < end_s) {
      const double u = rng_.uniform() * total;
      if (u < c_pair) {
        const auto ba = draw_basis(a_);
        const auto bb = draw_basis(b_);
        // A residual rotation delta of the photon is equivalent to turning the
        // analyzer by -delta.
        const double eff_a = a_.bases[ba].angle_deg - a_.residual.at(t);
        const double eff_b = b_.bases[bb].angle_deg - b_.residual.at(t);
        const auto o = sample_pair(rng_, config_.source, eff_a, eff_b);
        out_a.push(make_event(a_, t, o.a, ba, Channel::signal), id);
        out_b.push(make_event(b_, t, o.b, bb, Channel::signal), id);
        ++id;
      } else if (u < c_a) {
        out_a.push(single(a_, t, Channel::signal), -1);
      } else if (u < c_b) {
        out_b.push(single(b_, t, Channel::signal), -1);
      } else if (u < c_bga) {
        out_a.push(single(a_, t, Channel::background), -1);
      } else {
        out_b.push(single(b_, t, Channel::background), -1);
      }
      t += rng_.exponential(total);
    }
  }

 private:
  DetectionEvent make_event(const SideModel& side, double emission_s, int outcome, std::uint8_t basis, Channel ch) {
    DetectionEvent e;
    e.t = local_ns(side.clock, emission_s + true_delay(config_.orbit, side.geometry, emission_s), rng_);
    e.terminal = side.terminal;
    e.basis = basis;
    e.angle_deg = static_cast<float>(side.bases[basis].angle_deg);
    e.outcome = static_cast<std::uint8_t>(outcome);
    e.channel = ch;
    return e;
  }

  std::uint8_t draw_basis(const SideModel& side) {
    return static_cast<std::uint8_t>(rng_.below(static_cast<std::uint32_t>(side.bases.size())));
  }

  // Unpartnered detection: the surviving photon of a pair whose twin was lost
  // is marginally unpolarized, as is background. One draw gives both the basis
  // (high word) and the outcome (lowest bit).
  DetectionEvent single(const SideModel& side, double t, Channel ch) {
    const std::uint64_t bits = rng_.next();
    const auto basis = static_cast<std::uint8_t>(((bits >> 32) * side.bases.size()) >> 32);
    return make_event(side, t, static_cast<int>(bits & 1u), basis, ch);
  }

  const ScenarioConfig& config_;
  const SideModel& a_;
  const SideModel& b_;
  Rng& rng_;
};

inline RangingRecord simulate_ranging(const ScenarioConfig& config, const SideModel& side, double qc_start,
                                      double qc_end, Rng& rng) {
  RangingRecord r;
  const double step = 1.0 / config.ranging_rate_hz;
  // The pulsed reference laser runs throughout; one pulse on either side of
  // the interval keeps every event arrival inside the profile.
  std::vector<double> schedule;
  for (double e = qc_start - step; e < qc_end + step; e += step) schedule.push_back(e);
  schedule.push_back(qc_end + step);
  for (double e : schedule) {
    const double d = true_delay(config.orbit, side.geometry, e);
    r.emission_s.push_back(e);
    r.predicted_delay_s.push_back(d);
    r.arrival_local_s.push_back(side.clock.local_from_true(e + d) + side.clock.jitter_s * rng.normal());
  }
  return r;
}

inline ClockModel draw_ground_clock(const ClockSettings& s, Rng& rng) {
  return {rng.uniform(-s.max_offset_s, s.max_offset_s), s.drift, s.jitter_s};
}

inline LinkRun run_link(const ScenarioConfig& config, const SideGeometry& geo_a, const SideGeometry& geo_b,
                        const LinkWindow& window, double loss_a_db, double loss_b_db,
                        const ChannelModel* channel_a, const ChannelModel& channel_b, Rng& rng) {
  config.source.validate();
  LinkRun run;
  run.window = window;
  run.trace = terminal_trace(window, config.pat_acquisition_s, config.duration_s, run.qc_start_s, run.qc_end_s);

  SideModel a, b;
  a.geometry = geo_a;
  b.geometry = geo_b;
  a.bases = side_bases(config.schedule, 0, config.fixed_angle_deg);
  b.bases = side_bases(config.schedule, 1, config.fixed_angle_deg);
  a.terminal = geo_a.on_board ? kTransmitter : kReceiverA;
  b.terminal = channel_a ? kReceiverB : kReceiverA;
  a.clock = geo_a.on_board ? ClockModel{0.0, 0.0, config.clocks.jitter_s} : draw_ground_clock(config.clocks, rng);
  b.clock = draw_ground_clock(config.clocks, rng);
  run.clock_a = a.clock;
  run.clock_b = b.clock;
  if (run.qc_duration() <= 0.0) return run;

  if (channel_a) a.residual = ResidualRotation(*channel_a, run.qc_start_s, run.qc_end_s, rng);
  b.residual = ResidualRotation(channel_b, run.qc_start_s, run.qc_end_s, rng);
  if (!geo_a.on_board) run.ranging_a = simulate_ranging(config, a, run.qc_start_s, run.qc_end_s, rng);
  run.ranging_b = simulate_ranging(config, b, run.qc_start_s, run.qc_end_s, rng);

  const double r = config.source.pair_rate;
  const double ta = db_to_transmittance(loss_a_db);
  const double tb = db_to_transmittance(loss_b_db);
  SurvivorRates rates;
  rates.pair = r * ta * tb;
  rates.a_only = r * ta * (1.0 - tb);
  rates.b_only = r * (1.0 - ta) * tb;
  rates.background_a = channel_a ? channel_a->background_rate : 0.0;
  rates.background_b = channel_b.background_rate;

  SideBuffer side_a, side_b;
  StreamGenerator(config, a, b, rng).generate(rates, run.qc_start_s, run.qc_end_s, side_a, side_b);
  side_a.fix_order();
  side_b.fix_order();

  std::int32_t n_pairs = 0;
  for (auto id : side_a.pair_id) n_pairs = std::max(n_pairs, id + 1);
  std::vector<std::size_t> pos_a(static_cast<std::size_t>(n_pairs)), pos_b(static_cast<std::size_t>(n_pairs));
  for (std::size_t i = 0; i < side_a.pair_id.size(); ++i) {
    if (side_a.pair_id[i] >= 0) pos_a[static_cast<std::size_t>(side_a.pair_id[i])] = i;
  }
  for (std::size_t i = 0; i < side_b.pair_id.size(); ++i) {
    if (side_b.pair_id[i] >= 0) pos_b[static_cast<std::size_t>(side_b.pair_id[i])] = i;
  }
  run.truth.reserve(pos_a.size());
  for (std::size_t k = 0; k < pos_a.size(); ++k) run.truth.push_back({pos_a[k], pos_b[k]});
  run.log_a = std::move(side_a.events);
  run.log_b = std::move(side_b.events);
  return run;
}

}  // namespace detail

// One photon of each pair is analysed on board (the trigger), the other is
// sent down to `station`. log_a is the transmitter log, log_b the receiver's.
inline LinkRun run_single_downlink(const ScenarioConfig& config, const GroundStation& station,
                                   const LinkWindow& window, Rng& rng) {
  require(config.experiment != Experiment::exp3, "single downlink requires exp1 or exp2");
  config.channel_b.validate("channel_b");
  require(config.transmitter_detection_loss_db >= 0.0, "transmitter detection loss must be >= 0");
  return detail::run_link(config, {true, {}}, {false, earth_fixed_position(station)}, window,
                          config.transmitter_detection_loss_db, config.channel_b.total_loss_db(), nullptr,
                          config.channel_b, rng);
}

// Both photons are sent down, to stations[0] (log_a) and stations[1] (log_b).
// Nothing is detected on board.
inline LinkRun run_dual_downlink(const ScenarioConfig& config, const LinkWindow& window, Rng& rng) {
  require(config.experiment == Experiment::exp3, "dual downlink requires exp3");
  require(config.stations.size() >= 2, "dual downlink needs two stations");
  config.channel_a.validate("channel_a");
  config.channel_b.validate("channel_b");
  return detail::run_link(config, {false, earth_fixed_position(config.stations[0])},
                          {false, earth_fixed_position(config.stations[1])}, window,
                          config.channel_a.total_loss_db(), config.channel_b.total_loss_db(), &config.channel_a,
                          config.channel_b, rng);
}

// Standalone view of the compensation loop: residual rotation theta(t) minus
// its estimate at each of the given times.
template <typename Rotation>
std::vector<double> reference_laser_compensation(Rotation&& theta, std::span<const double> times_s,
                                                 double sample_rate_hz, double estimator_noise_deg, Rng& rng) {
  require(estimator_noise_deg >= 0.0, "estimator noise must be >= 0");
  require(sample_rate_hz > 0.0, "sample rate must be positive");
  std::vector<double> residual;
  residual.reserve(times_s.size());
  long current = 0;
  double noise = 0.0;
  bool have = false;
  for (double t : times_s) {
    const long k = static_cast<long>(std::floor(t * sample_rate_hz));
    if (!have || k != current) {
      current = k;
      noise = estimator_noise_deg * rng.normal();
      have = true;
    }
    const double truth = theta(t);
    residual.push_back(truth - (truth + noise));
  }
  return residual;
}

}  // namespace spacelink

#endif  // SPACELINK_LINKSIM_HPP
