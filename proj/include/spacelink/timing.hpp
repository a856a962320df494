#ifndef SPACELINK_TIMING_HPP
#define SPACELINK_TIMING_HPP

// Clock and propagation-delay correction of local timestamps, ranging-based
// delay estimation, and coincidence matching.
//
// Time bases: the transmitter clock is the reference ("link time"). A ground
// clock reads local = true + offset + drift * true + jitter. Corrected event
// times are emission times in link time, in nanoseconds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "spacelink/common.hpp"
#include "spacelink/events.hpp"

namespace spacelink {

struct ClockModel {
  double offset_s = 0.0;
  double drift = 0.0;  // seconds per second
  double jitter_s = 0.0;

  double local_from_true(double true_s) const noexcept { return true_s + offset_s + drift * true_s; }
  double true_from_local(double local_s) const noexcept { return (local_s - offset_s) / (1.0 + drift); }

  void validate(const std::string& name) const { require(jitter_s >= 0.0, name + ": jitter must be >= 0"); }
};

inline double propagation_delay(double slant_range_km) {
  require(slant_range_km > 0.0, "slant range must be positive");
  return slant_range_km / kSpeedOfLightKmPerS;
}

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.size() == y_.size() && x_.size() >= 2, "spline needs at least two knots");
    for (std::size_t i = 1; i < x_.size(); ++i) require(x_[i] > x_[i - 1], "spline knots must increase");
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Thomas algorithm for the second derivatives, natural end conditions.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
      const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }

  double operator()(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  bool empty() const noexcept { return x_.empty(); }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, m_;
};

// One-way delay as a function of arrival (link) time. A default-constructed
// profile is zero delay everywhere and covers all times.
class DelayProfile {
 public:
  DelayProfile() = default;
  DelayProfile(std::vector<double> arrival_s, std::vector<double> delay_s)
      : spline_(std::move(arrival_s), std::move(delay_s)) {}

  double delay_at(double arrival_s) const { return spline_.empty() ? 0.0 : spline_(arrival_s); }

  bool covers(double arrival_s) const {
    return spline_.empty() || (arrival_s >= spline_.front() && arrival_s <= spline_.back());
  }

  bool is_zero() const noexcept { return spline_.empty(); }

 private:
  CubicSpline spline_;
};

// Least-squares offset and drift from reference-pulse residuals: the local
// arrival time minus the emission time and the predicted geometric delay.
inline ClockModel estimate_clock(std::span<const double> emission_s, std::span<const double> arrival_local_s,
                                 std::span<const double> predicted_delay_s) {
  require(emission_s.size() == arrival_local_s.size() && emission_s.size() == predicted_delay_s.size(),
          "clock estimate: mismatched pulse lists");
  require(emission_s.size() >= 2, "clock estimate: need at least two pulses");
  const std::size_t n = emission_s.size();
  // Centred regressor.
  double mean_x = 0.0, mean_r = 0.0;
  std::vector<double> x(n), r(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = emission_s[i] + predicted_delay_s[i];
    r[i] = arrival_local_s[i] - x[i];
    mean_x += x[i];
    mean_r += r[i];
  }
  mean_x /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);
  double sxx = 0.0, sxr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxr += (x[i] - mean_x) * (r[i] - mean_r);
  }
  ClockModel clock;
  clock.drift = sxx > 0.0 ? sxr / sxx : 0.0;
  clock.offset_s = mean_r - clock.drift * mean_x;
  return clock;
}

// Delay profile from reference pulses with known emission times and measured
// arrival times, both in link time (arrivals already clock-corrected).
inline DelayProfile estimate_delay_by_ranging(std::span<const double> emission_s, std::span<const double> arrival_s) {
  require(emission_s.size() == arrival_s.size(), "ranging: mismatched pulse lists");
  require(emission_s.size() >= 2, "ranging: need at least two pulses");
  std::vector<double> t(arrival_s.begin(), arrival_s.end());
  std::vector<double> d(arrival_s.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = arrival_s[i] - emission_s[i];
  return DelayProfile(std::move(t), std::move(d));
}

struct CorrectionResult {
  CorrectedLog log;
  // Indices of events whose arrival time falls outside the delay profile; they
  // are still corrected, by extrapolation.
  std::vector<std::size_t> out_of_span;
};

// corrected = true_local - delay(true_local), with true_local undoing the
// estimated clock offset and drift. Times in nanoseconds.
inline CorrectionResult correct_timestamps(const EventLog& log, const DelayProfile& profile, const ClockModel& clock) {
  CorrectionResult out;
  out.log.resize(log.size());
  const double offset_ns = clock.offset_s * 1e9;
  const double scale = 1.0 / (1.0 + clock.drift);
  const bool zero_delay = profile.is_zero();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    auto& c = out.log[i];
    c.angle_deg = e.angle_deg;
    c.terminal = e.terminal;
    c.basis = e.basis;
    c.outcome = e.outcome;
    c.channel = e.channel;
    const double arrival_ns = (static_cast<double>(e.t) - offset_ns) * scale;
    if (zero_delay) {
      c.t = arrival_ns;
      continue;
    }
    const double arrival_s = arrival_ns * 1e-9;
    if (!profile.covers(arrival_s)) out.out_of_span.push_back(i);
    c.t = arrival_ns - profile.delay_at(arrival_s) * 1e9;
  }
  return out;
}

struct CoincidencePair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double dt_ns = 0.0;  // t_b - t_a

  friend bool operator==(const CoincidencePair&, const CoincidencePair&) = default;
};

namespace detail {

// Permutation that sorts the log by time, or empty when it is already sorted.
template <typename Time>
std::vector<std::size_t> time_order(const BasicEventLog<Time>& log) {
  const bool sorted = std::is_sorted(log.begin(), log.end(), [](const auto& x, const auto& y) { return x.t < y.t; });
  if (sorted) return {};
  std::vector<std::size_t> idx(log.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return log[x].t < log[y].t; });
  return idx;
}

}  // namespace detail

// Greedy nearest-neighbour matching within |t_b - t_a| <= window / 2.
// Candidate pairs are accepted in order of increasing |dt|, ties broken by the
// earlier event time, so the result does not depend on which log is A.
// Output is ordered by index_a. If window_pairs is given it receives the number
// of candidate pairs inside the window before assignment.
template <typename TimeA, typename TimeB>
std::vector<CoincidencePair> match_coincidences(const BasicEventLog<TimeA>& a, const BasicEventLog<TimeB>& b,
                                                double window_ns, std::size_t* window_pairs = nullptr) {
  require(window_ns >= 0.0, "coincidence window must be non-negative");
  const double half = 0.5 * window_ns;
  const auto oa = detail::time_order(a);
  const auto ob = detail::time_order(b);
  auto at_a = [&](std::size_t k) { return oa.empty() ? k : oa[k]; };
  auto at_b = [&](std::size_t k) { return ob.empty() ? k : ob[k]; };

  struct Candidate {
    double abs_dt, t_first, t_last;
    std::size_t ia, ib;
    double dt;
  };
  std::vector<Candidate> candidates;
  std::size_t lo = 0;
  for (std::size_t ka = 0; ka < a.size(); ++ka) {
    const std::size_t ia = at_a(ka);
    const double ta = static_cast<double>(a[ia].t);
    while (lo < b.size() && static_cast<double>(b[at_b(lo)].t) < ta - half) ++lo;
    for (std::size_t kb = lo; kb < b.size(); ++kb) {
      const std::size_t ib = at_b(kb);
      const double tb = static_cast<double>(b[ib].t);
      if (tb > ta + half) break;
      const double dt = tb - ta;
      candidates.push_back({std::abs(dt), std::min(ta, tb), std::max(ta, tb), ia, ib, dt});
    }
  }
  if (window_pairs) *window_pairs = candidates.size();
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.abs_dt, x.t_first, x.t_last) < std::tie(y.abs_dt, y.t_first, y.t_last);
  });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<CoincidencePair> pairs;
  for (const auto& c : candidates) {
    if (used_a[c.ia] || used_b[c.ib]) continue;
    used_a[c.ia] = used_b[c.ib] = 1;
    pairs.push_back({c.ia, c.ib, c.dt});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const CoincidencePair& x, const CoincidencePair& y) { return x.index_a < y.index_a; });
  return pairs;
}

}  // namespace spacelink

#endif  // SPACELINK_TIMING_HPP
