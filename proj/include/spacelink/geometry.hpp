#ifndef SPACELINK_GEOMETRY_HPP
#define SPACELINK_GEOMETRY_HPP

// Circular-orbit pass geometry over a spherical, uniformly rotating Earth.
//
// Frames: the inertial frame coincides with the Earth-fixed frame at t = 0
// (Greenwich angle zero at the epoch). Times are simulation seconds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spacelink/common.hpp"

namespace spacelink {

struct GeodeticPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

struct GroundStation {
  std::string name;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 0.0;

  void validate() const {
    require(latitude_deg >= -90.0 && latitude_deg <= 90.0, "station " + name + ": latitude out of [-90, 90]");
    require(longitude_deg > -180.0 && longitude_deg <= 180.0, "station " + name + ": longitude out of (-180, 180]");
    require(altitude_km >= 0.0 && altitude_km < 10.0, "station " + name + ": altitude out of [0, 10) km");
  }
};

struct CircularOrbit {
  double altitude_km = 400.0;
  double inclination_deg = 51.0;
  double period_s = 5520.0;
  double raan_deg = 0.0;
  // Argument of latitude at the epoch; 0 means the ascending node.
  double phase_at_epoch_deg = 0.0;
  double epoch_s = 0.0;

  double radius_km() const noexcept { return kEarthRadiusKm + altitude_km; }

  void validate() const {
    require(altitude_km > 0.0, "orbit: altitude must be positive");
    require(inclination_deg >= 0.0 && inclination_deg <= 180.0, "orbit: inclination out of [0, 180]");
    require(period_s > 0.0, "orbit: period must be positive");
  }
};

// Two-body period of a circular orbit at the given altitude.
inline double keplerian_period(double altitude_km) {
  const double a = kEarthRadiusKm + altitude_km;
  return 2.0 * std::numbers::pi * std::sqrt(a * a * a / kEarthMuKm3PerS2);
}

struct LinkWindow {
  std::vector<std::string> stations;
  double start_s = 0.0;
  double end_s = 0.0;
  double max_elevation_deg = 0.0;
  // Longitude of the ground track where it crosses the station latitude,
  // minus the station longitude, wrapped to (-180, 180].
  double delta_longitude_deg = 0.0;
  bool ascending = true;

  double duration() const noexcept { return end_s - start_s; }
};

struct LookAngles {
  double elevation_deg = 0.0;
  double slant_range_km = 0.0;
};

inline double argument_of_latitude_rad(const CircularOrbit& orbit, double t) {
  return deg2rad(orbit.phase_at_epoch_deg) + 2.0 * std::numbers::pi * (t - orbit.epoch_s) / orbit.period_s;
}

inline Vec3 inertial_position(const CircularOrbit& orbit, double t) {
  const double u = argument_of_latitude_rad(orbit, t);
  const double raan = deg2rad(orbit.raan_deg);
  const double inc = deg2rad(orbit.inclination_deg);
  const double r = orbit.radius_km();
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  const double ci = std::cos(inc), si = std::sin(inc);
  return {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si};
}

inline Vec3 earth_fixed_position(const CircularOrbit& orbit, double t) {
  const Vec3 p = inertial_position(orbit, t);
  const double theta = kEarthRotationRadPerS * t;
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * p.x + s * p.y, -s * p.x + c * p.y, p.z};
}

inline Vec3 earth_fixed_position(const GroundStation& station) {
  const double r = kEarthRadiusKm + station.altitude_km;
  const double lat = deg2rad(station.latitude_deg);
  const double lon = deg2rad(station.longitude_deg);
  return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon), r * std::sin(lat)};
}

inline GeodeticPoint subsatellite_point(const CircularOrbit& orbit, double t) {
  const Vec3 p = earth_fixed_position(orbit, t);
  return {rad2deg(std::asin(std::clamp(p.z / norm(p), -1.0, 1.0))),
          wrap_degrees(rad2deg(std::atan2(p.y, p.x)))};
}

inline LookAngles look_angles(const Vec3& station_ecef, const Vec3& target_ecef) {
  const Vec3 rho = target_ecef - station_ecef;
  const double range = norm(rho);
  const double sin_el = dot(rho, station_ecef) / (range * norm(station_ecef));
  return {rad2deg(std::asin(std::clamp(sin_el, -1.0, 1.0))), range};
}

inline LookAngles elevation_and_range(const GroundStation& station, const CircularOrbit& orbit, double t) {
  return look_angles(earth_fixed_position(station), earth_fixed_position(orbit, t));
}

// Closed-form slant range for a satellite seen at the given elevation.
inline double slant_range_for_elevation(double elevation_deg, double satellite_altitude_km,
                                        double station_altitude_km = 0.0) {
  const double rs = kEarthRadiusKm + station_altitude_km;
  const double ro = kEarthRadiusKm + satellite_altitude_km;
  const double s = std::sin(deg2rad(elevation_deg));
  return std::sqrt(rs * rs * s * s + ro * ro - rs * rs) - rs * s;
}

struct WindowSearch {
  double step_s = 1.0;
  double tolerance_s = 1e-3;
};

namespace detail {

// Locates the crossing of f(t) = level between a and b, where the sign of
// f - level differs at the ends. Returns the end of the final bracket on the
// side where f >= level.
template <typename F>
double refine_crossing(F&& f, double level, double a, double b, double tolerance) {
  const bool a_above = f(a) >= level;
  while (b - a > tolerance) {
    const double m = 0.5 * (a + b);
    if ((f(m) >= level) == a_above) a = m; else b = m;
  }
  return a_above ? a : b;
}

template <typename F>
double golden_max(F&& f, double a, double b, double tolerance) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tolerance) {
    if (fc > fd) { b = d; d = c; fd = fc; c = b - g * (b - a); fc = f(c); }
    else { a = c; c = d; fc = fd; d = a + g * (b - a); fd = f(d); }
  }
  return std::max(fc, fd);
}

}  // namespace detail

// Generic window finder: maximal intervals in [0, horizon] where f(t) >= level,
// found by fixed stepping and refined by bisection. Each returned pair is
// (start, end, peak value, time of peak sample).
struct ThresholdInterval {
  double start = 0.0;
  double end = 0.0;
  double peak = 0.0;
  double peak_time = 0.0;
};

template <typename F>
std::vector<ThresholdInterval> threshold_intervals(F&& f, double level, double horizon, WindowSearch search = {}) {
  std::vector<ThresholdInterval> out;
  const auto n = static_cast<std::size_t>(std::ceil(horizon / search.step_s));
  double prev_t = 0.0;
  double prev_v = f(0.0);
  bool inside = prev_v >= level;
  ThresholdInterval current{0.0, 0.0, prev_v, 0.0};
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = std::min(horizon, static_cast<double>(k) * search.step_s);
    const double v = f(t);
    const bool above = v >= level;
    if (above && !inside) {
      current = {};
      current.start = detail::refine_crossing(f, level, prev_t, t, search.tolerance_s);
      current.peak = v;
      current.peak_time = t;
      inside = true;
    } else if (!above && inside) {
      current.end = detail::refine_crossing(f, level, prev_t, t, search.tolerance_s);
      out.push_back(current);
      inside = false;
    }
    if (above && v > current.peak) {
      current.peak = v;
      current.peak_time = t;
    }
    prev_t = t;
    prev_v = v;
  }
  if (inside) {
    current.end = horizon;
    out.push_back(current);
  }
  // Refine each peak locally; the sampled peak is within one step of the true one.
  for (auto& w : out) {
    const double a = std::max(w.start, w.peak_time - search.step_s);
    const double b = std::min(w.end, w.peak_time + search.step_s);
    if (b > a) w.peak = std::max(w.peak, detail::golden_max(f, a, b, search.tolerance_s));
  }
  // A window that only touches the level at a single instant is degenerate.
  std::erase_if(out, [](const ThresholdInterval& w) { return !(w.end > w.start); });
  return out;
}

struct TrackCrossing {
  double time_s = 0.0;
  double delta_longitude_deg = 0.0;
  bool ascending = true;
};

// Crossing of the given latitude by the ground track nearest to t_ref,
// searched within a quarter period on either side.
inline std::optional<TrackCrossing> nearest_latitude_crossing(const CircularOrbit& orbit, const GeodeticPoint& site,
                                                              double t_ref) {
  auto lat_minus = [&](double t) { return subsatellite_point(orbit, t).latitude_deg - site.latitude_deg; };
  const double reach = 0.25 * orbit.period_s;
  const double step = 1.0;
  for (double off = 0.0; off <= reach; off += step) {
    for (double dir : {-1.0, 1.0}) {
      const double a = t_ref + dir * off;
      const double b = a + dir * step;
      const double fa = lat_minus(a), fb = lat_minus(b);
      if ((fa < 0.0) != (fb < 0.0)) {
        double lo = std::min(a, b), hi = std::max(a, b);
        const bool lo_below = lat_minus(lo) < 0.0;
        while (hi - lo > 1e-4) {
          const double m = 0.5 * (lo + hi);
          if ((lat_minus(m) < 0.0) == lo_below) lo = m; else hi = m;
        }
        const double tc = 0.5 * (lo + hi);
        const auto p = subsatellite_point(orbit, tc);
        return TrackCrossing{tc, wrap_degrees(p.longitude_deg - site.longitude_deg), lo_below};
      }
    }
  }
  return std::nullopt;
}

inline LinkWindow make_window(std::vector<std::string> names, const ThresholdInterval& iv, const CircularOrbit& orbit,
                              const GeodeticPoint& site) {
  LinkWindow w;
  w.stations = std::move(names);
  w.start_s = iv.start;
  w.end_s = iv.end;
  w.max_elevation_deg = iv.peak;
  if (auto c = nearest_latitude_crossing(orbit, site, iv.peak_time)) {
    w.delta_longitude_deg = c->delta_longitude_deg;
    w.ascending = c->ascending;
  } else {
    // Station beyond the track's latitude reach: use the closest-approach point.
    const auto p = subsatellite_point(orbit, iv.peak_time);
    w.delta_longitude_deg = wrap_degrees(p.longitude_deg - site.longitude_deg);
    w.ascending = subsatellite_point(orbit, iv.peak_time + 1.0).latitude_deg > p.latitude_deg;
  }
  return w;
}

inline std::vector<LinkWindow> link_windows(const CircularOrbit& orbit, const GroundStation& station,
                                            double min_elevation_deg, double horizon_s, WindowSearch search = {}) {
  orbit.validate();
  station.validate();
  require(min_elevation_deg >= 0.0 && min_elevation_deg <= 90.0, "min elevation out of [0, 90]");
  require(horizon_s > 0.0, "horizon must be positive");
  const Vec3 site = earth_fixed_position(station);
  auto elevation = [&](double t) { return look_angles(site, earth_fixed_position(orbit, t)).elevation_deg; };
  std::vector<LinkWindow> out;
  for (const auto& iv : threshold_intervals(elevation, min_elevation_deg, horizon_s, search)) {
    out.push_back(make_window({station.name}, iv, orbit, {station.latitude_deg, station.longitude_deg}));
  }
  return out;
}

// Geodesic midpoint of two stations, used as the reference site for joint passes.
inline GeodeticPoint midpoint(const GroundStation& a, const GroundStation& b) {
  Vec3 m = earth_fixed_position(GroundStation{"", a.latitude_deg, a.longitude_deg, 0.0}) +
           earth_fixed_position(GroundStation{"", b.latitude_deg, b.longitude_deg, 0.0});
  return {rad2deg(std::atan2(m.z, std::hypot(m.x, m.y))), wrap_degrees(rad2deg(std::atan2(m.y, m.x)))};
}

// Intervals during which both stations see the satellite above min_elevation.
// max_elevation is the peak of the lower of the two elevations.
inline std::vector<LinkWindow> joint_windows(const CircularOrbit& orbit, const GroundStation& a,
                                             const GroundStation& b, double min_elevation_deg, double horizon_s,
                                             WindowSearch search = {}) {
  orbit.validate();
  a.validate();
  b.validate();
  require(min_elevation_deg >= 0.0 && min_elevation_deg <= 90.0, "min elevation out of [0, 90]");
  require(horizon_s > 0.0, "horizon must be positive");
  const Vec3 sa = earth_fixed_position(a);
  const Vec3 sb = earth_fixed_position(b);
  auto lower_elevation = [&](double t) {
    const Vec3 p = earth_fixed_position(orbit, t);
    return std::min(look_angles(sa, p).elevation_deg, look_angles(sb, p).elevation_deg);
  };
  std::vector<LinkWindow> out;
  const auto mid = midpoint(a, b);
  for (const auto& iv : threshold_intervals(lower_elevation, min_elevation_deg, horizon_s, search)) {
    out.push_back(make_window({a.name, b.name}, iv, orbit, mid));
  }
  return out;
}

struct PassStatistics {
  std::size_t orbits = 0;
  std::size_t useful_orbits = 0;
  double fraction_of_orbits = 0.0;
  double links_per_day = 0.0;
};

// Ascending crossings of a latitude by the ground track over [0, horizon],
// found by propagating the track at 1 s resolution.
inline std::vector<TrackCrossing> ascending_crossings(const CircularOrbit& orbit, const GeodeticPoint& site,
                                                      double horizon_s) {
  std::vector<TrackCrossing> out;
  auto lat_minus = [&](double t) { return subsatellite_point(orbit, t).latitude_deg - site.latitude_deg; };
  double prev = lat_minus(0.0);
  const auto n = static_cast<std::size_t>(horizon_s);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k);
    const double cur = lat_minus(t);
    if (prev < 0.0 && cur >= 0.0) {
      double lo = t - 1.0, hi = t;
      while (hi - lo > 1e-4) {
        const double m = 0.5 * (lo + hi);
        if (lat_minus(m) < 0.0) lo = m; else hi = m;
      }
      const double tc = 0.5 * (lo + hi);
      out.push_back({tc, wrap_degrees(subsatellite_point(orbit, tc).longitude_deg - site.longitude_deg), true});
    }
    prev = cur;
  }
  return out;
}

// Fraction of orbits whose ascending pass crosses the station latitude within
// max_delta_longitude of the station, and the implied useful links per day.
inline PassStatistics useful_pass_statistics(const CircularOrbit& orbit, const GroundStation& station,
                                             double max_delta_longitude_deg, double horizon_s) {
  orbit.validate();
  station.validate();
  require(horizon_s >= 10.0 * kSecondsPerDay, "pass statistics need a horizon of at least 10 days");
  PassStatistics stats;
  for (const auto& c : ascending_crossings(orbit, {station.latitude_deg, station.longitude_deg}, horizon_s)) {
    ++stats.orbits;
    if (std::abs(c.delta_longitude_deg) < max_delta_longitude_deg || max_delta_longitude_deg >= 180.0) {
      ++stats.useful_orbits;
    }
  }
  if (stats.orbits > 0) {
    stats.fraction_of_orbits = static_cast<double>(stats.useful_orbits) / static_cast<double>(stats.orbits);
  }
  stats.links_per_day = stats.fraction_of_orbits * kSecondsPerDay / orbit.period_s;
  return stats;
}

// Per-day rate of joint passes (ascending passes only, matching the one
// candidate pass per orbit counted by useful_pass_statistics) and the spread of
// track longitude offsets, relative to the stations' midpoint, over which a
// joint link exists.
struct JointPassSummary {
  std::size_t windows = 0;
  double links_per_day = 0.0;
  double longitudinal_range_deg = 0.0;
};

inline JointPassSummary joint_pass_summary(const CircularOrbit& orbit, const GroundStation& a,
                                           const GroundStation& b, double min_elevation_deg, double horizon_s) {
  JointPassSummary out;
  double lo = 0.0, hi = 0.0;
  for (const auto& w : joint_windows(orbit, a, b, min_elevation_deg, horizon_s)) {
    if (!w.ascending) continue;
    if (out.windows == 0) lo = hi = w.delta_longitude_deg;
    lo = std::min(lo, w.delta_longitude_deg);
    hi = std::max(hi, w.delta_longitude_deg);
    ++out.windows;
  }
  out.links_per_day = static_cast<double>(out.windows) * kSecondsPerDay / horizon_s;
  out.longitudinal_range_deg = hi - lo;
  return out;
}

inline double central_angle_rad(const GroundStation& a, const GroundStation& b) {
  const double la1 = deg2rad(a.latitude_deg), la2 = deg2rad(b.latitude_deg);
  const double dlat = la2 - la1;
  const double dlon = deg2rad(b.longitude_deg - a.longitude_deg);
  const double h = std::pow(std::sin(dlat / 2), 2) + std::cos(la1) * std::cos(la2) * std::pow(std::sin(dlon / 2), 2);
  return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

// Sea-level great-circle distance (haversine).
inline double great_circle_distance(const GroundStation& a, const GroundStation& b) {
  return kEarthRadiusKm * central_angle_rad(a, b);
}

struct BaselineAngles {
  double phi_deg = 0.0;
  double xi_deg = 0.0;
};

namespace detail {

// Angle between the local east direction at `from` and the great-circle
// direction of travel (bearing measured clockwise from north), in [0, 180].
inline double angle_from_east(double bearing_rad) {
  const double east = std::sin(bearing_rad);
  const double north = std::cos(bearing_rad);
  return rad2deg(std::atan2(std::abs(north), east));
}

inline double initial_bearing_rad(const GroundStation& a, const GroundStation& b) {
  const double la1 = deg2rad(a.latitude_deg), la2 = deg2rad(b.latitude_deg);
  const double dlon = deg2rad(b.longitude_deg - a.longitude_deg);
  return std::atan2(std::sin(dlon) * std::cos(la2),
                    std::cos(la1) * std::sin(la2) - std::sin(la1) * std::cos(la2) * std::cos(dlon));
}

}  // namespace detail

// phi: angle at a between local east and the direction toward b.
// xi: angle at b between local east and the arc continued beyond b.
inline BaselineAngles baseline_angles(const GroundStation& a, const GroundStation& b) {
  require(great_circle_distance(a, b) > 1e-9, "baseline angles undefined for coincident stations");
  const double forward = detail::initial_bearing_rad(a, b);
  const double arrival = detail::initial_bearing_rad(b, a) + std::numbers::pi;
  return {detail::angle_from_east(forward), detail::angle_from_east(arrival)};
}

}  // namespace spacelink

#endif  // SPACELINK_GEOMETRY_HPP
