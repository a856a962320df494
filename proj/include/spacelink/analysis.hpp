#ifndef SPACELINK_ANALYSIS_HPP
#define SPACELINK_ANALYSIS_HPP

// CHSH estimation, light-cone bookkeeping and interferometric sensitivity
// calculators.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "spacelink/common.hpp"

namespace spacelink {

// ---------------------------------------------------------------- CHSH

// Setting pairs (side A angle, side B angle) in the order used by the sign
// layout S = E0 - E1 + E2 + E3, which gives S = 2 sqrt(2) for phi_plus.
inline constexpr std::array<std::array<double, 2>, 4> kChshSettings{{{0.0, 22.5}, {0.0, 67.5}, {45.0, 22.5}, {45.0, 67.5}}};
inline constexpr std::array<double, 4> kChshSigns{1.0, -1.0, 1.0, 1.0};

// counts[setting][outcome_a * 2 + outcome_b]
using ChshCounts = std::array<std::array<std::uint64_t, 4>, 4>;

struct ChshResult {
  std::array<double, 4> correlations{};
  std::array<std::uint64_t, 4> totals{};
  double s = 0.0;
  double sigma_s = 0.0;
};

inline int chsh_setting_index(double angle_a_deg, double angle_b_deg) {
  for (int k = 0; k < 4; ++k) {
    if (std::abs(kChshSettings[k][0] - angle_a_deg) < 1e-6 && std::abs(kChshSettings[k][1] - angle_b_deg) < 1e-6) {
      return k;
    }
  }
  return -1;
}

// E = (N++ + N-- - N+- - N-+) / N per setting pair; each E has binomial
// variance (1 - E^2) / N and the four are independent.
inline ChshResult chsh_from_counts(const ChshCounts& counts) {
  ChshResult r;
  double var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& c = counts[k];
    const std::uint64_t n = c[0] + c[1] + c[2] + c[3];
    require(n > 0, "CHSH: no counts for setting pair " + std::to_string(k));
    const double e = (static_cast<double>(c[0] + c[3]) - static_cast<double>(c[1] + c[2])) / static_cast<double>(n);
    r.correlations[k] = e;
    r.totals[k] = n;
    r.s += kChshSigns[k] * e;
    var += (1.0 - e * e) / static_cast<double>(n);
  }
  r.sigma_s = std::sqrt(var);
  return r;
}

// ------------------------------------------------------ light-cone checks

struct SpacetimeEvent {
  Vec3 position_km;
  double time_s = 0.0;
};

// Strict: lightlike pairs are not spacelike.
inline bool spacelike_separated(const SpacetimeEvent& a, const SpacetimeEvent& b) {
  return norm(a.position_km - b.position_km) > kSpeedOfLightKmPerS * std::abs(a.time_s - b.time_s);
}

// Source midway between two choosers, each of whom needs decision_time after
// the pair is emitted: they must be 2 c t apart.
inline double min_separation_for_free_choice(double decision_time_s) {
  require(decision_time_s >= 0.0, "decision time must be non-negative");
  return 2.0 * kSpeedOfLightKmPerS * decision_time_s;
}

// Smallest speed, in units of c, of a signal linking two detections a given
// distance apart whose times agree within the alignment uncertainty. Only the
// light-cone ratio; moving-frame arguments would tighten it further.
inline double collapse_speed_lower_bound(double separation_km, double time_alignment_s) {
  require(separation_km > 0.0, "separation must be positive");
  require(time_alignment_s > 0.0, "time alignment uncertainty must be positive");
  return separation_km / time_alignment_s / kSpeedOfLightKmPerS;
}

// ------------------------------------------------------- interferometry

enum class SensitivityRegime { standard, entangled };

inline double phase_sensitivity(double n_photons, SensitivityRegime regime) {
  require(n_photons >= 1.0, "photon number must be >= 1");
  return regime == SensitivityRegime::standard ? 1.0 / std::sqrt(n_photons) : 1.0 / n_photons;
}

// -(4 pi / lambda) * closed integral of h_0i dx^i along the path, trapezoidal
// per segment. path.front() must equal path.back(); field[i] is h_0i at path[i].
// Path in metres, h dimensionless, wavelength in metres.
inline double sagnac_phase(std::span<const Vec3> path, std::span<const Vec3> field, double wavelength_m) {
  require(path.size() >= 3, "Sagnac path needs at least three points");
  require(path.size() == field.size(), "Sagnac path and field sample counts differ");
  require(path.front() == path.back(), "Sagnac path must be closed");
  require(wavelength_m > 0.0, "wavelength must be positive");
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    integral += 0.5 * dot(field[i] + field[i + 1], path[i + 1] - path[i]);
  }
  return -4.0 * std::numbers::pi / wavelength_m * integral;
}

struct RotationTarget {
  std::string name;
  double omega_rad_s = 0.0;
  std::string source;
};

inline RotationTarget earth_lense_thirring() {
  return {"Earth Lense-Thirring", 1e-14, "order-of-magnitude frame-dragging rate near Earth"};
}

// Goedel universe: Omega = 2 sqrt(pi G rho), rho in kg/m^3.
inline double godel_rotation_rate(double mass_density_kg_m3) {
  require(mass_density_kg_m3 > 0.0, "mass density must be positive");
  return 2.0 * std::sqrt(std::numbers::pi * kGravitationalConstant * mass_density_kg_m3);
}

// Averaging time to reach target_omega when the resolution after baseline_time
// is baseline_sigma and improves as T^-p.
inline double integration_time(double target_omega, double baseline_sigma, double baseline_time_s, double p = 1.0) {
  require(target_omega > 0.0 && baseline_sigma > 0.0 && baseline_time_s > 0.0, "inputs must be positive");
  require(p > 0.0, "scaling exponent must be positive");
  return baseline_time_s * std::pow(baseline_sigma / target_omega, 1.0 / p);
}

}  // namespace spacelink

#endif  // SPACELINK_ANALYSIS_HPP
