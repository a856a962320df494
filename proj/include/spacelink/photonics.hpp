#ifndef SPACELINK_PHOTONICS_HPP
#define SPACELINK_PHOTONICS_HPP

// Entangled-pair polarization statistics and link-budget arithmetic.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spacelink/common.hpp"
#include "spacelink/random.hpp"

namespace spacelink {

enum class StateFamily { phi_plus, psi_minus };

struct PairSourceModel {
  double pair_rate = 500000.0;  // pairs per second
  StateFamily state = StateFamily::phi_plus;
  // Werner mixing weight: V * |Bell><Bell| + (1 - V) * white noise.
  double visibility = 1.0;

  void validate() const {
    require(pair_rate > 0.0, "source: pair_rate must be positive");
    require(visibility >= 0.0 && visibility <= 1.0, "source: visibility out of [0, 1]");
  }
};

// A measurement basis is an analyzer orientation; outcome 0 means the photon
// was found along angle_deg, outcome 1 along angle_deg + 90.
struct Basis {
  std::string label;
  double angle_deg = 0.0;

  double orthogonal_deg() const noexcept { return angle_deg + 90.0; }
};

using BasisSet = std::vector<Basis>;

inline BasisSet standard_bases() { return {{"HV", 0.0}, {"DA", 45.0}}; }
inline BasisSet rotated_bases() { return {{"R22", 22.5}, {"R67", 67.5}}; }
inline BasisSet all_bases() { return {{"HV", 0.0}, {"DA", 45.0}, {"R22", 22.5}, {"R67", 67.5}}; }

struct ChannelModel {
  double attenuation_db = 25.0;
  double detection_loss_db = 6.5;
  double background_rate = 1000.0;  // counts per second, unpolarized
  // Channel polarization rotation theta(t) = amplitude * sin(2 pi t / period).
  double rotation_amplitude_deg = 10.0;
  double rotation_period_s = 100.0;
  // Reference-laser estimator: sample rate and Gaussian noise of each estimate.
  double compensation_rate_hz = 10.0;
  double compensation_noise_deg = 0.5;

  double total_loss_db() const noexcept { return attenuation_db + detection_loss_db; }

  double rotation_deg(double t) const noexcept {
    if (rotation_period_s <= 0.0) return 0.0;
    return rotation_amplitude_deg * std::sin(2.0 * std::numbers::pi * t / rotation_period_s);
  }

  void validate(const std::string& name) const {
    require(attenuation_db >= 0.0, name + ": attenuation_db must be >= 0");
    require(detection_loss_db >= 0.0, name + ": detection_loss_db must be >= 0");
    require(background_rate >= 0.0, name + ": background_rate must be >= 0");
    require(compensation_rate_hz > 0.0, name + ": compensation_rate_hz must be positive");
    require(compensation_noise_deg >= 0.0, name + ": compensation_noise_deg must be >= 0");
  }
};

inline double db_to_transmittance(double loss_db) {
  require(loss_db >= 0.0, "loss in dB must be non-negative");
  return std::pow(10.0, -loss_db / 10.0);
}

// E(a, b) for analyzers at a and b degrees.
inline double correlation(const PairSourceModel& source, double a_deg, double b_deg) {
  const double e = source.visibility * std::cos(2.0 * deg2rad(a_deg - b_deg));
  return source.state == StateFamily::phi_plus ? e : -e;
}

// Joint probabilities indexed by outcome_a * 2 + outcome_b: {P++, P+-, P-+, P--}.
using JointProbabilities = std::array<double, 4>;

inline JointProbabilities joint_outcome_probabilities(const PairSourceModel& source, double a_deg, double b_deg) {
  const double e = correlation(source, a_deg, b_deg);
  const double same = 0.25 * (1.0 + e);
  const double diff = 0.25 * (1.0 - e);
  return {same, diff, diff, same};
}

struct OutcomePair {
  int a = 0;
  int b = 0;
};

// Marginals are uniform for both state families, so draw a first and then
// whether b agrees with it.
inline OutcomePair sample_pair(Rng& rng, const PairSourceModel& source, double a_deg, double b_deg) {
  const double e = correlation(source, a_deg, b_deg);
  const int a = rng.uniform() < 0.5 ? 0 : 1;
  const bool agree = rng.uniform() < 0.5 * (1.0 + e);
  return {a, agree ? a : 1 - a};
}

inline double singles_rate(double pair_rate, double total_loss_db) {
  return pair_rate * db_to_transmittance(total_loss_db);
}

inline double coincidence_rate(double pair_rate, double loss_a_db, double loss_b_db) {
  return pair_rate * db_to_transmittance(loss_a_db + loss_b_db);
}

// Uncorrelated coincidences for a full-width window.
inline double accidental_rate(double singles_a, double singles_b, double window_s) {
  require(window_s >= 0.0, "coincidence window must be non-negative");
  return singles_a * singles_b * window_s;
}

// Fraction of coincident bits that disagree: accidentals are uncorrelated and
// disagree half the time, true pairs disagree with probability (1 - V) / 2.
inline double expected_bit_mismatch(double signal_rate, double accidental_rate_, double visibility) {
  require(signal_rate >= 0.0 && accidental_rate_ >= 0.0, "rates must be non-negative");
  const double total = signal_rate + accidental_rate_;
  require(total > 0.0, "QBER undefined without coincidences");
  return (0.5 * accidental_rate_ + 0.5 * signal_rate * (1.0 - visibility)) / total;
}

// Reported error rate: erroneous (uncorrelated) coincidences over all
// coincidences. Every accidental counts as an error even though only half of
// them flip a bit, so this is twice the bit mismatch; at V = 1 it is
// accidental / (signal + accidental), e.g. 2 / 82 for the single downlink.
inline double expected_qber(double signal_rate, double accidental_rate_, double visibility) {
  return 2.0 * expected_bit_mismatch(signal_rate, accidental_rate_, visibility);
}

}  // namespace spacelink

#endif  // SPACELINK_PHOTONICS_HPP
