#ifndef SPACELINK_PROTOCOLS_HPP
#define SPACELINK_PROTOCOLS_HPP

// Key distribution on top of matched detections: BB84 sifting, error
// estimation by public sampling, XOR key relay through a trusted node, and
// entanglement-based key generation gated by a CHSH test.
//
// Protocol code reads time, basis, angle and outcome only; truth tags are
// never consulted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spacelink/analysis.hpp"
#include "spacelink/events.hpp"
#include "spacelink/photonics.hpp"
#include "spacelink/random.hpp"
#include "spacelink/timing.hpp"

namespace spacelink {

using Bits = std::vector<std::uint8_t>;

enum class SecurityFlag { unchecked, bell_violated, insecure };

inline std::string_view to_string(SecurityFlag f) noexcept {
  switch (f) {
    case SecurityFlag::unchecked: return "unchecked";
    case SecurityFlag::bell_violated: return "bell_violated";
    case SecurityFlag::insecure: return "insecure";
  }
  return "?";
}

struct KeyMaterial {
  Bits bits;
  // Index into the coincidence list each bit came from.
  std::vector<std::size_t> source_pairs;
  double sifted_fraction = 0.0;
  // Bit mismatch rate seen in the disclosed sample, in [0, 0.5] for sane data.
  double qber_estimate = 0.0;
  SecurityFlag security_flag = SecurityFlag::unchecked;
};

struct SiftedKeys {
  KeyMaterial a;
  KeyMaterial b;
};

namespace detail {

inline bool same_angle(float x, float y) noexcept { return std::abs(x - y) < 1e-4f; }

// Side B's outcome defines the key; for the anti-correlated family side A flips.
inline std::uint8_t key_bit_a(std::uint8_t outcome, StateFamily family) noexcept {
  return family == StateFamily::psi_minus ? static_cast<std::uint8_t>(1 - outcome) : outcome;
}

}  // namespace detail

// Keeps coincidences measured along the same analyzer orientation on both sides.
template <typename LogA, typename LogB>
SiftedKeys bb84_sift(std::span<const CoincidencePair> pairs, const LogA& log_a, const LogB& log_b,
                     StateFamily family = StateFamily::phi_plus) {
  SiftedKeys keys;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& ea = log_a[pairs[k].index_a];
    const auto& eb = log_b[pairs[k].index_b];
    if (!detail::same_angle(ea.angle_deg, eb.angle_deg)) continue;
    keys.a.bits.push_back(detail::key_bit_a(ea.outcome, family));
    keys.b.bits.push_back(eb.outcome);
    keys.a.source_pairs.push_back(k);
    keys.b.source_pairs.push_back(k);
  }
  const double fraction =
      pairs.empty() ? 0.0 : static_cast<double>(keys.a.bits.size()) / static_cast<double>(pairs.size());
  keys.a.sifted_fraction = keys.b.sifted_fraction = fraction;
  return keys;
}

struct QberEstimate {
  std::size_t sampled = 0;
  std::size_t mismatches = 0;
  double mismatch_rate = 0.0;
};

// Reported error rate counts every uncorrelated coincidence as an error. Each
// one flips the bit only half the time, so the estimate is twice the observed
// mismatch rate (capped at 1).
inline double reported_qber(double mismatch_rate) noexcept { return std::min(1.0, 2.0 * mismatch_rate); }

// Discloses a random subset (each bit with probability sample_fraction),
// compares it and removes it from both keys.
inline QberEstimate estimate_qber(KeyMaterial& a, KeyMaterial& b, double sample_fraction, Rng& rng) {
  require(a.bits.size() == b.bits.size(), "QBER estimate: key lengths differ");
  require(sample_fraction > 0.0 && sample_fraction <= 1.0, "QBER sample fraction out of (0, 1]");
  QberEstimate est;
  KeyMaterial keep_a = a, keep_b = b;
  keep_a.bits.clear();
  keep_b.bits.clear();
  keep_a.source_pairs.clear();
  keep_b.source_pairs.clear();
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    if (sample_fraction >= 1.0 || rng.uniform() < sample_fraction) {
      ++est.sampled;
      est.mismatches += a.bits[i] != b.bits[i];
    } else {
      keep_a.bits.push_back(a.bits[i]);
      keep_b.bits.push_back(b.bits[i]);
      keep_a.source_pairs.push_back(a.source_pairs.empty() ? i : a.source_pairs[i]);
      keep_b.source_pairs.push_back(b.source_pairs.empty() ? i : b.source_pairs[i]);
    }
  }
  est.mismatch_rate = est.sampled ? static_cast<double>(est.mismatches) / static_cast<double>(est.sampled) : 0.0;
  keep_a.qber_estimate = keep_b.qber_estimate = est.mismatch_rate;
  a = std::move(keep_a);
  b = std::move(keep_b);
  return est;
}

// The trusted node holds keys shared with A and with B and publishes their XOR
// over the common length.
inline Bits xor_relay(const Bits& key_with_a, const Bits& key_with_b) {
  const std::size_t n = std::min(key_with_a.size(), key_with_b.size());
  require(n > 0, "XOR relay needs non-empty keys");
  Bits out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = key_with_a[i] ^ key_with_b[i];
  return out;
}

inline Bits recover_remote_key(const Bits& broadcast, const Bits& own_key) {
  require(!broadcast.empty(), "empty broadcast");
  require(own_key.size() >= broadcast.size(), "own key shorter than broadcast");
  Bits out(broadcast.size());
  for (std::size_t i = 0; i < broadcast.size(); ++i) out[i] = broadcast[i] ^ own_key[i];
  return out;
}

// Lowercase hex, bits packed most significant first, zero-padded at the end.
inline std::string to_hex(const Bits& bits) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) nibble = (nibble << 1) | (i + j < bits.size() ? bits[i + j] : 0u);
    out.push_back(digits[nibble]);
  }
  return out;
}

inline constexpr std::uint64_t kMinChshCountsPerSetting = 10;

template <typename LogA, typename LogB>
ChshCounts chsh_counts(std::span<const CoincidencePair> pairs, const LogA& log_a, const LogB& log_b) {
  ChshCounts counts{};
  for (const auto& p : pairs) {
    const auto& ea = log_a[p.index_a];
    const auto& eb = log_b[p.index_b];
    const int k = chsh_setting_index(ea.angle_deg, eb.angle_deg);
    if (k >= 0) ++counts[static_cast<std::size_t>(k)][ea.outcome * 2u + eb.outcome];
  }
  return counts;
}

struct E91Result {
  SiftedKeys keys;
  QberEstimate qber;
  ChshCounts counts{};
  std::optional<ChshResult> chsh;
  SecurityFlag security_flag = SecurityFlag::unchecked;
};

inline SecurityFlag bell_security(const ChshCounts& counts, std::optional<ChshResult>& chsh) {
  for (const auto& c : counts) {
    if (c[0] + c[1] + c[2] + c[3] < kMinChshCountsPerSetting) return SecurityFlag::unchecked;
  }
  chsh = chsh_from_counts(counts);
  // |S| > 2 by at least three standard deviations.
  return std::abs(chsh->s) - 2.0 >= 3.0 * chsh->sigma_s ? SecurityFlag::bell_violated : SecurityFlag::insecure;
}

// Key from coincidences at equal settings, CHSH from the four mixed settings.
template <typename LogA, typename LogB>
E91Result e91_session(std::span<const CoincidencePair> pairs, const LogA& log_a, const LogB& log_b,
                      StateFamily family, double sample_fraction, Rng& rng) {
  E91Result r;
  r.keys = bb84_sift(pairs, log_a, log_b, family);
  r.counts = chsh_counts(pairs, log_a, log_b);
  r.security_flag = bell_security(r.counts, r.chsh);
  if (!r.keys.a.bits.empty()) r.qber = estimate_qber(r.keys.a, r.keys.b, sample_fraction, rng);
  r.keys.a.security_flag = r.keys.b.security_flag = r.security_flag;
  return r;
}

}  // namespace spacelink

#endif  // SPACELINK_PROTOCOLS_HPP
