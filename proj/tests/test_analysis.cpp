#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spacelink/analysis.hpp"
#include "spacelink/photonics.hpp"
#include "spacelink/random.hpp"

using namespace spacelink;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double c_km = 299792.458;

// Lorentz boost with velocity beta (units of c) along a unit direction n.
SpacetimeEvent boost(const SpacetimeEvent& e, const Vec3& n, double beta) {
  const double gamma = 1.0 / std::sqrt(1.0 - beta * beta);
  const double ct = c_km * e.time_s;
  const double par = dot(e.position_km, n);
  const Vec3 perp = e.position_km - n * par;
  const double ct2 = gamma * (ct - beta * par);
  const double par2 = gamma * (par - beta * ct);
  return {perp + n * par2, ct2 / c_km};
}

double interval(const SpacetimeEvent& a, const SpacetimeEvent& b) {
  const Vec3 d = a.position_km - b.position_km;
  const double ct = c_km * (a.time_s - b.time_s);
  return dot(d, d) - ct * ct;
}

// Circle of radius r in the xy plane, counter-clockwise, closed.
std::vector<Vec3> circle(double r, int n, Vec3 centre = {}) {
  std::vector<Vec3> p;
  for (int k = 0; k <= n; ++k) {
    const double phi = 2 * kPi * (k == n ? 0 : k) / n;
    p.push_back(centre + Vec3{r * std::cos(phi), r * std::sin(phi), 0.0});
  }
  return p;
}

std::vector<Vec3> rigid_field(const std::vector<Vec3>& path, double omega) {
  std::vector<Vec3> f;
  for (const auto& x : path) f.push_back(cross(Vec3{0, 0, omega}, x) * (1.0 / 299792458.0));
  return f;
}

}  // namespace

TEST(ChshCounts, PerfectlyCorrelatedSaturatesClassicalBound) {
  ChshCounts c{};
  for (auto& s : c) s = {500, 0, 0, 500};
  const auto r = chsh_from_counts(c);
  for (double e : r.correlations) EXPECT_DOUBLE_EQ(e, 1.0);
  EXPECT_DOUBLE_EQ(r.s, 2.0);
  EXPECT_DOUBLE_EQ(r.sigma_s, 0.0);
}

TEST(ChshCounts, AnalyticPhiPlusReachesTsirelson) {
  const PairSourceModel src{1.0, StateFamily::phi_plus, 1.0};
  double s = 0.0;
  ChshCounts c{};
  const double angles[4][2] = {{0, 22.5}, {0, 67.5}, {45, 22.5}, {45, 67.5}};
  const double signs[4] = {1, -1, 1, 1};
  for (int k = 0; k < 4; ++k) {
    const auto p = joint_outcome_probabilities(src, angles[k][0], angles[k][1]);
    s += signs[k] * (p[0] + p[3] - p[1] - p[2]);
    for (std::size_t o = 0; o < 4; ++o) c[static_cast<std::size_t>(k)][o] = static_cast<std::uint64_t>(std::llround(p[o] * 1e12));
  }
  EXPECT_NEAR(s, 2 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(chsh_from_counts(c).s, 2 * std::sqrt(2.0), 1e-9);
}

TEST(ChshCounts, UniformCountsGiveZero) {
  Rng rng(3);
  ChshCounts c{};
  for (auto& s : c) {
    for (int k = 0; k < 40000; ++k) ++s[rng.below(4)];
  }
  const auto r = chsh_from_counts(c);
  EXPECT_NEAR(r.s, 0.0, 3 * r.sigma_s);
  EXPECT_NEAR(r.sigma_s, std::sqrt(4.0 / 40000), 1e-3);
}

TEST(ChshCounts, EmptySettingRejected) {
  ChshCounts c{};
  for (auto& s : c) s = {1, 1, 1, 1};
  c[2] = {0, 0, 0, 0};
  EXPECT_THROW(chsh_from_counts(c), DomainError);
}

// Each trial draws one of the 16 deterministic local assignments from a
// random mixture, then a setting pair; outcomes depend only on the local
// setting and the shared assignment.
TEST(ChshCounts, LocalDeterministicStrategiesRespectBound) {
  std::mt19937_64 gen(17);
  Rng rng(18);
  for (int strategy = 0; strategy < 300; ++strategy) {
    std::array<double, 16> weight{};
    std::gamma_distribution<double> g(strategy % 3 == 0 ? 0.1 : 1.0);
    for (auto& w : weight) w = g(gen);
    std::discrete_distribution<int> pick(weight.begin(), weight.end());
    ChshCounts c{};
    for (int trial = 0; trial < 8000; ++trial) {
      const int lambda = pick(gen);
      const std::size_t setting = rng.below(4);
      const int a = (lambda >> (setting / 2)) & 1;           // A's choice: settings 0,1 -> 0 deg; 2,3 -> 45 deg
      const int b = (lambda >> (2 + setting % 2)) & 1;       // B's choice: 22.5 or 67.5 deg
      ++c[setting][static_cast<std::size_t>(a * 2 + b)];
    }
    const auto r = chsh_from_counts(c);
    ASSERT_LE(std::abs(r.s), 2.0 + 4.0 * r.sigma_s) << "strategy " << strategy;
  }
}

TEST(Spacelike, Examples) {
  EXPECT_FALSE(spacelike_separated({{0, 0, 0}, 0.0}, {{0, 0, 0}, 1.0}));
  EXPECT_TRUE(spacelike_separated({{0, 0, 0}, 0.0}, {{600000.0, 0, 0}, 1.0}));
  EXPECT_FALSE(spacelike_separated({{0, 0, 0}, 0.0}, {{c_km * 2.0, 0, 0}, 2.0}));
}

TEST(Spacelike, BoostPreservesIntervalSign) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> pos(-1e6, 1e6), tim(-5.0, 5.0), beta(-0.99, 0.99), unit(-1.0, 1.0);
  int spacelike = 0;
  for (int k = 0; k < 20000; ++k) {
    const SpacetimeEvent a{{pos(gen), pos(gen), pos(gen)}, tim(gen)}, b{{pos(gen), pos(gen), pos(gen)}, tim(gen)};
    Vec3 n{unit(gen), unit(gen), unit(gen)};
    n = n * (1.0 / norm(n));
    const double v = beta(gen);
    const auto a2 = boost(a, n, v), b2 = boost(b, n, v);
    const double s1 = interval(a, b), s2 = interval(a2, b2);
    const double scale = dot(a.position_km - b.position_km, a.position_km - b.position_km) +
                         std::pow(c_km * (a.time_s - b.time_s), 2);
    ASSERT_NEAR(s1, s2, 1e-9 * scale);
    if (std::abs(s1) > 1e-6 * scale) {
      ASSERT_EQ(spacelike_separated(a, b), spacelike_separated(a2, b2));
    }
    spacelike += spacelike_separated(a, b);
  }
  EXPECT_GT(spacelike, 1000);
  EXPECT_LT(spacelike, 19000);
}

TEST(FreeChoice, MinimumSeparation) {
  EXPECT_NEAR(min_separation_for_free_choice(1.0), 599584.916, 1e-3);
  EXPECT_NEAR(min_separation_for_free_choice(0.1), 59958.49, 0.01);
  EXPECT_EQ(min_separation_for_free_choice(0.0), 0.0);
  EXPECT_THROW(min_separation_for_free_choice(-1.0), DomainError);
}

TEST(Collapse, LightConeRatio) {
  EXPECT_NEAR(collapse_speed_lower_bound(10.0, 3.3e-9), 10.0 / 3.3e-9 / c_km, 1e-9);
  EXPECT_NEAR(collapse_speed_lower_bound(10.0, 3.3e-9), 1.011e4, 5.0);
  EXPECT_NEAR(collapse_speed_lower_bound(1638.0, 5e-12), 1.093e9, 1e6);
  EXPECT_NEAR(collapse_speed_lower_bound(3276.0, 5e-12) / collapse_speed_lower_bound(1638.0, 5e-12), 2.0, 1e-12);
  EXPECT_THROW(collapse_speed_lower_bound(10.0, 0.0), DomainError);
  EXPECT_THROW(collapse_speed_lower_bound(0.0, 1e-9), DomainError);
}

TEST(Sensitivity, Regimes) {
  EXPECT_DOUBLE_EQ(phase_sensitivity(100, SensitivityRegime::standard), 0.1);
  EXPECT_DOUBLE_EQ(phase_sensitivity(100, SensitivityRegime::entangled), 0.01);
  EXPECT_DOUBLE_EQ(phase_sensitivity(1e16, SensitivityRegime::standard) / phase_sensitivity(1e16, SensitivityRegime::entangled), 1e8);
  EXPECT_DOUBLE_EQ(phase_sensitivity(1, SensitivityRegime::standard), 1.0);
  EXPECT_DOUBLE_EQ(phase_sensitivity(1, SensitivityRegime::entangled), 1.0);
  for (double n = 1.5; n < 1e20; n *= 3.7) {
    ASSERT_LT(phase_sensitivity(n, SensitivityRegime::entangled), phase_sensitivity(n, SensitivityRegime::standard));
  }
  EXPECT_THROW(phase_sensitivity(0.5, SensitivityRegime::standard), DomainError);
}

TEST(Sagnac, FlatSpacetimeGivesZero) {
  const auto p = circle(1.0, 64);
  EXPECT_EQ(sagnac_phase(p, std::vector<Vec3>(p.size()), 1.55e-6), 0.0);
}

TEST(Sagnac, RigidRotationMatchesStokes) {
  const double r = 2.0, omega = 7.2921159e-5, lambda = 1.55e-6;
  const auto p = circle(r, 10000);
  const double closed = -(4 * kPi / lambda) * 2 * omega * (kPi * r * r) / 299792458.0;
  EXPECT_NEAR(sagnac_phase(p, rigid_field(p, omega), lambda) / closed, 1.0, 1e-6);
}

TEST(Sagnac, LinearOrientedAndAdditive) {
  const double omega = 1e-3, lambda = 1e-6;
  const auto p = circle(1.0, 512);
  const auto f = rigid_field(p, omega);
  const double base = sagnac_phase(p, f, lambda);
  std::vector<Vec3> f2;
  for (const auto& v : f) f2.push_back(v * 2.0);
  EXPECT_NEAR(sagnac_phase(p, f2, lambda), 2 * base, 1e-12 * std::abs(base));
  const std::vector<Vec3> rp(p.rbegin(), p.rend()), rf(f.rbegin(), f.rend());
  EXPECT_NEAR(sagnac_phase(rp, rf, lambda), -base, 1e-12 * std::abs(base));

  // Two unit squares sharing an edge, traversed in opposite directions there.
  auto square = [&](double x0) {
    return std::vector<Vec3>{{x0, 0, 0}, {x0 + 1, 0, 0}, {x0 + 1, 1, 0}, {x0, 1, 0}, {x0, 0, 0}};
  };
  auto field = [&](const std::vector<Vec3>& path) { return rigid_field(path, omega); };
  const auto left = square(0.0), right = square(1.0);
  const std::vector<Vec3> joined{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 0}};
  EXPECT_NEAR(sagnac_phase(left, field(left), lambda) + sagnac_phase(right, field(right), lambda),
              sagnac_phase(joined, field(joined), lambda), 1e-9 * std::abs(sagnac_phase(joined, field(joined), lambda)));
}

TEST(Sagnac, RejectsOpenOrMismatchedPath) {
  std::vector<Vec3> open{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  EXPECT_THROW(sagnac_phase(open, std::vector<Vec3>(open.size()), 1e-6), DomainError);
  const auto p = circle(1.0, 8);
  EXPECT_THROW(sagnac_phase(p, std::vector<Vec3>(3), 1e-6), DomainError);
  EXPECT_THROW(sagnac_phase(p, std::vector<Vec3>(p.size()), 0.0), DomainError);
}

TEST(Godel, RotationRate) {
  EXPECT_NEAR(godel_rotation_rate(2e-28), 2 * std::sqrt(kPi * 6.67430e-11 * 2e-28), 1e-30);
  EXPECT_NEAR(godel_rotation_rate(2e-28) / 4e-19, 1.0, 0.05);
  EXPECT_NEAR(godel_rotation_rate(8e-28) / godel_rotation_rate(2e-28), 2.0, 1e-12);
  EXPECT_NEAR(godel_rotation_rate(2e-28) / earth_lense_thirring().omega_rad_s, 4e-5, 0.2e-5);
  EXPECT_THROW(godel_rotation_rate(0.0), DomainError);
}

TEST(IntegrationTime, Scaling) {
  const double year = 365.25 * 86400.0;
  EXPECT_NEAR(integration_time(4e-19, 1e-16, year, 1.0) / year, 250.0, 1e-9);
  EXPECT_NEAR(integration_time(4e-19, 1e-16, year, 0.5) / year, 62500.0, 1e-6);
  EXPECT_DOUBLE_EQ(integration_time(1e-16, 1e-16, year), year);
  EXPECT_NEAR(integration_time(4e-19, 1e-19, year, 1.0) / year, 0.25, 1e-12);
  double prev = 1e300;
  for (double target = 1e-20; target < 1e-16; target *= 1.5) {
    const double t = integration_time(target, 1e-16, year);
    ASSERT_LT(t, prev);
    prev = t;
  }
  prev = 1e300;
  for (double enh = 1.0; enh < 1e4; enh *= 2.0) {
    const double t = integration_time(4e-19, 1e-16 / enh, year);
    ASSERT_LT(t, prev);
    prev = t;
  }
  EXPECT_THROW(integration_time(0.0, 1e-16, year), DomainError);
}
