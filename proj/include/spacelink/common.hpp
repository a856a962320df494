#ifndef SPACELINK_COMMON_HPP
#define SPACELINK_COMMON_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spacelink {

inline constexpr double kSpeedOfLightKmPerS = 299792.458;
inline constexpr double kSpeedOfLightMPerS = 299792458.0;
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kEarthMuKm3PerS2 = 398600.4418;
// Sidereal rotation rate.
inline constexpr double kEarthRotationRadPerS = 7.2921159e-5;
inline constexpr double kGravitationalConstant = 6.67430e-11;  // m^3 kg^-1 s^-2
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerYear = 365.25 * kSecondsPerDay;

inline constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

// Wraps an angle into (-180, 180].
inline double wrap_degrees(double deg) noexcept {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

// Precondition violations on public entry points throw this.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw DomainError(what);
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) noexcept { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) noexcept { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr double dot(const Vec3& a, const Vec3& b) noexcept {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }

}  // namespace spacelink

#endif  // SPACELINK_COMMON_HPP
