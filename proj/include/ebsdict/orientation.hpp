#pragma once

// Orientation representations and conversions.
//
// Conventions: Bunge ZXZ Euler angles, passive rotations (sample frame ->
// crystal frame), Hamilton quaternion product. A quaternion q describes the
// orientation matrix g = R(q)^T, where R(q) is the active rotation matrix, so
// crystal coordinates are v_c = g * v_s. Crystal symmetry acts on the right:
// q and q * s describe the same orientation for every symmetry rotation s.

#include <array>
#include <cmath>
#include <numbers>

namespace ebsdict {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDeg = 180.0 / kPi;

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  [[nodiscard]] double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  [[nodiscard]] Quaternion normalized() const;
  [[nodiscard]] constexpr Quaternion conj() const { return {w, -x, -y, -z}; }
  /// Representative with w >= 0; for w == 0 the first nonzero vector component is made positive.
  [[nodiscard]] Quaternion canonical() const;
  [[nodiscard]] constexpr std::array<double, 4> array() const { return {w, x, y, z}; }

  constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }
  friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

[[nodiscard]] constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

[[nodiscard]] constexpr double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Bunge ZXZ triplet in radians: phi1, phi2 in [0, 2pi), Phi in [0, pi].
struct EulerTriplet {
  double phi1 = 0.0;
  double Phi = 0.0;
  double phi2 = 0.0;
};

/// tan(omega/2) * axis. A rotation by pi has no finite vector; then `at_infinity`
/// is set and `r` holds the unit axis.
struct RodriguesVector {
  Vec3 r{0.0, 0.0, 0.0};
  bool at_infinity = false;
};

struct AxisAngle {
  Vec3 axis{0.0, 0.0, 1.0};
  double omega = 0.0;  // radians, [0, pi]
};

[[nodiscard]] Quaternion euler_to_quaternion(const EulerTriplet& e);
[[nodiscard]] EulerTriplet quaternion_to_euler(const Quaternion& q);
[[nodiscard]] RodriguesVector quaternion_to_rodrigues(const Quaternion& q);
[[nodiscard]] Quaternion axis_angle_to_quaternion(const AxisAngle& aa);
[[nodiscard]] AxisAngle quaternion_to_axis_angle(const Quaternion& q);

/// Orientation matrix g (sample -> crystal), row-major.
[[nodiscard]] Mat3 orientation_matrix(const Quaternion& q);
/// Orientation matrix built directly from Euler angles (independent of the quaternion path).
[[nodiscard]] Mat3 orientation_matrix(const EulerTriplet& e);

/// Express a sample-frame vector in the crystal frame.
[[nodiscard]] Vec3 sample_to_crystal(const Quaternion& q, const Vec3& v);
/// Express a crystal-frame vector in the sample frame.
[[nodiscard]] Vec3 crystal_to_sample(const Quaternion& q, const Vec3& v);

}  // namespace ebsdict
