#pragma once

// Equal-volume cube -> ball -> SO(3) mapping used for uniform orientation
// sampling. The cube has edge pi^(2/3) (volume pi^2), the ball has radius
// (3pi/4)^(1/3), and the ball is the homochoric parameterization of the
// rotations with w >= 0.

#include <cmath>
#include <numbers>

#include "ebsdict/orientation.hpp"

namespace ebsdict {

inline const double kCubeEdge = std::cbrt(kPi * kPi);
inline const double kBallRadius = std::cbrt(0.75 * kPi);

struct CubochoricPoint {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// Sextant-wise equal-volume map from the cube onto the homochoric ball.
/// Throws std::out_of_range outside the cube.
[[nodiscard]] Vec3 cubochoric_to_homochoric(const CubochoricPoint& c);
/// Inverse of cubochoric_to_homochoric. Throws std::out_of_range outside the ball.
[[nodiscard]] CubochoricPoint homochoric_to_cubochoric(const Vec3& h);

/// Solves (3(w - sin w)/4)^(1/3) = |h| for w in [0, pi]. Throws std::out_of_range
/// when |h| exceeds the ball radius.
[[nodiscard]] AxisAngle homochoric_to_axis_angle(const Vec3& h);
[[nodiscard]] Vec3 axis_angle_to_homochoric(const AxisAngle& aa);

[[nodiscard]] Quaternion cubochoric_to_quaternion(const CubochoricPoint& c);
/// Preimage of q (or -q) in the cube.
[[nodiscard]] CubochoricPoint quaternion_to_cubochoric(const Quaternion& q);

}  // namespace ebsdict
