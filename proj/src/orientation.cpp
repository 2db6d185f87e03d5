#include "ebsdict/orientation.hpp"

#include <algorithm>

namespace ebsdict {
namespace {

constexpr double kTwoPi = 2.0 * kPi;

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

Vec3 rotate_active(const Quaternion& p, const Vec3& v) {
  const Vec3 u{p.x, p.y, p.z};
  const Vec3 t{2.0 * (u[1] * v[2] - u[2] * v[1]), 2.0 * (u[2] * v[0] - u[0] * v[2]),
               2.0 * (u[0] * v[1] - u[1] * v[0])};
  return {v[0] + p.w * t[0] + (u[1] * t[2] - u[2] * t[1]),
          v[1] + p.w * t[1] + (u[2] * t[0] - u[0] * t[2]),
          v[2] + p.w * t[2] + (u[0] * t[1] - u[1] * t[0])};
}

}  // namespace

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::canonical() const {
  if (w > 0.0) return *this;
  if (w < 0.0) return -*this;
  for (double c : {x, y, z}) {
    if (c > 0.0) return *this;
    if (c < 0.0) return -*this;
  }
  return *this;
}

Quaternion euler_to_quaternion(const EulerTriplet& e) {
  const double sigma = 0.5 * (e.phi1 + e.phi2);
  const double delta = 0.5 * (e.phi1 - e.phi2);
  const double c = std::cos(0.5 * e.Phi);
  const double s = std::sin(0.5 * e.Phi);
  const Quaternion q{c * std::cos(sigma), s * std::cos(delta), s * std::sin(delta), c * std::sin(sigma)};
  return q.normalized().canonical();
}

EulerTriplet quaternion_to_euler(const Quaternion& qin) {
  const Quaternion q = qin.normalized();
  const double q03 = q.w * q.w + q.z * q.z;
  const double q12 = q.x * q.x + q.y * q.y;
  const double chi = std::sqrt(q03 * q12);
  EulerTriplet e;
  if (q12 <= 1e-24) {
    // Phi = 0: only phi1 + phi2 is defined; put it all in phi1.
    e.phi1 = std::atan2(2.0 * q.w * q.z, q.w * q.w - q.z * q.z);
  } else if (q03 <= 1e-24) {
    e.Phi = kPi;
    e.phi1 = std::atan2(2.0 * q.x * q.y, q.x * q.x - q.y * q.y);
  } else {
    e.Phi = std::atan2(2.0 * chi, q03 - q12);
    e.phi1 = std::atan2((q.x * q.z + q.w * q.y) / chi, (q.w * q.x - q.y * q.z) / chi);
    e.phi2 = std::atan2((q.x * q.z - q.w * q.y) / chi, (q.w * q.x + q.y * q.z) / chi);
  }
  e.phi1 = wrap_two_pi(e.phi1);
  e.phi2 = wrap_two_pi(e.phi2);
  return e;
}

RodriguesVector quaternion_to_rodrigues(const Quaternion& qin) {
  const Quaternion q = qin.normalized().canonical();
  RodriguesVector r;
  if (q.w <= 1e-12) {
    const double n = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    r.r = {q.x / n, q.y / n, q.z / n};
    r.at_infinity = true;
    return r;
  }
  r.r = {q.x / q.w, q.y / q.w, q.z / q.w};
  return r;
}

Quaternion axis_angle_to_quaternion(const AxisAngle& aa) {
  const double n = std::sqrt(aa.axis[0] * aa.axis[0] + aa.axis[1] * aa.axis[1] + aa.axis[2] * aa.axis[2]);
  if (n == 0.0 || aa.omega == 0.0) return Quaternion::identity();
  const double s = std::sin(0.5 * aa.omega) / n;
  return Quaternion{std::cos(0.5 * aa.omega), s * aa.axis[0], s * aa.axis[1], s * aa.axis[2]}.canonical();
}

AxisAngle quaternion_to_axis_angle(const Quaternion& qin) {
  const Quaternion q = qin.normalized().canonical();
  const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  AxisAngle aa;
  if (s == 0.0) return aa;
  aa.omega = 2.0 * std::atan2(s, q.w);
  aa.axis = {q.x / s, q.y / s, q.z / s};
  return aa;
}

Mat3 orientation_matrix(const Quaternion& qin) {
  const Quaternion q = qin.normalized();
  const double qq = q.w * q.w - (q.x * q.x + q.y * q.y + q.z * q.z);
  return {qq + 2.0 * q.x * q.x,           2.0 * (q.x * q.y + q.w * q.z), 2.0 * (q.x * q.z - q.w * q.y),
          2.0 * (q.x * q.y - q.w * q.z), qq + 2.0 * q.y * q.y,           2.0 * (q.y * q.z + q.w * q.x),
          2.0 * (q.x * q.z + q.w * q.y), 2.0 * (q.y * q.z - q.w * q.x), qq + 2.0 * q.z * q.z};
}

Mat3 orientation_matrix(const EulerTriplet& e) {
  const double c1 = std::cos(e.phi1), s1 = std::sin(e.phi1);
  const double c = std::cos(e.Phi), s = std::sin(e.Phi);
  const double c2 = std::cos(e.phi2), s2 = std::sin(e.phi2);
  return {c1 * c2 - s1 * s2 * c,  s1 * c2 + c1 * s2 * c,  s2 * s,
          -c1 * s2 - s1 * c2 * c, -s1 * s2 + c1 * c2 * c, c2 * s,
          s1 * s,                 -c1 * s,                c};
}

Vec3 sample_to_crystal(const Quaternion& q, const Vec3& v) { return rotate_active(q.conj(), v); }

Vec3 crystal_to_sample(const Quaternion& q, const Vec3& v) { return rotate_active(q, v); }

}  // namespace ebsdict
