#include "ebsdict/cubochoric.hpp"

#include <algorithm>
#include <stdexcept>

namespace ebsdict {
namespace {

// Constants of the sextant construction. kScale rescales the cube of edge
// pi^(2/3) to the cube of edge pi^(5/6)/6^(1/6) on which the curved-square
// map is defined.
const double kScale = std::pow(kPi, 5.0 / 6.0) / std::pow(6.0, 1.0 / 6.0) / kCubeEdge;
const double kHalfScaledEdge = std::pow(kPi, 5.0 / 6.0) / std::pow(6.0, 1.0 / 6.0) / 2.0;
const double kSqrt2 = std::sqrt(2.0);
constexpr double kPi12 = kPi / 12.0;
const double kPrek = kBallRadius * std::pow(2.0, 0.25) / kHalfScaledEdge;
const double kPref = std::sqrt(6.0 / kPi);
const double kSqrtPi = std::sqrt(kPi);
const double kSqrt24 = std::sqrt(24.0);

constexpr double kDomainTol = 1e-12;

// Pyramid with apex at the origin containing v: 1/2 = +z/-z, 3/4 = +x/-x, 5/6 = +y/-y.
// Later tests win on shared faces.
int pyramid(const Vec3& v) {
  const double x = v[0], y = v[1], z = v[2];
  int p = 0;
  if (std::abs(x) <= z && std::abs(y) <= z) p = 1;
  if (std::abs(x) <= -z && std::abs(y) <= -z) p = 2;
  if (std::abs(z) <= x && std::abs(y) <= x) p = 3;
  if (std::abs(z) <= -x && std::abs(y) <= -x) p = 4;
  if (std::abs(x) <= y && std::abs(z) <= y) p = 5;
  if (std::abs(x) <= -y && std::abs(z) <= -y) p = 6;
  return p;
}

// Rotate coordinates so the pyramid's axis becomes the third component.
Vec3 to_pyramid_frame(const Vec3& v, int p) {
  if (p == 3 || p == 4) return {v[1], v[2], v[0]};
  if (p == 5 || p == 6) return {v[2], v[0], v[1]};
  return v;
}

Vec3 from_pyramid_frame(const Vec3& v, int p) {
  if (p == 3 || p == 4) return {v[2], v[0], v[1]};
  if (p == 5 || p == 6) return {v[1], v[2], v[0]};
  return v;
}

// (w - sin w) * 3/4, with a series near zero to avoid cancellation.
double homochoric_volume_term(double w) {
  if (w < 1e-2) {
    const double w2 = w * w;
    return 0.75 * w * w2 * (1.0 / 6.0 - w2 / 120.0 + w2 * w2 / 5040.0);
  }
  return 0.75 * (w - std::sin(w));
}

double homochoric_radius(double w) { return std::cbrt(homochoric_volume_term(w)); }

}  // namespace

Vec3 cubochoric_to_homochoric(const CubochoricPoint& c) {
  const Vec3 v{c.c1, c.c2, c.c3};
  const double m = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  if (!(m <= 0.5 * kCubeEdge + kDomainTol)) throw std::out_of_range("cubochoric point outside the cube");
  if (m == 0.0) return {0.0, 0.0, 0.0};

  const int p = pyramid(v);
  Vec3 s = to_pyramid_frame(v, p);
  for (double& e : s) e *= kScale;

  Vec3 out;
  if (s[0] == 0.0 && s[1] == 0.0) {
    out = {0.0, 0.0, kPref * s[2]};
  } else {
    double t1, t2;
    if (std::abs(s[1]) <= std::abs(s[0])) {
      const double c0 = std::cos(kPi12 * s[1] / s[0]);
      const double s0 = std::sin(kPi12 * s[1] / s[0]);
      const double q = kPrek * s[0] / std::sqrt(kSqrt2 - c0);
      t1 = (kSqrt2 * c0 - 1.0) * q;
      t2 = kSqrt2 * s0 * q;
    } else {
      const double c0 = std::cos(kPi12 * s[0] / s[1]);
      const double s0 = std::sin(kPi12 * s[0] / s[1]);
      const double q = kPrek * s[1] / std::sqrt(kSqrt2 - c0);
      t1 = kSqrt2 * s0 * q;
      t2 = (kSqrt2 * c0 - 1.0) * q;
    }
    // Lift the curved square onto the ball shell of radius kPref * |z|.
    const double tt = t1 * t1 + t2 * t2;
    const double q = std::sqrt(std::max(0.0, 1.0 - kPi * tt / (24.0 * s[2] * s[2])));
    out = {t1 * q, t2 * q, kPref * s[2] - kSqrtPi * tt / kSqrt24 / s[2]};
  }
  return from_pyramid_frame(out, p);
}

CubochoricPoint homochoric_to_cubochoric(const Vec3& h) {
  const double rs = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
  if (!(rs <= kBallRadius + kDomainTol)) throw std::out_of_range("homochoric point outside the ball");
  if (rs == 0.0) return {};

  const int p = pyramid(h);
  const Vec3 s = to_pyramid_frame(h, p);
  const double z = std::copysign(rs / kPref, s[2]);

  double x = 0.0, y = 0.0;
  if (s[0] != 0.0 || s[1] != 0.0) {
    const double f = std::sqrt(2.0 * rs / (rs + std::abs(s[2])));
    const double t1 = s[0] * f;
    const double t2 = s[1] * f;
    // Invert the curved-square map: the ratio of the two components fixes the
    // angle parameter, the magnitude then fixes the radial coordinate.
    const bool first = std::abs(t2) <= std::abs(t1);
    const double major = first ? t1 : t2;
    const double ratio = first ? t2 / t1 : t1 / t2;
    const double theta = std::atan(ratio) - std::asin(ratio / std::sqrt(2.0 * (1.0 + ratio * ratio)));
    const double c0 = std::cos(theta);
    const double r_major = major * std::sqrt(kSqrt2 - c0) / ((kSqrt2 * c0 - 1.0) * kPrek);
    const double r_minor = r_major * theta / kPi12;
    x = first ? r_major : r_minor;
    y = first ? r_minor : r_major;
  }
  const Vec3 c = from_pyramid_frame({x / kScale, y / kScale, z / kScale}, p);
  return {c[0], c[1], c[2]};
}

AxisAngle homochoric_to_axis_angle(const Vec3& h) {
  const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
  if (!(hn <= kBallRadius + kDomainTol)) throw std::out_of_range("homochoric vector outside the ball");
  AxisAngle aa;
  if (hn == 0.0) return aa;
  aa.axis = {h[0] / hn, h[1] / hn, h[2] / hn};
  if (hn >= kBallRadius) {
    aa.omega = kPi;
    return aa;
  }

  // Newton on r(w) - |h| (close to linear, r ~ w/2), bracketed by bisection.
  double lo = 0.0, hi = kPi;
  double w = std::min(2.0 * hn, kPi);
  for (int it = 0; it < 200; ++it) {
    const double r = homochoric_radius(w);
    const double res = r - hn;
    if (std::abs(res) < 1e-12) break;
    if (res > 0.0) hi = w; else lo = w;
    // dr/dw = (3/4)(1 - cos w) / (3 r^2)
    const double deriv = r > 0.0 ? 0.25 * (1.0 - std::cos(w)) / (r * r) : 0.5;
    double next = w - res / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    w = next;
  }
  aa.omega = w;
  return aa;
}

Vec3 axis_angle_to_homochoric(const AxisAngle& aa) {
  const double r = homochoric_radius(aa.omega);
  const double n = std::sqrt(aa.axis[0] * aa.axis[0] + aa.axis[1] * aa.axis[1] + aa.axis[2] * aa.axis[2]);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  return {r * aa.axis[0] / n, r * aa.axis[1] / n, r * aa.axis[2] / n};
}

Quaternion cubochoric_to_quaternion(const CubochoricPoint& c) {
  const AxisAngle aa = homochoric_to_axis_angle(cubochoric_to_homochoric(c));
  const double s = std::sin(0.5 * aa.omega);
  return Quaternion{std::cos(0.5 * aa.omega), s * aa.axis[0], s * aa.axis[1], s * aa.axis[2]}.canonical();
}

CubochoricPoint quaternion_to_cubochoric(const Quaternion& q) {
  Vec3 h = axis_angle_to_homochoric(quaternion_to_axis_angle(q));
  const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
  if (hn > kBallRadius) {
    for (double& e : h) e *= kBallRadius / hn;
  }
  return homochoric_to_cubochoric(h);
}

}  // namespace ebsdict
