// Reference implementations used only by tests. They avoid the library's
// quaternion code paths so agreement is meaningful.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ebsdict/cubochoric.hpp"
#include "ebsdict/orientation.hpp"
#include "ebsdict/pattern_set.hpp"

namespace oracle {

using M3 = std::array<std::array<double, 3>, 3>;

inline M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline M3 transpose(const M3& a) {
  M3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
  return t;
}

// Passive frame rotations about z and x.
inline M3 rz(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return M3{{{c, s, 0}, {-s, c, 0}, {0, 0, 1}}};
}
inline M3 rx(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return M3{{{1, 0, 0}, {0, c, s}, {0, -s, c}}};
}

/// Bunge ZXZ orientation matrix: sample coordinates to crystal coordinates.
inline M3 bunge(double phi1, double Phi, double phi2) { return mul(rz(phi2), mul(rx(Phi), rz(phi1))); }

/// The 24 proper rotations of the cube as signed permutation matrices.
inline std::vector<M3> cubic_matrices() {
  std::vector<M3> out;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& p : perms)
    for (int signs = 0; signs < 8; ++signs) {
      M3 m{};
      for (int r = 0; r < 3; ++r) m[r][p[r]] = (signs >> r) & 1 ? -1.0 : 1.0;
      const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      if (det > 0) out.push_back(m);
    }
  return out;
}

inline double rotation_angle_deg(const M3& m) {
  const double c = std::clamp((m[0][0] + m[1][1] + m[2][2] - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

/// Cubic misorientation from orientation matrices.
inline double misorientation_deg(const M3& ga, const M3& gb) {
  static const auto syms = cubic_matrices();
  double best = 180.0;
  const M3 d = mul(gb, transpose(ga));
  for (const auto& s : syms) best = std::min(best, rotation_angle_deg(mul(s, d)));
  return best;
}

/// Orientation matrix of a quaternion from the textbook formula.
inline M3 matrix_of(const ebsdict::Quaternion& qin) {
  const auto q = qin.normalized();
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  // Active rotation matrix; the passive orientation matrix is its transpose.
  const M3 r{{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
              {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
              {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
  return transpose(r);
}

/// Haar-uniform rotation from a normalized 4-D Gaussian.
inline ebsdict::Quaternion haar(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return ebsdict::Quaternion{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

/// Uniform point on S^3 orthogonal to `mu`.
inline std::array<double, 4> tangent_direction(const std::array<double, 4>& mu, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::array<double, 4> v{n(rng), n(rng), n(rng), n(rng)};
  double d = 0;
  for (int i = 0; i < 4; ++i) d += v[i] * mu[i];
  double nn = 0;
  for (int i = 0; i < 4; ++i) {
    v[i] -= d * mu[i];
    nn += v[i] * v[i];
  }
  nn = std::sqrt(nn);
  for (auto& c : v) c /= nn;
  return v;
}

/// Wood's rejection sampler for the von Mises-Fisher distribution on S^3.
inline ebsdict::Quaternion sample_vmf(const ebsdict::Quaternion& mu_q, double kappa, std::mt19937_64& rng) {
  constexpr double p = 4.0;
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + (p - 1) * (p - 1))) / (p - 1);
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + (p - 1) * std::log(1.0 - x0 * x0);
  std::gamma_distribution<double> ga((p - 1) / 2, 1.0), gb((p - 1) / 2, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    const double za = ga(rng), zb = gb(rng);
    const double z = za / (za + zb);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    if (kappa * w + (p - 1) * std::log(1.0 - x0 * w) - c >= std::log(u(rng))) break;
  }
  const std::array<double, 4> mu{mu_q.w, mu_q.x, mu_q.y, mu_q.z};
  const auto v = tangent_direction(mu, rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  return {w * mu[0] + s * v[0], w * mu[1] + s * v[1], w * mu[2] + s * v[2], w * mu[3] + s * v[3]};
}

struct Ranked {
  std::uint32_t index;
  long double rho;
};

/// Full sort of every dictionary row by normalized inner product (long double), ties by index.
inline std::vector<Ranked> full_ranking(std::span<const float> query, const ebsdict::PatternSet& set) {
  long double qn = 0;
  for (float v : query) qn += static_cast<long double>(v) * v;
  qn = std::sqrt(qn);
  std::vector<Ranked> all(set.size());
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto row = set.row(r);
    long double dot = 0, rn = 0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      dot += static_cast<long double>(query[l]) * row[l];
      rn += static_cast<long double>(row[l]) * row[l];
    }
    all[r] = {static_cast<std::uint32_t>(r), dot / (qn * std::sqrt(rn))};
  }
  std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    return a.rho != b.rho ? a.rho > b.rho : a.index < b.index;
  });
  return all;
}

/// One jittered point per cell of an n^3 partition of the cubochoric cube,
/// mapped to a quaternion with w >= 0. The map is volume preserving, so the
/// points are a stratified uniform sample of the rotations.
template <class Fn>
void stratified_rotations(int n, std::mt19937_64& rng, Fn&& fn) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = ebsdict::kCubeEdge / n;
  const double lo = -ebsdict::kCubeEdge / 2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        fn(ebsdict::cubochoric_to_quaternion({lo + (i + u(rng)) * h, lo + (j + u(rng)) * h, lo + (k + u(rng)) * h}));
}

/// Integral of f over S^3 from a stratified sample of one hemisphere, each
/// point paired with its antipode.
template <class Fn>
double sphere_integral(Fn&& f, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  long double sum = 0;
  std::size_t count = 0;
  stratified_rotations(n, rng, [&](const ebsdict::Quaternion& q) {
    sum += 0.5L * (f(q) + f(-q));
    ++count;
  });
  return static_cast<double>(sum / count) * 2.0 * M_PI * M_PI;
}

}  // namespace oracle
