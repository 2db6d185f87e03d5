#include "ebsdict/symmetry.hpp"

#include <algorithm>
#include <stdexcept>

#include "ebsdict/errors.hpp"

namespace ebsdict {
namespace {

std::vector<Quaternion> octahedral_rotations() {
  const double h = std::sqrt(0.5);
  std::vector<Quaternion> r{
      {1, 0, 0, 0},
      // 180 deg about <100>
      {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1},
      // +-90 deg about <100>
      {h, h, 0, 0}, {h, -h, 0, 0}, {h, 0, h, 0}, {h, 0, -h, 0}, {h, 0, 0, h}, {h, 0, 0, -h},
      // 180 deg about <110>
      {0, h, h, 0}, {0, h, -h, 0}, {0, h, 0, h}, {0, h, 0, -h}, {0, 0, h, h}, {0, 0, h, -h}};
  // +-120 deg about <111>
  for (double sx : {0.5, -0.5})
    for (double sy : {0.5, -0.5})
      for (double sz : {0.5, -0.5}) r.push_back({0.5, sx, sy, sz});
  return r;
}

const double kTanPi8 = std::tan(kPi / 8.0);
constexpr double kBoundaryTol = 1e-10;

}  // namespace

SymmetryGroup::SymmetryGroup(std::string name, std::vector<Quaternion> rotations)
    : name_(std::move(name)), rotations_(std::move(rotations)) {
  if (rotations_.empty()) throw std::invalid_argument("symmetry group needs at least the identity");
  operators_ = rotations_;
  for (const auto& q : rotations_) operators_.push_back(-q);
}

const SymmetryGroup& SymmetryGroup::cubic() {
  static const SymmetryGroup g("m-3m", octahedral_rotations());
  return g;
}

const SymmetryGroup& SymmetryGroup::trivial() {
  static const SymmetryGroup g("1", {Quaternion::identity()});
  return g;
}

const SymmetryGroup& SymmetryGroup::from_name(const std::string& name) {
  if (name == "m-3m" || name == "m3m") return cubic();
  if (name == "1") return trivial();
  throw ConfigError("unsupported symmetry group '" + name + "'");
}

bool in_fundamental_zone(const RodriguesVector& rv, const SymmetryGroup& g) {
  if (!g.has_fundamental_zone())
    throw std::invalid_argument("no fundamental zone implemented for group '" + g.name() + "'");
  if (rv.at_infinity) return false;
  const auto& r = rv.r;
  const double m = std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
  const double s = std::abs(r[0]) + std::abs(r[1]) + std::abs(r[2]);
  if (m > kTanPi8 + kBoundaryTol || s > 1.0 + kBoundaryTol) return false;
  if (m < kTanPi8 - kBoundaryTol && s < 1.0 - kBoundaryTol) return true;
  for (double c : r) {
    if (c > kBoundaryTol) return true;
    if (c < -kBoundaryTol) return false;
  }
  return true;
}

std::vector<Quaternion> symmetry_equivalents(const Quaternion& q, const SymmetryGroup& g) {
  std::vector<Quaternion> out;
  out.reserve(g.operators().size());
  for (const auto& op : g.operators()) out.push_back(q * op);
  return out;
}

double misorientation_angle(const Quaternion& a, const Quaternion& b, const SymmetryGroup& g) {
  const Quaternion d = a.normalized().conj() * b.normalized();
  Quaternion best = d;
  for (const auto& s : g.rotations()) {
    const Quaternion c = d * s;
    if (std::abs(c.w) > std::abs(best.w)) best = c;
  }
  // atan2 keeps full precision for nearly identical orientations, where acos does not.
  const double v = std::sqrt(best.x * best.x + best.y * best.y + best.z * best.z);
  return 2.0 * std::atan2(v, std::abs(best.w)) * kDeg;
}

Quaternion to_fundamental_zone(const Quaternion& qin, const SymmetryGroup& g) {
  const Quaternion q = qin.normalized();
  if (!g.has_fundamental_zone()) return q.canonical();
  // The largest |w| candidate is the FZ member except for boundary ties; resolve
  // those with the same rule in_fundamental_zone uses.
  Quaternion best = q.canonical();
  double best_w = -1.0;
  for (const auto& s : g.rotations()) {
    const Quaternion c = (q * s).canonical();
    if (c.w > best_w + 1e-12) {
      best = c;
      best_w = c.w;
    }
  }
  if (in_fundamental_zone(quaternion_to_rodrigues(best), g)) return best;
  for (const auto& s : g.rotations()) {
    const Quaternion c = (q * s).canonical();
    if (c.w >= best_w - 1e-9 && in_fundamental_zone(quaternion_to_rodrigues(c), g)) return c;
  }
  return best;
}

}  // namespace ebsdict
