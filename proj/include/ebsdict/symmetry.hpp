#pragma once

#include <span>
#include <string>
#include <vector>

#include "ebsdict/orientation.hpp"

namespace ebsdict {

/// A crystallographic point group given by its proper rotations.
///
/// Only "m-3m" gets a fundamental zone; other groups can be built for the
/// statistics code (e.g. the trivial group "1") but are rejected by the
/// fundamental-zone routines.
class SymmetryGroup {
 public:
  SymmetryGroup(std::string name, std::vector<Quaternion> rotations);

  /// The octahedral group: 24 rotations, 48 signed quaternion operators.
  static const SymmetryGroup& cubic();
  /// Group containing only the identity.
  static const SymmetryGroup& trivial();
  /// Looks up a group by name; throws ConfigError for unknown names.
  static const SymmetryGroup& from_name(const std::string& name);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] std::span<const Quaternion> rotations() const { return rotations_; }
  /// Rotations followed by their negations (2M entries).
  [[nodiscard]] std::span<const Quaternion> operators() const { return operators_; }
  [[nodiscard]] std::size_t order() const { return rotations_.size(); }
  [[nodiscard]] bool has_fundamental_zone() const { return name_ == "m-3m"; }

 private:
  std::string name_;
  std::vector<Quaternion> rotations_;
  std::vector<Quaternion> operators_;
};

/// Truncated-cube membership for m-3m. Points within 1e-10 of a boundary plane
/// are accepted iff the first nonzero component of r is positive. Throws
/// std::invalid_argument for groups without a fundamental zone.
[[nodiscard]] bool in_fundamental_zone(const RodriguesVector& r, const SymmetryGroup& g);

/// q * op for every operator (2M quaternions, not canonicalized).
[[nodiscard]] std::vector<Quaternion> symmetry_equivalents(const Quaternion& q, const SymmetryGroup& g);

/// Minimum rotation angle in degrees between two orientations over all equivalents.
[[nodiscard]] double misorientation_angle(const Quaternion& a, const Quaternion& b, const SymmetryGroup& g);

/// Symmetry equivalent of q inside the fundamental zone, w >= 0.
[[nodiscard]] Quaternion to_fundamental_zone(const Quaternion& q, const SymmetryGroup& g);

}  // namespace ebsdict
