#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ebsdict/forward_model.hpp"
#include "ebsdict/orientation.hpp"
#include "ebsdict/pattern_set.hpp"
#include "ebsdict/symmetry.hpp"

namespace ebsdict {

/// Fundamental-zone orientations of the (2N+1)^3 cubochoric grid, in grid
/// enumeration order.
struct OrientationGrid {
  int N = 0;
  const SymmetryGroup* group = &SymmetryGroup::cubic();
  std::vector<Quaternion> orientations;

  [[nodiscard]] std::size_t size() const { return orientations.size(); }
};

[[nodiscard]] OrientationGrid sample_fz_orientations(int N, const SymmetryGroup& g, int workers = 1);
/// Same enumeration as sample_fz_orientations without storing the orientations.
[[nodiscard]] std::size_t count_fz_orientations(int N, const SymmetryGroup& g, int workers = 1);

struct SpacingStats {
  double mean_deg = 0.0;
  double stddev_deg = 0.0;
  double max_deg = 0.0;
  [[nodiscard]] double coefficient_of_variation() const { return mean_deg > 0.0 ? stddev_deg / mean_deg : 0.0; }
};

/// Nearest-neighbor misorientation of every grid member (brute force, O(d^2 M)).
[[nodiscard]] std::vector<double> nearest_neighbor_angles(const OrientationGrid& grid, int workers = 1);
[[nodiscard]] SpacingStats grid_spacing(const OrientationGrid& grid, int workers = 1);

/// Unit-norm simulated patterns, one per grid orientation.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(OrientationGrid grid, PatternSet patterns);

  [[nodiscard]] const OrientationGrid& grid() const { return grid_; }
  [[nodiscard]] const PatternSet& patterns() const { return patterns_; }
  [[nodiscard]] std::size_t size() const { return patterns_.size(); }
  [[nodiscard]] const Quaternion& orientation(std::size_t i) const { return grid_.orientations[i]; }
  /// (1/d) sum_j phi_j / |phi_j|; mean_dictionary_similarity is one inner product with it.
  [[nodiscard]] std::span<const double> mean_direction() const { return mean_direction_; }

 private:
  OrientationGrid grid_;
  PatternSet patterns_;
  std::vector<double> mean_direction_;
};

[[nodiscard]] Dictionary build_dictionary(const OrientationGrid& grid, const BandModel& bands,
                                          const DetectorGeometry& det, int workers = 1);

/// Dominant right singular vector by power iteration on A^T A, sign fixed so
/// the mean entry is >= 0. Throws DegenerateError for an all-zero matrix.
[[nodiscard]] std::vector<double> principal_component(const PatternSet& patterns);

/// Rows with the principal component projected out and renormalized.
struct CompensatedDictionary {
  std::vector<double> principal;
  PatternSet patterns;

  [[nodiscard]] std::size_t size() const { return patterns.size(); }
};

[[nodiscard]] CompensatedDictionary compensate(const Dictionary& dict);
/// Projects `principal` out of every row. Throws DegenerateError naming the
/// first row that vanishes.
[[nodiscard]] CompensatedDictionary compensate(const PatternSet& patterns, std::vector<double> principal);

/// Unit query with `principal` projected out, in float for the matching kernel.
/// Throws DegenerateError if nothing is left after projection.
[[nodiscard]] std::vector<float> compensate_query(std::span<const float> query, std::span<const double> principal);

}  // namespace ebsdict
