#pragma once

#include <cstdint>
#include <vector>

#include "ebsdict/classify.hpp"
#include "ebsdict/forward_model.hpp"
#include "ebsdict/matching.hpp"
#include "ebsdict/symmetry.hpp"

namespace ebsdict {

struct SyntheticSpec {
  int width = 64;
  int height = 64;
  int n_grains = 10;
  /// Noise strength is relative to the mean intensity of each clean pattern.
  NoiseModel noise{NoiseKind::Gaussian, 0.01, 0};
  double noisy_fraction = 0.02;    // replace_noise anomalies
  double shifted_fraction = 0.02;  // shifted-background anomalies
  double shift_magnitude = 0.3;
  /// Anomalies are laid down as compact patches of about this many pixels; 1 scatters them.
  int anomaly_patch_size = 24;
  /// Radius in pixels of the disc each pattern integrates over; 0 gives point sampling.
  double beam_radius = 0.5;
  std::uint64_t seed = 1;

  /// Throws ConfigError for out-of-range fields.
  void validate() const;
};

struct GroundTruth {
  int width = 0;
  int height = 0;
  std::vector<int> grain_id;                // contiguous 0..n-1
  std::vector<Quaternion> grain_orientation;
  std::vector<Quaternion> orientation;      // per pixel, that of its grain
  std::vector<PixelClass> label;

  [[nodiscard]] int grain_count() const { return static_cast<int>(grain_orientation.size()); }
};

struct SyntheticSample {
  SampleMap sample;
  GroundTruth truth;
};

/// Voronoi grain map with one uniform fundamental-zone orientation per grain.
/// A pixel is a boundary pixel when any of its 8 neighbors lies in another
/// grain. Anomaly pixels keep their grain id but carry the anomaly label.
[[nodiscard]] SyntheticSample generate(const SyntheticSpec& spec, const BandModel& bands, const DetectorGeometry& det,
                                       const SymmetryGroup& g = SymmetryGroup::cubic(), int workers = 1);

}  // namespace ebsdict
