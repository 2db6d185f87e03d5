#pragma once

// Geometric Kikuchi-band pattern synthesizer plus the noise / background
// perturbation models used to build synthetic samples.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ebsdict/orientation.hpp"
#include "ebsdict/symmetry.hpp"

namespace ebsdict {

/// Detector size and projection geometry. The pattern center is given in
/// fractions of the detector width/height, the detector distance in units of
/// the detector width.
struct DetectorGeometry {
  int rows = 60;
  int cols = 80;
  double pcx = 0.5;
  double pcy = 0.5;
  double detector_distance = 0.6;
  double sample_tilt_deg = 70.0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(rows) * cols; }
  /// Unit sample-frame direction for every detector pixel, row-major.
  [[nodiscard]] std::vector<Vec3> pixel_directions() const;
};

struct Reflector {
  Vec3 normal;        // unit plane normal, crystal frame
  double half_width;  // radians
  double intensity;   // (0, 1]
};

enum class BandProfile { CosineSquared };

struct BandModel {
  std::vector<Reflector> reflectors;
  double background_level = 0.0;
  BandProfile profile = BandProfile::CosineSquared;

  /// {111}, {200}, {220}, {311} families for an fcc crystal.
  static BandModel default_fcc();
  /// Adds every plane of the family {hkl} under g (one entry per plane, not per normal sign).
  void add_family(const Vec3& hkl, double half_width, double intensity, const SymmetryGroup& g);
  void validate() const;
};

struct Pattern {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Pattern() = default;
  Pattern(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] double mean() const;
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  [[nodiscard]] double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class NoiseKind { Gaussian, PoissonLike };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double strength = 0.0;
  std::uint64_t seed = 0;
};

enum class BackgroundPerturbation { Shift, ReplaceNoise };

/// Precomputed detector directions, so repeated simulations skip the projection.
class PatternSimulator {
 public:
  PatternSimulator(BandModel bands, DetectorGeometry det);

  [[nodiscard]] Pattern simulate(const Quaternion& q) const;
  /// Writes an unnormalized pattern into `out` (size rows*cols).
  void simulate_into(const Quaternion& q, std::span<double> out) const;

  [[nodiscard]] const DetectorGeometry& detector() const { return det_; }
  [[nodiscard]] const BandModel& bands() const { return bands_; }

 private:
  BandModel bands_;
  DetectorGeometry det_;
  std::vector<Vec3> directions_;
};

[[nodiscard]] Pattern simulate_pattern(const Quaternion& q, const BandModel& bands, const DetectorGeometry& det);

/// Additive noise, clamped at zero. Reproducible for a given seed.
[[nodiscard]] Pattern add_noise(const Pattern& p, const NoiseModel& n);

/// Shift: adds a mean-preserving linear ramp of relative amplitude `magnitude`
/// (times the pattern mean) in a seeded direction, clamped at zero.
/// ReplaceNoise: exponential noise with the input's mean (magnitude unused).
[[nodiscard]] Pattern perturb_background(const Pattern& p, BackgroundPerturbation mode, double magnitude,
                                         std::uint64_t seed);

/// Block-mean downsampling. Throws std::invalid_argument if dims are not divisible.
[[nodiscard]] Pattern bin_pattern(const Pattern& p, int factor);

/// Loads detector and band settings from a key = value file. Keys not given
/// keep the defaults; any `reflector` line replaces the default families.
void load_model_config(const std::string& path, DetectorGeometry& det, BandModel& bands);
void apply_model_setting(const std::string& key, const std::string& value, DetectorGeometry& det,
                         BandModel& bands, bool& reflectors_reset);

/// Stateless 64-bit mixer used to derive per-pixel seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ebsdict
