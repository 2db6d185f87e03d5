#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ebsdict/classify.hpp"
#include "ebsdict/forward_model.hpp"
#include "ebsdict/synth.hpp"
#include "ebsdict/vmf.hpp"

namespace ebsdict {

/// Settings shared by the command-line stages.
struct RunConfig {
  int N = 15;
  int k = 40;     // classifier neighborhood
  int k_ml = 4;   // matches fed to the orientation fit
  std::uint64_t seed = 1;
  int workers = 1;
  ThresholdOverrides overrides;
  double dtheta_cap = 0.25;  // degrees, display saturation of the uncertainty map
  Vec3 ipf_reference{0.0, 0.0, 1.0};
  DetectorGeometry detector;
  BandModel bands = BandModel::default_fcc();
  SyntheticSpec synth;

  /// Throws ConfigError on invalid combinations.
  void validate() const;
};

/// Applies one `key = value` setting. Model keys (see load_model_config) are
/// forwarded to the detector and band model. Throws ConfigError for unknown keys.
void apply_run_setting(RunConfig& cfg, const std::string& key, const std::string& value, bool& reflectors_reset);
/// Applies every setting of a key-value file on top of `cfg`.
void load_run_config(const std::string& path, RunConfig& cfg);

struct BinaryScores {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  [[nodiscard]] double precision() const;
  [[nodiscard]] double recall() const;
  [[nodiscard]] double f1() const;
};

/// Both anomaly classes pooled against everything else.
[[nodiscard]] BinaryScores score_anomalies(const std::vector<PixelClass>& truth, const std::vector<PixelClass>& predicted);
[[nodiscard]] BinaryScores score_class(const std::vector<PixelClass>& truth, const std::vector<PixelClass>& predicted,
                                       PixelClass c);

/// Misorientation (degrees) between each estimate and its true orientation.
[[nodiscard]] std::vector<double> misorientation_to_truth(const std::vector<Quaternion>& estimates,
                                                          const std::vector<Quaternion>& truth, const SymmetryGroup& g);

/// Mean of the defined delta-theta values over pixels whose label is `c`; NaN if none.
[[nodiscard]] double mean_delta_theta(const std::vector<OrientationEstimate>& est, const std::vector<PixelClass>& labels,
                                      PixelClass c);

}  // namespace ebsdict
