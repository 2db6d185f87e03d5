#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebsdict/matching.hpp"

namespace ebsdict {

enum class PixelClass : std::uint8_t { GrainInterior = 0, GrainBoundary = 1, NoisyBackground = 2, ShiftedBackground = 3 };

[[nodiscard]] const char* class_name(PixelClass c);
[[nodiscard]] PixelClass class_from_name(const std::string& name);
[[nodiscard]] inline bool is_anomaly(PixelClass c) {
  return c == PixelClass::NoisyBackground || c == PixelClass::ShiftedBackground;
}

/// Two-component 1-D Gaussian mixture, components sorted so means[0] <= means[1].
struct GaussianMixture1D {
  std::array<double, 2> weights{0.5, 0.5};
  std::array<double, 2> means{0.0, 1.0};
  std::array<double, 2> variances{1.0, 1.0};
  double log_likelihood = 0.0;
  int iterations = 0;
  bool unimodal = false;  // mixture density has no dip between the means
  std::vector<double> log_likelihood_trace;

  [[nodiscard]] double density(double x) const;
};

/// EM fit, means initialized at the 25th/75th percentiles, equal weights,
/// both variances at the sample variance (floored at 1e-4 of it). Stops when the relative
/// log-likelihood change drops below 1e-10 or after 500 iterations.
/// Throws std::invalid_argument for fewer than 10 values, DegenerateError when all values are equal.
[[nodiscard]] GaussianMixture1D fit_mog_1d(std::span<const double> values);

struct CrossingThreshold {
  double value = 0.0;
  bool fallback = false;  // no crossing between the means; midpoint used
};

/// Root of w0 N(x; m0, v0) = w1 N(x; m1, v1) between the two means.
[[nodiscard]] CrossingThreshold mixture_crossing_threshold(const GaussianMixture1D& m);

struct Mode {
  double location = 0.0;
  double height = 0.0;  // kernel density at the mode
  double mass = 0.0;    // fraction of samples in the mode's basin
};

/// Local maxima of a Gaussian KDE sorted by location. The bandwidth is
/// Silverman's rule 0.9 min(sd, IQR/1.34) n^(-1/5), raised to `min_bandwidth`
/// if smaller. Maxima whose basin holds less than `min_mass` of the data are
/// absorbed by their neighbors, smallest first.
[[nodiscard]] std::vector<Mode> detect_modes(std::span<const double> values, double min_mass = 0.005,
                                             double min_bandwidth = 0.0);

struct DtThresholds {
  double t_anomaly = 0.0;   // rho-bar below -> anomalous
  double t_subclass = 0.0;  // rho-bar below -> noisy background, else shifted background
  double t_boundary = 0.0;  // per-neighbor overlap below -> grain boundary
};

struct ThresholdOverrides {
  std::optional<double> t_anomaly;
  std::optional<double> t_subclass;
  std::optional<double> t_boundary;
};

struct ThresholdReport {
  DtThresholds thresholds;
  std::vector<Mode> mean_ip_modes;
  std::optional<GaussianMixture1D> overlap_mixture;
  bool boundary_fallback = false;
  std::vector<std::string> notes;     // how each cut was obtained
  std::vector<std::string> failures;  // cuts that could not be derived
  [[nodiscard]] bool ok() const { return failures.empty(); }
};

/// Derives the decision-tree cuts from the rho-bar values and per-neighbor
/// overlaps (scale [0, k]). Manual overrides take precedence. When the data
/// shows no anomalous mode the anomaly branch is disabled (cuts at -inf) and
/// when the overlaps are unimodal every normal pixel is interior; both are
/// recorded in `notes`. Missing cuts are listed in `failures`.
[[nodiscard]] ThresholdReport derive_thresholds(std::span<const double> mean_ip, std::span<const double> overlap,
                                                int k, const ThresholdOverrides& overrides = {});
[[nodiscard]] ThresholdReport derive_thresholds(const SimilarityMaps& maps, const ThresholdOverrides& overrides = {});

struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<PixelClass> labels;

  [[nodiscard]] std::array<std::size_t, 4> counts() const;
};

[[nodiscard]] PixelClass classify_pixel(double mean_ip, double per_neighbor_overlap, const DtThresholds& th);
[[nodiscard]] ClassMap classify_pixels(const SimilarityMaps& maps, const DtThresholds& th);

}  // namespace ebsdict
