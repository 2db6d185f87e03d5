#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ebsdict/dictionary.hpp"
#include "ebsdict/matching.hpp"
#include "ebsdict/orientation.hpp"
#include "ebsdict/symmetry.hpp"

namespace ebsdict {

inline constexpr double kKappaCap = 1e7;

/// log I_1(kappa) for kappa > 0, accurate up to the cap.
[[nodiscard]] double log_bessel_i1(double kappa);
/// A_4(kappa) = I_2(kappa) / I_1(kappa), the mean resultant length on S^3.
[[nodiscard]] double bessel_ratio_a4(double kappa);
/// log of the S^3 normalizer kappa / ((2 pi)^2 I_1(kappa)).
[[nodiscard]] double vmf_log_normalizer(double kappa);

/// Unit quaternions are treated as points on S^3. Throws std::invalid_argument for kappa <= 0.
[[nodiscard]] double vmf_log_density(const Quaternion& x, const Quaternion& mu, double kappa);

/// Equal-weight mixture of VMF densities centred on mu * op over every
/// operator of the group (both signs of each rotation).
struct VmfmModel {
  Quaternion mu;
  double kappa = 1.0;
  const SymmetryGroup* group = nullptr;
};

[[nodiscard]] double vmfm_log_density(const Quaternion& x, const VmfmModel& m);

/// Solves A_4(kappa) = rbar. Throws std::invalid_argument unless 0 < rbar < 1.
[[nodiscard]] double solve_kappa(double rbar);

struct VmfmFit {
  Quaternion mu;  // in the fundamental zone when the group has one
  double kappa = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  std::vector<double> log_likelihood_trace;  // one entry per E-step
};

struct EmOptions {
  std::optional<Quaternion> init;  // defaults to the first sample
  double init_kappa = 100.0;
  int max_iterations = 200;
  double tolerance = 1e-10;  // relative log-likelihood change
};

/// Joint ML estimate of (mu, kappa) by EM. Throws std::invalid_argument for
/// fewer than 2 samples, DegenerateError when the resultant vanishes.
[[nodiscard]] VmfmFit em_fit_vmfm(std::span<const Quaternion> samples, const SymmetryGroup& g,
                                  const EmOptions& opt = {});

/// arccos(1 - 1/kappa) in degrees; empty for kappa < 1/2 where it is undefined.
[[nodiscard]] std::optional<double> angular_uncertainty(double kappa);

enum class EstimateStatus : std::uint8_t {
  Ok = 0,
  Unresolved = 1,   // kappa below 1/2, no angular width
  SingleMatch = 2,  // k_ml = 1, concentration undefined
  Degenerate = 3,   // fit failed; mu is the best match
};

[[nodiscard]] const char* status_name(EstimateStatus s);

/// Per-pixel orientation estimate. `kappa` and `delta_theta_deg` are NaN
/// when the status says they are undefined.
struct OrientationEstimate {
  Quaternion mu;
  double kappa = 0.0;
  double delta_theta_deg = 0.0;
  double log_likelihood = 0.0;
  int k_used = 0;
  EstimateStatus status = EstimateStatus::Ok;
};

/// Fits the first k_ml orientations (best match first).
[[nodiscard]] OrientationEstimate index_pixel(std::span<const Quaternion> orientations, const SymmetryGroup& g,
                                              int k_ml);

/// Indexes every pixel of a match table against the dictionary's orientations.
/// Pixels whose fit degenerates are flagged rather than aborting the map.
[[nodiscard]] std::vector<OrientationEstimate> index_sample(const KnnTable& knn, const OrientationGrid& grid,
                                                            int k_ml, int workers = 1);

}  // namespace ebsdict
