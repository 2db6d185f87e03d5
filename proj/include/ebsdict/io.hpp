#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ebsdict/classify.hpp"
#include "ebsdict/dictionary.hpp"
#include "ebsdict/matching.hpp"
#include "ebsdict/synth.hpp"
#include "ebsdict/vmf.hpp"

namespace ebsdict {

// Binary containers. All numbers little-endian; every loader validates sizes
// and throws IoError on truncated or inconsistent files.

/// "EBSP": u32 version, height, width, pattern rows, pattern cols, then f32 patterns pixel-major.
void save_sample(const std::string& path, const SampleMap& sample);
[[nodiscard]] SampleMap load_sample(const std::string& path);

struct DictionaryFile {
  Dictionary dictionary;
  std::optional<std::vector<double>> principal;  // present for compensated dictionaries
};

/// "EBSD": u32 version, u64 d, u32 rows, cols, N, u32 group-name length and bytes,
/// d quaternions as 4 x f64, d normalized patterns as f32, optional principal component as f32.
void save_dictionary(const std::string& path, const Dictionary& dict, const std::vector<double>* principal = nullptr);
[[nodiscard]] DictionaryFile load_dictionary(const std::string& path);

/// "EKNN": u32 version, height, width, k, then per pixel k x (u32 index, f64 rho).
void save_knn(const std::string& path, const KnnTable& knn, int width, int height);
struct KnnFile {
  int width = 0;
  int height = 0;
  KnnTable knn;
};
[[nodiscard]] KnnFile load_knn(const std::string& path);

/// "ESIM": u32 version, height, width, k, then f64 rho-bar, u32 raw overlap and u8 neighbor count per pixel.
void save_similarity(const std::string& path, const SimilarityMaps& maps);
[[nodiscard]] SimilarityMaps load_similarity(const std::string& path);

// CSV exports.

/// Columns x,y,label with label names as in class_name.
void write_class_csv(const std::string& path, const ClassMap& map);
[[nodiscard]] ClassMap read_class_csv(const std::string& path);

/// Columns x,y,grain,label,phi1,Phi,phi2,q0,q1,q2,q3 (angles in degrees).
void write_truth_csv(const std::string& path, const GroundTruth& truth);
[[nodiscard]] GroundTruth read_truth_csv(const std::string& path);

/// Columns x,y,phi1,Phi,phi2,q0,q1,q2,q3,kappa,delta_theta_deg,label,status.
/// `labels` may be null, in which case the label column is empty.
void write_orientation_csv(const std::string& path, int width, int height,
                           const std::vector<OrientationEstimate>& estimates, const ClassMap* labels = nullptr);
struct OrientationRow {
  int x = 0;
  int y = 0;
  Quaternion q;
  double kappa = 0.0;
  double delta_theta_deg = 0.0;
  std::string label;
  std::string status;
};
[[nodiscard]] std::vector<OrientationRow> read_orientation_csv(const std::string& path);

/// Threshold derivation summary as JSON.
void write_threshold_report(const std::string& path, const ThresholdReport& report);

// Images (8-bit RGB PNG).

using Rgb = std::array<std::uint8_t, 3>;

void write_png(const std::string& path, int width, int height, const std::vector<Rgb>& pixels);
/// Reads an 8-bit RGB PNG written by write_png.
[[nodiscard]] std::vector<Rgb> read_png(const std::string& path, int& width, int& height);

/// White interior, black boundary, red noisy background, blue shifted background.
[[nodiscard]] Rgb class_color(PixelClass c);

/// Inverse-pole-figure color of the sample direction `ref` seen in the crystal
/// frame, reduced to the 001-101-111 triangle: red at 001, green at 101, blue at 111.
/// Channels are stereographic barycentric weights and sum to one.
[[nodiscard]] std::array<double, 3> ipf_color(const Quaternion& q, const Vec3& ref = {0.0, 0.0, 1.0});

/// Gray level proportional to delta-theta, saturated at `cap` degrees; undefined widths draw white.
[[nodiscard]] Rgb uncertainty_color(double delta_theta_deg, double cap);

}  // namespace ebsdict
