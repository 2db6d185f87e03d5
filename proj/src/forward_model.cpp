#include "ebsdict/forward_model.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ebsdict/config.hpp"
#include "ebsdict/errors.hpp"

namespace ebsdict {
namespace {

double band_profile(BandProfile profile, double u) {
  switch (profile) {
    case BandProfile::CosineSquared: {
      if (u >= 1.0) return 0.0;
      const double c = std::cos(0.5 * kPi * u);
      return c * c;
    }
  }
  return 0.0;
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void DetectorGeometry::validate() const {
  if (rows < 8 || cols < 8) throw ConfigError("detector must be at least 8x8 pixels");
  if (!(detector_distance > 0.0)) throw ConfigError("detector distance must be positive");
  if (!(sample_tilt_deg > 0.0 && sample_tilt_deg < 90.0)) throw ConfigError("sample tilt must lie in (0, 90) degrees");
}

std::vector<Vec3> DetectorGeometry::pixel_directions() const {
  validate();
  // Detector frame: x right, y up, z from the sample towards the screen.
  // The sample frame is the detector frame rotated about x by (90 - tilt).
  const double a = (90.0 - sample_tilt_deg) / kDeg;
  const double ca = std::cos(a), sa = std::sin(a);
  const double aspect = static_cast<double>(rows) / cols;
  std::vector<Vec3> dirs;
  dirs.reserve(pixel_count());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = (c + 0.5) / cols - pcx;
      const double y = (pcy - (r + 0.5) / rows) * aspect;
      const Vec3 d = normalized({x, y, detector_distance});
      dirs.push_back({d[0], ca * d[1] - sa * d[2], sa * d[1] + ca * d[2]});
    }
  }
  return dirs;
}

BandModel BandModel::default_fcc() {
  BandModel m;
  m.background_level = 1.0;
  const auto& g = SymmetryGroup::cubic();
  // Half-widths scale with |hkl|, {111} at 1.5 deg.
  const double base = 1.5 / kDeg / std::sqrt(3.0);
  m.add_family({1, 1, 1}, base * std::sqrt(3.0), 1.0, g);
  m.add_family({2, 0, 0}, base * 2.0, 0.8, g);
  m.add_family({2, 2, 0}, base * std::sqrt(8.0), 0.6, g);
  m.add_family({3, 1, 1}, base * std::sqrt(11.0), 0.4, g);
  return m;
}

void BandModel::add_family(const Vec3& hkl, double half_width, double intensity, const SymmetryGroup& g) {
  const Vec3 n0 = normalized(hkl);
  std::vector<Vec3> planes;
  for (const auto& s : g.rotations()) {
    const Vec3 n = crystal_to_sample(s, n0);
    const bool seen = std::any_of(planes.begin(), planes.end(), [&](const Vec3& p) {
      return std::abs(std::abs(p[0] * n[0] + p[1] * n[1] + p[2] * n[2]) - 1.0) < 1e-9;
    });
    if (!seen) planes.push_back(n);
  }
  for (const auto& n : planes) reflectors.push_back({n, half_width, intensity});
}

void BandModel::validate() const {
  if (!(background_level >= 0.0)) throw ConfigError("background level must be non-negative");
  for (const auto& r : reflectors) {
    if (!(r.half_width > 0.0)) throw ConfigError("band half-width must be positive");
    if (!(r.intensity > 0.0 && r.intensity <= 1.0)) throw ConfigError("band intensity must lie in (0, 1]");
  }
}

double Pattern::mean() const {
  if (data.empty()) return 0.0;
  double s = 0.0;
  for (double v : data) s += v;
  return s / static_cast<double>(data.size());
}

PatternSimulator::PatternSimulator(BandModel bands, DetectorGeometry det)
    : bands_(std::move(bands)), det_(det), directions_(det_.pixel_directions()) {
  bands_.validate();
}

void PatternSimulator::simulate_into(const Quaternion& q, std::span<double> out) const {
  if (out.size() != directions_.size()) throw std::invalid_argument("output buffer has wrong size");
  const Quaternion qn = q.normalized();
  // Rotate the reflector normals into the sample frame once; |n . d| is frame independent.
  std::vector<Vec3> normals;
  normals.reserve(bands_.reflectors.size());
  for (const auto& r : bands_.reflectors) normals.push_back(crystal_to_sample(qn, r.normal));
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    const Vec3& d = directions_[i];
    double v = bands_.background_level;
    for (std::size_t j = 0; j < normals.size(); ++j) {
      const Reflector& r = bands_.reflectors[j];
      const double s = std::abs(normals[j][0] * d[0] + normals[j][1] * d[1] + normals[j][2] * d[2]);
      const double dist = std::asin(std::min(1.0, s));
      if (dist < r.half_width) v += r.intensity * band_profile(bands_.profile, dist / r.half_width);
    }
    out[i] = v;
  }
}

Pattern PatternSimulator::simulate(const Quaternion& q) const {
  Pattern p(det_.rows, det_.cols);
  simulate_into(q, p.data);
  return p;
}

Pattern simulate_pattern(const Quaternion& q, const BandModel& bands, const DetectorGeometry& det) {
  return PatternSimulator(bands, det).simulate(q);
}

Pattern add_noise(const Pattern& p, const NoiseModel& n) {
  if (!(n.strength >= 0.0)) throw std::invalid_argument("noise strength must be non-negative");
  if (n.strength == 0.0) return p;
  std::mt19937_64 rng(n.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Pattern out = p;
  for (double& v : out.data) {
    const double scale = n.kind == NoiseKind::Gaussian ? n.strength : n.strength * std::sqrt(std::max(v, 0.0));
    v = std::max(0.0, v + scale * normal(rng));
  }
  return out;
}

Pattern perturb_background(const Pattern& p, BackgroundPerturbation mode, double magnitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Pattern out = p;
  const double mean = p.mean();
  if (mode == BackgroundPerturbation::Shift) {
    if (magnitude == 0.0) return out;
    const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
    const double cx = std::cos(angle), cy = std::sin(angle);
    for (int r = 0; r < p.rows; ++r) {
      const double v = 2.0 * (r + 0.5) / p.rows - 1.0;
      for (int c = 0; c < p.cols; ++c) {
        const double u = 2.0 * (c + 0.5) / p.cols - 1.0;
        double& x = out.at(r, c);
        x = std::max(0.0, x + magnitude * mean * (cx * u + cy * v));
      }
    }
    return out;
  }
  if (mean <= 0.0) return out;
  std::exponential_distribution<double> expo(1.0 / mean);
  for (double& v : out.data) v = expo(rng);
  return out;
}

Pattern bin_pattern(const Pattern& p, int factor) {
  if (factor < 1) throw std::invalid_argument("binning factor must be >= 1");
  if (p.rows % factor != 0 || p.cols % factor != 0)
    throw std::invalid_argument("pattern dims " + std::to_string(p.rows) + "x" + std::to_string(p.cols) +
                                " not divisible by " + std::to_string(factor));
  if (factor == 1) return p;
  Pattern out(p.rows / factor, p.cols / factor);
  const double inv = 1.0 / (factor * factor);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      double s = 0.0;
      for (int i = 0; i < factor; ++i)
        for (int j = 0; j < factor; ++j) s += p.at(r * factor + i, c * factor + j);
      out.at(r, c) = s * inv;
    }
  return out;
}

void apply_model_setting(const std::string& key, const std::string& value, DetectorGeometry& det,
                         BandModel& bands, bool& reflectors_reset) {
  if (key == "rows") det.rows = static_cast<int>(parse_int(value, key));
  else if (key == "cols") det.cols = static_cast<int>(parse_int(value, key));
  else if (key == "pattern_center_x") det.pcx = parse_double(value, key);
  else if (key == "pattern_center_y") det.pcy = parse_double(value, key);
  else if (key == "detector_distance") det.detector_distance = parse_double(value, key);
  else if (key == "sample_tilt") det.sample_tilt_deg = parse_double(value, key);
  else if (key == "background_level") bands.background_level = parse_double(value, key);
  else if (key == "profile") {
    if (value != "cos2") throw ConfigError("unknown band profile '" + value + "'");
    bands.profile = BandProfile::CosineSquared;
  } else if (key == "reflector") {
    // reflector = h k l half_width_deg intensity
    std::istringstream in(value);
    double h, k, l, hw, inten;
    if (!(in >> h >> k >> l >> hw >> inten)) throw ConfigError("reflector expects 'h k l half_width_deg intensity'");
    if (!reflectors_reset) {
      bands.reflectors.clear();
      reflectors_reset = true;
    }
    bands.add_family({h, k, l}, hw / kDeg, inten, SymmetryGroup::cubic());
  } else {
    throw ConfigError("unknown model key '" + key + "'");
  }
}

void load_model_config(const std::string& path, DetectorGeometry& det, BandModel& bands) {
  bool reset = false;
  for (const auto& [key, value] : read_key_value_file(path)) apply_model_setting(key, value, det, bands, reset);
  det.validate();
  bands.validate();
}

}  // namespace ebsdict
