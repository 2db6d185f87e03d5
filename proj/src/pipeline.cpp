#include "ebsdict/pipeline.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ebsdict/config.hpp"
#include "ebsdict/errors.hpp"

namespace ebsdict {
namespace {

Vec3 parse_vec3(const std::string& text, const std::string& key) {
  std::istringstream ss(text);
  Vec3 v{};
  if (!(ss >> v[0] >> v[1] >> v[2])) throw ConfigError(key + ": expected three numbers, got '" + text + "'");
  std::string rest;
  if (ss >> rest) throw ConfigError(key + ": trailing text '" + rest + "'");
  if (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0) throw ConfigError(key + ": direction must be nonzero");
  return v;
}

int parse_count(const std::string& text, const std::string& key) {
  const long long v = parse_int(text, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) throw ConfigError(key + " out of range");
  return static_cast<int>(v);
}

}  // namespace

void RunConfig::validate() const {
  if (N < 1) throw ConfigError("N must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k_ml < 1) throw ConfigError("k_ml must be >= 1");
  if (k_ml > k) throw ConfigError("k_ml cannot exceed k");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(dtheta_cap > 0.0)) throw ConfigError("dtheta_cap must be positive");
  synth.validate();
  detector.validate();
  bands.validate();
}

void apply_run_setting(RunConfig& cfg, const std::string& key, const std::string& value, bool& reflectors_reset) {
  if (key == "N") cfg.N = parse_count(value, key);
  else if (key == "k") cfg.k = parse_count(value, key);
  else if (key == "k_ml") cfg.k_ml = parse_count(value, key);
  else if (key == "seed") cfg.seed = cfg.synth.seed = parse_u64(value, key);
  else if (key == "workers") cfg.workers = parse_count(value, key);
  else if (key == "t_anomaly") cfg.overrides.t_anomaly = parse_double(value, key);
  else if (key == "t_subclass") cfg.overrides.t_subclass = parse_double(value, key);
  else if (key == "t_boundary") cfg.overrides.t_boundary = parse_double(value, key);
  else if (key == "dtheta_cap") cfg.dtheta_cap = parse_double(value, key);
  else if (key == "ipf_reference") cfg.ipf_reference = parse_vec3(value, key);
  else if (key == "width") cfg.synth.width = parse_count(value, key);
  else if (key == "height") cfg.synth.height = parse_count(value, key);
  else if (key == "grains") cfg.synth.n_grains = parse_count(value, key);
  else if (key == "noise") cfg.synth.noise.strength = parse_double(value, key);
  else if (key == "noisy_fraction") cfg.synth.noisy_fraction = parse_double(value, key);
  else if (key == "shifted_fraction") cfg.synth.shifted_fraction = parse_double(value, key);
  else if (key == "shift_magnitude") cfg.synth.shift_magnitude = parse_double(value, key);
  else if (key == "anomaly_patch") cfg.synth.anomaly_patch_size = parse_count(value, key);
  else if (key == "beam_radius") cfg.synth.beam_radius = parse_double(value, key);
  else apply_model_setting(key, value, cfg.detector, cfg.bands, reflectors_reset);
}

void load_run_config(const std::string& path, RunConfig& cfg) {
  bool reset = false;
  for (const auto& [key, value] : read_key_value_file(path)) apply_run_setting(cfg, key, value, reset);
}

double BinaryScores::precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp); }
double BinaryScores::recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn); }
double BinaryScores::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

namespace {

template <typename Pred>
BinaryScores score(const std::vector<PixelClass>& truth, const std::vector<PixelClass>& predicted, Pred is_positive) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("label maps differ in size");
  BinaryScores s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = is_positive(truth[i]), p = is_positive(predicted[i]);
    s.tp += t && p;
    s.fp += !t && p;
    s.fn += t && !p;
  }
  return s;
}

}  // namespace

BinaryScores score_anomalies(const std::vector<PixelClass>& truth, const std::vector<PixelClass>& predicted) {
  return score(truth, predicted, is_anomaly);
}

BinaryScores score_class(const std::vector<PixelClass>& truth, const std::vector<PixelClass>& predicted, PixelClass c) {
  return score(truth, predicted, [c](PixelClass x) { return x == c; });
}

std::vector<double> misorientation_to_truth(const std::vector<Quaternion>& estimates,
                                            const std::vector<Quaternion>& truth, const SymmetryGroup& g) {
  if (estimates.size() != truth.size()) throw std::invalid_argument("orientation lists differ in size");
  std::vector<double> out(estimates.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = misorientation_angle(estimates[i], truth[i], g);
  return out;
}

double mean_delta_theta(const std::vector<OrientationEstimate>& est, const std::vector<PixelClass>& labels,
                        PixelClass c) {
  if (est.size() != labels.size()) throw std::invalid_argument("estimates and labels differ in size");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < est.size(); ++i)
    if (labels[i] == c && std::isfinite(est[i].delta_theta_deg)) {
      sum += est[i].delta_theta_deg;
      ++n;
    }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace ebsdict
