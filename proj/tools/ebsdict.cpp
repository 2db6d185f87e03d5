// Command-line front end: build-dict, synth, match, classify, index, report.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 I/O error, 4 numerical degeneracy.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "ebsdict/classify.hpp"
#include "ebsdict/dictionary.hpp"
#include "ebsdict/errors.hpp"
#include "ebsdict/io.hpp"
#include "ebsdict/matching.hpp"
#include "ebsdict/parallel.hpp"
#include "ebsdict/pipeline.hpp"
#include "ebsdict/synth.hpp"
#include "ebsdict/vmf.hpp"

using namespace ebsdict;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Common {
  std::string config;
  std::string model;
};

void add_common(CLI::App* sub, RunConfig& cfg, Common& common) {
  sub->add_option("--config", common.config, "key = value file; its settings override flags");
  sub->add_option("--model", common.model, "detector and band model file");
  sub->add_option("--workers", cfg.workers, "worker threads (default: EBSDICT_WORKERS or hardware)");
}

void finalize(RunConfig& cfg, const Common& common) {
  if (!common.model.empty()) load_model_config(common.model, cfg.detector, cfg.bands);
  if (!common.config.empty()) load_run_config(common.config, cfg);
  cfg.validate();
}

CompensatedDictionary compensated(const DictionaryFile& f) {
  if (f.principal) return compensate(f.dictionary.patterns(), *f.principal);
  return compensate(f.dictionary);
}

int run_build(RunConfig& cfg, const std::string& out, bool count_only) {
  const auto& g = SymmetryGroup::cubic();
  const auto t0 = Clock::now();
  if (count_only) {
    const auto d = count_fz_orientations(cfg.N, g, cfg.workers);
    std::printf("N=%d d=%zu candidates=%lld time=%.2fs\n", cfg.N, d,
                static_cast<long long>(2 * cfg.N + 1) * (2 * cfg.N + 1) * (2 * cfg.N + 1), seconds_since(t0));
    return 0;
  }
  if (out.empty()) throw ConfigError("build-dict needs --out unless --count-only is given");
  auto grid = sample_fz_orientations(cfg.N, g, cfg.workers);
  const auto dict = build_dictionary(grid, cfg.bands, cfg.detector, cfg.workers);
  const auto comp = compensate(dict);
  save_dictionary(out, dict, &comp.principal);
  std::printf("N=%d d=%zu L=%zu time=%.2fs -> %s\n", cfg.N, dict.size(), dict.patterns().length(), seconds_since(t0),
              out.c_str());
  return 0;
}

int run_synth(RunConfig& cfg, const std::string& out, const std::string& truth_path) {
  const auto t0 = Clock::now();
  const auto s = generate(cfg.synth, cfg.bands, cfg.detector, SymmetryGroup::cubic(), cfg.workers);
  save_sample(out, s.sample);
  if (!truth_path.empty()) write_truth_csv(truth_path, s.truth);
  std::printf("sample %dx%d, %d grains, patterns %dx%d, time=%.2fs -> %s\n", s.sample.width, s.sample.height,
              s.truth.grain_count(), s.sample.patterns.rows(), s.sample.patterns.cols(), seconds_since(t0), out.c_str());
  return 0;
}

int run_match(RunConfig& cfg, const std::string& sample_path, const std::string& dict_path, const std::string& prefix) {
  const auto sample = load_sample(sample_path);
  const auto dfile = load_dictionary(dict_path);
  const auto comp = compensated(dfile);
  const auto t0 = Clock::now();
  const auto res = match_sample(sample, dfile.dictionary, comp, cfg.k, cfg.workers);
  save_knn(prefix + ".eknn", res.knn, sample.width, sample.height);
  save_similarity(prefix + ".esim", res.maps);
  std::printf("matched %zu pixels against d=%zu, k=%d, time=%.2fs -> %s.eknn, %s.esim\n", sample.pixel_count(),
              dfile.dictionary.size(), cfg.k, seconds_since(t0), prefix.c_str(), prefix.c_str());
  return 0;
}

int run_classify(RunConfig& cfg, const std::string& maps_path, const std::string& prefix) {
  const auto maps = load_similarity(maps_path);
  const auto rep = derive_thresholds(maps, cfg.overrides);
  write_threshold_report(prefix + "_thresholds.json", rep);
  for (const auto& n : rep.notes) std::printf("note: %s\n", n.c_str());
  if (!rep.ok()) {
    for (const auto& f : rep.failures) std::fprintf(stderr, "threshold failure: %s\n", f.c_str());
    throw DegenerateError("thresholds could not be derived; supply overrides");
  }
  const auto& th = rep.thresholds;
  std::printf("t_anomaly=%.6g t_subclass=%.6g t_boundary=%.6g\n", th.t_anomaly, th.t_subclass, th.t_boundary);
  const auto cm = classify_pixels(maps, th);
  write_class_csv(prefix + "_classes.csv", cm);
  std::vector<Rgb> img(cm.labels.size());
  std::transform(cm.labels.begin(), cm.labels.end(), img.begin(), class_color);
  write_png(prefix + "_classes.png", cm.width, cm.height, img);
  const auto c = cm.counts();
  std::printf("interior=%zu boundary=%zu noisy=%zu shifted=%zu\n", c[0], c[1], c[2], c[3]);
  return 0;
}

int run_index(RunConfig& cfg, const std::string& knn_path, const std::string& dict_path, const std::string& classes,
              const std::string& prefix) {
  const auto kf = load_knn(knn_path);
  const auto dfile = load_dictionary(dict_path);
  std::optional<ClassMap> cm;
  if (!classes.empty()) {
    cm = read_class_csv(classes);
    if (cm->width != kf.width || cm->height != kf.height) throw ConfigError("class map and match table differ in size");
  }
  const auto t0 = Clock::now();
  const auto est = index_sample(kf.knn, dfile.dictionary.grid(), cfg.k_ml, cfg.workers);
  write_orientation_csv(prefix + "_orientations.csv", kf.width, kf.height, est, cm ? &*cm : nullptr);
  std::vector<Rgb> ipf(est.size()), unc(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto c = ipf_color(est[i].mu, cfg.ipf_reference);
    for (int j = 0; j < 3; ++j) ipf[i][j] = static_cast<std::uint8_t>(std::lround(255.0 * c[j]));
    unc[i] = uncertainty_color(est[i].delta_theta_deg, cfg.dtheta_cap);
  }
  write_png(prefix + "_ipf.png", kf.width, kf.height, ipf);
  write_png(prefix + "_dtheta.png", kf.width, kf.height, unc);
  std::size_t flagged = 0;
  for (const auto& e : est) flagged += e.status != EstimateStatus::Ok;
  std::printf("indexed %zu pixels with k_ml=%d, %zu flagged, time=%.2fs\n", est.size(), cfg.k_ml, flagged,
              seconds_since(t0));
  return 0;
}

int run_report(const std::string& truth_path, const std::string& classes, const std::string& orientations,
               double tolerance) {
  const auto truth = read_truth_csv(truth_path);
  if (!classes.empty()) {
    const auto cm = read_class_csv(classes);
    if (cm.width != truth.width || cm.height != truth.height) throw ConfigError("class map and truth differ in size");
    const auto a = score_anomalies(truth.label, cm.labels);
    const auto b = score_class(truth.label, cm.labels, PixelClass::GrainBoundary);
    std::printf("anomaly  precision=%.4f recall=%.4f f1=%.4f\n", a.precision(), a.recall(), a.f1());
    std::printf("boundary precision=%.4f recall=%.4f f1=%.4f\n", b.precision(), b.recall(), b.f1());
  }
  if (!orientations.empty()) {
    const auto rows = read_orientation_csv(orientations);
    if (rows.size() != truth.label.size()) throw ConfigError("orientation file and truth differ in size");
    std::vector<double> interior;
    std::array<double, 4> dsum{};
    std::array<std::size_t, 4> dn{};
    for (const auto& r : rows) {
      const std::size_t i = static_cast<std::size_t>(r.y) * truth.width + r.x;
      const auto lab = static_cast<std::size_t>(truth.label[i]);
      if (truth.label[i] == PixelClass::GrainInterior)
        interior.push_back(misorientation_angle(r.q, truth.orientation[i], SymmetryGroup::cubic()));
      if (std::isfinite(r.delta_theta_deg)) {
        dsum[lab] += r.delta_theta_deg;
        ++dn[lab];
      }
    }
    if (!interior.empty()) {
      std::sort(interior.begin(), interior.end());
      const auto pct = [&](double p) { return interior[static_cast<std::size_t>(p * (interior.size() - 1))]; };
      std::printf("interior misorientation deg: median=%.3f p95=%.3f max=%.3f\n", pct(0.5), pct(0.95), interior.back());
      if (tolerance > 0.0) {
        const auto within = std::upper_bound(interior.begin(), interior.end(), tolerance) - interior.begin();
        std::printf("interior within %.3f deg: %.4f\n", tolerance, static_cast<double>(within) / interior.size());
      }
    }
    for (std::size_t c = 0; c < 4; ++c)
      if (dn[c] > 0)
        std::printf("mean delta_theta %-18s %.4f deg (%zu px)\n", class_name(static_cast<PixelClass>(c)),
                    dsum[c] / dn[c], dn[c]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dictionary-based EBSD indexing and pixel classification"};
  app.require_subcommand(1);
  RunConfig cfg;
  cfg.workers = default_workers();
  Common common;

  std::string out, truth, sample, dict, prefix, maps, knn, classes, orientations;
  bool count_only = false;
  double tolerance = 0.0;
  std::optional<double> t_anomaly, t_subclass, t_boundary;

  auto* build = app.add_subcommand("build-dict", "sample the fundamental zone and simulate the dictionary");
  add_common(build, cfg, common);
  build->add_option("--N", cfg.N, "cubochoric grid half-size")->capture_default_str();
  build->add_option("--out", out, "dictionary file (.ebsd)");
  build->add_flag("--count-only", count_only, "only count fundamental-zone grid points");

  auto* syn = app.add_subcommand("synth", "generate a synthetic sample with ground truth");
  add_common(syn, cfg, common);
  syn->add_option("--out", out, "sample file (.ebsp)")->required();
  syn->add_option("--truth", truth, "ground-truth CSV");
  syn->add_option("--width", cfg.synth.width)->capture_default_str();
  syn->add_option("--height", cfg.synth.height)->capture_default_str();
  syn->add_option("--grains", cfg.synth.n_grains)->capture_default_str();
  syn->add_option("--noise", cfg.synth.noise.strength, "Gaussian noise relative to mean intensity")->capture_default_str();
  syn->add_option("--noisy-fraction", cfg.synth.noisy_fraction)->capture_default_str();
  syn->add_option("--shifted-fraction", cfg.synth.shifted_fraction)->capture_default_str();
  syn->add_option("--seed", cfg.synth.seed)->capture_default_str();

  auto* match = app.add_subcommand("match", "kNN table and similarity maps for a sample");
  add_common(match, cfg, common);
  match->add_option("--sample", sample)->required();
  match->add_option("--dict", dict)->required();
  match->add_option("--out-prefix", prefix)->required();
  match->add_option("--k", cfg.k, "neighbors per pixel")->capture_default_str();

  auto* cls = app.add_subcommand("classify", "derive thresholds and label pixels");
  add_common(cls, cfg, common);
  cls->add_option("--maps", maps, "similarity maps (.esim)")->required();
  cls->add_option("--out-prefix", prefix)->required();
  cls->add_option("--t-anomaly", t_anomaly);
  cls->add_option("--t-subclass", t_subclass);
  cls->add_option("--t-boundary", t_boundary, "per-neighbor overlap cut on [0, k]");

  auto* idx = app.add_subcommand("index", "maximum-likelihood orientation per pixel");
  add_common(idx, cfg, common);
  idx->add_option("--knn", knn)->required();
  idx->add_option("--dict", dict)->required();
  idx->add_option("--classes", classes, "class CSV to carry into the output");
  idx->add_option("--out-prefix", prefix)->required();
  idx->add_option("--k-ml", cfg.k_ml, "matches per fit")->capture_default_str();
  idx->add_option("--dtheta-cap", cfg.dtheta_cap, "uncertainty map saturation (deg)")->capture_default_str();

  auto* rep = app.add_subcommand("report", "score outputs against ground truth");
  rep->add_option("--truth", truth)->required();
  rep->add_option("--classes", classes);
  rep->add_option("--orientations", orientations);
  rep->add_option("--tolerance", tolerance, "misorientation tolerance in degrees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (t_anomaly) cfg.overrides.t_anomaly = t_anomaly;
    if (t_subclass) cfg.overrides.t_subclass = t_subclass;
    if (t_boundary) cfg.overrides.t_boundary = t_boundary;
    cfg.seed = cfg.synth.seed;
    if (*rep) return run_report(truth, classes, orientations, tolerance);
    finalize(cfg, common);
    if (*build) return run_build(cfg, out, count_only);
    if (*syn) return run_synth(cfg, out, truth);
    if (*match) return run_match(cfg, sample, dict, prefix);
    if (*cls) return run_classify(cfg, maps, prefix);
    if (*idx) return run_index(cfg, knn, dict, classes, prefix);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
