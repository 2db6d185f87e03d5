#include "ebsdict/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ebsdict/cubochoric.hpp"
#include "ebsdict/errors.hpp"
#include "ebsdict/parallel.hpp"

namespace ebsdict {
namespace {

struct Seed {
  double x, y;
};

int nearest_seed(const std::vector<Seed>& seeds, double x, double y) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const double dx = seeds[i].x - x, dy = seeds[i].y - y;
    const double d = dx * dx + dy * dy;
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Quaternion random_fz_orientation(std::mt19937_64& rng, const SymmetryGroup& g) {
  std::uniform_real_distribution<double> u(-0.5 * kCubeEdge, 0.5 * kCubeEdge);
  const CubochoricPoint c{u(rng), u(rng), u(rng)};
  return to_fundamental_zone(cubochoric_to_quaternion(c), g);
}

// Marks `target` pixels with `cls` as compact patches grown around random centres.
void place_patches(std::vector<PixelClass>& label, int w, int h, std::size_t target, int patch, PixelClass cls,
                   std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
  const double radius = std::sqrt(std::max(1, patch) / kPi) + 1.0;
  const int r = static_cast<int>(std::ceil(radius));
  std::size_t placed = 0;
  int attempts = 0;
  while (placed < target && attempts < 100000) {
    ++attempts;
    const int cx = px(rng), cy = py(rng);
    if (is_anomaly(label[static_cast<std::size_t>(cy) * w + cx])) continue;
    std::vector<std::pair<double, std::size_t>> disc;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!is_anomaly(label[i])) disc.push_back({std::hypot(dx, dy), i});
      }
    std::stable_sort(disc.begin(), disc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t take = std::min({disc.size(), static_cast<std::size_t>(std::max(1, patch)), target - placed});
    for (std::size_t j = 0; j < take; ++j) label[disc[j].second] = cls;
    placed += take;
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("synthetic sample needs positive width and height");
  if (n_grains < 1) throw ConfigError("n_grains must be >= 1");
  if (!(noise.strength >= 0.0)) throw ConfigError("noise strength must be >= 0");
  for (double f : {noisy_fraction, shifted_fraction})
    if (!(f >= 0.0 && f <= 0.2)) throw ConfigError("anomaly fractions must lie in [0, 0.2]");
  if (!(noisy_fraction + shifted_fraction < 0.5)) throw ConfigError("anomaly fractions must sum below 0.5");
  if (!(shift_magnitude >= 0.0)) throw ConfigError("shift magnitude must be >= 0");
  if (anomaly_patch_size < 1) throw ConfigError("anomaly patch size must be >= 1");
  if (!(beam_radius >= 0.0 && beam_radius < 2.0)) throw ConfigError("beam radius must lie in [0, 2) pixels");
}

SyntheticSample generate(const SyntheticSpec& spec, const BandModel& bands, const DetectorGeometry& det,
                         const SymmetryGroup& g, int workers) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::mt19937_64 rng(mix_seed(spec.seed, 0));

  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  std::vector<Seed> seeds(static_cast<std::size_t>(spec.n_grains));
  for (auto& s : seeds) s = {ux(rng), uy(rng)};
  std::vector<Quaternion> seed_q(seeds.size());
  for (auto& q : seed_q) q = random_fz_orientation(rng, g);

  // Pixel centres at (x + 0.5, y + 0.5); unused seeds are dropped so ids stay contiguous.
  std::vector<int> owner(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) owner[static_cast<std::size_t>(y) * w + x] = nearest_seed(seeds, x + 0.5, y + 0.5);
  std::vector<int> remap(seeds.size(), -1);
  std::vector<int> used;
  for (int o : owner)
    if (remap[o] < 0) {
      remap[o] = 0;
      used.push_back(o);
    }
  std::sort(used.begin(), used.end());
  for (std::size_t i = 0; i < used.size(); ++i) remap[used[i]] = static_cast<int>(i);

  SyntheticSample out;
  GroundTruth& t = out.truth;
  t.width = w;
  t.height = h;
  t.grain_id.resize(n);
  t.orientation.resize(n);
  t.label.assign(n, PixelClass::GrainInterior);
  for (int o : used) t.grain_orientation.push_back(seed_q[o]);
  for (std::size_t i = 0; i < n; ++i) {
    t.grain_id[i] = remap[owner[i]];
    t.orientation[i] = t.grain_orientation[t.grain_id[i]];
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int id = t.grain_id[static_cast<std::size_t>(y) * w + x];
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (t.grain_id[static_cast<std::size_t>(yy) * w + xx] != id) {
            edge = true;
            break;
          }
        }
      if (edge) t.label[static_cast<std::size_t>(y) * w + x] = PixelClass::GrainBoundary;
    }

  const auto count = [n](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(n))); };
  place_patches(t.label, w, h, count(spec.noisy_fraction), spec.anomaly_patch_size, PixelClass::NoisyBackground, rng);
  place_patches(t.label, w, h, count(spec.shifted_fraction), spec.anomaly_patch_size, PixelClass::ShiftedBackground,
                rng);

  const PatternSimulator sim(bands, det);
  const std::size_t len = det.pixel_count();
  std::vector<Pattern> grain_patterns;
  for (const auto& q : t.grain_orientation) grain_patterns.push_back(sim.simulate(q));

  // Supersampling offsets inside the beam disc.
  std::vector<Seed> offsets;
  if (spec.beam_radius > 0.0) {
    constexpr int kSub = 8;
    for (int j = 0; j < kSub; ++j)
      for (int i = 0; i < kSub; ++i) {
        const double ox = ((i + 0.5) / kSub * 2.0 - 1.0) * spec.beam_radius;
        const double oy = ((j + 0.5) / kSub * 2.0 - 1.0) * spec.beam_radius;
        if (ox * ox + oy * oy <= spec.beam_radius * spec.beam_radius) offsets.push_back({ox, oy});
      }
  }

  std::vector<float> data(n * len);
  const std::uint64_t noise_stream = mix_seed(spec.seed, 1);
  const std::uint64_t anomaly_stream = mix_seed(spec.seed, 2);
  parallel_chunks(n, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> weight(seeds.size());
    for (std::size_t i = begin; i < end; ++i) {
      const double cx = static_cast<double>(i % w) + 0.5, cy = static_cast<double>(i / w) + 0.5;
      Pattern p(det.rows, det.cols, 0.0);
      std::fill(weight.begin(), weight.end(), 0.0);
      if (offsets.empty()) {
        weight[owner[i]] = 1.0;
      } else {
        for (const auto& o : offsets) weight[nearest_seed(seeds, cx + o.x, cy + o.y)] += 1.0;
      }
      // Seeds that own no pixel centre have no pattern; their sliver goes to the pixel's grain.
      for (std::size_t s = 0; s < seeds.size(); ++s)
        if (remap[s] < 0 && weight[s] > 0.0) {
          weight[owner[i]] += weight[s];
          weight[s] = 0.0;
        }
      double total = 0.0;
      for (double v : weight) total += v;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        if (weight[s] == 0.0) continue;
        const auto& gp = grain_patterns[remap[s]].data;
        const double f = weight[s] / total;
        for (std::size_t k = 0; k < len; ++k) p.data[k] += f * gp[k];
      }
      if (spec.noise.strength > 0.0) {
        NoiseModel nm = spec.noise;
        nm.strength = spec.noise.strength * p.mean();
        nm.seed = mix_seed(noise_stream ^ spec.noise.seed, i);
        p = add_noise(p, nm);
      }
      if (t.label[i] == PixelClass::NoisyBackground)
        p = perturb_background(p, BackgroundPerturbation::ReplaceNoise, 0.0, mix_seed(anomaly_stream, i));
      else if (t.label[i] == PixelClass::ShiftedBackground)
        p = perturb_background(p, BackgroundPerturbation::Shift, spec.shift_magnitude, mix_seed(anomaly_stream, i));
      std::transform(p.data.begin(), p.data.end(), data.begin() + static_cast<std::ptrdiff_t>(i * len),
                     [](double v) { return static_cast<float>(v); });
    }
  });
  out.sample = SampleMap{w, h, PatternSet(det.rows, det.cols, std::move(data))};
  return out;
}

}  // namespace ebsdict
