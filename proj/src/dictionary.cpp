#include "ebsdict/dictionary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ebsdict/cubochoric.hpp"
#include "ebsdict/errors.hpp"
#include "ebsdict/parallel.hpp"

namespace ebsdict {
namespace {

void check_grid_args(int N, const SymmetryGroup& g) {
  if (N < 1) throw std::invalid_argument("grid resolution N must be >= 1");
  if (!g.has_fundamental_zone()) throw std::invalid_argument("no fundamental zone for group '" + g.name() + "'");
}

// FZ members of the grid slab with first cubochoric index i.
template <class Sink>
void scan_slab(int N, int i, const SymmetryGroup& g, Sink&& sink) {
  const double step = kCubeEdge / (2.0 * N);
  for (int j = -N; j <= N; ++j)
    for (int k = -N; k <= N; ++k) {
      const Quaternion q = cubochoric_to_quaternion({i * step, j * step, k * step});
      if (in_fundamental_zone(quaternion_to_rodrigues(q), g)) sink(q);
    }
}

}  // namespace

OrientationGrid sample_fz_orientations(int N, const SymmetryGroup& g, int workers) {
  check_grid_args(N, g);
  const std::size_t slabs = static_cast<std::size_t>(2 * N + 1);
  std::vector<std::vector<Quaternion>> per_slab(slabs);
  parallel_for(slabs, workers, [&](std::size_t s) {
    scan_slab(N, static_cast<int>(s) - N, g, [&](const Quaternion& q) { per_slab[s].push_back(q); });
  });
  OrientationGrid grid;
  grid.N = N;
  grid.group = &g;
  for (auto& slab : per_slab) grid.orientations.insert(grid.orientations.end(), slab.begin(), slab.end());
  return grid;
}

std::size_t count_fz_orientations(int N, const SymmetryGroup& g, int workers) {
  check_grid_args(N, g);
  const std::size_t slabs = static_cast<std::size_t>(2 * N + 1);
  std::vector<std::size_t> counts(slabs, 0);
  parallel_for(slabs, workers, [&](std::size_t s) {
    scan_slab(N, static_cast<int>(s) - N, g, [&](const Quaternion&) { ++counts[s]; });
  });
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

std::vector<double> nearest_neighbor_angles(const OrientationGrid& grid, int workers) {
  const auto& q = grid.orientations;
  std::vector<double> nn(q.size(), 0.0);
  parallel_for(q.size(), workers, [&](std::size_t i) {
    double best = 0.0;  // max |w| of the relative rotation
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (j == i) continue;
      const Quaternion d = q[i].conj() * q[j];
      for (const auto& s : grid.group->rotations()) best = std::max(best, std::abs((d * s).w));
    }
    nn[i] = 2.0 * std::acos(std::min(1.0, best)) * kDeg;
  });
  return nn;
}

SpacingStats grid_spacing(const OrientationGrid& grid, int workers) {
  const auto nn = nearest_neighbor_angles(grid, workers);
  SpacingStats s;
  if (nn.empty()) return s;
  double sum = 0.0, sq = 0.0;
  for (double a : nn) {
    sum += a;
    sq += a * a;
    s.max_deg = std::max(s.max_deg, a);
  }
  s.mean_deg = sum / nn.size();
  s.stddev_deg = std::sqrt(std::max(0.0, sq / nn.size() - s.mean_deg * s.mean_deg));
  return s;
}

Dictionary::Dictionary(OrientationGrid grid, PatternSet patterns) : grid_(std::move(grid)), patterns_(std::move(patterns)) {
  if (grid_.size() != patterns_.size())
    throw std::invalid_argument("dictionary needs one pattern per orientation");
  mean_direction_.assign(patterns_.length(), 0.0);
  for (std::size_t i = 0; i < patterns_.size(); ++i) {
    const auto r = patterns_.row(i);
    const double inv = 1.0 / patterns_.row_norm(i);
    for (std::size_t l = 0; l < r.size(); ++l) mean_direction_[l] += r[l] * inv;
  }
  if (!patterns_.empty())
    for (double& v : mean_direction_) v /= static_cast<double>(patterns_.size());
}

Dictionary build_dictionary(const OrientationGrid& grid, const BandModel& bands, const DetectorGeometry& det,
                            int workers) {
  if (grid.size() == 0) throw std::invalid_argument("cannot build a dictionary from an empty grid");
  const PatternSimulator sim(bands, det);
  const std::size_t L = det.pixel_count();
  std::vector<float> data(grid.size() * L);
  std::atomic<long long> degenerate{-1};
  parallel_chunks(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(L);
    for (std::size_t i = begin; i < end; ++i) {
      sim.simulate_into(grid.orientations[i], buf);
      double n2 = 0.0;
      for (double v : buf) n2 += v * v;
      if (n2 == 0.0) {
        degenerate = static_cast<long long>(i);
        continue;
      }
      const double inv = 1.0 / std::sqrt(n2);
      float* out = data.data() + i * L;
      for (std::size_t l = 0; l < L; ++l) out[l] = static_cast<float>(buf[l] * inv);
    }
  });
  if (degenerate >= 0)
    throw DegenerateError("simulated pattern " + std::to_string(degenerate.load()) + " is identically zero");
  return Dictionary(grid, PatternSet(det.rows, det.cols, std::move(data)));
}

std::vector<double> principal_component(const PatternSet& a) {
  const std::size_t d = a.size();
  const std::size_t L = a.length();
  if (d < 2) throw std::invalid_argument("principal component needs at least two patterns");
  std::size_t largest = 0;
  for (std::size_t i = 1; i < d; ++i)
    if (a.row_norm(i) > a.row_norm(largest)) largest = i;
  if (a.row_norm(largest) == 0.0) throw DegenerateError("principal component of an all-zero matrix");

  auto normalize = [](std::vector<double>& x) {
    double n = 0.0;
    for (double e : x) n += e * e;
    n = std::sqrt(n);
    if (n > 0.0)
      for (double& e : x) e /= n;
    return n;
  };
  // Start from the mean row (close to the answer for pattern dictionaries),
  // or from the largest row when the mean cancels.
  std::vector<double> v(L, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto r = a.row(i);
    for (std::size_t l = 0; l < L; ++l) v[l] += r[l];
  }
  if (normalize(v) == 0.0) {
    const auto r = a.row(largest);
    v.assign(r.begin(), r.end());
    normalize(v);
  }

  std::vector<double> u(d), w(L);
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto r = a.row(i);
      double s = 0.0;
      for (std::size_t l = 0; l < L; ++l) s += r[l] * v[l];
      u[i] = s;
    }
    std::fill(w.begin(), w.end(), 0.0);
    double next_lambda = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const auto r = a.row(i);
      next_lambda += u[i] * u[i];
      for (std::size_t l = 0; l < L; ++l) w[l] += u[i] * r[l];
    }
    if (normalize(w) == 0.0) break;  // v orthogonal to every row; only possible for exact cancellation
    double change = 0.0;
    for (std::size_t l = 0; l < L; ++l) change += (w[l] - v[l]) * (w[l] - v[l]);
    v.swap(w);
    // Rayleigh quotient settled and the iterate stopped moving.
    const bool settled = std::abs(next_lambda - lambda) <= 1e-12 * next_lambda && std::sqrt(change) < 1e-12;
    lambda = next_lambda;
    if (settled) break;
  }

  double mean = 0.0;
  for (double e : v) mean += e;
  if (mean < 0.0)
    for (double& e : v) e = -e;
  return v;
}

CompensatedDictionary compensate(const PatternSet& patterns, std::vector<double> principal) {
  const std::size_t L = patterns.length();
  if (principal.size() != L) throw std::invalid_argument("principal component length mismatch");
  std::vector<float> data(patterns.size() * L);
  std::vector<double> buf(L);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto r = patterns.row(i);
    double proj = 0.0;
    for (std::size_t l = 0; l < L; ++l) proj += r[l] * principal[l];
    double n2 = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      buf[l] = r[l] - proj * principal[l];
      n2 += buf[l] * buf[l];
    }
    const double n = std::sqrt(n2);
    if (!(n > 1e-6 * patterns.row_norm(i)))
      throw DegenerateError("dictionary row " + std::to_string(i) + " is parallel to the principal component");
    float* out = data.data() + i * L;
    for (std::size_t l = 0; l < L; ++l) out[l] = static_cast<float>(buf[l] / n);
  }
  return {std::move(principal), PatternSet(patterns.rows(), patterns.cols(), std::move(data))};
}

CompensatedDictionary compensate(const Dictionary& dict) {
  return compensate(dict.patterns(), principal_component(dict.patterns()));
}

std::vector<float> compensate_query(std::span<const float> query, std::span<const double> principal) {
  if (query.size() != principal.size()) throw std::invalid_argument("query length does not match principal component");
  double n2 = 0.0, proj = 0.0;
  for (std::size_t l = 0; l < query.size(); ++l) {
    n2 += static_cast<double>(query[l]) * query[l];
    proj += query[l] * principal[l];
  }
  if (n2 == 0.0) throw DegenerateError("zero-norm query pattern");
  const double inv = 1.0 / std::sqrt(n2);
  proj *= inv;
  std::vector<double> c(query.size());
  double c2 = 0.0;
  for (std::size_t l = 0; l < query.size(); ++l) {
    c[l] = query[l] * inv - proj * principal[l];
    c2 += c[l] * c[l];
  }
  if (!(c2 > 1e-24)) throw DegenerateError("query pattern is parallel to the principal component");
  const double cinv = 1.0 / std::sqrt(c2);
  std::vector<float> out(query.size());
  for (std::size_t l = 0; l < query.size(); ++l) out[l] = static_cast<float>(c[l] * cinv);
  return out;
}

}  // namespace ebsdict
