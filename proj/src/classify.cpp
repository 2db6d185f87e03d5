#include "ebsdict/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ebsdict/errors.hpp"
#include "ebsdict/orientation.hpp"

namespace ebsdict {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
// Smallest kernel width on the log-dissimilarity scale: populations whose
// 1 - rho-bar differ by less than about 10% are not told apart.
constexpr double kModeResolution = 0.1;

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

double percentile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - f) + sorted[hi] * f;
}

// True when the mixture density has no interior dip between the two means.
bool mixture_unimodal(const GaussianMixture1D& m) {
  const double a = std::min(m.means[0], m.means[1]);
  const double b = std::max(m.means[0], m.means[1]);
  if (b - a <= 0.0) return true;
  const double ends = std::min(m.density(a), m.density(b));
  constexpr int kSteps = 1024;
  for (int i = 1; i < kSteps; ++i) {
    const double x = a + (b - a) * i / kSteps;
    if (m.density(x) < ends * (1.0 - 1e-6)) return false;
  }
  return true;
}

}  // namespace

const char* class_name(PixelClass c) {
  switch (c) {
    case PixelClass::GrainInterior: return "grain_interior";
    case PixelClass::GrainBoundary: return "grain_boundary";
    case PixelClass::NoisyBackground: return "noisy_background";
    case PixelClass::ShiftedBackground: return "shifted_background";
  }
  return "unknown";
}

PixelClass class_from_name(const std::string& name) {
  for (auto c : {PixelClass::GrainInterior, PixelClass::GrainBoundary, PixelClass::NoisyBackground,
                 PixelClass::ShiftedBackground})
    if (name == class_name(c)) return c;
  throw std::invalid_argument("unknown pixel class '" + name + "'");
}

double GaussianMixture1D::density(double x) const {
  double s = 0.0;
  for (int c = 0; c < 2; ++c) s += weights[c] * std::exp(log_normal(x, means[c], variances[c]));
  return s;
}

GaussianMixture1D fit_mog_1d(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 10) throw std::invalid_argument("mixture fit needs at least 10 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw DegenerateError("mixture fit on data without spread");

  GaussianMixture1D m;
  m.means = {percentile(sorted, 0.25), percentile(sorted, 0.75)};
  // Heavily tied data can put both quartiles on one value; widen until they split.
  for (double p : {0.10, 0.0}) {
    if (m.means[0] != m.means[1]) break;
    m.means = {percentile(sorted, p), percentile(sorted, 1.0 - p)};
  }
  m.variances = {var, var};
  m.weights = {0.5, 0.5};
  const double var_floor = std::max(1e-12, 1e-4 * var);

  std::vector<double> resp(n);  // responsibility of component 1
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 500; ++it) {
    // E-step
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = std::log(m.weights[0]) + log_normal(values[i], m.means[0], m.variances[0]);
      const double b = std::log(m.weights[1]) + log_normal(values[i], m.means[1], m.variances[1]);
      const double mx = std::max(a, b);
      const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      ll += lse;
      resp[i] = std::exp(b - lse);
    }
    m.log_likelihood_trace.push_back(ll);
    m.log_likelihood = ll;
    m.iterations = it + 1;
    if (std::abs(ll - prev_ll) <= 1e-10 * std::abs(ll)) break;
    prev_ll = ll;

    // M-step
    std::array<double, 2> sw{0.0, 0.0}, sx{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      sw[0] += 1.0 - resp[i];
      sw[1] += resp[i];
      sx[0] += (1.0 - resp[i]) * values[i];
      sx[1] += resp[i] * values[i];
    }
    for (int c = 0; c < 2; ++c) {
      if (!(sw[c] > 0.0)) continue;  // empty component keeps its parameters
      m.means[c] = sx[c] / sw[c];
    }
    std::array<double, 2> sv{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = values[i] - m.means[0];
      const double d1 = values[i] - m.means[1];
      sv[0] += (1.0 - resp[i]) * d0 * d0;
      sv[1] += resp[i] * d1 * d1;
    }
    for (int c = 0; c < 2; ++c) {
      if (sw[c] > 0.0) m.variances[c] = std::max(var_floor, sv[c] / sw[c]);
      m.weights[c] = std::clamp(sw[c] / n, 1e-12, 1.0 - 1e-12);
    }
    const double wsum = m.weights[0] + m.weights[1];
    m.weights[0] /= wsum;
    m.weights[1] /= wsum;
  }
  if (m.means[0] > m.means[1]) {
    std::swap(m.means[0], m.means[1]);
    std::swap(m.variances[0], m.variances[1]);
    std::swap(m.weights[0], m.weights[1]);
  }
  m.unimodal = mixture_unimodal(m);
  return m;
}

CrossingThreshold mixture_crossing_threshold(const GaussianMixture1D& m) {
  const double m0 = m.means[0], m1 = m.means[1];
  const double v0 = m.variances[0], v1 = m.variances[1];
  if (m0 == m1) throw std::invalid_argument("crossing threshold needs distinct means");
  const double lo = std::min(m0, m1), hi = std::max(m0, m1);
  const double mid = 0.5 * (m0 + m1);

  // log(w0 N0) - log(w1 N1) = a x^2 + b x + c
  const double a = 0.5 / v1 - 0.5 / v0;
  const double b = m0 / v0 - m1 / v1;
  const double c = 0.5 * m1 * m1 / v1 - 0.5 * m0 * m0 / v0 + std::log(m.weights[0] / m.weights[1]) -
                   0.5 * std::log(v0 / v1);
  std::vector<double> roots;
  const double scale = std::max({std::abs(a) * hi * hi, std::abs(b) * hi, 1e-300});
  if (std::abs(a) * hi * hi <= 1e-14 * scale || a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      if (q != 0.0) roots.push_back(q / a);
      roots.push_back(c / q);
    }
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(hi));
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double r : roots) {
    if (r > lo - tol && r < hi + tol && std::isfinite(r)) {
      if (std::isnan(best) || std::abs(r - mid) < std::abs(best - mid)) best = r;
    }
  }
  if (std::isnan(best)) return {mid, true};
  return {std::clamp(best, lo, hi), false};
}

std::vector<Mode> detect_modes(std::span<const double> values, double min_mass, double min_bandwidth) {
  std::vector<double> x(values.begin(), values.end());
  if (x.empty()) return {};
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  if (x.front() == x.back()) return {{x.front(), 1.0, 1.0}};

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  const double iqr = percentile(x, 0.75) - percentile(x, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = std::max(min_bandwidth, 0.9 * spread * std::pow(static_cast<double>(n), -0.2));

  constexpr int kGrid = 2048;
  const double g0 = x.front() - 3.0 * h, g1 = x.back() + 3.0 * h;
  const double dx = (g1 - g0) / (kGrid - 1);
  std::vector<double> f(kGrid, 0.0);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * kPi));
  // Each sample only touches grid points within 6 bandwidths.
  const int reach = static_cast<int>(std::ceil(6.0 * h / dx));
  for (double v : x) {
    const int center = static_cast<int>(std::lround((v - g0) / dx));
    for (int i = std::max(0, center - reach); i <= std::min(kGrid - 1, center + reach); ++i) {
      const double u = (g0 + i * dx - v) / h;
      f[i] += norm * std::exp(-0.5 * u * u);
    }
  }

  // Local maxima and the valleys between consecutive ones.
  std::vector<int> peaks;
  for (int i = 0; i < kGrid; ++i) {
    const bool left = i == 0 || f[i] > f[i - 1];
    const bool right = i == kGrid - 1 || f[i] >= f[i + 1];
    if (left && right && f[i] > 0.0) peaks.push_back(i);
  }
  auto valley = [&](int a, int b) {
    int best = a;
    for (int i = a; i <= b; ++i)
      if (f[i] < f[best]) best = i;
    return best;
  };
  auto basin_mass = [&](std::size_t p, const std::vector<int>& pk) {
    const int lo = p == 0 ? 0 : valley(pk[p - 1], pk[p]);
    const int hi = p + 1 == pk.size() ? kGrid - 1 : valley(pk[p], pk[p + 1]);
    double s = 0.0;
    for (int i = lo; i <= hi; ++i) s += f[i];
    return s * dx;
  };

  while (peaks.size() > 1) {
    std::size_t smallest = 0;
    double smallest_mass = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < peaks.size(); ++p) {
      const double m = basin_mass(p, peaks);
      if (m < smallest_mass) {
        smallest_mass = m;
        smallest = p;
      }
    }
    if (smallest_mass >= min_mass) break;
    peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(smallest));
  }

  std::vector<Mode> modes;
  for (std::size_t p = 0; p < peaks.size(); ++p)
    modes.push_back({g0 + peaks[p] * dx, f[peaks[p]], basin_mass(p, peaks)});
  return modes;
}

ThresholdReport derive_thresholds(std::span<const double> mean_ip, std::span<const double> overlap, int k,
                                  const ThresholdOverrides& overrides) {
  if (mean_ip.size() != overlap.size()) throw std::invalid_argument("similarity maps differ in size");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  ThresholdReport rep;
  auto& th = rep.thresholds;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Modes are found on the log-dissimilarity -log(1 - rho-bar), which spreads the
  // populations crowded just below 1 evenly, then mapped back.
  std::vector<double> dissim(mean_ip.size());
  for (std::size_t i = 0; i < mean_ip.size(); ++i) dissim[i] = -std::log(std::max(1.0 - mean_ip[i], 1e-12));
  rep.mean_ip_modes = detect_modes(dissim, 0.005, kModeResolution);
  for (auto& m : rep.mean_ip_modes) m.location = 1.0 - std::exp(-m.location);
  const auto& modes = rep.mean_ip_modes;
  // The normal mode carries the most pixels; anomalous modes lie below it.
  std::size_t normal = 0;
  for (std::size_t i = 1; i < modes.size(); ++i)
    if (modes[i].mass > modes[normal].mass) normal = i;
  std::vector<Mode> anomalous;
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (i != normal && modes[i].location < modes[normal].location) anomalous.push_back(modes[i]);

  if (overrides.t_anomaly) {
    th.t_anomaly = *overrides.t_anomaly;
    rep.notes.push_back("t_anomaly: manual override");
  } else if (modes.empty()) {
    rep.failures.push_back("t_anomaly: no mean-similarity modes");
  } else if (anomalous.empty()) {
    th.t_anomaly = kNegInf;
    rep.notes.push_back("t_anomaly: no anomalous mode below the normal mode, anomaly branch disabled");
  } else {
    th.t_anomaly = 0.5 * (modes[normal].location + anomalous.back().location);
    rep.notes.push_back("t_anomaly: midpoint of normal mode and highest anomalous mode");
  }

  if (overrides.t_subclass) {
    th.t_subclass = *overrides.t_subclass;
    rep.notes.push_back("t_subclass: manual override");
  } else if (anomalous.size() >= 2) {
    // Two heaviest anomalous modes.
    auto sorted = anomalous;
    std::sort(sorted.begin(), sorted.end(), [](const Mode& a, const Mode& b) { return a.mass > b.mass; });
    th.t_subclass = 0.5 * (sorted[0].location + sorted[1].location);
    rep.notes.push_back("t_subclass: midpoint of the two anomalous modes");
  } else if (anomalous.size() == 1 && std::isfinite(th.t_anomaly)) {
    // One anomalous population gives no basis for splitting noisy from shifted.
    th.t_subclass = kNegInf;
    rep.failures.push_back("t_subclass: only one anomalous mode, cannot separate noisy from shifted background");
  } else {
    th.t_subclass = kNegInf;
    rep.notes.push_back("t_subclass: no anomalous modes, subclass branch unused");
  }
  if (std::isfinite(th.t_anomaly) && std::isfinite(th.t_subclass) && th.t_subclass >= th.t_anomaly)
    rep.failures.push_back("t_subclass must lie below t_anomaly");

  if (overrides.t_boundary) {
    th.t_boundary = *overrides.t_boundary;
    rep.notes.push_back("t_boundary: manual override");
  } else {
    std::vector<double> normal_overlap;
    for (std::size_t i = 0; i < overlap.size(); ++i)
      if (!(mean_ip[i] < th.t_anomaly)) normal_overlap.push_back(overlap[i]);
    const double tiny = std::min(1e-9, 0.5 * k);
    try {
      if (normal_overlap.size() < 10) throw std::invalid_argument("too few normal pixels");
      const auto mix = fit_mog_1d(normal_overlap);
      rep.overlap_mixture = mix;
      if (mix.unimodal) {
        th.t_boundary = tiny;
        rep.notes.push_back("t_boundary: overlap distribution unimodal, no boundary class");
      } else {
        const auto cross = mixture_crossing_threshold(mix);
        th.t_boundary = cross.value;
        rep.boundary_fallback = cross.fallback;
        rep.notes.push_back(cross.fallback ? "t_boundary: no crossing between means, midpoint used"
                                           : "t_boundary: crossing of the two-component mixture");
      }
    } catch (const DegenerateError&) {
      th.t_boundary = tiny;
      rep.notes.push_back("t_boundary: all overlaps equal, no boundary class");
    } catch (const std::invalid_argument& e) {
      rep.failures.push_back(std::string("t_boundary: ") + e.what());
    }
  }
  if (!(th.t_boundary > 0.0 && th.t_boundary < k) && rep.failures.empty() && !overrides.t_boundary)
    th.t_boundary = std::clamp(th.t_boundary, 1e-9, k - 1e-9);
  return rep;
}

ThresholdReport derive_thresholds(const SimilarityMaps& maps, const ThresholdOverrides& overrides) {
  std::vector<double> overlap(maps.overlap_norm.size());
  for (std::size_t i = 0; i < overlap.size(); ++i) overlap[i] = maps.per_neighbor_overlap(i);
  return derive_thresholds(maps.mean_ip, overlap, maps.k, overrides);
}

std::array<std::size_t, 4> ClassMap::counts() const {
  std::array<std::size_t, 4> c{};
  for (auto l : labels) ++c[static_cast<std::size_t>(l)];
  return c;
}

PixelClass classify_pixel(double mean_ip, double overlap, const DtThresholds& th) {
  if (mean_ip < th.t_anomaly)
    return mean_ip < th.t_subclass ? PixelClass::NoisyBackground : PixelClass::ShiftedBackground;
  return overlap < th.t_boundary ? PixelClass::GrainBoundary : PixelClass::GrainInterior;
}

ClassMap classify_pixels(const SimilarityMaps& maps, const DtThresholds& th) {
  const std::size_t n = static_cast<std::size_t>(maps.width) * maps.height;
  if (maps.mean_ip.size() != n || maps.overlap_norm.size() != n)
    throw std::invalid_argument("similarity maps do not cover the grid");
  ClassMap out{maps.width, maps.height, std::vector<PixelClass>(n)};
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = classify_pixel(maps.mean_ip[i], maps.per_neighbor_overlap(i), th);
  return out;
}

}  // namespace ebsdict
