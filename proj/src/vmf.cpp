#include "ebsdict/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ebsdict/errors.hpp"
#include "ebsdict/parallel.hpp"

namespace ebsdict {
namespace {

constexpr double kLog4Pi2 = 3.6757541328186907;  // log((2 pi)^2)
constexpr double kAsymptoticLogI = 500.0;         // cyl_bessel_i overflows near 700
constexpr double kContinuedFractionMax = 1e3;

// Hankel expansion sum_k (-1)^k a_k(nu) / z^k of e^{-z} sqrt(2 pi z) I_nu(z).
double hankel_series(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (k * 8.0 * z);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// I_{nu+1}/I_nu by the modified Lentz algorithm on the Gauss continued fraction.
double bessel_ratio_cf(double nu, double z) {
  constexpr double tiny = 1e-300;
  double f = tiny, c = f, d = 0.0;
  for (int j = 1; j < 100000; ++j) {
    const double b = 2.0 * (nu + j) / z;
    d = b + d;
    d = d == 0.0 ? tiny : d;
    c = b + 1.0 / c;
    c = c == 0.0 ? tiny : c;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return f;
}

void require_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be positive and finite");
}

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

double log_bessel_i1(double kappa) {
  require_kappa(kappa);
  if (kappa < kAsymptoticLogI) return std::log(std::cyl_bessel_i(1.0, kappa));
  return kappa - 0.5 * std::log(2.0 * kPi * kappa) + std::log(hankel_series(1.0, kappa));
}

double bessel_ratio_a4(double kappa) {
  require_kappa(kappa);
  if (kappa <= kContinuedFractionMax) return bessel_ratio_cf(1.0, kappa);
  return hankel_series(2.0, kappa) / hankel_series(1.0, kappa);
}

double vmf_log_normalizer(double kappa) { return std::log(kappa) - kLog4Pi2 - log_bessel_i1(kappa); }

double vmf_log_density(const Quaternion& x, const Quaternion& mu, double kappa) {
  require_kappa(kappa);
  return vmf_log_normalizer(kappa) + kappa * dot(mu, x);
}

double vmfm_log_density(const Quaternion& x, const VmfmModel& m) {
  if (m.group == nullptr) throw std::invalid_argument("mixture model has no symmetry group");
  require_kappa(m.kappa);
  const auto& ops = m.group->operators();
  const double lc = vmf_log_normalizer(m.kappa);
  std::vector<double> terms;
  terms.reserve(ops.size());
  for (const auto& op : ops) terms.push_back(lc + m.kappa * dot(m.mu * op, x));
  return log_sum_exp(terms) - std::log(static_cast<double>(ops.size()));
}

double solve_kappa(double rbar) {
  if (!(rbar > 0.0 && rbar < 1.0)) throw std::invalid_argument("solve_kappa needs 0 < rbar < 1");
  double kappa = rbar * (4.0 - rbar * rbar) / (1.0 - rbar * rbar);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double a = bessel_ratio_a4(kappa);
    const double err = a - rbar;
    if (std::abs(err) <= 1e-14 * rbar) break;
    (err < 0.0 ? lo : hi) = kappa;
    // dA/dkappa = 1 - A^2 - 3 A / kappa on S^3
    const double slope = 1.0 - a * a - 3.0 * a / kappa;
    double next = slope > 0.0 ? kappa - err / slope : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * kappa;
    if (std::abs(next - kappa) <= 1e-16 * kappa) break;
    kappa = next;
  }
  return kappa;
}

VmfmFit em_fit_vmfm(std::span<const Quaternion> samples, const SymmetryGroup& g, const EmOptions& opt) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("VMF mixture fit needs at least 2 samples");
  if (!(opt.init_kappa > 0.0)) throw std::invalid_argument("initial kappa must be positive");
  const auto& ops = g.operators();
  const std::size_t m = ops.size();
  const double log_m = std::log(static_cast<double>(m));

  std::vector<Quaternion> xs(n);
  for (std::size_t j = 0; j < n; ++j) xs[j] = samples[j].normalized();
  // Samples carried back through each operator: <mu * op, x> = <mu, x * conj(op)>.
  std::vector<Quaternion> pulled(n * m);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < m; ++c) pulled[j * m + c] = xs[j] * ops[c].conj();

  VmfmFit fit;
  fit.mu = (opt.init ? *opt.init : xs[0]).normalized();
  fit.kappa = std::min(opt.init_kappa, kKappaCap);
  const double rbar_cap = bessel_ratio_a4(kKappaCap);

  std::vector<double> logits(m);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double lc = vmf_log_normalizer(fit.kappa);
    double ll = 0.0;
    double r[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < m; ++c) logits[c] = fit.kappa * dot(fit.mu, pulled[j * m + c]);
      const double lse = log_sum_exp(logits);
      ll += lc + lse - log_m;
      for (std::size_t c = 0; c < m; ++c) {
        const double gamma = std::exp(logits[c] - lse);
        if (gamma == 0.0) continue;
        const Quaternion& p = pulled[j * m + c];
        r[0] += gamma * p.w;
        r[1] += gamma * p.x;
        r[2] += gamma * p.y;
        r[3] += gamma * p.z;
      }
    }
    fit.log_likelihood_trace.push_back(ll);
    fit.log_likelihood = ll;
    fit.iterations = it + 1;
    if (it > 0 && std::abs(ll - prev) <= opt.tolerance * std::abs(ll)) break;
    prev = ll;

    const double rn = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
    if (!(rn > 1e-12 * static_cast<double>(n))) throw DegenerateError("VMF mixture resultant vanishes");
    fit.mu = Quaternion{r[0] / rn, r[1] / rn, r[2] / rn, r[3] / rn};
    const double rbar = rn / static_cast<double>(n);
    fit.kappa = rbar >= rbar_cap ? kKappaCap : std::min(kKappaCap, solve_kappa(rbar));
  }
  fit.mu = to_fundamental_zone(fit.mu, g);
  return fit;
}

std::optional<double> angular_uncertainty(double kappa) {
  if (!(kappa >= 0.5)) return std::nullopt;
  return std::acos(1.0 - 1.0 / kappa) * kDeg;
}

const char* status_name(EstimateStatus s) {
  switch (s) {
    case EstimateStatus::Ok: return "ok";
    case EstimateStatus::Unresolved: return "unresolved";
    case EstimateStatus::SingleMatch: return "single_match";
    case EstimateStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

OrientationEstimate index_pixel(std::span<const Quaternion> orientations, const SymmetryGroup& g, int k_ml) {
  if (k_ml < 1) throw std::invalid_argument("k_ml must be >= 1");
  if (orientations.size() < static_cast<std::size_t>(k_ml))
    throw std::invalid_argument("k_ml exceeds the available matches");
  OrientationEstimate est;
  est.k_used = k_ml;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (k_ml == 1) {
    est.mu = orientations[0];
    est.kappa = nan;
    est.delta_theta_deg = nan;
    est.log_likelihood = nan;
    est.status = EstimateStatus::SingleMatch;
    return est;
  }
  const auto fit = em_fit_vmfm(orientations.first(static_cast<std::size_t>(k_ml)), g);
  est.mu = fit.mu;
  est.kappa = fit.kappa;
  est.log_likelihood = fit.log_likelihood;
  const auto dt = angular_uncertainty(fit.kappa);
  est.delta_theta_deg = dt ? *dt : nan;
  est.status = dt ? EstimateStatus::Ok : EstimateStatus::Unresolved;
  return est;
}

std::vector<OrientationEstimate> index_sample(const KnnTable& knn, const OrientationGrid& grid, int k_ml,
                                              int workers) {
  if (grid.group == nullptr) throw std::invalid_argument("orientation grid has no symmetry group");
  if (k_ml > knn.k) throw std::invalid_argument("k_ml exceeds the match table's k");
  std::vector<OrientationEstimate> out(knn.pixels);
  parallel_chunks(knn.pixels, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<Quaternion> qs(static_cast<std::size_t>(k_ml));
    for (std::size_t p = begin; p < end; ++p) {
      const auto matches = knn.at(p);
      for (int i = 0; i < k_ml; ++i) qs[i] = grid.orientations.at(matches[i].index);
      try {
        out[p] = index_pixel(qs, *grid.group, k_ml);
      } catch (const DegenerateError&) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        out[p] = {to_fundamental_zone(qs[0], *grid.group), nan, nan, nan, k_ml, EstimateStatus::Degenerate};
      }
    }
  });
  return out;
}

}  // namespace ebsdict
