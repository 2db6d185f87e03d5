#include "ebsdict/matching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ebsdict/errors.hpp"
#include "ebsdict/parallel.hpp"

namespace ebsdict {
namespace {

// Strict "ranks ahead of": higher rho first, then lower index.
bool ranks_ahead(const Match& a, const Match& b) { return a.rho > b.rho || (a.rho == b.rho && a.index < b.index); }

// Bounded heap whose front is the worst retained match.
class TopK {
 public:
  explicit TopK(int k) : k_(static_cast<std::size_t>(k)) { heap_.reserve(k_); }

  void offer(const Match& m) {
    if (heap_.size() < k_) {
      heap_.push_back(m);
      std::push_heap(heap_.begin(), heap_.end(), ranks_ahead);
    } else if (ranks_ahead(m, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_ahead);
      heap_.back() = m;
      std::push_heap(heap_.begin(), heap_.end(), ranks_ahead);
    }
  }

  void write_sorted(std::span<Match> out) {
    std::sort_heap(heap_.begin(), heap_.end(), ranks_ahead);
    std::copy(heap_.begin(), heap_.end(), out.begin());
  }

 private:
  std::size_t k_;
  std::vector<Match> heap_;
};

void check_k(int k, std::size_t d) {
  if (k < 1 || static_cast<std::size_t>(k) > d)
    throw std::invalid_argument("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(d) + "]");
}

std::string shape(int rows, int cols) { return std::to_string(rows) + "x" + std::to_string(cols); }

std::vector<float> to_float(const Pattern& p) { return {p.data.begin(), p.data.end()}; }

constexpr std::size_t kQueryBlock = 8;
constexpr std::size_t kRowBlock = 64;

}  // namespace

void SampleMap::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("sample map must have at least one pixel");
  if (patterns.size() != pixel_count())
    throw std::invalid_argument("sample map holds " + std::to_string(patterns.size()) + " patterns for " +
                                std::to_string(pixel_count()) + " pixels");
}

double normalized_inner_product(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("patterns differ in size");
  const double na = std::sqrt(inner_product_f32(a, a));
  const double nb = std::sqrt(inner_product_f32(b, b));
  if (na == 0.0 || nb == 0.0) throw DegenerateError("normalized inner product of a zero-norm pattern");
  return std::clamp(inner_product_f32(a, b) / (na * nb), -1.0, 1.0);
}

double normalized_inner_product(const Pattern& a, const Pattern& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("pattern shapes differ: " + shape(a.rows, a.cols) + " vs " + shape(b.rows, b.cols));
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a.data[i] * b.data[i];
    aa += a.data[i] * a.data[i];
    bb += b.data[i] * b.data[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DegenerateError("normalized inner product of a zero-norm pattern");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

KnnTable knn_search(const PatternSet& queries, const PatternSet& set, int k, int workers) {
  check_k(k, set.size());
  if (queries.length() != set.length())
    throw std::invalid_argument("query patterns " + shape(queries.rows(), queries.cols()) +
                                " do not match dictionary patterns " + shape(set.rows(), set.cols()));
  for (std::size_t p = 0; p < queries.size(); ++p)
    if (queries.row_norm(p) == 0.0) throw DegenerateError("query pattern " + std::to_string(p) + " has zero norm");

  KnnTable table;
  table.k = k;
  table.pixels = queries.size();
  table.entries.resize(queries.size() * static_cast<std::size_t>(k));
  const std::size_t blocks = (queries.size() + kQueryBlock - 1) / kQueryBlock;

  parallel_chunks(blocks, workers, [&](std::size_t block_begin, std::size_t block_end) {
    for (std::size_t b = block_begin; b < block_end; ++b) {
      const std::size_t q0 = b * kQueryBlock;
      const std::size_t q1 = std::min(queries.size(), q0 + kQueryBlock);
      std::vector<TopK> heaps(q1 - q0, TopK(k));
      for (std::size_t r0 = 0; r0 < set.size(); r0 += kRowBlock) {
        const std::size_t r1 = std::min(set.size(), r0 + kRowBlock);
        for (std::size_t q = q0; q < q1; ++q) {
          const auto query = queries.row(q);
          const double qn = queries.row_norm(q);
          for (std::size_t r = r0; r < r1; ++r) {
            const double rho = std::clamp(inner_product_f32(query, set.row(r)) / (qn * set.row_norm(r)), -1.0, 1.0);
            heaps[q - q0].offer({static_cast<std::uint32_t>(r), rho});
          }
        }
      }
      for (std::size_t q = q0; q < q1; ++q)
        heaps[q - q0].write_sorted({table.entries.data() + q * static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
    }
  });
  return table;
}

std::vector<Match> top_k_matches(std::span<const float> query, const PatternSet& set, int k) {
  const PatternSet q(set.rows(), set.cols(), std::vector<float>(query.begin(), query.end()));
  const KnnTable t = knn_search(q, set, k, 1);
  return t.entries;
}

std::vector<Match> top_k_matches(const Pattern& query, const Dictionary& dict, int k) {
  return top_k_matches(to_float(query), dict.patterns(), k);
}

std::vector<Match> top_k_matches(const Pattern& query, const CompensatedDictionary& dict, int k) {
  return top_k_matches(compensate_query(to_float(query), dict.principal), dict.patterns, k);
}

double mean_dictionary_similarity(std::span<const float> y, const Dictionary& dict) {
  const auto m = dict.mean_direction();
  if (y.size() != m.size()) throw std::invalid_argument("pattern length does not match the dictionary");
  double dot = 0.0, n2 = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) {
    dot += y[l] * m[l];
    n2 += static_cast<double>(y[l]) * y[l];
  }
  if (n2 == 0.0) throw DegenerateError("mean similarity of a zero-norm pattern");
  return dot / std::sqrt(n2);
}

double mean_dictionary_similarity(const Pattern& y, const Dictionary& dict) {
  return mean_dictionary_similarity(to_float(y), dict);
}

namespace {

std::uint32_t sorted_intersection(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::uint32_t n = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::vector<std::uint32_t> sorted_indices(const KnnTable& knn) {
  std::vector<std::uint32_t> out(knn.entries.size());
  for (std::size_t p = 0; p < knn.pixels; ++p) {
    auto row = knn.at(p);
    auto* dst = out.data() + p * static_cast<std::size_t>(knn.k);
    for (int i = 0; i < knn.k; ++i) dst[i] = row[static_cast<std::size_t>(i)].index;
    std::sort(dst, dst + knn.k);
  }
  return out;
}

NeighborhoodSimilarity overlap_at(std::span<const std::uint32_t> sorted, int k, int x, int y, int width, int height) {
  const std::size_t kk = static_cast<std::size_t>(k);
  auto set_of = [&](int px, int py) {
    return sorted.subspan((static_cast<std::size_t>(py) * width + px) * kk, kk);
  };
  NeighborhoodSimilarity s;
  const auto center = set_of(x, y);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      ++s.neighbors;
      s.raw += sorted_intersection(center, set_of(nx, ny));
    }
  s.normalized = s.neighbors > 0 ? static_cast<double>(s.raw) / (static_cast<double>(k) * s.neighbors) : 0.0;
  return s;
}

}  // namespace

NeighborhoodSimilarity neighborhood_similarity(const KnnTable& knn, int x, int y, int width, int height) {
  if (width < 1 || height < 1 || knn.pixels != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("kNN table does not cover a " + shape(height, width) + " grid");
  if (x < 0 || y < 0 || x >= width || y >= height) throw std::out_of_range("pixel outside the grid");
  const auto sorted = sorted_indices(knn);
  return overlap_at(sorted, knn.k, x, y, width, height);
}

SimilarityMaps neighborhood_maps(const KnnTable& knn, std::span<const double> mean_ip, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (knn.pixels != n || mean_ip.size() != n) throw std::invalid_argument("maps do not cover the same grid");
  const auto sorted = sorted_indices(knn);
  SimilarityMaps maps;
  maps.width = width;
  maps.height = height;
  maps.k = knn.k;
  maps.mean_ip.assign(mean_ip.begin(), mean_ip.end());
  maps.overlap_raw.resize(n);
  maps.neighbor_count.resize(n);
  maps.overlap_norm.resize(n);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto s = overlap_at(sorted, knn.k, x, y, width, height);
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      maps.overlap_raw[p] = s.raw;
      maps.neighbor_count[p] = static_cast<std::uint8_t>(s.neighbors);
      maps.overlap_norm[p] = s.normalized;
    }
  return maps;
}

MatchResult match_sample(const SampleMap& sample, const Dictionary& dict, const CompensatedDictionary& comp, int k,
                         int workers) {
  sample.validate();
  const auto& sp = sample.patterns;
  const auto& dp = dict.patterns();
  if (sp.rows() != dp.rows() || sp.cols() != dp.cols())
    throw std::invalid_argument("sample patterns are " + shape(sp.rows(), sp.cols()) + " but dictionary patterns are " +
                                shape(dp.rows(), dp.cols()));
  if (comp.size() != dict.size()) throw std::invalid_argument("compensated dictionary size differs from dictionary");
  check_k(k, dict.size());

  const std::size_t n = sample.pixel_count();
  const std::size_t L = sp.length();
  std::vector<double> mean_ip(n);
  std::vector<float> compensated(n * L);
  parallel_for(n, workers, [&](std::size_t p) {
    mean_ip[p] = mean_dictionary_similarity(sp.row(p), dict);
    const auto c = compensate_query(sp.row(p), comp.principal);
    std::copy(c.begin(), c.end(), compensated.begin() + static_cast<std::ptrdiff_t>(p * L));
  });
  const PatternSet queries(sp.rows(), sp.cols(), std::move(compensated));

  MatchResult result;
  result.knn = knn_search(queries, comp.patterns, k, workers);
  result.maps = neighborhood_maps(result.knn, mean_ip, sample.width, sample.height);
  return result;
}

}  // namespace ebsdict
