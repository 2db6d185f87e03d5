#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ebsdict/dictionary.hpp"
#include "ebsdict/forward_model.hpp"
#include "ebsdict/pattern_set.hpp"

namespace ebsdict {

/// Scan grid of measured patterns; pixel (x, y) is pattern y * width + x.
struct SampleMap {
  int width = 0;
  int height = 0;
  PatternSet patterns;

  [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  /// Throws std::invalid_argument when the pattern count does not match the grid.
  void validate() const;
};

struct Match {
  std::uint32_t index = 0;
  double rho = 0.0;
  friend bool operator==(const Match&, const Match&) = default;
};

/// Top-k matches for every pixel, sorted by rho descending, ties by ascending index.
struct KnnTable {
  int k = 0;
  std::size_t pixels = 0;
  std::vector<Match> entries;  // pixels * k

  [[nodiscard]] std::span<const Match> at(std::size_t pixel) const {
    return {entries.data() + pixel * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
  }
  friend bool operator==(const KnnTable&, const KnnTable&) = default;
};

struct SimilarityMaps {
  int width = 0;
  int height = 0;
  int k = 0;
  std::vector<double> mean_ip;               // rho-bar against the uncompensated dictionary
  std::vector<std::uint32_t> overlap_raw;    // sum of kNN intersections with in-image neighbors
  std::vector<std::uint8_t> neighbor_count;  // 3..8
  std::vector<double> overlap_norm;          // raw / (k * neighbor_count), in [0, 1]

  /// Overlap on the per-neighbor scale [0, k] the classifier thresholds.
  [[nodiscard]] double per_neighbor_overlap(std::size_t pixel) const { return overlap_norm[pixel] * k; }
  friend bool operator==(const SimilarityMaps&, const SimilarityMaps&) = default;
};

/// <a, b> / (|a| |b|). Throws DegenerateError for a zero-norm input.
[[nodiscard]] double normalized_inner_product(const Pattern& a, const Pattern& b);
[[nodiscard]] double normalized_inner_product(std::span<const float> a, std::span<const float> b);

/// Exact top-k of rho(query, row) over `set`. Throws std::invalid_argument
/// unless 1 <= k <= set.size().
[[nodiscard]] std::vector<Match> top_k_matches(std::span<const float> query, const PatternSet& set, int k);
[[nodiscard]] std::vector<Match> top_k_matches(const Pattern& query, const Dictionary& dict, int k);
/// The query is compensated with the dictionary's principal component first.
[[nodiscard]] std::vector<Match> top_k_matches(const Pattern& query, const CompensatedDictionary& dict, int k);

/// (1/d) sum_j rho(y, phi_j), evaluated as a single inner product with the
/// dictionary's mean direction.
[[nodiscard]] double mean_dictionary_similarity(std::span<const float> y, const Dictionary& dict);
[[nodiscard]] double mean_dictionary_similarity(const Pattern& y, const Dictionary& dict);

struct NeighborhoodSimilarity {
  std::uint32_t raw = 0;
  int neighbors = 0;
  double normalized = 0.0;
};

[[nodiscard]] NeighborhoodSimilarity neighborhood_similarity(const KnnTable& knn, int x, int y, int width, int height);

/// Blocked evaluation of top-k for many queries at once. The per-pair
/// arithmetic is identical to top_k_matches, so results do not depend on the
/// block layout or the worker count.
[[nodiscard]] KnnTable knn_search(const PatternSet& queries, const PatternSet& set, int k, int workers = 1);

struct MatchResult {
  KnnTable knn;  // against the compensated dictionary
  SimilarityMaps maps;
};

/// Mean similarity against `dict` plus compensated kNN table and neighborhood overlaps.
[[nodiscard]] MatchResult match_sample(const SampleMap& sample, const Dictionary& dict,
                                       const CompensatedDictionary& comp, int k, int workers = 1);

[[nodiscard]] SimilarityMaps neighborhood_maps(const KnnTable& knn, std::span<const double> mean_ip, int width,
                                               int height);

}  // namespace ebsdict
