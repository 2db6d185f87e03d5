#include "ebsdict/pattern_set.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ebsdict {

double inner_product_f32(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner product of vectors with different lengths");
  constexpr std::size_t kBlock = 256;
  constexpr std::size_t kLanes = 8;
  const std::size_t n = a.size();
  const float* pa = a.data();
  const float* pb = b.data();
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t end = std::min(n, start + kBlock);
    float acc[kLanes] = {};
    std::size_t i = start;
    for (; i + kLanes <= end; i += kLanes)
      for (std::size_t l = 0; l < kLanes; ++l) acc[l] += pa[i + l] * pb[i + l];
    float tail = 0.0f;
    for (; i < end; ++i) tail += pa[i] * pb[i];
    double block = tail;
    for (float v : acc) block += v;
    total += block;
  }
  return total;
}

PatternSet::PatternSet(int rows, int cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("pattern dims must be positive");
  if (data_.size() % length() != 0) throw std::invalid_argument("pattern data is not a whole number of patterns");
  count_ = data_.size() / length();
  norms_.resize(count_);
  for (std::size_t i = 0; i < count_; ++i) norms_[i] = std::sqrt(inner_product_f32(row(i), row(i)));
}

PatternSet PatternSet::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > count_) throw std::out_of_range("pattern slice out of range");
  std::vector<float> d(data_.begin() + static_cast<std::ptrdiff_t>(begin * length()),
                       data_.begin() + static_cast<std::ptrdiff_t>(end * length()));
  return PatternSet(rows_, cols_, std::move(d));
}

}  // namespace ebsdict
