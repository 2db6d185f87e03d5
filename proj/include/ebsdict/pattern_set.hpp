#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ebsdict {

/// Inner product of two float vectors: single-precision partial sums over
/// blocks of 256 elements, block sums reduced in double. The summation order
/// depends only on the length, so results are reproducible.
[[nodiscard]] double inner_product_f32(std::span<const float> a, std::span<const float> b);

/// Row-major count x (rows*cols) matrix of float patterns with cached row norms.
class PatternSet {
 public:
  PatternSet() = default;
  PatternSet(int rows, int cols, std::vector<float> data);

  [[nodiscard]] std::size_t size() const { return count_; }
  [[nodiscard]] bool empty() const { return count_ == 0; }
  [[nodiscard]] std::size_t length() const { return static_cast<std::size_t>(rows_) * cols_; }
  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] std::span<const float> row(std::size_t i) const { return {data_.data() + i * length(), length()}; }
  [[nodiscard]] double row_norm(std::size_t i) const { return norms_[i]; }
  [[nodiscard]] std::span<const float> data() const { return data_; }
  /// Rows i in [begin, end) as a new set.
  [[nodiscard]] PatternSet slice(std::size_t begin, std::size_t end) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::size_t count_ = 0;
  std::vector<float> data_;
  std::vector<double> norms_;
};

}  // namespace ebsdict
