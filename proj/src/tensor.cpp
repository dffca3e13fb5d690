#include "scrabble/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace scrabble {

std::string Shape4::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::slice_sample(int i) const {
  Tensor out(1, shape_.c, shape_.h, shape_.w);
  std::copy_n(sample(i), shape_.sample(), out.data());
  return out;
}

void Tensor::add_(const Tensor& other) {
  if (!(other.shape_ == shape_)) {
    throw std::invalid_argument("tensor shape mismatch: " + shape_.str() + " vs " + other.shape_.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void transpose(const double* src, int rows, int cols, double* dst) {
  constexpr int kTile = 32;
  for (int r0 = 0; r0 < rows; r0 += kTile) {
    const int r1 = std::min(rows, r0 + kTile);
    for (int c0 = 0; c0 < cols; c0 += kTile) {
      const int c1 = std::min(cols, c0 + kTile);
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          dst[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
        }
      }
    }
  }
}

}  // namespace scrabble
