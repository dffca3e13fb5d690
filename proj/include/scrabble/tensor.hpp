#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace scrabble {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  std::size_t sample() const { return static_cast<std::size_t>(c) * plane(); }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

/// Dense NCHW tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(int n, int c, int h, int w, double fill = 0.0) : Tensor(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double* sample(int i) noexcept { return data_.data() + static_cast<std::size_t>(i) * shape_.sample(); }
  const double* sample(int i) const noexcept {
    return data_.data() + static_cast<std::size_t>(i) * shape_.sample();
  }
  double* plane(int i, int ch) noexcept { return sample(i) + static_cast<std::size_t>(ch) * shape_.plane(); }
  const double* plane(int i, int ch) const noexcept {
    return sample(i) + static_cast<std::size_t>(ch) * shape_.plane();
  }

  double& at(int i, int ch, int y, int x) noexcept {
    return plane(i, ch)[static_cast<std::size_t>(y) * shape_.w + x];
  }
  double at(int i, int ch, int y, int x) const noexcept {
    return plane(i, ch)[static_cast<std::size_t>(y) * shape_.w + x];
  }

  void fill(double v);
  Tensor slice_sample(int i) const;
  void add_(const Tensor& other);

  bool operator==(const Tensor&) const = default;

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

/// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

// Out-of-place transpose of a rows x cols row-major block.
void transpose(const double* src, int rows, int cols, double* dst);

}  // namespace scrabble
