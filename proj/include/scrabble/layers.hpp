#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scrabble/tensor.hpp"

namespace scrabble {

/// A named trainable array with its gradient accumulator.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, std::vector<int> s, double fill = 0.0);

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();
};

// Fills `p` (viewed as rows x cols) with a row- or column-orthonormal matrix
// scaled by `gain`.
void orthogonal_init(Param& p, int rows, int cols, std::mt19937_64& rng, double gain = 1.0);

void zero_grads(const std::vector<Param*>& params);
// FNV-1a over the raw bytes of every parameter value.
std::uint64_t hash_params(const std::vector<const Param*>& params);
std::size_t count_params(const std::vector<const Param*>& params);
inline std::uint64_t hash_params(const std::vector<Param*>& params) {
  return hash_params(std::vector<const Param*>(params.begin(), params.end()));
}
inline std::size_t count_params(const std::vector<Param*>& params) {
  return count_params(std::vector<const Param*>(params.begin(), params.end()));
}

/// Stride-1 square convolution with "same" zero padding (kernel / 2).
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel);

  Tensor forward(const Tensor& x) const;
  // Accumulates weight/bias gradients and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& grad_out);

  void init(std::mt19937_64& rng, double gain = 1.0);
  int in_channels() const noexcept { return in_c_; }
  int out_channels() const noexcept { return out_c_; }
  int kernel() const noexcept { return k_; }

  Param weight;
  Param bias;

 private:
  int in_c_ = 0;
  int out_c_ = 0;
  int k_ = 1;
};

/// Channel normalization with a per-sample affine modulation computed
/// from a conditioning vector: gain = gain_bias + gain_weight * z and
/// shift = shift_bias + shift_weight * z. Training mode normalizes with
/// batch statistics; evaluation mode uses the running averages, which makes
/// the layer pointwise.
class ConditionalNorm {
 public:
  struct Cache {
    Tensor normalized;
    std::vector<double> inv_std;  // per channel
    std::vector<double> gain;     // n x c
    std::vector<double> batch_mean;
    std::vector<double> batch_var;
    bool training = false;
  };

  ConditionalNorm() = default;
  ConditionalNorm(const std::string& name, int channels, int cond_dim, bool conditional);

  // Training mode needs a cache: it records the batch statistics that
  // update_running_stats() folds into the running averages.
  Tensor forward(const Tensor& x, const std::vector<const std::vector<double>*>& cond,
                 bool training, Cache* cache) const;
  void update_running_stats(const Cache& cache);
  Tensor backward(const Cache& cache, const Tensor& grad_out,
                  const std::vector<const std::vector<double>*>& cond);

  void init(std::mt19937_64& rng);
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::vector<Param*> buffers();

  bool conditional() const noexcept { return conditional_; }

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  Param gain_weight;
  Param gain_bias;
  Param shift_weight;
  Param shift_bias;
  Param running_mean;
  Param running_var;

 private:
  void modulation(const std::vector<double>& z, std::vector<double>& gain,
                  std::vector<double>& shift) const;
  Tensor apply(const Tensor& x, const std::vector<double>& mean, const std::vector<double>& inv_std,
               const std::vector<const std::vector<double>*>& cond, Cache* cache) const;

  int channels_ = 0;
  int cond_dim_ = 0;
  bool conditional_ = true;
};

Tensor relu(const Tensor& x);
// Gradient of relu evaluated at its input x.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor tanh_forward(const Tensor& x);
// Gradient of tanh given its output y.
Tensor tanh_backward(const Tensor& y, const Tensor& grad_out);

Tensor upsample_nearest(const Tensor& x, int fh, int fw);
Tensor upsample_nearest_backward(const Tensor& grad_out, int fh, int fw);

// 2x2 average pool, stride 2; trailing odd rows/columns are dropped.
Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& grad_out, const Shape4& input_shape);

/// Max pool with kernel == stride; partial windows at the right/bottom
/// edge are kept (ceil mode).
struct MaxPoolResult {
  Tensor out;
  std::vector<std::uint32_t> argmax;  // flat index into the input sample plane
};
MaxPoolResult max_pool(const Tensor& x, int kh, int kw);
Tensor max_pool_backward(const MaxPoolResult& fwd, const Tensor& grad_out, const Shape4& input_shape);

}  // namespace scrabble
