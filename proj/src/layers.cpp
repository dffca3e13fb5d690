#include "scrabble/layers.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "scrabble/kernels.hpp"

namespace scrabble {
namespace {

// Spatial positions processed per im2col chunk; bounds scratch memory.
constexpr int kChunk = 1024;

void check_channels(const Tensor& x, int expected, const std::string& who) {
  if (x.c() != expected) {
    throw std::invalid_argument(who + ": expected " + std::to_string(expected) +
                                " input channels, got " + std::to_string(x.c()));
  }
}

// col[(ci*k + ky)*k + kx][p - p0] for output positions p in [p0, p1).
void im2col(const double* x, int channels, int h, int w, int k, int p0, int p1, double* col) {
  const int pad = k / 2;
  const int len = p1 - p0;
  for (int ci = 0; ci < channels; ++ci) {
    const double* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * len;
        // Walk output rows; each row segment is a shifted copy with zero edges.
        int p = p0;
        while (p < p1) {
          const int oy = p / w;
          const int ox0 = p - oy * w;
          const int ox1 = std::min(w, ox0 + (p1 - p));
          double* dst = row + (p - p0) - ox0;
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) {
            std::fill(dst + ox0, dst + ox1, 0.0);
          } else {
            const double* src = plane + static_cast<std::size_t>(iy) * w + (kx - pad);
            const int lo = std::clamp(pad - kx, ox0, ox1);
            const int hi = std::clamp(w + pad - kx, lo, ox1);
            std::fill(dst + ox0, dst + lo, 0.0);
            std::copy(src + lo, src + hi, dst + lo);
            std::fill(dst + hi, dst + ox1, 0.0);
          }
          p += ox1 - ox0;
        }
      }
    }
  }
}

void col2im_add(const double* col, int channels, int h, int w, int k, int p0, int p1, double* x) {
  const int pad = k / 2;
  const int len = p1 - p0;
  for (int ci = 0; ci < channels; ++ci) {
    double* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * len;
        for (int p = p0; p < p1; ++p) {
          const int oy = p / w;
          const int ox = p - oy * w;
          const int iy = oy + ky - pad;
          const int ix = ox + kx - pad;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
            plane[static_cast<std::size_t>(iy) * w + ix] += row[p - p0];
          }
        }
      }
    }
  }
}

}  // namespace

Param::Param(std::string n, std::vector<int> s, double fill) : name(std::move(n)), shape(std::move(s)) {
  std::size_t total = 1;
  for (int d : shape) total *= static_cast<std::size_t>(d);
  value.assign(total, fill);
  grad.assign(total, 0.0);
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void orthogonal_init(Param& p, int rows, int cols, std::mt19937_64& rng, double gain) {
  if (static_cast<std::size_t>(rows) * cols != p.size()) {
    throw std::invalid_argument("orthogonal_init: size mismatch for " + p.name);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = rows >= cols ? q(i, j) : q(j, i);
      p.value[static_cast<std::size_t>(i) * cols + j] = gain * v;
    }
  }
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

std::uint64_t hash_params(const std::vector<const Param*>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Param* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (std::size_t i = 0; i < p->value.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::size_t count_params(const std::vector<const Param*>& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += p->size();
  return n;
}

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel)
    : weight(name + ".weight", {out_channels, in_channels, kernel, kernel}),
      bias(name + ".bias", {out_channels}),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel) {
  if (kernel % 2 == 0) throw std::invalid_argument("Conv2d kernel must be odd");
}

void Conv2d::init(std::mt19937_64& rng, double gain) {
  orthogonal_init(weight, out_c_, in_c_ * k_ * k_, rng, gain);
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

Tensor Conv2d::forward(const Tensor& x) const {
  check_channels(x, in_c_, weight.name);
  const auto& kt = kernels::active();
  const int h = x.h();
  const int w = x.w();
  const int positions = h * w;
  const int ck = in_c_ * k_ * k_;
  Tensor y(x.n(), out_c_, h, w);
  std::vector<double> col;
  for (int n = 0; n < x.n(); ++n) {
    double* yn = y.sample(n);
    for (int o = 0; o < out_c_; ++o) {
      std::fill_n(yn + static_cast<std::size_t>(o) * positions, positions, bias.value[o]);
    }
    if (k_ == 1) {
      kt.gemm(out_c_, positions, in_c_, weight.value.data(), in_c_, x.sample(n), positions, yn,
              positions);
      continue;
    }
    for (int p0 = 0; p0 < positions; p0 += kChunk) {
      const int p1 = std::min(positions, p0 + kChunk);
      col.resize(static_cast<std::size_t>(ck) * (p1 - p0));
      im2col(x.sample(n), in_c_, h, w, k_, p0, p1, col.data());
      kt.gemm(out_c_, p1 - p0, ck, weight.value.data(), ck, col.data(), p1 - p0, yn + p0,
              positions);
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& grad_out) {
  check_channels(x, in_c_, weight.name);
  const auto& kt = kernels::active();
  const int h = x.h();
  const int w = x.w();
  const int positions = h * w;
  const int ck = in_c_ * k_ * k_;
  Tensor gx(x.shape());

  std::vector<double> wt(static_cast<std::size_t>(ck) * out_c_);
  transpose(weight.value.data(), out_c_, ck, wt.data());
  std::vector<double> col, colt, dcol, gyt;

  for (int n = 0; n < x.n(); ++n) {
    const double* gy = grad_out.sample(n);
    for (int o = 0; o < out_c_; ++o) {
      const double* row = gy + static_cast<std::size_t>(o) * positions;
      bias.grad[o] += kt.sum(positions, row);
    }
    if (k_ == 1) {
      // dW += gy * x^T ; dx = W^T * gy
      colt.resize(static_cast<std::size_t>(positions) * in_c_);
      transpose(x.sample(n), in_c_, positions, colt.data());
      kt.gemm(out_c_, in_c_, positions, gy, positions, colt.data(), in_c_, weight.grad.data(),
              in_c_);
      kt.gemm(in_c_, positions, out_c_, wt.data(), out_c_, gy, positions, gx.sample(n), positions);
      continue;
    }
    for (int p0 = 0; p0 < positions; p0 += kChunk) {
      const int p1 = std::min(positions, p0 + kChunk);
      const int len = p1 - p0;
      col.resize(static_cast<std::size_t>(ck) * len);
      colt.resize(col.size());
      im2col(x.sample(n), in_c_, h, w, k_, p0, p1, col.data());
      transpose(col.data(), ck, len, colt.data());
      kt.gemm(out_c_, ck, len, gy + p0, positions, colt.data(), ck, weight.grad.data(), ck);
      dcol.assign(col.size(), 0.0);
      kt.gemm(ck, len, out_c_, wt.data(), out_c_, gy + p0, positions, dcol.data(), len);
      col2im_add(dcol.data(), in_c_, h, w, k_, p0, p1, gx.sample(n));
    }
  }
  return gx;
}

ConditionalNorm::ConditionalNorm(const std::string& name, int channels, int cond_dim,
                                 bool conditional)
    : gain_weight(name + ".gain.weight", {channels, cond_dim}),
      gain_bias(name + ".gain.bias", {channels}, 1.0),
      shift_weight(name + ".shift.weight", {channels, cond_dim}),
      shift_bias(name + ".shift.bias", {channels}, 0.0),
      running_mean(name + ".running_mean", {channels}, 0.0),
      running_var(name + ".running_var", {channels}, 1.0),
      channels_(channels),
      cond_dim_(cond_dim),
      conditional_(conditional) {}

void ConditionalNorm::init(std::mt19937_64& rng) {
  orthogonal_init(gain_weight, channels_, cond_dim_, rng);
  orthogonal_init(shift_weight, channels_, cond_dim_, rng);
  std::fill(gain_bias.value.begin(), gain_bias.value.end(), 1.0);
  std::fill(shift_bias.value.begin(), shift_bias.value.end(), 0.0);
}

std::vector<Param*> ConditionalNorm::params() {
  if (conditional_) return {&gain_weight, &gain_bias, &shift_weight, &shift_bias};
  return {&gain_bias, &shift_bias};
}

std::vector<const Param*> ConditionalNorm::params() const {
  if (conditional_) return {&gain_weight, &gain_bias, &shift_weight, &shift_bias};
  return {&gain_bias, &shift_bias};
}

std::vector<Param*> ConditionalNorm::buffers() { return {&running_mean, &running_var}; }

void ConditionalNorm::modulation(const std::vector<double>& z, std::vector<double>& gain,
                                 std::vector<double>& shift) const {
  gain.assign(gain_bias.value.begin(), gain_bias.value.end());
  shift.assign(shift_bias.value.begin(), shift_bias.value.end());
  if (!conditional_) return;
  if (static_cast<int>(z.size()) != cond_dim_) {
    throw std::invalid_argument(gain_weight.name + ": conditioning vector has wrong dimension");
  }
  for (int c = 0; c < channels_; ++c) {
    const double* gw = gain_weight.value.data() + static_cast<std::size_t>(c) * cond_dim_;
    const double* sw = shift_weight.value.data() + static_cast<std::size_t>(c) * cond_dim_;
    double g = 0.0;
    double s = 0.0;
    for (int i = 0; i < cond_dim_; ++i) {
      g += gw[i] * z[i];
      s += sw[i] * z[i];
    }
    gain[c] += g;
    shift[c] += s;
  }
}

Tensor ConditionalNorm::apply(const Tensor& x, const std::vector<double>& mean,
                              const std::vector<double>& inv_std,
                              const std::vector<const std::vector<double>*>& cond,
                              Cache* cache) const {
  if (static_cast<int>(cond.size()) != x.n()) {
    throw std::invalid_argument(gain_weight.name + ": one conditioning vector per sample required");
  }
  Tensor y(x.shape());
  const std::size_t plane = x.shape().plane();
  std::vector<double> gain, shift;
  if (cache) {
    cache->normalized = Tensor(x.shape());
    cache->inv_std = inv_std;
    cache->gain.assign(static_cast<std::size_t>(x.n()) * channels_, 0.0);
  }
  for (int n = 0; n < x.n(); ++n) {
    modulation(*cond[static_cast<std::size_t>(n)], gain, shift);
    for (int c = 0; c < channels_; ++c) {
      const double* xp = x.plane(n, c);
      double* yp = y.plane(n, c);
      double* np = cache ? cache->normalized.plane(n, c) : nullptr;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (xp[i] - mean[c]) * inv_std[c];
        if (np) np[i] = xhat;
        yp[i] = gain[c] * xhat + shift[c];
      }
      if (cache) cache->gain[static_cast<std::size_t>(n) * channels_ + c] = gain[c];
    }
  }
  return y;
}

Tensor ConditionalNorm::forward(const Tensor& x,
                                const std::vector<const std::vector<double>*>& cond, bool training,
                                Cache* cache) const {
  check_channels(x, channels_, gain_bias.name);
  std::vector<double> mean(channels_), var(channels_), inv_std(channels_);
  if (training) {
    if (!cache) throw std::invalid_argument(gain_bias.name + ": training forward needs a cache");
    const auto& kt = kernels::active();
    const std::size_t plane = x.shape().plane();
    const double count = static_cast<double>(plane) * x.n();
    for (int c = 0; c < channels_; ++c) {
      double s = 0.0;
      for (int n = 0; n < x.n(); ++n) s += kt.sum(plane, x.plane(n, c));
      mean[c] = s / count;
      double ss = 0.0;
      for (int n = 0; n < x.n(); ++n) ss += kt.sum_sq_dev(plane, x.plane(n, c), mean[c]);
      var[c] = ss / count;
    }
  } else {
    mean = running_mean.value;
    var = running_var.value;
  }
  for (int c = 0; c < channels_; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kEps);
  Tensor y = apply(x, mean, inv_std, cond, cache);
  if (cache) {
    cache->training = training;
    cache->batch_mean = std::move(mean);
    cache->batch_var = std::move(var);
  }
  return y;
}

void ConditionalNorm::update_running_stats(const Cache& cache) {
  if (!cache.training) return;
  for (int c = 0; c < channels_; ++c) {
    running_mean.value[c] = (1.0 - kMomentum) * running_mean.value[c] + kMomentum * cache.batch_mean[c];
    running_var.value[c] = (1.0 - kMomentum) * running_var.value[c] + kMomentum * cache.batch_var[c];
  }
}

Tensor ConditionalNorm::backward(const Cache& cache, const Tensor& grad_out,
                                 const std::vector<const std::vector<double>*>& cond) {
  const Shape4& s = grad_out.shape();
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(plane) * s.n;
  Tensor gx(s);
  for (int c = 0; c < channels_; ++c) {
    // Per-sample modulation gradients, then the normalization backward.
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* g = grad_out.plane(n, c);
      const double* xh = cache.normalized.plane(n, c);
      const double gain = cache.gain[static_cast<std::size_t>(n) * channels_ + c];
      double dgain = 0.0;
      double dshift = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        dgain += g[i] * xh[i];
        dshift += g[i];
      }
      gain_bias.grad[c] += dgain;
      shift_bias.grad[c] += dshift;
      if (conditional_) {
        const auto& z = *cond[static_cast<std::size_t>(n)];
        double* gw = gain_weight.grad.data() + static_cast<std::size_t>(c) * cond_dim_;
        double* sw = shift_weight.grad.data() + static_cast<std::size_t>(c) * cond_dim_;
        for (int i = 0; i < cond_dim_; ++i) {
          gw[i] += dgain * z[i];
          sw[i] += dshift * z[i];
        }
      }
      sum_dxhat += gain * dshift;
      sum_dxhat_xhat += gain * dgain;
    }
    const double inv_std = cache.inv_std[c];
    for (int n = 0; n < s.n; ++n) {
      const double* g = grad_out.plane(n, c);
      const double* xh = cache.normalized.plane(n, c);
      const double gain = cache.gain[static_cast<std::size_t>(n) * channels_ + c];
      double* out = gx.plane(n, c);
      if (cache.training) {
        for (std::size_t i = 0; i < plane; ++i) {
          const double dxhat = g[i] * gain;
          out[i] = inv_std * (dxhat - sum_dxhat / count - xh[i] * sum_dxhat_xhat / count);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) out[i] = g[i] * gain * inv_std;
      }
    }
  }
  return gx;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  const double* in = x.data();
  double* out = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g.data()[i] = x.data()[i] > 0.0 ? grad_out.data()[i] : 0.0;
  return g;
}

Tensor tanh_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = std::tanh(x.data()[i]);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& grad_out) {
  Tensor g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    g.data()[i] = grad_out.data()[i] * (1.0 - v * v);
  }
  return g;
}

Tensor upsample_nearest(const Tensor& x, int fh, int fw) {
  if (fh == 1 && fw == 1) return x;
  Tensor y(x.n(), x.c(), x.h() * fh, x.w() * fw);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* in = x.plane(n, c);
      double* out = y.plane(n, c);
      for (int oy = 0; oy < y.h(); ++oy) {
        const double* irow = in + static_cast<std::size_t>(oy / fh) * x.w();
        double* orow = out + static_cast<std::size_t>(oy) * y.w();
        for (int ox = 0; ox < y.w(); ++ox) orow[ox] = irow[ox / fw];
      }
    }
  }
  return y;
}

Tensor upsample_nearest_backward(const Tensor& grad_out, int fh, int fw) {
  if (fh == 1 && fw == 1) return grad_out;
  Tensor g(grad_out.n(), grad_out.c(), grad_out.h() / fh, grad_out.w() / fw);
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < g.c(); ++c) {
      const double* in = grad_out.plane(n, c);
      double* out = g.plane(n, c);
      for (int oy = 0; oy < grad_out.h(); ++oy) {
        const double* irow = in + static_cast<std::size_t>(oy) * grad_out.w();
        double* orow = out + static_cast<std::size_t>(oy / fh) * g.w();
        for (int ox = 0; ox < grad_out.w(); ++ox) orow[ox / fw] += irow[ox];
      }
    }
  }
  return g;
}

Tensor avg_pool2(const Tensor& x) {
  Tensor y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* in = x.plane(n, c);
      double* out = y.plane(n, c);
      for (int oy = 0; oy < y.h(); ++oy) {
        const double* r0 = in + static_cast<std::size_t>(2 * oy) * x.w();
        const double* r1 = r0 + x.w();
        for (int ox = 0; ox < y.w(); ++ox) {
          out[static_cast<std::size_t>(oy) * y.w() + ox] =
              0.25 * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
        }
      }
    }
  }
  return y;
}

Tensor avg_pool2_backward(const Tensor& grad_out, const Shape4& input_shape) {
  Tensor g(input_shape);
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < g.c(); ++c) {
      const double* in = grad_out.plane(n, c);
      double* out = g.plane(n, c);
      for (int oy = 0; oy < grad_out.h(); ++oy) {
        double* r0 = out + static_cast<std::size_t>(2 * oy) * g.w();
        double* r1 = r0 + g.w();
        for (int ox = 0; ox < grad_out.w(); ++ox) {
          const double v = 0.25 * in[static_cast<std::size_t>(oy) * grad_out.w() + ox];
          r0[2 * ox] += v;
          r0[2 * ox + 1] += v;
          r1[2 * ox] += v;
          r1[2 * ox + 1] += v;
        }
      }
    }
  }
  return g;
}

MaxPoolResult max_pool(const Tensor& x, int kh, int kw) {
  const int oh = (x.h() + kh - 1) / kh;
  const int ow = (x.w() + kw - 1) / kw;
  MaxPoolResult r{Tensor(x.n(), x.c(), oh, ow), {}};
  r.argmax.resize(r.out.size());
  std::size_t k = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* in = x.plane(n, c);
      double* out = r.out.plane(n, c);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++k) {
          const int y0 = oy * kh;
          const int x0 = ox * kw;
          const int y1 = std::min(x.h(), y0 + kh);
          const int x1 = std::min(x.w(), x0 + kw);
          std::uint32_t best = static_cast<std::uint32_t>(y0 * x.w() + x0);
          double bv = in[best];
          for (int yy = y0; yy < y1; ++yy) {
            for (int xx = x0; xx < x1; ++xx) {
              const auto idx = static_cast<std::uint32_t>(yy * x.w() + xx);
              if (in[idx] > bv) {
                bv = in[idx];
                best = idx;
              }
            }
          }
          out[static_cast<std::size_t>(oy) * ow + ox] = bv;
          r.argmax[k] = best;
        }
      }
    }
  }
  return r;
}

Tensor max_pool_backward(const MaxPoolResult& fwd, const Tensor& grad_out, const Shape4& input_shape) {
  Tensor g(input_shape);
  std::size_t k = 0;
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < g.c(); ++c) {
      const double* in = grad_out.plane(n, c);
      double* out = g.plane(n, c);
      for (std::size_t i = 0; i < grad_out.shape().plane(); ++i, ++k) out[fwd.argmax[k]] += in[i];
    }
  }
  return g;
}

}  // namespace scrabble
