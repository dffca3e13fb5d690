#include <algorithm>
#include <cmath>
#include <vector>

#include "scrabble/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define SCRABBLE_HAVE_X86 1
#else
#define SCRABBLE_HAVE_X86 0
#endif

namespace scrabble::kernels {

#if SCRABBLE_HAVE_X86
namespace {

#define SCRABBLE_AVX2 __attribute__((target("avx2,fma")))

constexpr int kBlockK = 256;
constexpr int kBlockM = 96;  // multiple of the 6-row tile

// 6 rows x 8 columns of C held in registers across a k-block. Both
// operands are packed: 6 doubles of A and 8 of B per k.
SCRABBLE_AVX2 inline void micro_6x8(int kc, const double* a, const double* b, double* c, int ldc) {
  __m256d c00 = _mm256_loadu_pd(c);
  __m256d c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc);
  __m256d c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc);
  __m256d c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc);
  __m256d c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  __m256d c40 = _mm256_loadu_pd(c + 4 * ldc);
  __m256d c41 = _mm256_loadu_pd(c + 4 * ldc + 4);
  __m256d c50 = _mm256_loadu_pd(c + 5 * ldc);
  __m256d c51 = _mm256_loadu_pd(c + 5 * ldc + 4);
  for (int p = 0; p < kc; ++p) {
    const double* ap = a + 6 * p;
    const __m256d b0 = _mm256_loadu_pd(b + 8 * p);
    const __m256d b1 = _mm256_loadu_pd(b + 8 * p + 4);
    __m256d av = _mm256_broadcast_sd(ap + 0);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(ap + 1);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(ap + 2);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(ap + 3);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
    av = _mm256_broadcast_sd(ap + 4);
    c40 = _mm256_fmadd_pd(av, b0, c40);
    c41 = _mm256_fmadd_pd(av, b1, c41);
    av = _mm256_broadcast_sd(ap + 5);
    c50 = _mm256_fmadd_pd(av, b0, c50);
    c51 = _mm256_fmadd_pd(av, b1, c51);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
  _mm256_storeu_pd(c + 4 * ldc, c40);
  _mm256_storeu_pd(c + 4 * ldc + 4, c41);
  _mm256_storeu_pd(c + 5 * ldc, c50);
  _mm256_storeu_pd(c + 5 * ldc + 4, c51);
}

SCRABBLE_AVX2 inline void micro_1x8(int kc, const double* a, const double* b, double* c) {
  __m256d c0 = _mm256_loadu_pd(c);
  __m256d c1 = _mm256_loadu_pd(c + 4);
  for (int p = 0; p < kc; ++p) {
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + 8 * p), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + 8 * p + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

SCRABBLE_AVX2 inline void micro_1x4(int p0, int p1, const double* a, const double* b, int ldb,
                                    double* c) {
  __m256d c0 = _mm256_loadu_pd(c);
  for (int p = p0; p < p1; ++p) {
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<std::ptrdiff_t>(p) * ldb), c0);
  }
  _mm256_storeu_pd(c, c0);
}

SCRABBLE_AVX2 inline void micro_1x1(int p0, int p1, const double* a, const double* b, int ldb,
                                    double* c) {
  double acc = *c;
  for (int p = p0; p < p1; ++p) acc = std::fma(a[p], b[static_cast<std::ptrdiff_t>(p) * ldb], acc);
  *c = acc;
}

// Every C element still accumulates its k terms one fma at a time in
// increasing p, so the result matches the scalar kernel bit for bit.
SCRABBLE_AVX2 void gemm_avx2(int m, int n, int k, const double* a, int lda, const double* b,
                             int ldb, double* c, int ldc) {
  thread_local std::vector<double> panel;
  thread_local std::vector<double> apanel;
  const int n8 = n - n % 8;
  for (int p0 = 0; p0 < k; p0 += kBlockK) {
    const int p1 = std::min(k, p0 + kBlockK);
    const int kc = p1 - p0;
    // Column strips of 8, each stored k-major.
    panel.resize(static_cast<std::size_t>(kc) * std::max(n8, 8));
    for (int j = 0; j < n8; j += 8) {
      double* dst = panel.data() + static_cast<std::ptrdiff_t>(j) * kc;
      for (int p = 0; p < kc; ++p) {
        const double* src = b + static_cast<std::ptrdiff_t>(p0 + p) * ldb + j;
        _mm256_storeu_pd(dst + 8 * p, _mm256_loadu_pd(src));
        _mm256_storeu_pd(dst + 8 * p + 4, _mm256_loadu_pd(src + 4));
      }
    }
    const int m6 = m - m % 6;
    for (int i0 = 0; i0 < m6; i0 += kBlockM) {
      const int i1 = std::min(m6, i0 + kBlockM);
      apanel.resize(static_cast<std::size_t>(i1 - i0) * kc);
      for (int i = i0; i < i1; i += 6) {
        double* dst = apanel.data() + static_cast<std::ptrdiff_t>(i - i0) * kc;
        for (int r = 0; r < 6; ++r) {
          const double* src = a + static_cast<std::ptrdiff_t>(i + r) * lda + p0;
          for (int p = 0; p < kc; ++p) dst[6 * p + r] = src[p];
        }
      }
      for (int j = 0; j < n8; j += 8) {
        const double* strip = panel.data() + static_cast<std::ptrdiff_t>(j) * kc;
        for (int i = i0; i < i1; i += 6) {
          micro_6x8(kc, apanel.data() + static_cast<std::ptrdiff_t>(i - i0) * kc, strip,
                    c + static_cast<std::ptrdiff_t>(i) * ldc + j, ldc);
        }
      }
    }
    for (int j = 0; j < n8; j += 8) {
      const double* strip = panel.data() + static_cast<std::ptrdiff_t>(j) * kc;
      for (int i = m6; i < m; ++i) {
        micro_1x8(kc, a + static_cast<std::ptrdiff_t>(i) * lda + p0, strip,
                  c + static_cast<std::ptrdiff_t>(i) * ldc + j);
      }
    }
    for (int i = 0; i < m; ++i) {
      const double* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
      double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
      int j = n8;
      for (; j + 4 <= n; j += 4) micro_1x4(p0, p1, arow, b + j, ldb, crow + j);
      for (; j < n; ++j) micro_1x1(p0, p1, arow, b + j, ldb, crow + j);
    }
  }
}

SCRABBLE_AVX2 void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

SCRABBLE_AVX2 void adam_avx2(std::size_t n, const AdamCoeffs& c, double* param, const double* grad,
                             double* m, double* v) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
  const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bias1 = _mm256_set1_pd(c.bias1);
  const __m256d bias2 = _mm256_set1_pd(c.bias2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bias1);
    const __m256d vhat = _mm256_div_pd(vi, bias2);
    const __m256d step =
        _mm256_mul_pd(lr, _mm256_div_pd(mhat, _mm256_add_pd(_mm256_sqrt_pd(vhat), eps)));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double mhat = m[i] / c.bias1;
    const double vhat = v[i] / c.bias2;
    param[i] = param[i] - c.lr * (mhat / (std::sqrt(vhat) + c.eps));
  }
}

SCRABBLE_AVX2 double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

SCRABBLE_AVX2 double sum_avx2(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

SCRABBLE_AVX2 double sum_sq_dev_avx2(std::size_t n, const double* x, double mean) {
  const __m256d mv = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), mv);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", gemm_avx2, axpy_avx2, adam_avx2, sum_avx2,
                                 sum_sq_dev_avx2};
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace scrabble::kernels
