#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, where
// the CPU allows, a SIMD variant picked at runtime. The gemm/axpy/adam
// variants accumulate each output element in the same order with fused
// multiply-adds, so SIMD and scalar results agree bit for bit; only the
// reductions (sum, sum of squares) are allowed to differ by rounding.

#include <cstddef>
#include <string_view>

namespace scrabble::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  const char* name;
  // C[m x n] += A[m x k] * B[k x n], all row-major with explicit leading dims.
  void (*gemm)(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
               int ldc);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  void (*adam)(std::size_t n, const AdamCoeffs& coeffs, double* param, const double* grad,
               double* m, double* v);
  double (*sum)(std::size_t n, const double* x);
  // sum_i (x_i - mean)^2
  double (*sum_sq_dev)(std::size_t n, const double* x, double mean);
};

const KernelTable& scalar_table();
// nullptr when the SIMD variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

// Chosen once at first use: AVX2+FMA when available, unless the environment
// variable SCRABBLE_KERNELS=scalar forces the reference path.
const KernelTable& active();
// Overrides the active table ("scalar" or "avx2"); returns false if the
// requested variant is unavailable.
bool select(std::string_view name);

}  // namespace scrabble::kernels
