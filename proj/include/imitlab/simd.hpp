#pragma once

#include <cstddef>
#include <string_view>

namespace imitlab::simd {

// Element-wise kernels used by the dense layers and the distance code.
// Every entry has a scalar reference implementation; vectorized variants
// must agree with it to rounding (see tests/test_simd.cpp).
struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out[r] = bias[r] + dot(weights + r * cols, x), for r in [0, rows)
  void (*matvec)(const double* weights, const double* bias, const double* x, double* out,
                 std::size_t rows, std::size_t cols);
  // One bias-corrected adaptive-moment step over n parameters.
  void (*adam_update)(double* params, const double* grads, double* m, double* v, std::size_t n,
                      double lr, double beta1, double beta2, double bias1, double bias2, double eps);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels() noexcept;

// Best table for this CPU. IMITLAB_SIMD=scalar in the environment forces the
// reference kernels. The choice is made once per process.
const KernelTable& active() noexcept;

}  // namespace imitlab::simd
