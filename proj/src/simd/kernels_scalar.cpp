#include "simd_internal.hpp"

#include <cmath>

namespace imitlab::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void matvec_scalar(const double* weights, const double* bias, const double* x, double* out,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = bias[r] + dot_scalar(weights + r * cols, x, cols);
}

void adam_update_scalar(double* params, const double* grads, double* m, double* v, std::size_t n,
                        double lr, double beta1, double beta2, double bias1, double bias2,
                        double eps) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar",           dot_scalar,    axpy_scalar,
                                 squared_distance_scalar, matvec_scalar, adam_update_scalar};
  return table;
}

}  // namespace imitlab::simd
