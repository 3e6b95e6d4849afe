#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string_view>
#include <vector>

#include "imitlab/random.hpp"
#include "imitlab/simd.hpp"

using namespace imitlab;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_real(rng, -2.0, 2.0);
  return v;
}

bool close(double a, double b, double scale) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, scale); }

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar kernels on hand values") {
    const auto& k = simd::scalar_kernels();
    const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
    CHECK(k.dot(a, b, 3) == 12.0);
    CHECK(k.squared_distance(a, b, 3) == 9.0 + 49.0 + 9.0);
    double y[] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    CHECK(y[2] == 7.0);
    const double w[] = {1, 0, 0, 0, 1, 1};
    const double bias[] = {0.5, -1};
    double out[2];
    k.matvec(w, bias, a, out, 2, 3);
    CHECK(out[0] == 1.5);
    CHECK(out[1] == 4.0);
  }

  TEST_CASE("environment override selects scalar") {
    const char* forced = std::getenv("IMITLAB_SIMD");
    if (forced && std::string_view(forced) == "scalar") CHECK(simd::active().name == simd::scalar_kernels().name);
    if (!simd::avx2_kernels()) CHECK(simd::active().name == simd::scalar_kernels().name);
  }

  TEST_CASE("vector kernels agree with the scalar reference") {
    const auto* fast = simd::avx2_kernels();
    if (!fast) {
      MESSAGE("no vectorized table on this CPU");
      return;
    }
    const auto& ref = simd::scalar_kernels();
    Rng rng(11);
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = random_vector(n, rng), b = random_vector(n, rng);
      CHECK(close(ref.dot(a.data(), b.data(), n), fast->dot(a.data(), b.data(), n), double(n)));
      CHECK(close(ref.squared_distance(a.data(), b.data(), n), fast->squared_distance(a.data(), b.data(), n),
                  double(n)));
      auto y1 = b, y2 = b;
      ref.axpy(0.7, a.data(), y1.data(), n);
      fast->axpy(0.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1.0));
    }
    for (std::size_t rows : {1u, 3u, 4u, 5u, 9u}) {
      for (std::size_t cols : {1u, 4u, 7u, 33u}) {
        const auto w = random_vector(rows * cols, rng), x = random_vector(cols, rng), bias = random_vector(rows, rng);
        std::vector<double> o1(rows), o2(rows);
        ref.matvec(w.data(), bias.data(), x.data(), o1.data(), rows, cols);
        fast->matvec(w.data(), bias.data(), x.data(), o2.data(), rows, cols);
        for (std::size_t r = 0; r < rows; ++r) CHECK(close(o1[r], o2[r], double(cols)));
      }
    }
    for (std::size_t n : {1u, 4u, 13u, 64u}) {
      auto p1 = random_vector(n, rng), g = random_vector(n, rng), m1 = random_vector(n, rng);
      std::vector<double> v1(n);
      for (auto& v : v1) v = uniform_real(rng, 0.0, 1.0);
      auto p2 = p1, m2 = m1, v2 = v1;
      ref.adam_update(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 0.19, 0.002, 1e-8);
      fast->adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 0.19, 0.002, 1e-8);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(close(p1[i], p2[i], 1.0));
        CHECK(close(m1[i], m2[i], 1.0));
        CHECK(close(v1[i], v2[i], 1.0));
      }
    }
  }
}
