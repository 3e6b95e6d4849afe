#include "simd_internal.hpp"

#include <cstdlib>
#include <string_view>

namespace imitlab::simd {

const KernelTable* avx2_kernels() noexcept {
#if defined(IMITLAB_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = []() -> const KernelTable& {
    if (const char* forced = std::getenv("IMITLAB_SIMD"); forced && std::string_view(forced) == "scalar") {
      return scalar_kernels();
    }
    if (const KernelTable* table = avx2_kernels()) return *table;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace imitlab::simd
