#pragma once

#include "imitlab/simd.hpp"

namespace imitlab::simd::detail {

// Defined in kernels_avx2.cpp, which is built with -mavx2 -mfma. Only call
// after a runtime CPU check.
const KernelTable& avx2_table() noexcept;

}  // namespace imitlab::simd::detail
