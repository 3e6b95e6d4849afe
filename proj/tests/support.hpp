#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/random.hpp"
#include "imitlab/synthgen.hpp"

namespace testing {

// Small learner settings so pool-level tests stay fast.
inline imitlab::learner::TrainConfig quick_learner(std::uint64_t seed = 7) {
  imitlab::learner::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = seed;
  return cfg;
}

inline imitlab::Dataset blobs(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  imitlab::Rng rng(seed);
  return imitlab::synthgen::gaussian_blobs(n, d, classes, rng);
}

// Largest |a - n| / max(1e-8, |a| + |n|) over all entries; the symmetric form
// keeps near-zero gradients from dominating.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(1e-8, std::fabs(analytic[i]) + std::fabs(numeric[i]));
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

// Central differences of f over params, step h.
inline std::vector<double> numeric_gradient(std::span<double> params, const std::function<double()>& f,
                                            double h = 1e-5) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Exact two-sided signed-rank p by enumerating all 2^n sign assignments of
// the midranks of |x - y| (zero differences dropped).
inline double brute_wilcoxon(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] - ys[i] != 0.0) d.push_back(xs[i] - ys[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) below += 1;
      if (std::fabs(d[j]) == std::fabs(d[i])) equal += 1;
    }
    rank[i] = below + (equal + 1) / 2.0;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w += rank[i];
  double le = 0, ge = 0;
  const double total = std::ldexp(1.0, static_cast<int>(n));
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank[i];
    if (s <= w + 1e-9) le += 1;
    if (s >= w - 1e-9) ge += 1;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace testing
