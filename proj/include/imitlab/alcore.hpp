#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/encoding.hpp"
#include "imitlab/pool.hpp"
#include "imitlab/random.hpp"

namespace imitlab::al {

// A query strategy maps a pool state to a batch of unlabeled indices. It may
// not modify the pool; the AL loop does the labeling.
class QueryStrategy {
 public:
  virtual ~QueryStrategy() = default;
  virtual std::string_view name() const = 0;
  virtual Query select(const PoolState& pool, std::size_t b, Rng& rng) const = 0;
};

Query random_query(const PoolState& pool, std::size_t b, Rng& rng);
// Smallest max-class probability first.
Query lc_query(const PoolState& pool, std::size_t b);
// Largest predictive entropy (natural log) first.
Query entropy_query(const PoolState& pool, std::size_t b);

inline constexpr std::size_t kDefaultCommitteeSize = 4;

// Committee members train on bootstrap resamples of L with distinct seeds;
// ranks U by vote entropy of their argmax predictions.
Query qbc_query(const PoolState& pool, std::size_t b, std::size_t committee_size, Rng& rng);

// Greedy b picks maximizing mean distance to L, each pick joining L for the
// next one.
Query gd_query(const PoolState& pool, std::size_t b,
               std::size_t metric_threshold = encoding::kDefaultMetricThreshold);

double shannon_entropy(std::span<const double> distribution);

// Baselines: "random", "lc", "entropy", "qbc", "gd". Throws
// kInvalidArgument for other names.
std::unique_ptr<QueryStrategy> make_baseline(std::string_view name);

struct EpisodeResult {
  LearningCurve curve;
  std::vector<double> query_seconds;               // per cycle, selection only
  std::vector<std::size_t> candidates_evaluated;   // per cycle
  std::vector<std::size_t> initial_labeled;
};

// Runs up to `cycles` rounds of select -> label -> refit -> score on `test`,
// stopping early once U is empty.
EpisodeResult al_loop(PoolState& pool, const QueryStrategy& strategy, std::size_t b, std::size_t cycles,
                      const Dataset& test, Rng& rng);

}  // namespace imitlab::al
