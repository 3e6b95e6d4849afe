#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/pool.hpp"
#include "imitlab/random.hpp"

namespace imitlab::encoding {

enum class Metric { kEuclidean, kCosine };

inline constexpr std::size_t kDefaultMetricThreshold = 50;
inline constexpr std::size_t kDefaultDuCap = 1000;
inline constexpr std::size_t kTupleWidth = 5;
// Tag stored next to trained policies; names the candidate ordering below.
inline constexpr const char* kCanonicalOrderTag = "u1-desc-index-asc";

// Euclidean up to `threshold` features, cosine above.
Metric metric_for(std::size_t n_features, std::size_t threshold = kDefaultMetricThreshold);

// Euclidean distance, or cosine distance 1 - cos(a, b) clamped to [0, 2].
// Cosine distance to or between zero vectors is 0 for two zeros, 1 otherwise.
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

// Three largest class probabilities, descending, zero-filled below C = 3.
std::array<double, 3> uncertainty_tuple(std::span<const double> probabilities);
std::array<double, 3> uncertainty_tuple(std::span<const double> x, const learner::Classifier& classifier);

// Mean distance from x to the labeled rows. Throws kEmptyLabeledSet.
double avg_dist_labeled(std::span<const double> x, const Dataset& data, std::span<const std::size_t> labeled,
                        Metric metric);

// Reference sample for du: all of U (ascending) when |U| <= cap, otherwise
// `cap` members drawn uniformly from ascending U with `seed`.
std::vector<std::size_t> du_reference(std::span<const std::size_t> unlabeled, std::size_t cap, std::uint64_t seed);

// Mean distance from row x_index to the du reference of U, excluding x
// itself; 0 when nothing else remains. Throws kEmptyUnlabeledSet.
double avg_dist_unlabeled(std::size_t x_index, const Dataset& data, std::span<const std::size_t> unlabeled,
                          Metric metric, std::size_t cap = kDefaultDuCap, std::uint64_t seed = 0);

struct CandidateSet {
  std::vector<std::size_t> indices;  // the winning draw, in draw order
  std::size_t k = 0;
  std::size_t j = 0;
  std::vector<std::vector<std::size_t>> draws;
  std::vector<double> draw_scores;  // sum of dl over each draw
  std::size_t evaluated = 0;        // samples whose dl was computed
};

// j random subsets of U of size min(k, |U|); keeps the one with the largest
// summed labeled-distance, earliest draw on ties. Throws kEmptyPool.
CandidateSet pre_select(const al::PoolState& pool, std::size_t j, std::size_t k, Rng& rng, Metric metric);

struct EncodingOptions {
  std::size_t metric_threshold = kDefaultMetricThreshold;
  std::size_t du_cap = kDefaultDuCap;
  std::uint64_t du_seed = 0;
};

struct EncodedState {
  std::size_t k = 0;
  // k consecutive (u1, u2, u3, dl, du) tuples, zero tuples past `populated`.
  std::vector<double> values;
  // Candidate sample indices in encoding order.
  std::vector<std::size_t> candidates;

  std::size_t populated() const noexcept { return candidates.size(); }
};

// Canonical order: descending u1, ascending sample index on ties.
EncodedState encode_state(const al::PoolState& pool, std::span<const std::size_t> candidates, std::size_t k,
                          const learner::Classifier& classifier, const EncodingOptions& options = {});

}  // namespace imitlab::encoding
