#include "imitlab/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "imitlab/error.hpp"
#include "imitlab/simd.hpp"

namespace imitlab::encoding {

Metric metric_for(std::size_t n_features, std::size_t threshold) {
  return n_features <= threshold ? Metric::kEuclidean : Metric::kCosine;
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "distance between rows of different width");
  const auto& k = simd::active();
  if (metric == Metric::kEuclidean) return std::sqrt(k.squared_distance(a.data(), b.data(), a.size()));
  const double aa = k.dot(a.data(), a.data(), a.size());
  const double bb = k.dot(b.data(), b.data(), b.size());
  if (aa == 0.0 || bb == 0.0) return aa == bb ? 0.0 : 1.0;
  const double ab = k.dot(a.data(), b.data(), a.size());
  if (ab == aa && aa == bb) return 0.0;
  return std::clamp(1.0 - ab / (std::sqrt(aa) * std::sqrt(bb)), 0.0, 2.0);
}

std::array<double, 3> uncertainty_tuple(std::span<const double> probabilities) {
  std::array<double, 3> top{0.0, 0.0, 0.0};
  std::vector<double> sorted(probabilities.begin(), probabilities.end());
  const std::size_t m = std::min<std::size_t>(3, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(),
                    std::greater<>());
  std::copy_n(sorted.begin(), m, top.begin());
  return top;
}

std::array<double, 3> uncertainty_tuple(std::span<const double> x, const learner::Classifier& classifier) {
  return uncertainty_tuple(learner::predict_proba(classifier, x));
}

double avg_dist_labeled(std::span<const double> x, const Dataset& data, std::span<const std::size_t> labeled,
                        Metric metric) {
  require(!labeled.empty(), ErrorCode::kEmptyLabeledSet, "dl needs at least one labeled sample");
  double sum = 0.0;
  for (std::size_t l : labeled) sum += distance(x, data.row(l), metric);
  return sum / static_cast<double>(labeled.size());
}

std::vector<std::size_t> du_reference(std::span<const std::size_t> unlabeled, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> sorted(unlabeled.begin(), unlabeled.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() <= cap) return sorted;
  Rng rng(seed);
  auto picked = sample_without_replacement<std::size_t>(sorted, cap, rng);
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

double mean_distance_excluding(std::size_t x_index, const Dataset& data, std::span<const std::size_t> reference,
                               Metric metric) {
  double sum = 0.0;
  std::size_t count = 0;
  const auto x = data.row(x_index);
  for (std::size_t u : reference) {
    if (u == x_index) continue;
    sum += distance(x, data.row(u), metric);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

double avg_dist_unlabeled(std::size_t x_index, const Dataset& data, std::span<const std::size_t> unlabeled,
                          Metric metric, std::size_t cap, std::uint64_t seed) {
  require(!unlabeled.empty(), ErrorCode::kEmptyUnlabeledSet, "du needs a non-empty unlabeled set");
  return mean_distance_excluding(x_index, data, du_reference(unlabeled, cap, seed), metric);
}

CandidateSet pre_select(const al::PoolState& pool, std::size_t j, std::size_t k, Rng& rng, Metric metric) {
  require(j >= 1 && k >= 1, ErrorCode::kInvalidArgument, "pre-selection needs j >= 1 and k >= 1");
  const auto& unlabeled = pool.unlabeled();
  require(!unlabeled.empty(), ErrorCode::kEmptyPool, "no unlabeled samples left");
  const Dataset& data = pool.dataset();
  const std::size_t size = std::min(k, unlabeled.size());

  CandidateSet out;
  out.k = k;
  out.j = j;
  std::size_t best = 0;
  for (std::size_t draw = 0; draw < j; ++draw) {
    auto subset = sample_without_replacement<std::size_t>(unlabeled, size, rng);
    double score = 0.0;
    for (std::size_t x : subset) score += avg_dist_labeled(data.row(x), data, pool.labeled(), metric);
    out.evaluated += subset.size();
    if (draw == 0 || score > out.draw_scores[best]) best = draw;
    out.draw_scores.push_back(score);
    out.draws.push_back(std::move(subset));
  }
  out.indices = out.draws[best];
  return out;
}

EncodedState encode_state(const al::PoolState& pool, std::span<const std::size_t> candidates, std::size_t k,
                          const learner::Classifier& classifier, const EncodingOptions& options) {
  require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1");
  require(candidates.size() <= k, ErrorCode::kInvalidArgument, "more candidates than k");
  const Dataset& data = pool.dataset();
  const Metric metric = metric_for(data.n_features(), options.metric_threshold);

  struct Entry {
    std::size_t index;
    std::array<double, 3> u;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (std::size_t c : candidates) entries.push_back({c, uncertainty_tuple(data.row(c), classifier)});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.u[0] != b.u[0]) return a.u[0] > b.u[0];
    return a.index < b.index;
  });

  const auto reference =
      pool.unlabeled().empty() ? std::vector<std::size_t>{} : du_reference(pool.unlabeled(), options.du_cap, options.du_seed);

  EncodedState state;
  state.k = k;
  state.values.assign(kTupleWidth * k, 0.0);
  for (std::size_t pos = 0; pos < entries.size(); ++pos) {
    const auto& e = entries[pos];
    double* tuple = state.values.data() + kTupleWidth * pos;
    tuple[0] = e.u[0];
    tuple[1] = e.u[1];
    tuple[2] = e.u[2];
    tuple[3] = avg_dist_labeled(data.row(e.index), data, pool.labeled(), metric);
    tuple[4] = mean_distance_excluding(e.index, data, reference, metric);
    state.candidates.push_back(e.index);
  }
  return state;
}

}  // namespace imitlab::encoding
