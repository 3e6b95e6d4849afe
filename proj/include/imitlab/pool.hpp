#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/random.hpp"

namespace imitlab::al {

// AL state (U, L, theta) over a training set that outlives the pool.
class PoolState {
 public:
  PoolState(const Dataset& train, std::vector<std::size_t> labeled, learner::TrainConfig learner_config,
            std::vector<std::size_t> hidden = learner::kDefaultHidden);

  const Dataset& dataset() const noexcept { return *train_; }
  // Insertion order.
  const std::vector<std::size_t>& labeled() const noexcept { return labeled_; }
  // Ascending unless replaced through set_unlabeled_order.
  const std::vector<std::size_t>& unlabeled() const noexcept { return unlabeled_; }
  const learner::Classifier& learner() const noexcept { return learner_; }
  const learner::TrainConfig& learner_config() const noexcept { return learner_config_; }
  std::size_t refit_count() const noexcept { return refits_; }

  // Config used for the next refit: the base seed split by refit count, so
  // two pools with equal history train bit-identical learners.
  learner::TrainConfig next_fit_config() const;

  Dataset labeled_data() const;

  // Moves `indices` from U to L. Throws kInvalidArgument for duplicates or
  // indices outside U.
  void label(std::span<const std::size_t> indices);

  // Retrains the learner on the current L.
  void refit();

  // Installs a given learner, e.g. a hand-built one in tests.
  void set_learner(learner::Classifier classifier);
  // Reorders U's storage; membership must not change. Lets tests check that
  // results do not depend on storage order.
  void set_unlabeled_order(std::vector<std::size_t> order);

  bool invariants_hold() const;

 private:
  const Dataset* train_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  learner::TrainConfig learner_config_;
  learner::Classifier learner_;
  std::size_t refits_ = 0;
};

struct Query {
  std::vector<std::size_t> indices;
  // Unlabeled samples the strategy had to score to make this choice.
  std::size_t candidates_evaluated = 0;
};

struct LearningCurve {
  std::vector<double> f1_per_cycle;
};

// One uniformly chosen sample per class becomes L; the learner is fit on it.
PoolState init_pool(const Dataset& train, Rng& rng, const learner::TrainConfig& learner_config,
                    const std::vector<std::size_t>& hidden = learner::kDefaultHidden);

// The `b` best positions in [0, n) under the strict order `better`, best
// first.
template <class Better>
std::vector<std::size_t> top_positions(std::size_t n, std::size_t b, Better better) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  b = std::min(b, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b), order.end(), better);
  order.resize(b);
  return order;
}

}  // namespace imitlab::al
