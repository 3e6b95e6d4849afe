#include "imitlab/pool.hpp"

#include <algorithm>
#include <unordered_set>

#include "imitlab/error.hpp"

namespace imitlab::al {

PoolState::PoolState(const Dataset& train, std::vector<std::size_t> labeled, learner::TrainConfig learner_config,
                     std::vector<std::size_t> hidden)
    : train_(&train), labeled_(std::move(labeled)), learner_config_(learner_config) {
  learner::validate(learner_config_);
  std::vector<bool> is_labeled(train.size(), false);
  for (std::size_t i : labeled_) {
    require(i < train.size() && !is_labeled[i], ErrorCode::kInvalidArgument, "bad initial labeled index");
    is_labeled[i] = true;
  }
  unlabeled_.reserve(train.size() - labeled_.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!is_labeled[i]) unlabeled_.push_back(i);
  }
  learner_ = learner::init(train.n_features(), train.n_classes(), hidden, learner_config_.seed);
}

learner::TrainConfig PoolState::next_fit_config() const {
  learner::TrainConfig cfg = learner_config_;
  cfg.seed = derive_seed(learner_config_.seed, refits_);
  return cfg;
}

Dataset PoolState::labeled_data() const { return train_->subset(labeled_); }

void PoolState::label(std::span<const std::size_t> indices) {
  std::unordered_set<std::size_t> picked;
  for (std::size_t i : indices) {
    require(picked.insert(i).second, ErrorCode::kInvalidArgument, "duplicate index in query");
  }
  const auto found = std::count_if(unlabeled_.begin(), unlabeled_.end(), [&](std::size_t i) { return picked.count(i) > 0; });
  require(static_cast<std::size_t>(found) == picked.size(), ErrorCode::kInvalidArgument,
          "query contains an index outside the unlabeled pool");
  std::erase_if(unlabeled_, [&](std::size_t i) { return picked.count(i) > 0; });
  labeled_.insert(labeled_.end(), indices.begin(), indices.end());
}

void PoolState::refit() {
  learner_ = learner::fit(learner_, labeled_data(), next_fit_config());
  ++refits_;
}

void PoolState::set_learner(learner::Classifier classifier) {
  require(classifier.n_features() == train_->n_features() && classifier.n_classes() == train_->n_classes(),
          ErrorCode::kDimensionMismatch, "learner shape does not match the dataset");
  learner_ = std::move(classifier);
}

void PoolState::set_unlabeled_order(std::vector<std::size_t> order) {
  auto a = order;
  auto b = unlabeled_;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  require(a == b, ErrorCode::kInvalidArgument, "reordering must keep U's membership");
  unlabeled_ = std::move(order);
}

bool PoolState::invariants_hold() const {
  std::vector<int> seen(train_->size(), 0);
  for (std::size_t i : labeled_) ++seen[i];
  for (std::size_t i : unlabeled_) ++seen[i];
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

PoolState init_pool(const Dataset& train, Rng& rng, const learner::TrainConfig& learner_config,
                    const std::vector<std::size_t>& hidden) {
  std::vector<std::vector<std::size_t>> by_class(train.n_classes());
  for (std::size_t i = 0; i < train.size(); ++i) by_class[static_cast<std::size_t>(train.label(i))].push_back(i);
  std::vector<std::size_t> seed_set;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    require(!by_class[c].empty(), ErrorCode::kMissingClass,
            "class " + std::to_string(c) + " absent from the training set");
    const auto pick = uniform_int(rng, 0, static_cast<std::int64_t>(by_class[c].size()) - 1);
    seed_set.push_back(by_class[c][static_cast<std::size_t>(pick)]);
  }
  PoolState pool(train, std::move(seed_set), learner_config, hidden);
  pool.refit();
  return pool;
}

}  // namespace imitlab::al
