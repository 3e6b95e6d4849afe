#include "imitlab/alcore.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "imitlab/error.hpp"

namespace imitlab::al {
namespace {

void require_pool(const PoolState& pool) {
  require(!pool.unlabeled().empty(), ErrorCode::kEmptyPool, "no unlabeled samples left");
}

// Top-b of U under `score` (higher first), ties by lower sample index.
Query rank_unlabeled(const PoolState& pool, std::size_t b, const std::vector<double>& score) {
  const auto& u = pool.unlabeled();
  const auto best = top_positions(u.size(), b, [&](std::size_t x, std::size_t y) {
    if (score[x] != score[y]) return score[x] > score[y];
    return u[x] < u[y];
  });
  Query q;
  q.candidates_evaluated = u.size();
  for (std::size_t p : best) q.indices.push_back(u[p]);
  return q;
}

class BaselineStrategy final : public QueryStrategy {
 public:
  enum class Kind { kRandom, kLc, kEntropy, kQbc, kGd };
  BaselineStrategy(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  std::string_view name() const override { return name_; }

  Query select(const PoolState& pool, std::size_t b, Rng& rng) const override {
    switch (kind_) {
      case Kind::kRandom: return random_query(pool, b, rng);
      case Kind::kLc: return lc_query(pool, b);
      case Kind::kEntropy: return entropy_query(pool, b);
      case Kind::kQbc: return qbc_query(pool, b, kDefaultCommitteeSize, rng);
      case Kind::kGd: return gd_query(pool, b);
    }
    fail(ErrorCode::kInvalidArgument, "unknown baseline");
  }

 private:
  Kind kind_;
  std::string name_;
};

}  // namespace

double shannon_entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Query random_query(const PoolState& pool, std::size_t b, Rng& rng) {
  require_pool(pool);
  Query q;
  q.indices = sample_without_replacement<std::size_t>(pool.unlabeled(), b, rng);
  q.candidates_evaluated = q.indices.size();
  return q;
}

Query lc_query(const PoolState& pool, std::size_t b) {
  require_pool(pool);
  const auto& u = pool.unlabeled();
  std::vector<double> score(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const auto probs = learner::predict_proba(pool.learner(), pool.dataset().row(u[p]));
    score[p] = -*std::max_element(probs.begin(), probs.end());
  }
  return rank_unlabeled(pool, b, score);
}

Query entropy_query(const PoolState& pool, std::size_t b) {
  require_pool(pool);
  const auto& u = pool.unlabeled();
  std::vector<double> score(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    score[p] = shannon_entropy(learner::predict_proba(pool.learner(), pool.dataset().row(u[p])));
  }
  return rank_unlabeled(pool, b, score);
}

Query qbc_query(const PoolState& pool, std::size_t b, std::size_t committee_size, Rng& rng) {
  require(committee_size >= 2, ErrorCode::kInvalidArgument, "a committee needs at least 2 members");
  require_pool(pool);
  const Dataset& data = pool.dataset();
  const auto& labeled = pool.labeled();
  const auto& u = pool.unlabeled();
  const std::size_t n_classes = data.n_classes();

  std::vector<std::vector<int>> votes(u.size(), std::vector<int>(n_classes, 0));
  for (std::size_t m = 0; m < committee_size; ++m) {
    std::vector<std::size_t> bag(labeled.size());
    for (auto& i : bag) i = labeled[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(labeled.size()) - 1))];
    learner::TrainConfig cfg = pool.next_fit_config();
    cfg.seed = rng();
    cfg.warm_start = false;
    const auto member = learner::fit(pool.learner(), data.subset(bag), cfg);
    for (std::size_t p = 0; p < u.size(); ++p) ++votes[p][static_cast<std::size_t>(learner::predict(member, data.row(u[p])))];
  }
  std::vector<double> score(u.size());
  std::vector<double> share(n_classes);
  for (std::size_t p = 0; p < u.size(); ++p) {
    for (std::size_t c = 0; c < n_classes; ++c) share[c] = votes[p][c] / static_cast<double>(committee_size);
    score[p] = shannon_entropy(share);
  }
  return rank_unlabeled(pool, b, score);
}

Query gd_query(const PoolState& pool, std::size_t b, std::size_t metric_threshold) {
  require_pool(pool);
  const Dataset& data = pool.dataset();
  const auto metric = encoding::metric_for(data.n_features(), metric_threshold);
  const auto& u = pool.unlabeled();
  const auto& labeled = pool.labeled();

  // Running sums of distances to the (growing) labeled set.
  std::vector<double> sums(u.size(), 0.0);
  for (std::size_t p = 0; p < u.size(); ++p) {
    for (std::size_t l : labeled) sums[p] += encoding::distance(data.row(u[p]), data.row(l), metric);
  }
  std::vector<bool> taken(u.size(), false);
  Query q;
  const std::size_t picks = std::min(b, u.size());
  for (std::size_t step = 0; step < picks; ++step) {
    std::size_t best = u.size();
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (taken[p]) continue;
      // The common denominator |L| + step does not change the argmax.
      if (best == u.size() || sums[p] > sums[best] || (sums[p] == sums[best] && u[p] < u[best])) best = p;
    }
    taken[best] = true;
    q.indices.push_back(u[best]);
    q.candidates_evaluated += u.size() - step;
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (!taken[p]) sums[p] += encoding::distance(data.row(u[p]), data.row(u[best]), metric);
    }
  }
  return q;
}

std::unique_ptr<QueryStrategy> make_baseline(std::string_view name) {
  using Kind = BaselineStrategy::Kind;
  if (name == "random") return std::make_unique<BaselineStrategy>(Kind::kRandom, "random");
  if (name == "lc") return std::make_unique<BaselineStrategy>(Kind::kLc, "lc");
  if (name == "entropy") return std::make_unique<BaselineStrategy>(Kind::kEntropy, "entropy");
  if (name == "qbc") return std::make_unique<BaselineStrategy>(Kind::kQbc, "qbc");
  if (name == "gd") return std::make_unique<BaselineStrategy>(Kind::kGd, "gd");
  fail(ErrorCode::kInvalidArgument, "unknown baseline strategy: " + std::string(name));
}

EpisodeResult al_loop(PoolState& pool, const QueryStrategy& strategy, std::size_t b, std::size_t cycles,
                      const Dataset& test, Rng& rng) {
  require(cycles >= 1, ErrorCode::kInvalidArgument, "cycles must be >= 1");
  require(b >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  EpisodeResult result;
  result.initial_labeled = pool.labeled();
  for (std::size_t cycle = 0; cycle < cycles && !pool.unlabeled().empty(); ++cycle) {
    const auto start = std::chrono::steady_clock::now();
    Query q = strategy.select(pool, b, rng);
    const auto stop = std::chrono::steady_clock::now();
    pool.label(q.indices);
    pool.refit();
    result.curve.f1_per_cycle.push_back(learner::macro_f1(pool.learner(), test));
    result.query_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    result.candidates_evaluated.push_back(q.candidates_evaluated);
  }
  return result;
}

}  // namespace imitlab::al
