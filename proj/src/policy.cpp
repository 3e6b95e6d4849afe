#include "imitlab/policy.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <string>

#include "imitlab/error.hpp"

namespace imitlab::policy {
namespace {

struct Rows {
  std::vector<double> inputs;
  std::vector<double> targets;
  std::size_t count = 0;

  nn::TrainingRows view() const { return {inputs, targets, count}; }
};

Rows build_rows(std::span<const expert::SimulationRecord> records, std::span<const std::size_t> picks,
                CloneLoss loss) {
  Rows rows;
  for (std::size_t i : picks) {
    const auto& r = records[i];
    rows.inputs.insert(rows.inputs.end(), r.encoded.begin(), r.encoded.end());
    if (loss == CloneLoss::kTargetCrossEntropy) {
      const auto t = rewards_to_targets(r.rewards);
      rows.targets.insert(rows.targets.end(), t.begin(), t.end());
    } else {
      rows.targets.insert(rows.targets.end(), r.rewards.begin(), r.rewards.end());
    }
    ++rows.count;
  }
  return rows;
}

double mean_loss(const nn::Mlp& net, const Rows& rows, nn::Loss loss) {
  if (rows.count == 0) return 0.0;
  const std::size_t in = net.input_width();
  const std::size_t out = net.output_width();
  double total = 0.0;
  for (std::size_t i = 0; i < rows.count; ++i) {
    total += nn::loss_value(net, std::span(rows.inputs).subspan(i * in, in),
                            std::span(rows.targets).subspan(i * out, out), loss);
  }
  return total / static_cast<double>(rows.count);
}

// Held-out records come from held-out datasets when there are several.
void split_records(std::span<const expert::SimulationRecord> records, double fraction, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
  Rng rng(seed);
  std::set<std::uint64_t> id_set;
  for (const auto& r : records) id_set.insert(r.dataset_id);
  if (fraction <= 0.0) {
    for (std::size_t i = 0; i < records.size(); ++i) train.push_back(i);
    return;
  }
  if (id_set.size() >= 2) {
    std::vector<std::uint64_t> ids(id_set.begin(), id_set.end());
    shuffle(ids, rng);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(ids.size())));
    const std::set<std::uint64_t> held(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    for (std::size_t i = 0; i < records.size(); ++i) {
      (held.count(records[i].dataset_id) ? validation : train).push_back(i);
    }
    return;
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(order.size()));
  if (n_val == 0 || n_val == order.size()) {
    std::sort(order.begin(), order.end());
    train = order;
    return;
  }
  validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(validation.begin(), validation.end());
  std::sort(train.begin(), train.end());
}

double top1_over(const PolicyNet& net, std::span<const expert::SimulationRecord> records,
                 std::span<const std::size_t> picks) {
  if (picks.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : picks) {
    const auto& r = records[i];
    const std::size_t populated = populated_slots(r.encoded, r.k);
    if (populated == 0) continue;
    const auto scores = policy_forward(net, r.encoded);
    const std::size_t chosen = best_positions(scores, populated, 1).front();
    const double best = *std::max_element(r.rewards.begin(), r.rewards.begin() + static_cast<std::ptrdiff_t>(populated));
    if (r.rewards[chosen] == best) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(picks.size());
}

}  // namespace

PolicyNet::PolicyNet(nn::Mlp net, std::size_t k, std::uint64_t seed) : net_(std::move(net)), k_(k), seed_(seed) {
  require(k >= 1, ErrorCode::kInvalidArgument, "policy k must be >= 1");
  require(net_.input_width() == encoding::kTupleWidth * k && net_.output_width() == k,
          ErrorCode::kDimensionMismatch, "policy layers do not match k = " + std::to_string(k));
}

PolicyNet init_policy(std::size_t k, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  require(k >= 1, ErrorCode::kInvalidArgument, "policy k must be >= 1");
  std::vector<std::size_t> widths{encoding::kTupleWidth * k};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(k);
  return PolicyNet(nn::Mlp::he_uniform(std::move(widths), seed), k, seed);
}

std::vector<double> policy_forward(const PolicyNet& net, std::span<const double> encoded) {
  require(encoded.size() == encoding::kTupleWidth * net.k(), ErrorCode::kDimensionMismatch,
          "encoded state has " + std::to_string(encoded.size()) + " values, policy expects " +
              std::to_string(encoding::kTupleWidth * net.k()));
  return net.net().predict(encoded);
}

std::vector<double> rewards_to_targets(std::span<const double> rewards) {
  std::vector<double> t(rewards.size(), 0.0);
  if (rewards.empty()) return t;
  const double lo = *std::min_element(rewards.begin(), rewards.end());
  double total = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    t[i] = rewards[i] - lo;
    total += t[i];
  }
  if (total <= 0.0) {
    std::fill(t.begin(), t.end(), 1.0 / static_cast<double>(rewards.size()));
    return t;
  }
  for (auto& v : t) v /= total;
  return t;
}

void validate(const CloneConfig& c) {
  require(c.epochs >= 1 && c.minibatch_size >= 1, ErrorCode::kInvalidArgument,
          "clone epochs and minibatch size must be >= 1");
  require(c.learning_rate > 0.0, ErrorCode::kInvalidArgument, "clone learning rate must be > 0");
  require(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0, ErrorCode::kInvalidArgument,
          "validation fraction must lie in [0, 1)");
}

std::size_t populated_slots(std::span<const double> encoded, std::size_t k) {
  std::size_t n = 0;
  while (n < k && encoded[n * encoding::kTupleWidth] > 0.0) ++n;
  return n;
}

double top1_accuracy(const PolicyNet& net, std::span<const expert::SimulationRecord> records) {
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return top1_over(net, records, all);
}

TrainedPolicy train_policy(std::span<const expert::SimulationRecord> corpus, const CloneConfig& config) {
  validate(config);
  require(!corpus.empty(), ErrorCode::kEmptyCorpus, "corpus has no records");
  const std::size_t k = corpus.front().k;
  for (const auto& r : corpus) {
    require(r.k == k, ErrorCode::kInconsistentK,
            "record k = " + std::to_string(r.k) + " differs from k = " + std::to_string(k));
    require(r.encoded.size() == encoding::kTupleWidth * k && r.rewards.size() == k,
            ErrorCode::kDimensionMismatch, "record lengths do not match k");
  }

  std::vector<std::size_t> train_ids, val_ids;
  split_records(corpus, config.validation_fraction, derive_seed(config.seed, 0), train_ids, val_ids);
  const Rows train = build_rows(corpus, train_ids, config.loss);
  const Rows val = build_rows(corpus, val_ids, config.loss);
  const auto loss = config.loss == CloneLoss::kTargetCrossEntropy ? nn::Loss::kCrossEntropy : nn::Loss::kSquaredError;

  TrainedPolicy out{init_policy(k, config.hidden, derive_seed(config.seed, 1)), {}};
  nn::Mlp& net = out.net.net();
  nn::FitOptions fit;
  fit.epochs = config.epochs;
  fit.minibatch_size = config.minibatch_size;
  fit.learning_rate = config.learning_rate;
  fit.loss = loss;
  fit.shuffle_seed = derive_seed(config.seed, 2);

  std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
  double best_val = std::numeric_limits<double>::infinity();
  auto& report = out.report;
  nn::EpochCallback on_epoch;
  if (val.count > 0) {
    on_epoch = [&](std::size_t epoch, double) {
      const double v = mean_loss(net, val, loss);
      report.validation_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        report.best_epoch = epoch;
        std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
      }
      return epoch - report.best_epoch < config.patience;
    };
  }
  report.train_loss = nn::fit(net, train.view(), fit, on_epoch);
  if (val.count > 0) {
    std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
  } else {
    report.best_epoch = report.train_loss.empty() ? 0 : report.train_loss.size() - 1;
  }
  report.train_records = train.count;
  report.validation_records = val.count;
  report.train_top1 = top1_over(out.net, corpus, train_ids);
  report.validation_top1 = top1_over(out.net, corpus, val_ids);
  return out;
}

std::vector<std::size_t> best_positions(std::span<const double> scores, std::size_t populated, std::size_t b) {
  populated = std::min(populated, scores.size());
  return al::top_positions(populated, b, [&](std::size_t x, std::size_t y) {
    if (scores[x] != scores[y]) return scores[x] > scores[y];
    return x < y;
  });
}

al::Query imital_query(const al::PoolState& pool, const PolicyNet& net, std::size_t j, std::size_t b, Rng& rng) {
  const auto metric = encoding::metric_for(pool.dataset().n_features(), net.metric_threshold());
  const auto candidates = encoding::pre_select(pool, j, net.k(), rng, metric);
  const encoding::EncodingOptions enc{net.metric_threshold(), net.du_cap(), rng()};
  const auto state = encoding::encode_state(pool, candidates.indices, net.k(), pool.learner(), enc);
  const auto scores = policy_forward(net, state.values);
  al::Query q;
  q.candidates_evaluated = candidates.evaluated;
  for (std::size_t p : best_positions(scores, state.populated(), b)) q.indices.push_back(state.candidates[p]);
  return q;
}

ImitalStrategy::ImitalStrategy(std::shared_ptr<const PolicyNet> net, std::size_t j) : net_(std::move(net)), j_(j) {
  require(net_ != nullptr, ErrorCode::kMissingModel, "imital needs a trained policy");
  require(j_ >= 1, ErrorCode::kInvalidArgument, "imital j must be >= 1");
}

al::Query ImitalStrategy::select(const al::PoolState& pool, std::size_t b, Rng& rng) const {
  return imital_query(pool, *net_, j_, b, rng);
}

void save(const PolicyNet& net, std::ostream& out) {
  nn::write_weights(out, net.net(),
                    {{"kind", "policy"},
                     {"k", std::to_string(net.k())},
                     {"order", encoding::kCanonicalOrderTag},
                     {"metric_threshold", std::to_string(net.metric_threshold())},
                     {"du_cap", std::to_string(net.du_cap())},
                     {"seed", std::to_string(net.seed())}});
}

PolicyNet load(std::istream& in, std::size_t expected_k) {
  auto file = nn::read_weights(in);
  auto& h = file.header;
  require(h["kind"] == "policy", ErrorCode::kTagMismatch, "weight file is not a policy");
  require(h["order"] == encoding::kCanonicalOrderTag, ErrorCode::kTagMismatch,
          "policy was trained under candidate order '" + h["order"] + "', this build uses '" +
              encoding::kCanonicalOrderTag + "'");
  for (const char* key : {"k", "metric_threshold", "du_cap", "seed"}) {
    require(h.count(key) == 1, ErrorCode::kTagMismatch, std::string("policy file lacks tag ") + key);
  }
  std::size_t k = 0, threshold = 0, cap = 0;
  std::uint64_t seed = 0;
  try {
    k = std::stoull(h["k"]);
    threshold = std::stoull(h["metric_threshold"]);
    cap = std::stoull(h["du_cap"]);
    seed = std::stoull(h["seed"]);
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParseError, "policy file has a malformed numeric tag");
  }
  require(expected_k == 0 || k == expected_k, ErrorCode::kTagMismatch,
          "policy k = " + std::to_string(k) + ", expected " + std::to_string(expected_k));
  require(file.net.input_width() == encoding::kTupleWidth * k && file.net.output_width() == k,
          ErrorCode::kTagMismatch, "policy layer widths disagree with its k tag");
  PolicyNet net(std::move(file.net), k, seed);
  net.set_encoding(threshold, cap);
  return net;
}

}  // namespace imitlab::policy
