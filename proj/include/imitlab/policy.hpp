#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "imitlab/alcore.hpp"
#include "imitlab/encoding.hpp"
#include "imitlab/expert.hpp"
#include "imitlab/mlp.hpp"

namespace imitlab::policy {

// Listwise ranking network: 5k encoded values in, k softmax scores out.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(nn::Mlp net, std::size_t k, std::uint64_t seed);

  std::size_t k() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  // Encoding parameters the net was trained under; applied at query time.
  std::size_t metric_threshold() const noexcept { return metric_threshold_; }
  std::size_t du_cap() const noexcept { return du_cap_; }
  void set_encoding(std::size_t metric_threshold, std::size_t du_cap) noexcept {
    metric_threshold_ = metric_threshold;
    du_cap_ = du_cap;
  }

  const nn::Mlp& net() const noexcept { return net_; }
  nn::Mlp& net() noexcept { return net_; }

  friend bool operator==(const PolicyNet&, const PolicyNet&) = default;

 private:
  nn::Mlp net_;
  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t metric_threshold_ = encoding::kDefaultMetricThreshold;
  std::size_t du_cap_ = encoding::kDefaultDuCap;
};

inline const std::vector<std::size_t> kDefaultPolicyHidden{100, 100};

PolicyNet init_policy(std::size_t k, const std::vector<std::size_t>& hidden = kDefaultPolicyHidden,
                      std::uint64_t seed = 0);

std::vector<double> policy_forward(const PolicyNet& net, std::span<const double> encoded);

// (r - min) / sum(r - min); uniform when all rewards are equal.
std::vector<double> rewards_to_targets(std::span<const double> rewards);

enum class CloneLoss {
  kTargetCrossEntropy,  // cross-entropy against rewards_to_targets
  kRewardSquaredError,  // squared error of the raw output logits against rewards
};

struct CloneConfig {
  std::size_t epochs = 200;
  std::size_t minibatch_size = 64;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  CloneLoss loss = CloneLoss::kTargetCrossEntropy;
  std::vector<std::size_t> hidden = kDefaultPolicyHidden;
};

void validate(const CloneConfig& config);

struct TrainingReport {
  std::vector<double> train_loss;       // per epoch
  std::vector<double> validation_loss;  // per epoch, empty without a validation split
  std::size_t best_epoch = 0;
  double train_top1 = 0.0;
  double validation_top1 = 0.0;
  std::size_t train_records = 0;
  std::size_t validation_records = 0;
};

struct TrainedPolicy {
  PolicyNet net;
  TrainingReport report;
};

// Number of real (non-padded) candidates in an encoding: populated tuples
// always carry u1 > 0.
std::size_t populated_slots(std::span<const double> encoded, std::size_t k);

// Fraction of records whose highest-scored real candidate attains the
// record's maximum reward.
double top1_accuracy(const PolicyNet& net, std::span<const expert::SimulationRecord> records);

// Behavioral cloning by minibatch Adam. With a validation split the weights
// of the best validation epoch are kept and training stops after `patience`
// epochs without improvement. Throws kEmptyCorpus, kInconsistentK.
TrainedPolicy train_policy(std::span<const expert::SimulationRecord> corpus, const CloneConfig& config);

// Score positions, best first, restricted to the first `populated`; ties by
// lower position.
std::vector<std::size_t> best_positions(std::span<const double> scores, std::size_t populated, std::size_t b);

inline constexpr std::size_t kApplicationJ = 2;

// pre_select(j, net.k()) -> encode -> policy scores -> best b real
// candidates. Encoding uses the net's tags; the du subsample seed is drawn
// from rng.
al::Query imital_query(const al::PoolState& pool, const PolicyNet& net, std::size_t j, std::size_t b,
                       Rng& rng);

class ImitalStrategy final : public al::QueryStrategy {
 public:
  explicit ImitalStrategy(std::shared_ptr<const PolicyNet> net, std::size_t j = kApplicationJ);
  std::string_view name() const override { return "imital"; }
  al::Query select(const al::PoolState& pool, std::size_t b, Rng& rng) const override;

 private:
  std::shared_ptr<const PolicyNet> net_;
  std::size_t j_;
};

// Weight file with kind=policy and tags k, order, metric_threshold, du_cap.
void save(const PolicyNet& net, std::ostream& out);
// Rejects files whose tags disagree with this build's encoding, or whose k
// differs from expected_k when non-zero (kTagMismatch).
PolicyNet load(std::istream& in, std::size_t expected_k = 0);

}  // namespace imitlab::policy
