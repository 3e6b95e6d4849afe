#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/mlp.hpp"

namespace imitlab::learner {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t minibatch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Continue from the current weights instead of a fresh initialization.
  bool warm_start = false;
};

void validate(const TrainConfig& config);

// The active-learning learner: a softmax classifier over n_classes.
class Classifier {
 public:
  Classifier() = default;
  Classifier(nn::Mlp net, std::uint64_t seed) : net_(std::move(net)), seed_(seed) {}

  std::size_t n_features() const noexcept { return net_.input_width(); }
  std::size_t n_classes() const noexcept { return net_.output_width(); }
  std::vector<std::size_t> hidden_widths() const;
  std::uint64_t seed() const noexcept { return seed_; }

  const nn::Mlp& net() const noexcept { return net_; }
  nn::Mlp& net() noexcept { return net_; }

  // Losses of the most recent fit, one per epoch.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }
  void set_loss_history(std::vector<double> h) { loss_history_ = std::move(h); }

  friend bool operator==(const Classifier& a, const Classifier& b) {
    return a.net_ == b.net_ && a.seed_ == b.seed_;
  }

 private:
  nn::Mlp net_;
  std::uint64_t seed_ = 0;
  std::vector<double> loss_history_;
};

inline const std::vector<std::size_t> kDefaultHidden{100, 100};

Classifier init(std::size_t n_features, std::size_t n_classes,
                const std::vector<std::size_t>& hidden = kDefaultHidden, std::uint64_t seed = 0);

// Trains on the whole of `train`. Unless config.warm_start is set the network
// is re-initialized from config.seed, so the result depends only on
// (layout, train, config).
Classifier fit(const Classifier& classifier, const Dataset& train, const TrainConfig& config);

std::vector<double> predict_proba(const Classifier& classifier, std::span<const double> row);

// argmax of predict_proba, lowest class id on ties.
int predict(const Classifier& classifier, std::span<const double> row);
std::vector<int> predict_all(const Classifier& classifier, const Dataset& data);

double accuracy(const Classifier& classifier, const Dataset& data);
double macro_f1(const Classifier& classifier, const Dataset& data);

// Metric kernels on raw label vectors.
double accuracy(std::span<const int> predicted, std::span<const int> truth);
// Mean per-class F1 over all n_classes; a class with 2TP + FP + FN = 0 scores 0.
double macro_f1(std::span<const int> predicted, std::span<const int> truth, std::size_t n_classes);

// Weight file with kind=learner and the init seed in the header.
void save(const Classifier& classifier, std::ostream& out);
Classifier load(std::istream& in);

}  // namespace imitlab::learner
