#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imitlab/random.hpp"

namespace imitlab::nn {

// Fully connected network: ReLU hidden layers, linear output layer whose
// logits are turned into a distribution by softmax. All parameters live in
// one flat buffer, layer by layer, weights (row-major, out x in) then bias.
class Mlp {
 public:
  Mlp() = default;
  // All parameters zero. widths = {input, hidden..., output}.
  explicit Mlp(std::vector<std::size_t> widths);

  // Uniform(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) weights, zero biases.
  static Mlp he_uniform(std::vector<std::size_t> widths, std::uint64_t seed);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t input_width() const noexcept { return widths_.front(); }
  std::size_t output_width() const noexcept { return widths_.back(); }
  std::size_t layer_count() const noexcept { return widths_.size() - 1; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::vector<double> logits(std::span<const double> input) const;
  std::vector<double> predict(std::span<const double> input) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  std::vector<double> params_;
};

// Numerically stable softmax; the result sums to 1 within rounding.
void softmax_inplace(std::span<double> values);

enum class Loss {
  kCrossEntropy,   // -sum t log softmax(z); targets are distributions
  kSquaredError,   // mean (z - t)^2 on the raw logits
};

// Per-sample loss and, when gradient is non-empty, gradient accumulation
// (gradient += scale * dLoss/dparams). Scratch buffers live in the object so a
// training loop allocates once.
class Backprop {
 public:
  explicit Backprop(const Mlp& net);

  double accumulate(const Mlp& net, std::span<const double> input, std::span<const double> target,
                    Loss loss, std::span<double> gradient, double scale);

 private:
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> deltas_;
};

double loss_value(const Mlp& net, std::span<const double> input, std::span<const double> target, Loss loss);

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
};

void adam_step(Mlp& net, std::span<const double> gradient, AdamState& state, double learning_rate);

struct FitOptions {
  std::size_t epochs = 50;
  std::size_t minibatch_size = 32;
  double learning_rate = 1e-3;
  Loss loss = Loss::kCrossEntropy;
  std::uint64_t shuffle_seed = 0;
};

// Row-major views of n training rows.
struct TrainingRows {
  std::span<const double> inputs;
  std::span<const double> targets;
  std::size_t count = 0;
};

// Minibatch Adam over `rows`. Returns the mean training loss of every epoch
// (accumulated while the epoch runs). `on_epoch`, when set, is called after
// each epoch with (epoch, mean loss) and may return false to stop early.
using EpochCallback = std::function<bool(std::size_t epoch, double mean_loss)>;

std::vector<double> fit(Mlp& net, const TrainingRows& rows, const FitOptions& options,
                        const EpochCallback& on_epoch = {});

// Text weight file: magic line, `key value` header lines (widths and any
// tags), then one line per layer holding weights and biases as hex floats so
// a round trip is bit-exact.
struct WeightFile {
  Mlp net;
  std::map<std::string, std::string> header;
};

void write_weights(std::ostream& out, const Mlp& net, const std::map<std::string, std::string>& header);
WeightFile read_weights(std::istream& in);

}  // namespace imitlab::nn
