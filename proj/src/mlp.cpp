#include "imitlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "imitlab/error.hpp"
#include "imitlab/simd.hpp"

namespace imitlab::nn {

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  require(widths_.size() >= 2, ErrorCode::kInvalidArgument, "network needs input and output widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    require(widths_[l] > 0 && widths_[l + 1] > 0, ErrorCode::kInvalidArgument, "zero layer width");
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::he_uniform(std::vector<std::size_t> widths, std::uint64_t seed) {
  Mlp net(std::move(widths));
  Rng rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(net.widths_[l]));
    for (double& w : net.weights(l)) w = uniform_real(rng, -limit, limit);
  }
  return net;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + offsets_[layer], widths_[layer] * widths_[layer + 1]};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + offsets_[layer], widths_[layer] * widths_[layer + 1]};
}
std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + offsets_[layer] + widths_[layer] * widths_[layer + 1], widths_[layer + 1]};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + offsets_[layer] + widths_[layer] * widths_[layer + 1], widths_[layer + 1]};
}

std::vector<double> Mlp::logits(std::span<const double> input) const {
  require(input.size() == input_width(), ErrorCode::kDimensionMismatch,
          "input width " + std::to_string(input.size()) + " != network input " +
              std::to_string(input_width()));
  const auto& k = simd::active();
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    next.resize(widths_[l + 1]);
    k.matvec(weights(l).data(), bias(l).data(), current.data(), next.data(), widths_[l + 1], widths_[l]);
    if (l + 1 < layer_count()) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    current.swap(next);
  }
  return current;
}

std::vector<double> Mlp::predict(std::span<const double> input) const {
  auto out = logits(input);
  softmax_inplace(out);
  return out;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

namespace {

// Loss of one sample from its logits; writes dLoss/dlogits into delta.
double output_loss(std::span<const double> z, std::span<const double> target, Loss loss,
                   std::span<double> delta) {
  const std::size_t n = z.size();
  require(target.size() == n, ErrorCode::kDimensionMismatch, "target width mismatch");
  if (loss == Loss::kSquaredError) {
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = z[i] - target[i];
      value += diff * diff;
      delta[i] = 2.0 * diff / static_cast<double>(n);
    }
    return value / static_cast<double>(n);
  }
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(z[i] - top);
  const double log_norm = top + std::log(sum);
  double mass = 0.0;
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass += target[i];
    if (target[i] != 0.0) value -= target[i] * (z[i] - log_norm);
  }
  for (std::size_t i = 0; i < n; ++i) delta[i] = std::exp(z[i] - log_norm) * mass - target[i];
  return value;
}

}  // namespace

Backprop::Backprop(const Mlp& net) {
  for (std::size_t w : net.widths()) activations_.emplace_back(w);
  for (std::size_t l = 1; l < net.widths().size(); ++l) deltas_.emplace_back(net.widths()[l]);
}

double Backprop::accumulate(const Mlp& net, std::span<const double> input, std::span<const double> target,
                            Loss loss, std::span<double> gradient, double scale) {
  require(input.size() == net.input_width(), ErrorCode::kDimensionMismatch, "input width mismatch");
  const auto& k = simd::active();
  const auto& widths = net.widths();
  const std::size_t layers = net.layer_count();

  std::copy(input.begin(), input.end(), activations_[0].begin());
  for (std::size_t l = 0; l < layers; ++l) {
    auto& out = activations_[l + 1];
    k.matvec(net.weights(l).data(), net.bias(l).data(), activations_[l].data(), out.data(),
             widths[l + 1], widths[l]);
    if (l + 1 < layers) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
  }
  const double value = output_loss(activations_[layers], target, loss, deltas_[layers - 1]);
  if (gradient.empty()) return value;

  const auto params = net.parameters();
  for (std::size_t l = layers; l-- > 0;) {
    const auto& delta = deltas_[l];
    const auto& below = activations_[l];
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const std::size_t w_off = static_cast<std::size_t>(net.weights(l).data() - params.data());
    double* grad_w = gradient.data() + w_off;
    double* grad_b = grad_w + in * out;
    for (std::size_t r = 0; r < out; ++r) {
      if (delta[r] == 0.0) continue;
      k.axpy(scale * delta[r], below.data(), grad_w + r * in, in);
      grad_b[r] += scale * delta[r];
    }
    if (l == 0) break;
    auto& prev = deltas_[l - 1];
    std::fill(prev.begin(), prev.end(), 0.0);
    const double* w = net.weights(l).data();
    for (std::size_t r = 0; r < out; ++r) {
      if (delta[r] != 0.0) k.axpy(delta[r], w + r * in, prev.data(), in);
    }
    for (std::size_t i = 0; i < in; ++i) {
      if (below[i] <= 0.0) prev[i] = 0.0;
    }
  }
  return value;
}

double loss_value(const Mlp& net, std::span<const double> input, std::span<const double> target, Loss loss) {
  const auto z = net.logits(input);
  std::vector<double> delta(z.size());
  return output_loss(z, target, loss, delta);
}

void adam_step(Mlp& net, std::span<const double> gradient, AdamState& state, double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  auto params = net.parameters();
  require(gradient.size() == params.size(), ErrorCode::kDimensionMismatch, "gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(kBeta1, t);
  const double bias2 = 1.0 - std::pow(kBeta2, t);
  simd::active().adam_update(params.data(), gradient.data(), state.m.data(), state.v.data(), params.size(),
                             learning_rate, kBeta1, kBeta2, bias1, bias2, kEps);
}

std::vector<double> fit(Mlp& net, const TrainingRows& rows, const FitOptions& options,
                        const EpochCallback& on_epoch) {
  require(rows.count > 0, ErrorCode::kEmptyTrainingSet, "no training rows");
  require(options.epochs >= 1 && options.minibatch_size >= 1 && options.learning_rate > 0.0,
          ErrorCode::kInvalidArgument, "epochs, minibatch_size and learning_rate must be positive");
  const std::size_t in = net.input_width();
  const std::size_t out = net.output_width();
  require(rows.inputs.size() == rows.count * in && rows.targets.size() == rows.count * out,
          ErrorCode::kDimensionMismatch, "training rows do not match network widths");

  Rng rng(options.shuffle_seed);
  Backprop backprop(net);
  AdamState adam;
  std::vector<double> gradient(net.parameters().size());
  std::vector<std::size_t> order(rows.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(options.minibatch_size, rows.count);

  std::vector<double> history;
  history.reserve(options.epochs);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < rows.count; start += batch) {
      const std::size_t stop = std::min(start + batch, rows.count);
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(gradient.begin(), gradient.end(), 0.0);
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = order[s];
        total += backprop.accumulate(net, rows.inputs.subspan(i * in, in), rows.targets.subspan(i * out, out),
                                     options.loss, gradient, scale);
      }
      adam_step(net, gradient, adam, options.learning_rate);
    }
    history.push_back(total / static_cast<double>(rows.count));
    if (on_epoch && !on_epoch(epoch, history.back())) break;
  }
  return history;
}

void write_weights(std::ostream& out, const Mlp& net, const std::map<std::string, std::string>& header) {
  out << "imitlab-weights 1\n";
  out << "widths";
  for (std::size_t w : net.widths()) out << ' ' << w;
  out << '\n';
  for (const auto& [key, value] : header) {
    require(key != "widths" && key.find(' ') == std::string::npos && value.find('\n') == std::string::npos,
            ErrorCode::kInvalidArgument, "bad weight-file header key: " + key);
    out << key << ' ' << value << '\n';
  }
  out << "parameters " << net.parameters().size() << '\n';
  char buf[40];
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    out << "layer " << l;
    for (double w : net.weights(l)) {
      std::snprintf(buf, sizeof buf, " %a", w);
      out << buf;
    }
    for (double b : net.bias(l)) {
      std::snprintf(buf, sizeof buf, " %a", b);
      out << buf;
    }
    out << '\n';
  }
  out << "end\n";
  require(static_cast<bool>(out), ErrorCode::kIoError, "failed writing weights");
}

WeightFile read_weights(std::istream& in) {
  std::string line;
  require(std::getline(in, line) && line == "imitlab-weights 1", ErrorCode::kParseError,
          "not an imitlab weight file");
  WeightFile file;
  std::vector<std::size_t> widths;
  std::size_t declared = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "widths") {
      std::size_t w;
      while (fields >> w) widths.push_back(w);
    } else if (key == "parameters") {
      fields >> declared;
      break;
    } else {
      std::string value;
      std::getline(fields >> std::ws, value);
      file.header[key] = value;
    }
  }
  require(widths.size() >= 2, ErrorCode::kParseError, "weight file lacks widths");
  file.net = Mlp(widths);
  require(declared == file.net.parameters().size(), ErrorCode::kParseError,
          "parameter count does not match widths");
  for (std::size_t l = 0; l < file.net.layer_count(); ++l) {
    ++line_no;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParseError, "truncated weight file");
    const char* cursor = line.c_str();
    const std::string prefix = "layer " + std::to_string(l);
    require(line.compare(0, prefix.size(), prefix) == 0, ErrorCode::kParseError,
            "line " + std::to_string(line_no) + ": expected " + prefix);
    cursor += prefix.size();
    auto read_into = [&](std::span<double> dst) {
      for (double& v : dst) {
        char* end = nullptr;
        v = std::strtod(cursor, &end);
        require(end != cursor, ErrorCode::kParseError, "line " + std::to_string(line_no) + ": short layer");
        cursor = end;
      }
    };
    read_into(file.net.weights(l));
    read_into(file.net.bias(l));
  }
  require(std::getline(in, line) && line == "end", ErrorCode::kParseError, "missing end marker");
  return file;
}

}  // namespace imitlab::nn
