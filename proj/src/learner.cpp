#include "imitlab/learner.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "imitlab/error.hpp"

namespace imitlab::learner {

void validate(const TrainConfig& config) {
  require(config.epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be >= 1");
  require(config.minibatch_size >= 1, ErrorCode::kInvalidArgument, "minibatch_size must be >= 1");
  require(config.learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning_rate must be > 0");
}

std::vector<std::size_t> Classifier::hidden_widths() const {
  const auto& w = net_.widths();
  return {w.begin() + 1, w.end() - 1};
}

Classifier init(std::size_t n_features, std::size_t n_classes, const std::vector<std::size_t>& hidden,
                std::uint64_t seed) {
  require(n_features >= 1, ErrorCode::kInvalidArgument, "n_features must be >= 1");
  require(n_classes >= 2, ErrorCode::kInvalidArgument, "n_classes must be >= 2");
  std::vector<std::size_t> widths{n_features};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(n_classes);
  return Classifier(nn::Mlp::he_uniform(std::move(widths), seed), seed);
}

Classifier fit(const Classifier& classifier, const Dataset& train, const TrainConfig& config) {
  validate(config);
  require(!train.empty(), ErrorCode::kEmptyTrainingSet, "cannot fit on an empty labeled set");
  require(train.n_features() == classifier.n_features(), ErrorCode::kDimensionMismatch,
          "training data width does not match the classifier");
  const std::size_t n_classes = classifier.n_classes();

  Classifier result = config.warm_start
                          ? classifier
                          : init(classifier.n_features(), n_classes, classifier.hidden_widths(), config.seed);
  std::vector<double> targets(train.size() * n_classes, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int y = train.label(i);
    require(y >= 0 && static_cast<std::size_t>(y) < n_classes, ErrorCode::kInvalidArgument,
            "label exceeds classifier output width");
    targets[i * n_classes + static_cast<std::size_t>(y)] = 1.0;
  }
  nn::FitOptions options;
  options.epochs = config.epochs;
  options.minibatch_size = config.minibatch_size;
  options.learning_rate = config.learning_rate;
  options.loss = nn::Loss::kCrossEntropy;
  options.shuffle_seed = derive_seed(config.seed, 1);
  const nn::TrainingRows rows{train.features(), targets, train.size()};
  result.set_loss_history(nn::fit(result.net(), rows, options));
  return result;
}

std::vector<double> predict_proba(const Classifier& classifier, std::span<const double> row) {
  require(row.size() == classifier.n_features(), ErrorCode::kDimensionMismatch,
          "row width " + std::to_string(row.size()) + " != " + std::to_string(classifier.n_features()));
  return classifier.net().predict(row);
}

int predict(const Classifier& classifier, std::span<const double> row) {
  const auto probs = predict_proba(classifier, row);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<int> predict_all(const Classifier& classifier, const Dataset& data) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(classifier, data.row(i));
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require(!truth.empty(), ErrorCode::kEmptyDataset, "accuracy of an empty dataset");
  require(predicted.size() == truth.size(), ErrorCode::kLengthMismatch, "prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> predicted, std::span<const int> truth, std::size_t n_classes) {
  require(!truth.empty(), ErrorCode::kEmptyDataset, "macro F1 of an empty dataset");
  require(predicted.size() == truth.size(), ErrorCode::kLengthMismatch, "prediction count mismatch");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p == t) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(n_classes);
}

double accuracy(const Classifier& classifier, const Dataset& data) {
  require(!data.empty(), ErrorCode::kEmptyDataset, "accuracy of an empty dataset");
  return accuracy(predict_all(classifier, data), data.labels());
}

double macro_f1(const Classifier& classifier, const Dataset& data) {
  require(!data.empty(), ErrorCode::kEmptyDataset, "macro F1 of an empty dataset");
  return macro_f1(predict_all(classifier, data), data.labels(), classifier.n_classes());
}

void save(const Classifier& classifier, std::ostream& out) {
  nn::write_weights(out, classifier.net(), {{"kind", "learner"}, {"seed", std::to_string(classifier.seed())}});
}

Classifier load(std::istream& in) {
  auto file = nn::read_weights(in);
  require(file.header["kind"] == "learner", ErrorCode::kTagMismatch, "weight file is not a learner");
  require(file.header.count("seed") == 1, ErrorCode::kParseError, "learner file lacks a seed");
  return Classifier(std::move(file.net), std::stoull(file.header["seed"]));
}

}  // namespace imitlab::learner
