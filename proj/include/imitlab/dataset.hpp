#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace imitlab {

// Row-major feature matrix with integer class labels in [0, n_classes).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n_features, std::size_t n_classes) : n_features_(n_features), n_classes_(n_classes) {}
  Dataset(std::vector<double> features, std::vector<int> labels, std::size_t n_features,
          std::size_t n_classes);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  std::span<double> row(std::size_t i) { return {features_.data() + i * n_features_, n_features_}; }
  int label(std::size_t i) const { return labels_[i]; }
  void set_label(std::size_t i, int label) { labels_[i] = label; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  void push_back(std::span<const double> row, int label);

  // New dataset holding the given rows in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_counts() const;

  // Throws Error(kInvalidArgument) on a label outside [0, n_classes) or a
  // non-finite feature.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<double> features_;
  std::vector<int> labels_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
};

// Rescales every feature column to [0, 1]; constant columns become 0.
void min_max_scale(Dataset& dataset);

// CSV with header `f0,...,fN,label`. Features are written with enough digits
// to round-trip exactly.
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::string& path);

// n_classes is max(label) + 1. Parse errors name the offending line.
Dataset read_csv(std::istream& in, const std::string& source_name = "<stream>");
Dataset read_csv(const std::string& path);

}  // namespace imitlab
