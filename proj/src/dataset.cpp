#include "imitlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "imitlab/error.hpp"

namespace imitlab {

Dataset::Dataset(std::vector<double> features, std::vector<int> labels, std::size_t n_features,
                 std::size_t n_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      n_features_(n_features),
      n_classes_(n_classes) {
  require(features_.size() == labels_.size() * n_features_, ErrorCode::kDimensionMismatch,
          "feature matrix size does not match label count");
}

void Dataset::push_back(std::span<const double> row, int label) {
  require(row.size() == n_features_, ErrorCode::kDimensionMismatch, "row width mismatch");
  features_.insert(features_.end(), row.begin(), row.end());
  labels_.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(n_features_, n_classes_);
  out.features_.reserve(indices.size() * n_features_);
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(row(i), labels_[i]);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes_, 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    require(labels_[i] >= 0 && static_cast<std::size_t>(labels_[i]) < n_classes_,
            ErrorCode::kInvalidArgument, "label out of range at row " + std::to_string(i));
  }
  for (double v : features_) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite feature value");
  }
}

void min_max_scale(Dataset& dataset) {
  const std::size_t d = dataset.n_features();
  if (dataset.empty() || d == 0) return;
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto r = dataset.row(i);
    for (std::size_t f = 0; f < d; ++f) {
      lo[f] = std::min(lo[f], r[f]);
      hi[f] = std::max(hi[f], r[f]);
    }
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto r = dataset.row(i);
    for (std::size_t f = 0; f < d; ++f) {
      const double span = hi[f] - lo[f];
      r[f] = span > 0.0 ? (r[f] - lo[f]) / span : 0.0;
    }
  }
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  for (std::size_t f = 0; f < dataset.n_features(); ++f) out << 'f' << f << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << dataset.label(i) << '\n';
  }
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path + " for writing");
  write_csv(dataset, out);
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed: " + path);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 1;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParseError,
          source_name + ": missing header line");
  const auto header = split_commas(trim(line));
  require(header.size() >= 2 && trim(header.back()) == "label", ErrorCode::kParseError,
          source_name + ":1: header must be f0,...,fN,label");
  const std::size_t d = header.size() - 1;

  std::vector<double> features;
  std::vector<int> labels;
  int max_label = -1;
  std::vector<double> row(d);
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    const std::string where = source_name + ":" + std::to_string(line_no);
    require(fields.size() == d + 1, ErrorCode::kParseError, where + ": expected " +
                                                                std::to_string(d + 1) + " fields");
    for (std::size_t f = 0; f < d; ++f) {
      const auto field = trim(fields[f]);
      const auto res = std::from_chars(field.data(), field.data() + field.size(), row[f]);
      require(res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(row[f]),
              ErrorCode::kParseError, where + ": bad feature value '" + std::string(field) + "'");
    }
    const auto lf = trim(fields[d]);
    int label = -1;
    const auto res = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    require(res.ec == std::errc() && res.ptr == lf.data() + lf.size() && label >= 0,
            ErrorCode::kParseError, where + ": label must be a non-negative integer");
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  require(!labels.empty(), ErrorCode::kEmptyDataset, source_name + ": no data rows");
  return Dataset(std::move(features), std::move(labels), d, static_cast<std::size_t>(max_label + 1));
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path);
  return read_csv(in, path);
}

}  // namespace imitlab
