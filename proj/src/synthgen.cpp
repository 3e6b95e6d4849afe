#include "imitlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "imitlab/error.hpp"

namespace imitlab::synthgen {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_range(std::size_t value, std::size_t lo, std::size_t hi, const char* name) {
  require(value >= lo && value <= hi, ErrorCode::kInvalidArgument,
          std::string(name) + " = " + std::to_string(value) + " outside [" + std::to_string(lo) +
              ", " + std::to_string(hi) + "]");
}

std::size_t draw_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

}  // namespace

void validate(const SynthParams& p) {
  check_range(p.n_samples, 100, 5000, "n_samples");
  check_range(p.n_features, 2, 100, "n_features");
  check_range(p.n_classes, 2, 10, "n_classes");
  check_range(p.clusters_per_class, 1, 10, "clusters_per_class");
  require(p.class_weights.size() == p.n_classes, ErrorCode::kInvalidArgument,
          "class_weights must have one entry per class");
  double sum = 0.0;
  for (double w : p.class_weights) {
    require(w >= 0.0, ErrorCode::kInvalidArgument, "negative class weight");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::kInvalidArgument, "class weights must sum to 1");
  require(p.noise_fraction >= 0.0 && p.noise_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "noise_fraction outside [0, 1]");
  require(p.class_sep >= 0.0 && p.class_sep <= 10.0, ErrorCode::kInvalidArgument,
          "class_sep outside [0, 10]");
}

void validate(const ParamRanges& r) {
  auto check = [](std::size_t lo, std::size_t hi, std::size_t legal_lo, std::size_t legal_hi, const char* name) {
    require(lo <= hi, ErrorCode::kInvalidArgument, std::string(name) + " range is empty");
    check_range(lo, legal_lo, legal_hi, name);
    check_range(hi, legal_lo, legal_hi, name);
  };
  check(r.min_samples, r.max_samples, 100, 5000, "n_samples");
  check(r.min_features, r.max_features, 2, 100, "n_features");
  check(r.min_classes, r.max_classes, 2, 10, "n_classes");
  check(r.min_clusters, r.max_clusters, 1, 10, "clusters_per_class");
}

SynthParams sample_params(Rng& rng, const ParamRanges& r) {
  SynthParams p;
  p.n_samples = draw_size(rng, r.min_samples, r.max_samples);
  p.n_features = draw_size(rng, r.min_features, r.max_features);
  p.n_classes = draw_size(rng, r.min_classes, r.max_classes);
  p.clusters_per_class = draw_size(rng, r.min_clusters, r.max_clusters);

  // Symmetric Dirichlet(1): normalized unit-rate exponentials.
  std::gamma_distribution<double> gamma(1.0, 1.0);
  p.class_weights.resize(p.n_classes);
  double total = 0.0;
  for (double& w : p.class_weights) {
    w = gamma(rng);
    total += w;
  }
  if (total <= 0.0) {
    std::fill(p.class_weights.begin(), p.class_weights.end(), 1.0 / static_cast<double>(p.n_classes));
  } else {
    for (double& w : p.class_weights) w /= total;
  }

  // Pareto(shape 5, scale 1) via inverse CDF, shifted to start at 0 percent.
  const double u = 1.0 - uniform_real(rng, 0.0, 1.0);  // (0, 1]
  const double draw = std::pow(u, -1.0 / 5.0);
  p.noise_fraction = std::clamp(draw - 1.0, 0.0, 100.0) / 100.0;

  p.class_sep = uniform_real(rng, 0.0, 10.0);
  p.seed = rng();
  return p;
}

std::string to_record(const SynthParams& p) {
  std::ostringstream out;
  out << "n_samples=" << p.n_samples << " n_features=" << p.n_features
      << " n_classes=" << p.n_classes << " clusters_per_class=" << p.clusters_per_class
      << " class_weights=";
  for (std::size_t c = 0; c < p.class_weights.size(); ++c) {
    if (c) out << ';';
    out << fmt_double(p.class_weights[c]);
  }
  out << " noise_fraction=" << fmt_double(p.noise_fraction)
      << " class_sep=" << fmt_double(p.class_sep) << " seed=" << p.seed;
  return out.str();
}

SynthParams parse_record(const std::string& line) {
  SynthParams p;
  std::istringstream in(line);
  std::string token;
  int seen = 0;
  try {
    while (in >> token) {
      const auto eq = token.find('=');
      require(eq != std::string::npos, ErrorCode::kParseError, "token without '=': " + token);
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "n_samples") p.n_samples = std::stoull(value);
      else if (key == "n_features") p.n_features = std::stoull(value);
      else if (key == "n_classes") p.n_classes = std::stoull(value);
      else if (key == "clusters_per_class") p.clusters_per_class = std::stoull(value);
      else if (key == "noise_fraction") p.noise_fraction = std::stod(value);
      else if (key == "class_sep") p.class_sep = std::stod(value);
      else if (key == "seed") p.seed = std::stoull(value);
      else if (key == "class_weights") {
        std::istringstream ws(value);
        std::string w;
        while (std::getline(ws, w, ';')) p.class_weights.push_back(std::stod(w));
      } else {
        fail(ErrorCode::kParseError, "unknown key: " + key);
      }
      ++seen;
    }
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParseError, "malformed params record: " + line);
  }
  require(seen == 8, ErrorCode::kParseError, "params record must have 8 fields: " + line);
  return p;
}

std::vector<std::vector<double>> place_centroids(const SynthParams& p, Rng& rng) {
  const std::size_t n_clusters = p.n_classes * p.clusters_per_class;
  const std::size_t d = p.n_features;
  const double side = std::exp2(p.class_sep);
  std::vector<std::vector<double>> centroids(n_clusters, std::vector<double>(d));

  const bool enough_vertices = d >= 63 || (std::size_t{1} << d) >= n_clusters;
  if (!enough_vertices) {
    for (auto& c : centroids) {
      for (double& x : c) x = side * (uniform_real(rng, 0.0, 1.0) - 0.5);
    }
    return centroids;
  }

  std::vector<std::vector<bool>> vertices;
  if (d <= 10) {
    std::vector<std::size_t> all(std::size_t{1} << d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t code : sample_without_replacement<std::size_t>(all, n_clusters, rng)) {
      std::vector<bool> bits(d);
      for (std::size_t f = 0; f < d; ++f) bits[f] = (code >> f) & 1U;
      vertices.push_back(std::move(bits));
    }
  } else {
    std::set<std::vector<bool>> used;
    while (vertices.size() < n_clusters) {
      std::vector<bool> bits(d);
      for (std::size_t f = 0; f < d; ++f) bits[f] = uniform_int(rng, 0, 1) == 1;
      if (used.insert(bits).second) vertices.push_back(std::move(bits));
    }
  }
  for (std::size_t k = 0; k < n_clusters; ++k) {
    for (std::size_t f = 0; f < d; ++f) centroids[k][f] = side * (vertices[k][f] ? 0.5 : -0.5);
  }
  return centroids;
}

std::vector<std::size_t> class_sample_counts(const SynthParams& p) {
  const std::size_t n_classes = p.n_classes;
  std::vector<std::size_t> counts(n_classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double exact = p.class_weights[c] * static_cast<double>(p.n_samples);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < p.n_samples; ++i, ++assigned) ++counts[remainders[i % n_classes].second];
  for (std::size_t c = 0; c < n_classes; ++c) {
    while (counts[c] < 2) {
      const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[donor];
      ++counts[c];
    }
  }
  return counts;
}

std::vector<std::size_t> inject_label_noise(std::vector<int>& labels, std::size_t n_classes,
                                            double fraction, Rng& rng) {
  const auto n_flip = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size())));
  std::vector<std::size_t> rows(labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto flipped = sample_without_replacement<std::size_t>(rows, n_flip, rng);
  for (std::size_t i : flipped) {
    // Uniform over the other n_classes - 1 classes.
    auto shift = uniform_int(rng, 1, static_cast<std::int64_t>(n_classes) - 1);
    labels[i] = static_cast<int>((labels[i] + shift) % static_cast<std::int64_t>(n_classes));
  }
  return flipped;
}

Dataset generate(const SynthParams& params, const GenerateOptions& options) {
  validate(params);
  const auto deadline = Clock::now() + options.timeout;
  auto check_deadline = [&] {
    if (Clock::now() > deadline) throw GenerationAborted("generation attempt timed out");
  };

  Rng rng(params.seed);
  const std::size_t d = params.n_features;
  const std::size_t cpc = params.clusters_per_class;
  const auto centroids = place_centroids(params, rng);
  const auto counts = class_sample_counts(params);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> features;
  features.reserve(params.n_samples * d);
  std::vector<int> labels;
  labels.reserve(params.n_samples);
  std::vector<double> mixing(d * d);
  std::vector<double> z(d);

  for (std::size_t c = 0; c < params.n_classes; ++c) {
    for (std::size_t k = 0; k < cpc; ++k) {
      check_deadline();
      const std::size_t in_cluster = counts[c] / cpc + (k < counts[c] % cpc ? 1 : 0);
      const auto& centre = centroids[c * cpc + k];
      for (double& a : mixing) a = uniform_real(rng, -1.0, 1.0);
      for (std::size_t s = 0; s < in_cluster; ++s) {
        for (double& v : z) v = normal(rng);
        // x = z * A + centre
        for (std::size_t f = 0; f < d; ++f) {
          double acc = centre[f];
          for (std::size_t g = 0; g < d; ++g) acc += z[g] * mixing[g * d + f];
          features.push_back(acc);
        }
        labels.push_back(static_cast<int>(c));
      }
    }
  }

  bool ok = params.noise_fraction == 0.0;
  for (int attempt = 0; !ok && attempt < 10; ++attempt) {
    std::vector<int> noisy = labels;
    inject_label_noise(noisy, params.n_classes, params.noise_fraction, rng);
    std::vector<std::size_t> per_class(params.n_classes, 0);
    for (int y : noisy) ++per_class[static_cast<std::size_t>(y)];
    if (*std::min_element(per_class.begin(), per_class.end()) >= 2) {
      labels = std::move(noisy);
      ok = true;
    }
  }
  if (!ok) throw GenerationAborted("label noise emptied a class");
  check_deadline();

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  Dataset raw(std::move(features), std::move(labels), d, params.n_classes);
  Dataset out = raw.subset(order);
  if (options.scale_features) min_max_scale(out);
  return out;
}

Generated generate_with_retry(Rng& rng, const ParamRanges& ranges, const GenerateOptions& options) {
  std::string last_reason;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    SynthParams params = sample_params(rng, ranges);
    try {
      return Generated{params, generate(params, options), attempt + 1};
    } catch (const GenerationAborted& e) {
      last_reason = e.what();
    }
  }
  fail(ErrorCode::kTimeoutRetryExhausted,
       "no dataset after " + std::to_string(options.max_retries + 1) + " attempts (" + last_reason + ")");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio, Rng& rng) {
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::kInvalidArgument, "split ratio must be in (0, 1)");
  const auto counts = dataset.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    require(counts[c] >= 2, ErrorCode::kInfeasibleSplit,
            "class " + std::to_string(c) + " has fewer than 2 samples");
  }
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  require(n_train >= dataset.n_classes() && n - n_train >= dataset.n_classes(),
          ErrorCode::kInfeasibleSplit, "split too small to hold every class on both sides");

  std::vector<std::size_t> order(n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    std::vector<bool> in_train(dataset.n_classes(), false), in_test(dataset.n_classes(), false);
    for (std::size_t i = 0; i < n; ++i) {
      auto& seen = i < n_train ? in_train : in_test;
      seen[static_cast<std::size_t>(dataset.label(order[i]))] = true;
    }
    const auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
    if (all(in_train) && all(in_test)) {
      std::span<const std::size_t> whole(order);
      return {dataset.subset(whole.first(n_train)), dataset.subset(whole.subspan(n_train))};
    }
  }
  fail(ErrorCode::kInfeasibleSplit, "no permutation placed every class on both sides");
}

Dataset gaussian_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes, Rng& rng) {
  require(n_classes >= 2 && n_features >= 1 && n_samples >= n_classes, ErrorCode::kInvalidArgument,
          "gaussian_blobs needs n_samples >= n_classes >= 2");
  std::vector<std::vector<double>> centres(n_classes, std::vector<double>(n_features));
  for (auto& c : centres) {
    for (double& x : c) x = uniform_real(rng, 0.0, 10.0);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out(n_features, n_classes);
  std::vector<double> row(n_features);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t c = i % n_classes;
    for (std::size_t f = 0; f < n_features; ++f) row[f] = centres[c][f] + normal(rng);
    out.push_back(row, static_cast<int>(c));
  }
  min_max_scale(out);
  return out;
}

}  // namespace imitlab::synthgen
