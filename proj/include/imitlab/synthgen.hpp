#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imitlab/dataset.hpp"
#include "imitlab/random.hpp"

namespace imitlab::synthgen {

struct SynthParams {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::size_t clusters_per_class = 0;
  std::vector<double> class_weights;
  double noise_fraction = 0.0;
  double class_sep = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SynthParams&, const SynthParams&) = default;
};

// Sampling ranges for the integer parameters. The defaults are the full
// generation ranges; campaigns narrow them to keep desk-scale runs cheap.
struct ParamRanges {
  std::size_t min_samples = 100, max_samples = 5000;
  std::size_t min_features = 2, max_features = 100;
  std::size_t min_classes = 2, max_classes = 10;
  std::size_t min_clusters = 1, max_clusters = 10;
};

// Throws Error(kInvalidArgument) when any field is outside its range.
void validate(const SynthParams& params);

// Each range must be non-empty and inside the legal parameter range.
void validate(const ParamRanges& ranges);

SynthParams sample_params(Rng& rng, const ParamRanges& ranges = {});

// Flat `key=value` record on one line; class weights are `;`-separated.
std::string to_record(const SynthParams& params);
SynthParams parse_record(const std::string& line);

// Pre-mixing cluster centres, cluster-major (class c owns clusters
// [c * clusters_per_class, (c + 1) * clusters_per_class)). Centres sit on
// distinct vertices of a hypercube with side 2^class_sep centred at the
// origin, or at random points inside it when there are fewer vertices than
// clusters.
std::vector<std::vector<double>> place_centroids(const SynthParams& params, Rng& rng);

// Per-class sample counts proportional to the weights, largest remainder
// rounding, at least two samples per class.
std::vector<std::size_t> class_sample_counts(const SynthParams& params);

// Flips exactly round(fraction * n) labels, each to a different class.
// Returns the flipped row indices.
std::vector<std::size_t> inject_label_noise(std::vector<int>& labels, std::size_t n_classes,
                                            double fraction, Rng& rng);

struct GenerateOptions {
  std::chrono::milliseconds timeout{10'000};
  int max_retries = 5;
  bool scale_features = true;
};

// A single generation attempt was abandoned: it exceeded the wall-clock
// budget, or label noise left a class with fewer than two samples.
class GenerationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One generation attempt driven by params.seed. The result is min-max scaled
// unless options.scale_features is false. Throws GenerationAborted.
Dataset generate(const SynthParams& params, const GenerateOptions& options = {});

struct Generated {
  SynthParams params;
  Dataset dataset;
  int attempts = 0;
};

// Samples params and generates, resampling fresh params after a timeout or a
// degenerate draw, up to options.max_retries extra attempts.
Generated generate_with_retry(Rng& rng, const ParamRanges& ranges = {},
                              const GenerateOptions& options = {});

// Random row partition; the train part receives floor(ratio * n) rows and
// both parts contain every class.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio, Rng& rng);

// Isotropic blobs without the size limits of SynthParams, for runtime
// benchmarks on large pools.
Dataset gaussian_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                       Rng& rng);

}  // namespace imitlab::synthgen
