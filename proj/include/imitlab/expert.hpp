#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imitlab/alcore.hpp"
#include "imitlab/encoding.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/synthgen.hpp"

namespace imitlab::expert {

// For each candidate, a fresh learner trained on L plus that candidate (with
// its true label) is scored on `test`; slots past candidates.size() up to k
// are 0. Every look-ahead fit uses `fit_config` as given, including its seed.
std::vector<double> future_peek_rewards(const al::PoolState& pool, std::span<const std::size_t> candidates,
                                        std::size_t k, const Dataset& test,
                                        const learner::TrainConfig& fit_config);

// Top-b positions of `rewards` among the first `populated`, ties by lower
// sample index.
std::vector<std::size_t> best_by_reward(std::span<const double> rewards, std::span<const std::size_t> indices,
                                        std::size_t b);

struct ExpertOptions {
  std::size_t j = 10;
  std::size_t k = 20;
  encoding::EncodingOptions encoding;
};

// pre_select -> future peek -> best b. Look-ahead fits use pool.next_fit_config().
al::Query expert_query(const al::PoolState& pool, std::size_t b, const Dataset& test, Rng& rng,
                       const ExpertOptions& options = {});

class ExpertStrategy final : public al::QueryStrategy {
 public:
  ExpertStrategy(const Dataset& test, ExpertOptions options) : test_(&test), options_(options) {}
  std::string_view name() const override { return "expert"; }
  al::Query select(const al::PoolState& pool, std::size_t b, Rng& rng) const override;

 private:
  const Dataset* test_;
  ExpertOptions options_;
};

struct SimulationRecord {
  std::uint64_t dataset_id = 0;
  std::size_t cycle = 0;
  std::size_t k = 0;
  std::vector<double> encoded;  // 5k values
  std::vector<double> rewards;  // k values

  friend bool operator==(const SimulationRecord&, const SimulationRecord&) = default;
};

struct CampaignConfig {
  std::size_t n_datasets = 1;
  std::size_t tau = 10;
  std::size_t j = 10;
  std::size_t k = 20;
  std::size_t b = 5;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  synthgen::ParamRanges ranges;
  synthgen::GenerateOptions generation;
  learner::TrainConfig learner;
  std::size_t metric_threshold = encoding::kDefaultMetricThreshold;
  std::size_t du_cap = encoding::kDefaultDuCap;
};

void validate(const CampaignConfig& config);

// One simulated episode on `dataset`: 50/50 split, one seed sample per class,
// then up to tau cycles of pre-select, encode, future peek, record, label the
// best b and refit. All randomness comes from `seed`.
std::vector<SimulationRecord> simulate_dataset(const Dataset& dataset, const CampaignConfig& config,
                                               std::uint64_t dataset_id, std::uint64_t seed);

// Generates a synthetic dataset from `seed` and simulates it.
std::vector<SimulationRecord> simulate_synthetic(const CampaignConfig& config, std::uint64_t dataset_id,
                                                 std::uint64_t seed);

// Corpus text format. Header:
//   # imitlab-corpus k=20 tau=10 seed=42 metric_threshold=50 du_cap=1000 order=u1-desc-index-asc
// One record per line:
//   dataset_id=3 cycle=0 k=20 encoded=v,v,... rewards=v,...
struct CorpusHeader {
  std::size_t k = 0;
  std::size_t tau = 0;
  std::uint64_t seed = 0;
  std::size_t metric_threshold = encoding::kDefaultMetricThreshold;
  std::size_t du_cap = encoding::kDefaultDuCap;
  std::string order = encoding::kCanonicalOrderTag;
};

std::string format_header(const CorpusHeader& header);
std::string format_record(const SimulationRecord& record);
SimulationRecord parse_record(const std::string& line, std::size_t line_no = 0);

struct Corpus {
  CorpusHeader header;
  std::vector<SimulationRecord> records;
};

// Rejects records whose k differs from the header, and a header k that
// differs from expected_k when given (kInconsistentK). Parse errors name the
// line.
Corpus read_corpus(std::istream& in, std::optional<std::size_t> expected_k = std::nullopt);
void write_corpus(std::ostream& out, const Corpus& corpus);

// Order-insensitive checksum of the formatted records.
std::uint64_t multiset_checksum(std::span<const SimulationRecord> records);

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  // Called concurrently from campaign workers.
  virtual void write(const std::vector<SimulationRecord>& records) = 0;
};

class MemorySink final : public RecordSink {
 public:
  void write(const std::vector<SimulationRecord>& records) override;
  std::vector<SimulationRecord> take();

 private:
  std::mutex mutex_;
  std::vector<SimulationRecord> records_;
};

// Writes the header on construction and one line per record; throws
// kSinkWriteFailure when the stream fails.
class StreamSink final : public RecordSink {
 public:
  StreamSink(std::ostream& out, const CorpusHeader& header);
  void write(const std::vector<SimulationRecord>& records) override;

 private:
  std::mutex mutex_;
  std::ostream* out_;
};

struct CampaignSummary {
  std::size_t records_written = 0;
  std::size_t datasets_completed = 0;
  std::size_t failures = 0;
  double wall_seconds = 0.0;
};

// n_datasets independent jobs, job i seeded with derive_seed(seed, i), run by
// up to `parallelism` threads. Records reach the sink in completion order.
CampaignSummary run_campaign(const CampaignConfig& config, RecordSink& sink);

CorpusHeader header_for(const CampaignConfig& config);

}  // namespace imitlab::expert
