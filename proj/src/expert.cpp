#include "imitlab/expert.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "imitlab/error.hpp"

namespace imitlab::expert {

std::vector<double> future_peek_rewards(const al::PoolState& pool, std::span<const std::size_t> candidates,
                                        std::size_t k, const Dataset& test,
                                        const learner::TrainConfig& fit_config) {
  require(candidates.size() <= k, ErrorCode::kInvalidArgument, "more candidates than k");
  const Dataset& data = pool.dataset();
  std::vector<std::size_t> rows = pool.labeled();
  rows.push_back(0);
  learner::TrainConfig cfg = fit_config;
  cfg.warm_start = false;
  std::vector<double> rewards(k, 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    rows.back() = candidates[c];
    const auto peek = learner::fit(pool.learner(), data.subset(rows), cfg);
    rewards[c] = learner::accuracy(peek, test);
  }
  return rewards;
}

std::vector<std::size_t> best_by_reward(std::span<const double> rewards, std::span<const std::size_t> indices,
                                        std::size_t b) {
  return al::top_positions(indices.size(), b, [&](std::size_t x, std::size_t y) {
    if (rewards[x] != rewards[y]) return rewards[x] > rewards[y];
    return indices[x] < indices[y];
  });
}

al::Query expert_query(const al::PoolState& pool, std::size_t b, const Dataset& test, Rng& rng,
                       const ExpertOptions& options) {
  const auto metric = encoding::metric_for(pool.dataset().n_features(), options.encoding.metric_threshold);
  const auto candidates = encoding::pre_select(pool, options.j, options.k, rng, metric);
  const auto rewards = future_peek_rewards(pool, candidates.indices, options.k, test, pool.next_fit_config());
  al::Query q;
  q.candidates_evaluated = candidates.evaluated;
  for (std::size_t p : best_by_reward(rewards, candidates.indices, b)) q.indices.push_back(candidates.indices[p]);
  return q;
}

al::Query ExpertStrategy::select(const al::PoolState& pool, std::size_t b, Rng& rng) const {
  return expert_query(pool, b, *test_, rng, options_);
}

void validate(const CampaignConfig& c) {
  require(c.n_datasets >= 1 && c.tau >= 1 && c.j >= 1 && c.k >= 1 && c.b >= 1 && c.parallelism >= 1,
          ErrorCode::kInvalidArgument, "campaign counts must all be >= 1");
  learner::validate(c.learner);
  synthgen::validate(c.ranges);
}

std::vector<SimulationRecord> simulate_dataset(const Dataset& dataset, const CampaignConfig& config,
                                               std::uint64_t dataset_id, std::uint64_t seed) {
  Rng split_rng(derive_seed(seed, 0));
  auto [train, test] = synthgen::split(dataset, 0.5, split_rng);
  learner::TrainConfig learner_cfg = config.learner;
  learner_cfg.seed = derive_seed(seed, 1);
  Rng pool_rng(derive_seed(seed, 2));
  al::PoolState pool = al::init_pool(train, pool_rng, learner_cfg);
  Rng select_rng(derive_seed(seed, 3));
  const auto metric = encoding::metric_for(train.n_features(), config.metric_threshold);

  std::vector<SimulationRecord> records;
  for (std::size_t t = 0; t < config.tau && !pool.unlabeled().empty(); ++t) {
    const auto candidates = encoding::pre_select(pool, config.j, config.k, select_rng, metric);
    encoding::EncodingOptions enc{config.metric_threshold, config.du_cap, derive_seed(seed, 1000 + t)};
    auto state = encoding::encode_state(pool, candidates.indices, config.k, pool.learner(), enc);
    auto rewards = future_peek_rewards(pool, state.candidates, config.k, test, pool.next_fit_config());

    std::vector<std::size_t> batch;
    for (std::size_t p : best_by_reward(rewards, state.candidates, config.b)) batch.push_back(state.candidates[p]);
    records.push_back({dataset_id, t, config.k, std::move(state.values), std::move(rewards)});
    pool.label(batch);
    pool.refit();
  }
  return records;
}

std::vector<SimulationRecord> simulate_synthetic(const CampaignConfig& config, std::uint64_t dataset_id,
                                                 std::uint64_t seed) {
  Rng gen_rng(derive_seed(seed, 99));
  const auto generated = synthgen::generate_with_retry(gen_rng, config.ranges, config.generation);
  return simulate_dataset(generated.dataset, config, dataset_id, derive_seed(seed, 100));
}

namespace {

void append_values(std::string& out, std::span<const double> values) {
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += buf;
  }
}

std::vector<double> parse_values(const std::string& text, const std::string& where) {
  std::vector<double> values;
  const char* cursor = text.c_str();
  const char* end_of_text = cursor + text.size();
  while (cursor < end_of_text) {
    char* end = nullptr;
    const double v = std::strtod(cursor, &end);
    require(end != cursor, ErrorCode::kParseError, where + ": bad number list");
    values.push_back(v);
    cursor = end;
    if (cursor < end_of_text) {
      require(*cursor == ',', ErrorCode::kParseError, where + ": expected ','");
      ++cursor;
    }
  }
  return values;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string format_header(const CorpusHeader& h) {
  std::ostringstream out;
  out << "# imitlab-corpus k=" << h.k << " tau=" << h.tau << " seed=" << h.seed
      << " metric_threshold=" << h.metric_threshold << " du_cap=" << h.du_cap << " order=" << h.order;
  return out.str();
}

std::string format_record(const SimulationRecord& r) {
  std::string out = "dataset_id=" + std::to_string(r.dataset_id) + " cycle=" + std::to_string(r.cycle) +
                    " k=" + std::to_string(r.k) + " encoded=";
  append_values(out, r.encoded);
  out += " rewards=";
  append_values(out, r.rewards);
  return out;
}

SimulationRecord parse_record(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  std::istringstream in(line);
  SimulationRecord r;
  std::string token;
  int seen = 0;
  try {
    while (in >> token) {
      const auto eq = token.find('=');
      require(eq != std::string::npos, ErrorCode::kParseError, where + ": token without '='");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "dataset_id") r.dataset_id = std::stoull(value);
      else if (key == "cycle") r.cycle = std::stoull(value);
      else if (key == "k") r.k = std::stoull(value);
      else if (key == "encoded") r.encoded = parse_values(value, where);
      else if (key == "rewards") r.rewards = parse_values(value, where);
      else fail(ErrorCode::kParseError, where + ": unknown field " + key);
      ++seen;
    }
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParseError, where + ": malformed integer field");
  }
  require(seen == 5, ErrorCode::kParseError, where + ": expected 5 fields");
  require(r.k >= 1 && r.encoded.size() == encoding::kTupleWidth * r.k && r.rewards.size() == r.k,
          ErrorCode::kParseError, where + ": encoded/rewards lengths do not match k");
  return r;
}

Corpus read_corpus(std::istream& in, std::optional<std::size_t> expected_k) {
  Corpus corpus;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kEmptyCorpus, "corpus has no header");
  {
    std::istringstream h(line);
    std::string hash, magic, token;
    h >> hash >> magic;
    require(hash == "#" && magic == "imitlab-corpus", ErrorCode::kParseError, "line 1: not a corpus header");
    try {
      while (h >> token) {
        const auto eq = token.find('=');
        require(eq != std::string::npos, ErrorCode::kParseError, "line 1: bad header token");
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "k") corpus.header.k = std::stoull(value);
        else if (key == "tau") corpus.header.tau = std::stoull(value);
        else if (key == "seed") corpus.header.seed = std::stoull(value);
        else if (key == "metric_threshold") corpus.header.metric_threshold = std::stoull(value);
        else if (key == "du_cap") corpus.header.du_cap = std::stoull(value);
        else if (key == "order") corpus.header.order = value;
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::kParseError, "line 1: malformed header value");
    }
  }
  require(corpus.header.k >= 1, ErrorCode::kParseError, "line 1: header lacks k");
  if (expected_k) {
    require(*expected_k == corpus.header.k, ErrorCode::kInconsistentK,
            "corpus k=" + std::to_string(corpus.header.k) + " but k=" + std::to_string(*expected_k) + " requested");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto record = parse_record(line, line_no);
    require(record.k == corpus.header.k, ErrorCode::kInconsistentK,
            "line " + std::to_string(line_no) + ": record k differs from header");
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << format_header(corpus.header) << '\n';
  for (const auto& r : corpus.records) out << format_record(r) << '\n';
}

std::uint64_t multiset_checksum(std::span<const SimulationRecord> records) {
  std::uint64_t sum = 0;
  for (const auto& r : records) sum += splitmix64(fnv1a(format_record(r)));
  return sum ^ splitmix64(records.size());
}

void MemorySink::write(const std::vector<SimulationRecord>& records) {
  std::lock_guard lock(mutex_);
  records_.insert(records_.end(), records.begin(), records.end());
}

std::vector<SimulationRecord> MemorySink::take() {
  std::lock_guard lock(mutex_);
  return std::move(records_);
}

StreamSink::StreamSink(std::ostream& out, const CorpusHeader& header) : out_(&out) {
  *out_ << format_header(header) << '\n';
  require(static_cast<bool>(*out_), ErrorCode::kSinkWriteFailure, "cannot write corpus header");
}

void StreamSink::write(const std::vector<SimulationRecord>& records) {
  std::string block;
  for (const auto& r : records) {
    block += format_record(r);
    block.push_back('\n');
  }
  std::lock_guard lock(mutex_);
  *out_ << block;
  out_->flush();
  require(static_cast<bool>(*out_), ErrorCode::kSinkWriteFailure, "corpus stream write failed");
}

CorpusHeader header_for(const CampaignConfig& config) {
  CorpusHeader h;
  h.k = config.k;
  h.tau = config.tau;
  h.seed = config.seed;
  h.metric_threshold = config.metric_threshold;
  h.du_cap = config.du_cap;
  return h;
}

CampaignSummary run_campaign(const CampaignConfig& config, RecordSink& sink) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> records{0}, completed{0}, failures{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= config.n_datasets) return;
      std::vector<SimulationRecord> out;
      try {
        try {
          out = simulate_synthetic(config, job, derive_seed(config.seed, job));
        } catch (const Error& e) {
          // A dataset that cannot be generated or split is skipped, not fatal.
          if (e.code() != ErrorCode::kTimeoutRetryExhausted && e.code() != ErrorCode::kInfeasibleSplit) throw;
          failures.fetch_add(1);
          continue;
        }
        sink.write(out);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(config.n_datasets);
        return;
      }
      records.fetch_add(out.size());
      completed.fetch_add(1);
    }
  };

  const std::size_t threads = std::min(config.parallelism, config.n_datasets);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  CampaignSummary summary;
  summary.records_written = records.load();
  summary.datasets_completed = completed.load();
  summary.failures = failures.load();
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace imitlab::expert
