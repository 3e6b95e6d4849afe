#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "imitlab/eval.hpp"
#include "imitlab/expert.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/policy.hpp"
#include "imitlab/synthgen.hpp"

namespace imitlab::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Parses `args` (without the program name) and runs one command. A
// `--config FILE` argument contributes one `key = value` line per option,
// overridden by options given on the command line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Turns a flat config file into `--key=value` arguments. Blank lines and
// lines starting with '#' are skipped. Throws kParseError naming the line.
std::vector<std::string> config_arguments(std::istream& in, const std::string& name);

struct GenDataConfig {
  std::string out_dir;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  synthgen::ParamRanges ranges;
  synthgen::GenerateOptions generation;
};

// Writes dataset_NNN.csv files and params.log into out_dir.
void gen_data(const GenDataConfig& config, std::ostream& log);

struct SimulateConfig {
  std::string out_path;
  expert::CampaignConfig campaign;
};

expert::CampaignSummary simulate(const SimulateConfig& config, std::ostream& log);

struct TrainCommandConfig {
  std::string corpus_path;
  std::string out_path;
  std::string report_path;  // optional
  std::size_t expected_k = 0;  // 0 accepts the corpus k
  policy::CloneConfig clone;
};

policy::TrainingReport train(const TrainCommandConfig& config, std::ostream& log);

struct EvaluateConfig {
  std::vector<std::string> data_paths;
  std::vector<std::string> strategies;
  std::string model_path;
  std::string out_dir;
  eval::ExperimentConfig experiment;
  std::size_t imital_j = policy::kApplicationJ;
  double alpha = eval::kDefaultAlpha;
};

// One spec per name; `imital` needs `policy` (kMissingModel otherwise).
std::vector<eval::StrategySpec> strategy_specs(const std::vector<std::string>& names,
                                               std::shared_ptr<const policy::PolicyNet> policy,
                                               std::size_t imital_j = policy::kApplicationJ);

// Writes <stem>.results.csv and <stem>.curves.csv per dataset to out_dir and
// the text report to `log`.
std::vector<eval::ExperimentResult> evaluate(const EvaluateConfig& config, std::ostream& log);

struct BenchConfig {
  std::vector<std::size_t> sizes;  // initial |U|, ascending
  std::vector<std::string> strategies;
  std::string model_path;
  std::string out_path;  // optional CSV
  std::size_t n_features = 10;
  std::size_t n_classes = 3;
  std::size_t cycles = 3;
  std::size_t b = 5;
  std::size_t test_size = 200;
  std::size_t imital_j = policy::kApplicationJ;
  std::uint64_t seed = 0;
  learner::TrainConfig learner;
};

struct BenchRow {
  std::size_t size = 0;
  std::string strategy;
  double mean_query_seconds = 0.0;
  double candidates_per_cycle = 0.0;
};

// `policy` overrides model_path when non-null.
std::vector<BenchRow> bench_runtime(const BenchConfig& config, std::ostream& log,
                                    std::shared_ptr<const policy::PolicyNet> policy = nullptr);

}  // namespace imitlab::cli
