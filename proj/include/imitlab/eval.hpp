#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "imitlab/alcore.hpp"
#include "imitlab/dataset.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/pool.hpp"

namespace imitlab::eval {

// Mean of the per-cycle values. Throws kEmptyCurve.
double f1_auc(const al::LearningCurve& curve);
double f1_auc(std::span<const double> curve);

inline constexpr std::size_t kMaxExactWilcoxon = 25;

// Exact two-sided signed-rank p-value. Zero differences are dropped, tied
// |differences| get midranks, and p = min(1, 2 min(P(W+ <= w), P(W+ >= w)))
// under the exact null distribution of the realized ranks. Returns 1 when
// every difference is zero. Throws kLengthMismatch, and kInvalidArgument past
// kMaxExactWilcoxon pairs.
double wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys);

struct WTLResult {
  double win = 0.0;   // percent
  double tie = 0.0;
  double loss = 0.0;
  std::size_t wins = 0, ties = 0, losses = 0;
};

inline constexpr double kDefaultAlpha = 0.05;

// Per paired repetition: p >= alpha is a tie, otherwise the higher curve mean
// wins.
WTLResult win_tie_loss(std::span<const al::LearningCurve> a, std::span<const al::LearningCurve> b,
                       double alpha = kDefaultAlpha);

// Competition ranks (1 = best) for descending values; bit-equal values share
// the lower rank.
std::vector<std::size_t> competition_ranks(std::span<const double> values);

// Builds a strategy for one repetition; `test` is that repetition's held-out
// split and outlives the strategy.
using StrategyFactory = std::function<std::unique_ptr<al::QueryStrategy>(const Dataset& test)>;

struct StrategySpec {
  std::string name;
  StrategyFactory make;
};

StrategySpec baseline_spec(const std::string& name);

struct ExperimentConfig {
  std::size_t reps = 10;
  std::size_t b = 5;
  std::size_t cycles = 25;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  learner::TrainConfig learner;
};

void validate(const ExperimentConfig& config);

struct StrategyResult {
  std::string name;
  std::vector<al::LearningCurve> curves;  // one per repetition
  std::vector<double> f1_aucs;
  std::vector<std::vector<std::size_t>> initial_labeled;  // per repetition
  double mean_f1_auc = 0.0;
  std::size_t rank = 0;
  double mean_query_seconds = 0.0;
  double candidates_per_cycle = 0.0;
  std::vector<std::size_t> candidates_evaluated;  // every cycle, rep-major
};

struct ExperimentResult {
  std::vector<StrategyResult> strategies;
};

// Per repetition r the split and the initial pool derive from
// derive_seed(seed, r) and are shared by every strategy. Repetitions run on up
// to `parallelism` threads; results do not depend on the thread count.
ExperimentResult run_experiment(const Dataset& dataset, std::span<const StrategySpec> strategies,
                                const ExperimentConfig& config);

// Rank table (percent, 1 decimal, plus mean rank over `results`), win/tie/loss
// of every strategy against the first, and runtime means.
void report_text(std::ostream& out, std::span<const ExperimentResult> results,
                 std::span<const std::string> dataset_names, double alpha = kDefaultAlpha);

// name,mean_f1auc,rank,mean_query_seconds,candidates_per_cycle
void write_results_csv(std::ostream& out, const ExperimentResult& result);
// strategy,rep,cycle,f1
void write_curves_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace imitlab::eval
