#include "imitlab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "imitlab/error.hpp"
#include "imitlab/synthgen.hpp"

namespace imitlab::eval {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

struct RepOutcome {
  std::vector<al::EpisodeResult> episodes;  // per strategy
};

RepOutcome run_rep(const Dataset& dataset, std::span<const StrategySpec> strategies, const ExperimentConfig& config,
                   std::size_t rep) {
  const std::uint64_t rs = derive_seed(config.seed, rep);
  Rng split_rng(derive_seed(rs, 0));
  const auto [train, test] = synthgen::split(dataset, 0.5, split_rng);
  learner::TrainConfig cfg = config.learner;
  cfg.seed = derive_seed(rs, 1);
  Rng pool_rng(derive_seed(rs, 2));
  const al::PoolState initial = al::init_pool(train, pool_rng, cfg);

  RepOutcome out;
  for (const auto& spec : strategies) {
    al::PoolState pool = initial;
    const auto strategy = spec.make(test);
    Rng rng(derive_seed(rs, 3));
    out.episodes.push_back(al::al_loop(pool, *strategy, config.b, config.cycles, test, rng));
  }
  return out;
}

}  // namespace

double f1_auc(std::span<const double> curve) {
  require(!curve.empty(), ErrorCode::kEmptyCurve, "learning curve has no cycles");
  double total = 0.0;
  for (double v : curve) total += v;
  return total / static_cast<double>(curve.size());
}

double f1_auc(const al::LearningCurve& curve) { return f1_auc(std::span<const double>(curve.f1_per_cycle)); }

double wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::kLengthMismatch,
          "paired samples differ in length: " + std::to_string(xs.size()) + " vs " + std::to_string(ys.size()));
  require(xs.size() <= kMaxExactWilcoxon, ErrorCode::kInvalidArgument,
          "exact signed-rank test supports at most " + std::to_string(kMaxExactWilcoxon) + " pairs");
  std::vector<double> d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] != ys[i]) d.push_back(xs[i] - ys[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  // Doubled midranks are integers.
  std::vector<std::size_t> rank2(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi + 1 < n && std::fabs(d[order[hi + 1]]) == std::fabs(d[order[lo]])) ++hi;
    for (std::size_t t = lo; t <= hi; ++t) rank2[order[t]] = lo + hi + 2;
    lo = hi + 1;
  }
  std::size_t w2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) w2 += rank2[i];
  }
  std::vector<double> count(total2 + 1, 0.0);
  count[0] = 1.0;
  std::size_t reach = 0;
  for (std::size_t r : rank2) {
    reach += r;
    for (std::size_t s = reach; s >= r; --s) {
      count[s] += count[s - r];
      if (s == r) break;
    }
  }
  double below = 0.0, above = 0.0;
  for (std::size_t s = 0; s <= total2; ++s) {
    if (s <= w2) below += count[s];
    if (s >= w2) above += count[s];
  }
  const double all = std::ldexp(1.0, static_cast<int>(n));
  return std::min(1.0, 2.0 * std::min(below, above) / all);
}

WTLResult win_tie_loss(std::span<const al::LearningCurve> a, std::span<const al::LearningCurve> b, double alpha) {
  require(a.size() == b.size(), ErrorCode::kLengthMismatch,
          "repetition counts differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  WTLResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i].f1_per_cycle;
    const auto& y = b[i].f1_per_cycle;
    const double p = wilcoxon_signed_rank(x, y);
    if (p >= alpha) {
      ++r.ties;
      continue;
    }
    const double mx = f1_auc(x), my = f1_auc(y);
    if (mx > my) {
      ++r.wins;
    } else if (mx < my) {
      ++r.losses;
    } else {
      ++r.ties;
    }
  }
  if (!a.empty()) {
    const double n = static_cast<double>(a.size());
    r.win = 100.0 * static_cast<double>(r.wins) / n;
    r.tie = 100.0 * static_cast<double>(r.ties) / n;
    r.loss = 100.0 * static_cast<double>(r.losses) / n;
  }
  return r;
}

std::vector<std::size_t> competition_ranks(std::span<const double> values) {
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t better = 0;
    for (double v : values) better += v > values[i];
    ranks[i] = better + 1;
  }
  return ranks;
}

StrategySpec baseline_spec(const std::string& name) {
  al::make_baseline(name);  // rejects unknown names up front
  return {name, [name](const Dataset&) { return al::make_baseline(name); }};
}

void validate(const ExperimentConfig& c) {
  require(c.reps >= 1, ErrorCode::kInvalidArgument, "reps must be >= 1");
  require(c.b >= 1 && c.cycles >= 1 && c.parallelism >= 1, ErrorCode::kInvalidArgument,
          "batch, cycles and parallelism must be >= 1");
  learner::validate(c.learner);
}

ExperimentResult run_experiment(const Dataset& dataset, std::span<const StrategySpec> strategies,
                                const ExperimentConfig& config) {
  validate(config);
  std::vector<RepOutcome> reps(config.reps);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < config.reps;) {
      try {
        reps[r] = run_rep(dataset, strategies, config, r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = config.reps;
      }
    }
  };
  const std::size_t threads = std::min(config.parallelism, config.reps);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    StrategyResult sr;
    sr.name = strategies[s].name;
    double seconds = 0.0;
    std::size_t cycles = 0, candidates = 0;
    for (auto& rep : reps) {
      auto& ep = rep.episodes[s];
      sr.f1_aucs.push_back(f1_auc(ep.curve));
      sr.initial_labeled.push_back(ep.initial_labeled);
      for (double q : ep.query_seconds) seconds += q;
      for (std::size_t c : ep.candidates_evaluated) candidates += c;
      cycles += ep.query_seconds.size();
      sr.candidates_evaluated.insert(sr.candidates_evaluated.end(), ep.candidates_evaluated.begin(),
                                     ep.candidates_evaluated.end());
      sr.curves.push_back(std::move(ep.curve));
    }
    sr.mean_f1_auc = f1_auc(sr.f1_aucs);
    sr.mean_query_seconds = cycles ? seconds / static_cast<double>(cycles) : 0.0;
    sr.candidates_per_cycle = cycles ? static_cast<double>(candidates) / static_cast<double>(cycles) : 0.0;
    result.strategies.push_back(std::move(sr));
  }
  std::vector<double> means;
  for (const auto& sr : result.strategies) means.push_back(sr.mean_f1_auc);
  const auto ranks = competition_ranks(means);
  for (std::size_t s = 0; s < ranks.size(); ++s) result.strategies[s].rank = ranks[s];
  return result;
}

void report_text(std::ostream& out, std::span<const ExperimentResult> results,
                 std::span<const std::string> dataset_names, double alpha) {
  require(results.size() == dataset_names.size(), ErrorCode::kLengthMismatch, "one name per result expected");
  std::vector<std::string> names;
  if (!results.empty()) {
    for (const auto& sr : results.front().strategies) names.push_back(sr.name);
  }
  const std::size_t width = 14;
  std::size_t label_width = 10;
  for (const auto& n : dataset_names) label_width = std::max(label_width, n.size() + 1);

  out << "F1-AUC (%) and rank\n" << std::string(label_width, ' ');
  for (const auto& n : names) out << pad(n, width);
  out << '\n';
  std::vector<double> pct_sum(names.size(), 0.0), rank_sum(names.size(), 0.0);
  for (std::size_t d = 0; d < results.size(); ++d) {
    out << dataset_names[d] << std::string(label_width - dataset_names[d].size(), ' ');
    for (std::size_t s = 0; s < names.size(); ++s) {
      const auto& sr = results[d].strategies[s];
      pct_sum[s] += 100.0 * sr.mean_f1_auc;
      rank_sum[s] += static_cast<double>(sr.rank);
      out << pad(fixed(100.0 * sr.mean_f1_auc, 1) + " (" + std::to_string(sr.rank) + ")", width);
    }
    out << '\n';
  }
  if (!results.empty()) {
    const double n = static_cast<double>(results.size());
    std::vector<double> mean_pct;
    for (double v : pct_sum) mean_pct.push_back(v / n);
    const auto mean_ranks = competition_ranks(mean_pct);
    out << "mean %" << std::string(label_width - 6, ' ');
    for (std::size_t s = 0; s < names.size(); ++s) {
      out << pad(fixed(mean_pct[s], 1) + " (" + std::to_string(mean_ranks[s]) + ")", width);
    }
    out << "\nmean rank" << std::string(label_width - 9, ' ');
    for (std::size_t s = 0; s < names.size(); ++s) out << pad(fixed(rank_sum[s] / n, 2), width);
    out << '\n';
  }

  out << "\nWin/tie/loss (%) against " << (names.empty() ? std::string("-") : names.front()) << ", alpha "
      << fixed(alpha, 2) << '\n';
  for (std::size_t s = 1; s < names.size(); ++s) {
    std::vector<al::LearningCurve> a, b;
    for (const auto& r : results) {
      a.insert(a.end(), r.strategies[s].curves.begin(), r.strategies[s].curves.end());
      b.insert(b.end(), r.strategies[0].curves.begin(), r.strategies[0].curves.end());
    }
    const auto wtl = win_tie_loss(a, b, alpha);
    out << pad(names[s], width) << pad(fixed(wtl.win, 1), 8) << pad(fixed(wtl.tie, 1), 8)
        << pad(fixed(wtl.loss, 1), 8) << '\n';
  }

  out << "\nQuery selection runtime\n" << pad("strategy", width) << pad("seconds", 14) << pad("candidates", 14)
      << '\n';
  for (std::size_t s = 0; s < names.size(); ++s) {
    double seconds = 0.0, candidates = 0.0;
    for (const auto& r : results) {
      seconds += r.strategies[s].mean_query_seconds;
      candidates += r.strategies[s].candidates_per_cycle;
    }
    const double n = static_cast<double>(results.size());
    out << pad(names[s], width) << pad(fixed(seconds / n, 6), 14) << pad(fixed(candidates / n, 1), 14) << '\n';
  }
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "name,mean_f1auc,rank,mean_query_seconds,candidates_per_cycle\n";
  for (const auto& sr : result.strategies) {
    out << sr.name << ',' << exact(sr.mean_f1_auc) << ',' << sr.rank << ',' << exact(sr.mean_query_seconds) << ','
        << exact(sr.candidates_per_cycle) << '\n';
  }
}

void write_curves_csv(std::ostream& out, const ExperimentResult& result) {
  out << "strategy,rep,cycle,f1\n";
  for (const auto& sr : result.strategies) {
    for (std::size_t r = 0; r < sr.curves.size(); ++r) {
      const auto& c = sr.curves[r].f1_per_cycle;
      for (std::size_t t = 0; t < c.size(); ++t) out << sr.name << ',' << r << ',' << t << ',' << exact(c[t]) << '\n';
    }
  }
}

}  // namespace imitlab::eval
