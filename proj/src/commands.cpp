#include "imitlab/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "imitlab/error.hpp"

namespace imitlab::cli {
namespace fs = std::filesystem;
namespace {

void require_directory(const std::string& dir) {
  require(!dir.empty() && fs::is_directory(dir), ErrorCode::kIoError, "output directory does not exist: " + dir);
}

void require_parent_directory(const std::string& path) {
  require(!path.empty(), ErrorCode::kInvalidArgument, "output path is empty");
  const fs::path parent = fs::path(path).parent_path();
  require(parent.empty() || fs::is_directory(parent), ErrorCode::kIoError,
          "output directory does not exist: " + parent.string() + " (for " + path + ")");
}

void require_readable(const std::string& path) {
  require(fs::is_regular_file(path), ErrorCode::kIoError, "cannot read " + path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path);
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  require(out.good(), ErrorCode::kIoError, "write failed: " + path);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::shared_ptr<const policy::PolicyNet> load_policy(const std::string& path) {
  require_readable(path);
  std::ifstream in(path);
  return std::make_shared<const policy::PolicyNet>(policy::load(in));
}

bool needs_model(const std::vector<std::string>& strategies) {
  for (const auto& s : strategies) {
    if (s == "imital") return true;
  }
  return false;
}

void check_strategy_names(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    require(seen.insert(n).second, ErrorCode::kInvalidArgument, "strategy listed twice: " + n);
    if (n == "imital" || n == "expert") continue;
    al::make_baseline(n);
  }
}

}  // namespace

std::vector<std::string> config_arguments(std::istream& in, const std::string& name) {
  std::vector<std::string> args;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    require(!key.empty(), ErrorCode::kParseError, name + ":" + std::to_string(no) + ": expected key = value");
    args.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

void gen_data(const GenDataConfig& config, std::ostream& log) {
  synthgen::validate(config.ranges);
  require(config.generation.max_retries >= 0, ErrorCode::kInvalidArgument, "max retries must be >= 0");
  require_directory(config.out_dir);
  if (config.count == 0) {
    log << "generated 0 datasets\n";
    return;
  }
  std::vector<synthgen::Generated> generated;
  for (std::size_t i = 0; i < config.count; ++i) {
    Rng rng(derive_seed(config.seed, i));
    generated.push_back(synthgen::generate_with_retry(rng, config.ranges, config.generation));
  }
  const fs::path dir(config.out_dir);
  const std::string log_path = (dir / "params.log").string();
  auto params = open_output(log_path);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "dataset_%03zu.csv", i);
    const std::string path = (dir / stem).string();
    auto out = open_output(path);
    write_csv(generated[i].dataset, out);
    finish_output(out, path);
    params << stem << ' ' << synthgen::to_record(generated[i].params) << '\n';
  }
  finish_output(params, log_path);
  log << "generated " << generated.size() << " datasets in " << config.out_dir << '\n';
}

expert::CampaignSummary simulate(const SimulateConfig& config, std::ostream& log) {
  expert::validate(config.campaign);
  require_parent_directory(config.out_path);
  auto out = open_output(config.out_path);
  expert::StreamSink sink(out, expert::header_for(config.campaign));
  const auto summary = expert::run_campaign(config.campaign, sink);
  finish_output(out, config.out_path);
  log << "records " << summary.records_written << '\n'
      << "datasets " << summary.datasets_completed << '\n'
      << "failures " << summary.failures << '\n';
  log << "wall_seconds " << fixed(summary.wall_seconds, 3) << '\n';
  return summary;
}

policy::TrainingReport train(const TrainCommandConfig& config, std::ostream& log) {
  policy::validate(config.clone);
  require_readable(config.corpus_path);
  require_parent_directory(config.out_path);
  if (!config.report_path.empty()) require_parent_directory(config.report_path);

  std::ifstream in(config.corpus_path);
  const auto corpus = config.expected_k
                          ? expert::read_corpus(in, config.expected_k)
                          : expert::read_corpus(in);
  require(corpus.header.order == encoding::kCanonicalOrderTag, ErrorCode::kTagMismatch,
          "corpus candidate order '" + corpus.header.order + "' differs from '" + encoding::kCanonicalOrderTag + "'");
  auto trained = policy::train_policy(corpus.records, config.clone);
  trained.net.set_encoding(corpus.header.metric_threshold, corpus.header.du_cap);

  std::ostringstream report;
  const auto& r = trained.report;
  report << "records train " << r.train_records << " validation " << r.validation_records << '\n'
         << "epochs " << r.train_loss.size() << " best " << r.best_epoch << '\n';
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    report << "epoch " << e << " train_loss " << fixed(r.train_loss[e], 6);
    if (e < r.validation_loss.size()) report << " validation_loss " << fixed(r.validation_loss[e], 6);
    report << '\n';
  }
  report << "top1 train " << fixed(r.train_top1, 4) << " validation " << fixed(r.validation_top1, 4) << '\n';

  auto out = open_output(config.out_path);
  policy::save(trained.net, out);
  finish_output(out, config.out_path);
  if (!config.report_path.empty()) {
    auto rep = open_output(config.report_path);
    rep << report.str();
    finish_output(rep, config.report_path);
  }
  log << report.str();
  return trained.report;
}

std::vector<eval::StrategySpec> strategy_specs(const std::vector<std::string>& names,
                                               std::shared_ptr<const policy::PolicyNet> net, std::size_t imital_j) {
  std::vector<eval::StrategySpec> specs;
  for (const auto& name : names) {
    if (name == "imital") {
      require(net != nullptr, ErrorCode::kMissingModel, "strategy imital needs --model");
      specs.push_back({name, [net, imital_j](const Dataset&) -> std::unique_ptr<al::QueryStrategy> {
                         return std::make_unique<policy::ImitalStrategy>(net, imital_j);
                       }});
    } else if (name == "expert") {
      specs.push_back({name, [](const Dataset& test) -> std::unique_ptr<al::QueryStrategy> {
                         return std::make_unique<expert::ExpertStrategy>(test, expert::ExpertOptions{});
                       }});
    } else {
      specs.push_back(eval::baseline_spec(name));
    }
  }
  return specs;
}

std::vector<eval::ExperimentResult> evaluate(const EvaluateConfig& config, std::ostream& log) {
  eval::validate(config.experiment);
  check_strategy_names(config.strategies);
  require(config.alpha > 0.0 && config.alpha <= 1.0, ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
  require(config.imital_j >= 1, ErrorCode::kInvalidArgument, "imital j must be >= 1");
  if (needs_model(config.strategies)) {
    require(!config.model_path.empty(), ErrorCode::kMissingModel, "strategy imital needs --model");
  }
  require_directory(config.out_dir);
  std::set<std::string> stems;
  for (const auto& p : config.data_paths) {
    require_readable(p);
    require(stems.insert(fs::path(p).stem().string()).second, ErrorCode::kInvalidArgument,
            "two datasets share the file name " + fs::path(p).stem().string());
  }
  std::shared_ptr<const policy::PolicyNet> net;
  if (needs_model(config.strategies)) net = load_policy(config.model_path);
  const auto specs = strategy_specs(config.strategies, net, config.imital_j);

  std::vector<eval::ExperimentResult> results;
  std::vector<std::string> names;
  for (const auto& p : config.data_paths) {
    const Dataset data = read_csv(p);
    results.push_back(eval::run_experiment(data, specs, config.experiment));
    names.push_back(fs::path(p).stem().string());
  }
  const fs::path dir(config.out_dir);
  for (std::size_t d = 0; d < results.size(); ++d) {
    const std::string res_path = (dir / (names[d] + ".results.csv")).string();
    auto res = open_output(res_path);
    eval::write_results_csv(res, results[d]);
    finish_output(res, res_path);
    const std::string curve_path = (dir / (names[d] + ".curves.csv")).string();
    auto curves = open_output(curve_path);
    eval::write_curves_csv(curves, results[d]);
    finish_output(curves, curve_path);
  }
  eval::report_text(log, results, names, config.alpha);
  return results;
}

std::vector<BenchRow> bench_runtime(const BenchConfig& config, std::ostream& log,
                                    std::shared_ptr<const policy::PolicyNet> net) {
  check_strategy_names(config.strategies);
  require(std::is_sorted(config.sizes.begin(), config.sizes.end()), ErrorCode::kInvalidArgument,
          "bench sizes must be ascending");
  for (std::size_t s : config.sizes) require(s >= 1, ErrorCode::kInvalidArgument, "bench sizes must be >= 1");
  require(config.cycles >= 1 && config.b >= 1 && config.test_size >= 1, ErrorCode::kInvalidArgument,
          "bench cycles, batch and test size must be >= 1");
  require(config.n_features >= 1 && config.n_classes >= 2, ErrorCode::kInvalidArgument,
          "bench needs >= 1 feature and >= 2 classes");
  learner::validate(config.learner);
  if (!config.out_path.empty()) require_parent_directory(config.out_path);
  if (!net && needs_model(config.strategies)) {
    require(!config.model_path.empty(), ErrorCode::kMissingModel, "strategy imital needs --model");
    net = load_policy(config.model_path);
  }
  const auto specs = strategy_specs(config.strategies, net, config.imital_j);

  std::vector<BenchRow> rows;
  for (std::size_t size : config.sizes) {
    const std::uint64_t seed = derive_seed(config.seed, size);
    Rng data_rng(derive_seed(seed, 0));
    const std::size_t total = size + config.n_classes + config.test_size;
    const Dataset all = synthgen::gaussian_blobs(total, config.n_features, config.n_classes, data_rng);
    std::vector<std::size_t> train_rows(size + config.n_classes), test_rows(config.test_size);
    for (std::size_t i = 0; i < train_rows.size(); ++i) train_rows[i] = i;
    for (std::size_t i = 0; i < test_rows.size(); ++i) test_rows[i] = train_rows.size() + i;
    const Dataset train = all.subset(train_rows);
    const Dataset test = all.subset(test_rows);
    learner::TrainConfig cfg = config.learner;
    cfg.seed = derive_seed(seed, 1);
    Rng pool_rng(derive_seed(seed, 2));
    const al::PoolState initial = al::init_pool(train, pool_rng, cfg);
    for (const auto& spec : specs) {
      al::PoolState pool = initial;
      const auto strategy = spec.make(test);
      Rng rng(derive_seed(seed, 3));
      const auto ep = al::al_loop(pool, *strategy, config.b, config.cycles, test, rng);
      BenchRow row{size, spec.name, 0.0, 0.0};
      for (double q : ep.query_seconds) row.mean_query_seconds += q;
      for (std::size_t c : ep.candidates_evaluated) row.candidates_per_cycle += static_cast<double>(c);
      if (!ep.query_seconds.empty()) {
        row.mean_query_seconds /= static_cast<double>(ep.query_seconds.size());
        row.candidates_per_cycle /= static_cast<double>(ep.query_seconds.size());
      }
      rows.push_back(row);
    }
  }

  log << "size,strategy,mean_query_seconds,candidates_per_cycle\n";
  for (const auto& r : rows) {
    log << r.size << ',' << r.strategy << ',' << fixed(r.mean_query_seconds, 6) << ','
        << fixed(r.candidates_per_cycle, 1) << '\n';
  }
  if (!config.out_path.empty()) {
    auto out = open_output(config.out_path);
    out << "size,strategy,mean_query_seconds,candidates_per_cycle\n";
    for (const auto& r : rows) {
      out << r.size << ',' << r.strategy << ',' << fixed(r.mean_query_seconds, 9) << ','
          << fixed(r.candidates_per_cycle, 3) << '\n';
    }
    finish_output(out, config.out_path);
  }
  return rows;
}

namespace {

void add_learner_options(CLI::App* app, learner::TrainConfig& cfg) {
  app->add_option("--epochs", cfg.epochs, "Learner training epochs per fit")->capture_default_str();
  app->add_option("--minibatch", cfg.minibatch_size, "Learner minibatch size")->capture_default_str();
  app->add_option("--lr", cfg.learning_rate, "Learner Adam learning rate")->capture_default_str();
}

void add_range_options(CLI::App* app, synthgen::ParamRanges& r) {
  app->add_option("--min-samples", r.min_samples, "Smallest generated dataset")->capture_default_str();
  app->add_option("--max-samples", r.max_samples, "Largest generated dataset")->capture_default_str();
  app->add_option("--min-features", r.min_features, "Fewest features")->capture_default_str();
  app->add_option("--max-features", r.max_features, "Most features")->capture_default_str();
  app->add_option("--min-classes", r.min_classes, "Fewest classes")->capture_default_str();
  app->add_option("--max-classes", r.max_classes, "Most classes")->capture_default_str();
  app->add_option("--min-clusters", r.min_clusters, "Fewest clusters per class")->capture_default_str();
  app->add_option("--max-clusters", r.max_clusters, "Most clusters per class")->capture_default_str();
}

void add_generation_options(CLI::App* app, synthgen::GenerateOptions& g, long long& timeout_ms) {
  timeout_ms = g.timeout.count();
  app->add_option("--timeout-ms", timeout_ms, "Wall-clock budget per generation attempt")->capture_default_str();
  app->add_option("--max-retries", g.max_retries, "Extra generation attempts after an abort")->capture_default_str();
}

// Splices the config file's options in front of the command-line ones so
// the latter win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    require(in.good(), ErrorCode::kIoError, "cannot read config file " + path);
    const auto extra = config_arguments(in, path);
    from_file.insert(from_file.end(), extra.begin(), extra.end());
  }
  if (from_file.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active-learning lab: synthetic data, expert simulation, policy cloning and evaluation"};
  app.name("imitlab");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "Flat key = value file; command-line options override it");

  GenDataConfig gen;
  long long gen_timeout = 0;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic dataset CSVs and a params log");
  gen_cmd->add_option("--out", gen.out_dir, "Existing output directory")->required();
  gen_cmd->add_option("--count", gen.count, "Number of datasets")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
  add_range_options(gen_cmd, gen.ranges);
  add_generation_options(gen_cmd, gen.generation, gen_timeout);

  SimulateConfig sim;
  long long sim_timeout = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the expert simulation campaign and write a corpus");
  auto& c = sim.campaign;
  sim_cmd->add_option("--out", sim.out_path, "Corpus file to write")->required();
  sim_cmd->add_option("--n-datasets", c.n_datasets, "Synthetic datasets to simulate")->capture_default_str();
  sim_cmd->add_option("--tau", c.tau, "AL cycles per dataset")->capture_default_str();
  sim_cmd->add_option("--j", c.j, "Pre-selection draws")->capture_default_str();
  sim_cmd->add_option("--k", c.k, "Candidates per draw")->capture_default_str();
  sim_cmd->add_option("--b", c.b, "Batch size")->capture_default_str();
  sim_cmd->add_option("--seed", c.seed, "Campaign seed")->required();
  sim_cmd->add_option("--parallelism", c.parallelism, "Worker threads")->capture_default_str();
  sim_cmd->add_option("--metric-threshold", c.metric_threshold, "Largest feature count using Euclidean distance")
      ->capture_default_str();
  sim_cmd->add_option("--du-cap", c.du_cap, "Unlabeled reference sample cap")->capture_default_str();
  add_learner_options(sim_cmd, c.learner);
  add_range_options(sim_cmd, c.ranges);
  add_generation_options(sim_cmd, c.generation, sim_timeout);

  TrainCommandConfig tr;
  std::string loss_name = "ce";
  auto* tr_cmd = app.add_subcommand("train", "Train the ranking policy on a corpus");
  tr_cmd->add_option("--corpus", tr.corpus_path, "Corpus file")->required();
  tr_cmd->add_option("--out", tr.out_path, "Model file to write")->required();
  tr_cmd->add_option("--report", tr.report_path, "Optional training report file");
  tr_cmd->add_option("--k", tr.expected_k, "Expected candidates per state (0 accepts the corpus)")
      ->capture_default_str();
  tr_cmd->add_option("--epochs", tr.clone.epochs, "Training epochs")->capture_default_str();
  tr_cmd->add_option("--minibatch", tr.clone.minibatch_size, "Minibatch size")->capture_default_str();
  tr_cmd->add_option("--lr", tr.clone.learning_rate, "Adam learning rate")->capture_default_str();
  tr_cmd->add_option("--validation-fraction", tr.clone.validation_fraction, "Held-out share of datasets")
      ->capture_default_str();
  tr_cmd->add_option("--patience", tr.clone.patience, "Early-stopping patience in epochs")->capture_default_str();
  tr_cmd->add_option("--hidden", tr.clone.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  tr_cmd->add_option("--loss", loss_name, "ce (targets) or mse (raw rewards)")
      ->check(CLI::IsMember({"ce", "mse"}))
      ->capture_default_str();
  tr_cmd->add_option("--seed", tr.clone.seed, "Training seed")->required();

  EvaluateConfig ev;
  ev.strategies = {"random", "lc"};
  auto* ev_cmd = app.add_subcommand("evaluate", "Benchmark strategies on dataset CSVs");
  ev_cmd->add_option("--data", ev.data_paths, "Dataset CSV files")->delimiter(',')->required();
  ev_cmd->add_option("--strategies", ev.strategies, "random, lc, entropy, qbc, gd, imital, expert")
      ->delimiter(',')
      ->capture_default_str();
  ev_cmd->add_option("--model", ev.model_path, "Policy model for imital");
  ev_cmd->add_option("--out", ev.out_dir, "Existing output directory")->required();
  ev_cmd->add_option("--reps", ev.experiment.reps, "Repetitions")->capture_default_str();
  ev_cmd->add_option("--cycles", ev.experiment.cycles, "AL cycles")->capture_default_str();
  ev_cmd->add_option("--batch", ev.experiment.b, "Batch size")->capture_default_str();
  ev_cmd->add_option("--parallelism", ev.experiment.parallelism, "Worker threads")->capture_default_str();
  ev_cmd->add_option("--imital-j", ev.imital_j, "Pre-selection draws for imital")->capture_default_str();
  ev_cmd->add_option("--alpha", ev.alpha, "Significance level")->capture_default_str();
  ev_cmd->add_option("--seed", ev.experiment.seed, "Experiment seed")->required();
  add_learner_options(ev_cmd, ev.experiment.learner);

  BenchConfig bench;
  bench.strategies = {"random", "lc"};
  auto* bench_cmd = app.add_subcommand("bench-runtime", "Query-selection cost against pool size");
  bench_cmd->add_option("--sizes", bench.sizes, "Initial unlabeled pool sizes, ascending")->delimiter(',');
  bench_cmd->add_option("--strategies", bench.strategies, "Strategies to time")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--model", bench.model_path, "Policy model for imital");
  bench_cmd->add_option("--out", bench.out_path, "Optional CSV output");
  bench_cmd->add_option("--features", bench.n_features, "Features")->capture_default_str();
  bench_cmd->add_option("--classes", bench.n_classes, "Classes")->capture_default_str();
  bench_cmd->add_option("--cycles", bench.cycles, "Cycles per strategy")->capture_default_str();
  bench_cmd->add_option("--batch", bench.b, "Batch size")->capture_default_str();
  bench_cmd->add_option("--imital-j", bench.imital_j, "Pre-selection draws for imital")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed")->required();
  add_learner_options(bench_cmd, bench.learner);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kIoError ? kExitFailure : kExitUsage;
  }

  try {
    require(gen_timeout > 0 && sim_timeout > 0, ErrorCode::kInvalidArgument, "timeout must be > 0");
    if (gen_cmd->parsed()) {
      gen.generation.timeout = std::chrono::milliseconds(gen_timeout);
      gen_data(gen, out);
    } else if (sim_cmd->parsed()) {
      c.generation.timeout = std::chrono::milliseconds(sim_timeout);
      simulate(sim, out);
    } else if (tr_cmd->parsed()) {
      tr.clone.loss = loss_name == "mse" ? policy::CloneLoss::kRewardSquaredError : policy::CloneLoss::kTargetCrossEntropy;
      train(tr, out);
    } else if (ev_cmd->parsed()) {
      evaluate(ev, out);
    } else if (bench_cmd->parsed()) {
      bench_runtime(bench, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::kInvalidArgument || e.code() == ErrorCode::kMissingModel;
    return usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitSuccess;
}

}  // namespace imitlab::cli
