#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "imitlab/error.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/synthgen.hpp"
#include "support.hpp"

using namespace imitlab;
using namespace imitlab::synthgen;

namespace {

SynthParams basic(std::size_t n, std::size_t d, std::size_t classes, std::size_t clusters, double sep,
                  double noise, std::uint64_t seed) {
  SynthParams p;
  p.n_samples = n;
  p.n_features = d;
  p.n_classes = classes;
  p.clusters_per_class = clusters;
  p.class_weights.assign(classes, 1.0 / static_cast<double>(classes));
  p.noise_fraction = noise;
  p.class_sep = sep;
  p.seed = seed;
  return p;
}

// Kolmogorov distance of integer samples to the discrete uniform law on
// [lo, hi].
double ks_discrete(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
    const double ecdf = static_cast<double>(i + 1) / n;
    const double cdf = (xs[i] - lo + 1.0) / (hi - lo + 1.0);
    const double below = (xs[i] - lo) / (hi - lo + 1.0);
    const std::size_t first = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), xs[i]) - xs.begin());
    worst = std::max({worst, std::fabs(ecdf - cdf), std::fabs(static_cast<double>(first) / n - below)});
  }
  return worst;
}

double ks_continuous(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = (xs[i] - lo) / (hi - lo);
    worst = std::max({worst, std::fabs(static_cast<double>(i + 1) / n - cdf), std::fabs(static_cast<double>(i) / n - cdf)});
  }
  return worst;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate(basic(100, 2, 2, 1, 0.0, 0.0, 1)));
    CHECK_THROWS_AS(validate(basic(99, 2, 2, 1, 0.0, 0.0, 1)), Error);
    CHECK_THROWS_AS(validate(basic(100, 101, 2, 1, 0.0, 0.0, 1)), Error);
    CHECK_THROWS_AS(validate(basic(100, 2, 11, 1, 0.0, 0.0, 1)), Error);
    CHECK_THROWS_AS(validate(basic(100, 2, 2, 0, 0.0, 0.0, 1)), Error);
    CHECK_THROWS_AS(validate(basic(100, 2, 2, 1, 10.5, 0.0, 1)), Error);
    CHECK_THROWS_AS(validate(basic(100, 2, 2, 1, 1.0, 1.5, 1)), Error);
    auto p = basic(100, 2, 2, 1, 0.0, 0.0, 1);
    p.class_weights = {0.7, 0.4};
    CHECK_THROWS_AS(validate(p), Error);
    ParamRanges r;
    r.min_classes = 5;
    r.max_classes = 4;
    CHECK_THROWS_AS(validate(r), Error);
    CHECK_NOTHROW(validate(ParamRanges{}));
  }

  TEST_CASE("sampler stays in range and matches its marginals") {
    Rng rng(42);
    const auto first = sample_params(rng);
    CHECK(first.n_samples >= 100);
    CHECK(first.n_samples <= 5000);
    CHECK(first.n_features >= 2);
    CHECK(first.n_features <= 100);

    std::vector<double> samples, features, classes, clusters, sep;
    std::size_t min_c = 100, max_c = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto p = sample_params(rng);
      REQUIRE_NOTHROW(validate(p));
      samples.push_back(double(p.n_samples));
      features.push_back(double(p.n_features));
      classes.push_back(double(p.n_classes));
      clusters.push_back(double(p.clusters_per_class));
      sep.push_back(p.class_sep);
      min_c = std::min(min_c, p.n_classes);
      max_c = std::max(max_c, p.n_classes);
    }
    CHECK(min_c == 2);
    CHECK(max_c == 10);
    CHECK(ks_discrete(samples, 100, 5000) <= 0.05);
    CHECK(ks_discrete(features, 2, 100) <= 0.05);
    CHECK(ks_discrete(classes, 2, 10) <= 0.05);
    CHECK(ks_discrete(clusters, 1, 10) <= 0.05);
    CHECK(ks_continuous(sep, 0, 10) <= 0.05);
  }

  TEST_CASE("noise fraction is heavy-tailed toward zero") {
    Rng rng(3);
    std::size_t small = 0;
    for (int i = 0; i < 2000; ++i) small += sample_params(rng).noise_fraction < 0.01;
    // P(u^(-1/5) - 1 < 1) = 1 - 2^-5.
    CHECK(double(small) / 2000.0 == doctest::Approx(1.0 - 1.0 / 32.0).epsilon(0.02));
  }

  TEST_CASE("params record round trip") {
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
      const auto p = sample_params(rng);
      CHECK(parse_record(to_record(p)) == p);
    }
    CHECK_THROWS_AS(parse_record("n_samples=abc"), Error);
  }

  TEST_CASE("class counts by largest remainder") {
    auto p = basic(100, 2, 3, 1, 1.0, 0.0, 1);
    p.class_weights = {0.5, 0.3, 0.2};
    CHECK(class_sample_counts(p) == std::vector<std::size_t>{50, 30, 20});
    p = basic(101, 2, 3, 1, 1.0, 0.0, 1);
    CHECK(class_sample_counts(p) == std::vector<std::size_t>{34, 34, 33});
    p.class_weights = {1.0, 0.0, 0.0};
    const auto c = class_sample_counts(p);
    CHECK(c[0] + c[1] + c[2] == 101);
    CHECK(c[1] >= 2);
    CHECK(c[2] >= 2);
  }

  TEST_CASE("centroids sit on hypercube vertices scaled by 2^class_sep") {
    const auto p = basic(200, 4, 3, 2, 1.5, 0.0, 9);
    Rng rng(1);
    const auto c = place_centroids(p, rng);
    REQUIRE(c.size() == 6);
    const double half = std::exp2(1.5) / 2.0;
    std::set<std::vector<double>> distinct(c.begin(), c.end());
    CHECK(distinct.size() == 6);
    for (const auto& v : c) {
      for (double x : v) CHECK(std::fabs(x) == half);
    }
    auto q = p;
    q.class_sep = 2.5;
    Rng rng2(1);
    const auto c2 = place_centroids(q, rng2);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t f = 0; f < 4; ++f) CHECK(c2[i][f] == c[i][f] * 2.0);
    }
  }

  TEST_CASE("label noise flips exactly round(f n) labels to other classes") {
    Rng rng(4);
    std::vector<int> labels(250);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
    const auto before = labels;
    const auto flipped = inject_label_noise(labels, 4, 0.13, rng);
    CHECK(flipped.size() == 33);  // round(32.5)
    std::size_t changed = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) changed += labels[i] != before[i];
    CHECK(changed == 33);
    for (auto i : flipped) CHECK(labels[i] != before[i]);
    auto same = before;
    CHECK(inject_label_noise(same, 4, 0.0, rng).empty());
    CHECK(same == before);
  }

  TEST_CASE("generate is deterministic and well formed") {
    const auto p = basic(300, 5, 3, 2, 2.0, 0.05, 77);
    const Dataset a = generate(p), b = generate(p);
    CHECK(a == b);
    CHECK(a.size() == 300);
    CHECK(a.n_features() == 5);
    CHECK(a.n_classes() == 3);
    CHECK_NOTHROW(a.validate());
    for (double x : a.features()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    for (auto c : a.class_counts()) CHECK(c >= 2);
    auto q = p;
    q.seed = 78;
    CHECK_FALSE(generate(q) == a);
  }

  TEST_CASE("balanced generation yields balanced classes") {
    const auto p = basic(3000, 4, 3, 1, 1.0, 0.0, 5);
    const auto counts = generate(p).class_counts();
    for (auto c : counts) CHECK(std::fabs(double(c) - 1000.0) <= 20.0);
  }

  TEST_CASE("well separated data is learnable") {
    const auto p = basic(400, 5, 2, 1, 8.0, 0.0, 13);
    const Dataset d = generate(p);
    Rng rng(2);
    const auto [train, test] = split(d, 0.5, rng);
    learner::TrainConfig cfg;
    cfg.seed = 3;
    const auto clf = learner::fit(learner::init(5, 2), train, cfg);
    CHECK(learner::accuracy(clf, test) >= 0.95);
  }

  TEST_CASE("generate_with_retry reports attempts") {
    Rng rng(6);
    ParamRanges r;
    r.max_samples = 300;
    const auto g = generate_with_retry(rng, r);
    CHECK(g.attempts >= 1);
    CHECK(g.dataset.size() == g.params.n_samples);
  }

  TEST_CASE("split sizes and partition") {
    const Dataset d100 = testing::blobs(100, 2, 2, 1);
    Rng rng(1);
    auto [tr, te] = split(d100, 0.5, rng);
    CHECK(tr.size() == 50);
    CHECK(te.size() == 50);
    const Dataset d101 = testing::blobs(101, 2, 2, 1);
    auto [tr1, te1] = split(d101, 0.5, rng);
    CHECK(tr1.size() == 50);
    CHECK(te1.size() == 51);
    std::multiset<std::pair<std::vector<double>, int>> orig, joined;
    for (std::size_t i = 0; i < d101.size(); ++i)
      orig.insert({std::vector<double>(d101.row(i).begin(), d101.row(i).end()), d101.label(i)});
    for (const Dataset* part : {&tr1, &te1}) {
      for (std::size_t i = 0; i < part->size(); ++i)
        joined.insert({std::vector<double>(part->row(i).begin(), part->row(i).end()), part->label(i)});
      for (auto c : part->class_counts()) CHECK(c >= 1);
    }
    CHECK(orig == joined);
  }

  TEST_CASE("split rejects a class with one sample") {
    Dataset d(1, 2);
    for (int i = 0; i < 10; ++i) {
      const double r[] = {double(i)};
      d.push_back(r, i == 0 ? 1 : 0);
    }
    Rng rng(1);
    try {
      split(d, 0.5, rng);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInfeasibleSplit);
    }
  }
}
