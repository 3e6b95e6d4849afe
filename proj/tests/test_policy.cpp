#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <numeric>
#include <sstream>

#include "imitlab/alcore.hpp"
#include "imitlab/encoding.hpp"
#include "imitlab/error.hpp"
#include "imitlab/learner.hpp"
#include "imitlab/pool.hpp"
#include "imitlab/policy.hpp"
#include "support.hpp"

using namespace imitlab;
using namespace imitlab::policy;

namespace {

// Records whose reward is u1 of each slot. The u1 values are distinct levels
// 0.05 apart in shuffled slots, so the argmax is unique and position-free.
std::vector<expert::SimulationRecord> u1_corpus(std::size_t n, std::size_t k, std::uint64_t seed,
                                               std::uint64_t id_base = 0) {
  Rng rng(seed);
  std::vector<double> levels;
  for (int q = 0; q < 14; ++q) levels.push_back(0.35 + 0.05 * q);
  std::vector<expert::SimulationRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    expert::SimulationRecord r;
    r.dataset_id = id_base + i;
    r.k = k;
    r.encoded.assign(5 * k, 0.0);
    r.rewards.assign(k, 0.0);
    std::vector<std::array<double, 5>> tuples(k);
    const auto u1 = sample_without_replacement<double>(levels, k, rng);
    for (std::size_t p = 0; p < k; ++p) {
      auto& t = tuples[p];
      const double a = u1[p];
      const double b = uniform_real(rng, 0.0, 1.0 - a);
      t = {a, std::min(a, b), std::max(0.0, 1.0 - a - b) * 0.5, uniform_real(rng, 0, 2), uniform_real(rng, 0, 2)};
    }
    for (std::size_t p = 0; p < k; ++p) {
      std::copy(tuples[p].begin(), tuples[p].end(), r.encoded.begin() + 5 * p);
      r.rewards[p] = tuples[p][0];
    }
    out.push_back(std::move(r));
  }
  return out;
}

PolicyNet linear_policy(std::size_t k, double u1_weight) {
  nn::Mlp net({5 * k, k});
  for (std::size_t p = 0; p < k; ++p) net.weights(0)[p * 5 * k + 5 * p] = u1_weight;
  return PolicyNet(net, k, 0);
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("layout and initialization") {
    const auto net = init_policy(20, kDefaultPolicyHidden, 3);
    CHECK(net.net().widths() == std::vector<std::size_t>{100, 100, 100, 20});
    CHECK(net.k() == 20);
    CHECK(init_policy(20, kDefaultPolicyHidden, 3) == net);
    CHECK_FALSE(init_policy(20, kDefaultPolicyHidden, 4) == net);
    CHECK_THROWS_AS(init_policy(0), Error);
    PolicyNet zero(nn::Mlp({20, 8, 4}), 4, 0);
    const auto p = policy_forward(zero, std::vector<double>(20, 0.3));
    for (double v : p) CHECK(v == 0.25);
    CHECK_THROWS_AS(policy_forward(zero, std::vector<double>(19, 0.3)), Error);
  }

  TEST_CASE("outputs lie on the simplex") {
    const auto net = init_policy(6, {10}, 1);
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(30);
      for (auto& v : x) v = uniform_real(rng, 0, 3);
      const auto p = policy_forward(net, x);
      double s = 0;
      for (double v : p) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::fabs(s - 1.0) <= 1e-9);
      CHECK(policy_forward(net, x) == p);
    }
  }

  TEST_CASE("hand-set k=4 network matches an independent forward pass") {
    // One hidden layer of 2 units over 20 inputs; weights follow a formula
    // evaluated independently below.
    nn::Mlp net({20, 2, 4});
    auto w0 = net.weights(0), b0 = net.bias(0), w1 = net.weights(1), b1 = net.bias(1);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 20; ++c) w0[r * 20 + c] = (r == 0 ? 0.1 : -0.05) * double(c % 5);
    b0[0] = 0.2;
    b0[1] = 0.3;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 2; ++c) w1[r * 2 + c] = double(r) - double(c);
    for (std::size_t r = 0; r < 4; ++r) b1[r] = 0.1 * double(r);
    const PolicyNet pol(net, 4, 0);
    std::vector<double> x(20);
    for (std::size_t i = 0; i < 20; ++i) x[i] = 0.05 * double(i);

    double h[2];
    for (std::size_t r = 0; r < 2; ++r) {
      double z = r == 0 ? 0.2 : 0.3;
      for (std::size_t c = 0; c < 20; ++c) z += (r == 0 ? 0.1 : -0.05) * double(c % 5) * x[c];
      h[r] = z > 0 ? z : 0.0;
    }
    double logits[4], m = -1e300, s = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      logits[r] = 0.1 * double(r) + double(r) * h[0] + (double(r) - 1.0) * h[1];
      m = std::max(m, logits[r]);
    }
    for (double v : logits) s += std::exp(v - m);
    const auto p = policy_forward(pol, x);
    for (std::size_t r = 0; r < 4; ++r) CHECK(p[r] == doctest::Approx(std::exp(logits[r] - m) / s).epsilon(1e-13));
  }

  TEST_CASE("reward targets") {
    const std::vector<double> two{0.9, 0.8}, flat(5, 0.7), four{0.2, 0.4, 0.6, 0.8};
    CHECK(rewards_to_targets(two) == std::vector<double>{1.0, 0.0});
    for (double v : rewards_to_targets(flat)) CHECK(v == 0.2);
    const auto t = rewards_to_targets(four);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(t[2] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(t[3] == doctest::Approx(3.0 / 6.0).epsilon(1e-15));
  }

  TEST_CASE("reward targets: distribution, shift and scale invariance, argmax") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> r(1 + trial % 20);
      for (auto& v : r) v = uniform_real(rng, 0, 1);
      const auto t = rewards_to_targets(r);
      CHECK(std::fabs(std::accumulate(t.begin(), t.end(), 0.0) - 1.0) <= 1e-12);
      for (double v : t) CHECK(v >= 0.0);
      auto shifted = r;
      const double c = uniform_real(rng, -5, 5);
      for (auto& v : shifted) v += c;
      const auto ts = rewards_to_targets(shifted);
      const double lo = *std::min_element(r.begin(), r.end());
      auto scaled = r;
      for (auto& v : scaled) v = lo + 3.5 * (v - lo);
      const auto tc = rewards_to_targets(scaled);
      for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(ts[i] == doctest::Approx(t[i]).epsilon(1e-9));
        CHECK(tc[i] == doctest::Approx(t[i]).epsilon(1e-9));
      }
      if (r.size() > 1) {
        CHECK(std::max_element(t.begin(), t.end()) - t.begin() == std::max_element(r.begin(), r.end()) - r.begin());
      }
    }
  }

  TEST_CASE("policy gradients match central differences") {
    auto net = init_policy(4, {12}, 9);  // 20*12+12 + 12*4+4 = 304 parameters
    Rng rng(3);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> x(20), r(4);
      for (auto& v : x) v = uniform_real(rng, 0, 1);
      for (auto& v : r) v = uniform_real(rng, 0, 1);
      const auto t = rewards_to_targets(r);
      nn::Backprop bp(net.net());
      std::vector<double> analytic(net.net().parameters().size(), 0.0);
      bp.accumulate(net.net(), x, t, nn::Loss::kCrossEntropy, analytic, 1.0);
      const auto numeric = testing::numeric_gradient(net.net().parameters(), [&] {
        return nn::loss_value(net.net(), x, t, nn::Loss::kCrossEntropy);
      });
      CHECK(testing::max_relative_error(analytic, numeric) <= 1e-3);
    }
  }

  TEST_CASE("populated slots") {
    std::vector<double> enc(20, 0.0);
    enc[0] = 0.9;
    enc[5] = 0.5;
    CHECK(populated_slots(enc, 4) == 2);
  }

  TEST_CASE("training lowers the loss") {
    const auto corpus = u1_corpus(200, 4, 1);
    CloneConfig cfg;
    cfg.epochs = 200;
    cfg.validation_fraction = 0.0;
    cfg.hidden = {16};
    cfg.seed = 2;
    const auto a = train_policy(corpus, cfg);
    REQUIRE(a.report.train_loss.size() == 200);
    CHECK(a.report.train_loss.back() < a.report.train_loss.front());
    CHECK(a.report.validation_loss.empty());
    const auto b = train_policy(corpus, cfg);
    CHECK(a.net == b.net);
    cfg.loss = CloneLoss::kRewardSquaredError;
    const auto m = train_policy(corpus, cfg);
    CHECK(m.report.train_loss.back() < m.report.train_loss.front());
  }

  TEST_CASE("a single repeated record is memorized") {
    auto one = u1_corpus(1, 5, 4);
    std::vector<expert::SimulationRecord> corpus(30, one.front());
    CloneConfig cfg;
    cfg.epochs = 100;
    cfg.validation_fraction = 0.0;
    cfg.hidden = {16};
    const auto t = train_policy(corpus, cfg);
    CHECK(t.report.train_top1 == 1.0);
    CHECK(top1_accuracy(t.net, corpus) == 1.0);
  }

  TEST_CASE("corpus errors") {
    CloneConfig cfg;
    try {
      train_policy({}, cfg);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyCorpus);
    }
    auto corpus = u1_corpus(3, 4, 1);
    const auto other = u1_corpus(1, 5, 1);
    corpus.push_back(other.front());
    try {
      train_policy(corpus, cfg);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInconsistentK);
    }
    cfg.validation_fraction = 1.0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }

  TEST_CASE("cloning a u1 rule generalizes to held-out records") {
    const auto corpus = u1_corpus(1500, 10, 7);
    CloneConfig cfg;
    cfg.epochs = 200;
    cfg.validation_fraction = 0.2;
    cfg.seed = 1;
    const auto t = train_policy(corpus, cfg);
    CHECK(t.report.validation_records == 300);
    CHECK(t.report.validation_loss.size() == t.report.train_loss.size());
    const auto held_out = u1_corpus(200, 10, 99, 10000);
    CHECK(top1_accuracy(t.net, held_out) >= 0.9);
    CHECK(t.report.validation_top1 >= 0.9);
  }

  TEST_CASE("best positions ignore padding and prefer lower positions on ties") {
    const std::vector<double> s{0.1, 0.3, 0.3, 0.9, 0.95};
    CHECK(best_positions(s, 3, 2) == std::vector<std::size_t>{1, 2});
    CHECK(best_positions(s, 3, 10) == std::vector<std::size_t>{1, 2, 0});
  }

  TEST_CASE("imital query") {
    const Dataset d = testing::blobs(300, 3, 3, 2);
    Rng rng(1);
    const auto pool = al::init_pool(d, rng, testing::quick_learner());
    const auto net = init_policy(20, {16}, 1);
    Rng a(5), b(5);
    const auto q = imital_query(pool, net, 2, 5, a);
    CHECK(q.candidates_evaluated == 40);
    CHECK(q.indices.size() == 5);
    CHECK(imital_query(pool, net, 2, 5, b).indices == q.indices);

    const auto most_uncertain = linear_policy(20, -50.0);
    Rng c(8), e(8);
    const auto q2 = imital_query(pool, most_uncertain, 2, 3, c);
    const auto cand = encoding::pre_select(pool, 2, 20, e, encoding::Metric::kEuclidean);
    std::vector<std::pair<double, std::size_t>> u1;
    for (auto i : cand.indices) {
      u1.push_back({encoding::uncertainty_tuple(d.row(i), pool.learner())[0], i});
    }
    std::sort(u1.begin(), u1.end());
    CHECK(q2.indices == std::vector<std::size_t>{u1[0].second, u1[1].second, u1[2].second});
  }

  TEST_CASE("imital never selects padding") {
    Dataset d = testing::blobs(9, 2, 3, 1);
    al::PoolState pool(d, {0, 1, 2, 3, 4, 5}, testing::quick_learner());
    pool.refit();
    // The padded logits are 0, above every real logit -50 u1 < 0.
    const auto net = linear_policy(20, -50.0);
    Rng rng(2);
    const auto q = imital_query(pool, net, 2, 5, rng);
    CHECK(std::set<std::size_t>(q.indices.begin(), q.indices.end()) == std::set<std::size_t>{6, 7, 8});
  }

  TEST_CASE("policy files round trip and reject mismatched tags") {
    auto net = init_policy(4, {8}, 6);
    net.set_encoding(30, 500);
    std::stringstream s;
    save(net, s);
    const std::string text = s.str();
    std::istringstream in(text);
    const auto back = load(in);
    CHECK(back == net);
    CHECK(back.metric_threshold() == 30);
    CHECK(back.du_cap() == 500);

    std::istringstream wrong_k(text);
    try {
      load(wrong_k, 5);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTagMismatch);
    }
    std::string bad_order = text;
    bad_order.replace(bad_order.find(encoding::kCanonicalOrderTag), 4, "XXXX");
    std::istringstream in2(bad_order);
    CHECK_THROWS_AS(load(in2), Error);
    std::stringstream learner_file;
    learner::save(learner::init(2, 2), learner_file);
    CHECK_THROWS_AS(load(learner_file), Error);
  }
}
