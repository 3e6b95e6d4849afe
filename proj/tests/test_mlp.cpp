#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "imitlab/error.hpp"
#include "imitlab/mlp.hpp"
#include "support.hpp"

using namespace imitlab;
using namespace imitlab::nn;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_real(rng, -scale, scale);
  return v;
}

double gradient_error(Mlp& net, std::span<const double> x, std::span<const double> t, Loss loss) {
  Backprop bp(net);
  std::vector<double> analytic(net.parameters().size(), 0.0);
  bp.accumulate(net, x, t, loss, analytic, 1.0);
  const auto numeric = testing::numeric_gradient(net.parameters(), [&] { return loss_value(net, x, t, loss); });
  return testing::max_relative_error(analytic, numeric);
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("layout and zero initialization") {
    Mlp net({3, 4, 2});
    CHECK(net.parameters().size() == 3 * 4 + 4 + 4 * 2 + 2);
    CHECK(net.layer_count() == 2);
    CHECK(net.weights(1).size() == 8);
    CHECK(net.bias(0).size() == 4);
    const double x[] = {1, 2, 3};
    const auto p = net.predict(x);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
    const double wrong[] = {1, 2};
    CHECK_THROWS_AS(net.logits(wrong), Error);
  }

  TEST_CASE("hand-computed forward pass") {
    Mlp net({2, 2, 2});
    // Hidden: h0 = relu(x0 - x1 + 0.5), h1 = relu(2 x1 - 1). Output: z0 = h0 + h1, z1 = -h1.
    const double w0[] = {1, -1, 0, 2}, b0[] = {0.5, -1}, w1[] = {1, 1, 0, -1}, b1[] = {0, 0};
    std::copy(std::begin(w0), std::end(w0), net.weights(0).begin());
    std::copy(std::begin(b0), std::end(b0), net.bias(0).begin());
    std::copy(std::begin(w1), std::end(w1), net.weights(1).begin());
    std::copy(std::begin(b1), std::end(b1), net.bias(1).begin());
    const double x[] = {1.0, 1.5};
    // h = (relu(0), relu(2)) = (0, 2); z = (2, -2).
    const auto z = net.logits(x);
    CHECK(z[0] == 2.0);
    CHECK(z[1] == -2.0);
    const auto p = net.predict(x);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))).epsilon(1e-14));
  }

  TEST_CASE("he-uniform bounds and determinism") {
    const auto a = Mlp::he_uniform({10, 20, 3}, 5);
    const auto b = Mlp::he_uniform({10, 20, 3}, 5);
    CHECK(a == b);
    CHECK_FALSE(a == Mlp::he_uniform({10, 20, 3}, 6));
    for (double w : a.weights(0)) CHECK(std::fabs(w) <= std::sqrt(6.0 / 10.0));
    for (double w : a.weights(1)) CHECK(std::fabs(w) <= std::sqrt(6.0 / 20.0));
    for (double v : a.bias(0)) CHECK(v == 0.0);
  }

  TEST_CASE("softmax sums to one") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      auto v = random_values(1 + trial % 30, rng, 50.0);
      softmax_inplace(v);
      CHECK(std::fabs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) <= 1e-9);
      for (double p : v) CHECK(p >= 0.0);
    }
    std::vector<double> huge{1000.0, 1000.0};
    softmax_inplace(huge);
    CHECK(huge[0] == 0.5);
  }

  TEST_CASE("analytic gradients match central differences") {
    Rng rng(3);
    for (auto loss : {Loss::kCrossEntropy, Loss::kSquaredError}) {
      for (int trial = 0; trial < 5; ++trial) {
        auto net = Mlp::he_uniform({6, 8, 7, 4}, 100 + trial);  // 56 + 63 + 32 = 151 parameters
        for (auto& b : net.parameters()) b += uniform_real(rng, -0.05, 0.05);
        const auto x = random_values(6, rng);
        std::vector<double> t = random_values(4, rng);
        if (loss == Loss::kCrossEntropy) {
          for (auto& v : t) v = std::fabs(v);
          const double s = std::accumulate(t.begin(), t.end(), 0.0);
          for (auto& v : t) v /= s;
        }
        CHECK(gradient_error(net, x, t, loss) <= 1e-3);
      }
    }
  }

  TEST_CASE("accumulate scales and adds") {
    auto net = Mlp::he_uniform({3, 4, 2}, 1);
    const double x[] = {0.1, -0.4, 0.9}, t[] = {0.25, 0.75};
    Backprop bp(net);
    std::vector<double> once(net.parameters().size(), 0.0), twice(net.parameters().size(), 0.0);
    const double l1 = bp.accumulate(net, x, t, Loss::kCrossEntropy, once, 1.0);
    bp.accumulate(net, x, t, Loss::kCrossEntropy, twice, 0.5);
    bp.accumulate(net, x, t, Loss::kCrossEntropy, twice, 0.5);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
    CHECK(l1 == doctest::Approx(loss_value(net, x, t, Loss::kCrossEntropy)).epsilon(1e-14));
  }

  TEST_CASE("first adam step moves each parameter by about lr against the gradient sign") {
    Mlp net({1, 1});
    AdamState state;
    std::vector<double> g{0.3, -2.0};
    adam_step(net, g, state, 0.01);
    CHECK(state.step == 1);
    CHECK(net.parameters()[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(net.parameters()[1] == doctest::Approx(0.01).epsilon(1e-6));
  }

  TEST_CASE("fit lowers the loss and is deterministic") {
    Rng rng(4);
    std::vector<double> xs, ts;
    for (int i = 0; i < 64; ++i) {
      const double a = uniform_real(rng, -1, 1), b = uniform_real(rng, -1, 1);
      xs.insert(xs.end(), {a, b});
      ts.insert(ts.end(), {a + b > 0 ? 1.0 : 0.0, a + b > 0 ? 0.0 : 1.0});
    }
    FitOptions opt;
    opt.epochs = 60;
    opt.minibatch_size = 16;
    opt.learning_rate = 1e-2;
    opt.shuffle_seed = 9;
    auto a = Mlp::he_uniform({2, 8, 2}, 1), b = a;
    const auto la = fit(a, {xs, ts, 64}, opt);
    const auto lb = fit(b, {xs, ts, 64}, opt);
    CHECK(la == lb);
    CHECK(a == b);
    CHECK(la.back() < 0.5 * la.front());
    std::size_t calls = 0;
    auto c = Mlp::he_uniform({2, 8, 2}, 1);
    const auto lc = fit(c, {xs, ts, 64}, opt, [&](std::size_t, double) { return ++calls < 3; });
    CHECK(lc.size() == 3);
    auto d = Mlp::he_uniform({2, 8, 2}, 1);
    CHECK_THROWS_AS(fit(d, {{}, {}, 0}, opt), Error);
  }

  TEST_CASE("weight files round trip bit-exactly") {
    const auto net = Mlp::he_uniform({5, 7, 3}, 12);
    std::stringstream s;
    write_weights(s, net, {{"kind", "test"}, {"note", "x"}});
    const auto back = read_weights(s);
    CHECK(back.net == net);
    CHECK(back.header.at("kind") == "test");
    std::istringstream junk("not a weight file\n");
    CHECK_THROWS_AS(read_weights(junk), Error);
  }
}
