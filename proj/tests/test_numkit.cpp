#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "advrl/numkit.hpp"

using namespace advrl;

TEST_CASE("rng streams are deterministic and split streams are disjoint") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng base(42);
  Rng c0 = base.split(0);
  Rng c1 = base.split(1);
  REQUIRE(c0.next_u64() != c1.next_u64());

  // split is a pure function of (seed, child).
  Rng d0 = Rng(42).split(0);
  Rng d0b = Rng(42).split(0);
  for (int i = 0; i < 10; ++i) REQUIRE(d0.next_u64() == d0b.next_u64());
}

TEST_CASE("rng uniform ranges") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    int k = rng.uniform_int(5);
    REQUIRE(k >= 0);
    REQUIRE(k < 5);
    double v = rng.uniform(-2.0, 3.0);
    REQUIRE(v >= -2.0);
    REQUIRE(v < 3.0);
  }
}

TEST_CASE("mlp forward matches a hand computation") {
  // 2 -> 2 -> 1, ReLU hidden, linear output.
  Mlp net = make_mlp({2, 2, 1});
  net.weights[0](0, 0) = 1.0;
  net.weights[0](0, 1) = -1.0;
  net.weights[0](1, 0) = 0.5;
  net.weights[0](1, 1) = 0.5;
  net.biases[0] = {0.0, -1.0};
  net.weights[1](0, 0) = 2.0;
  net.weights[1](0, 1) = 3.0;
  net.biases[1] = {0.25};

  // x = (2, 1): pre = (2*1 + 1*(-1), 2*0.5 + 1*0.5 - 1) = (1, 0.5)
  // post-ReLU = (1, 0.5); y = 2*1 + 3*0.5 + 0.25 = 3.75
  Vector y = forward(net, {2.0, 1.0});
  REQUIRE(y.size() == 1);
  REQUIRE(y[0] == Catch::Approx(3.75).epsilon(1e-15));

  // x = (-1, 1): pre = (-2, -1) -> ReLU (0, 0); y = 0.25
  REQUIRE(forward(net, {-1.0, 1.0})[0] == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("output activations and bounds") {
  Rng rng(3);
  Mlp tanh_net = make_mlp({3, 8, 2}, Activation::Tanh, 1.0, rng);
  Mlp scaled = make_mlp({3, 8, 2}, Activation::ScaledTanh, 0.05, rng);
  for (int t = 0; t < 50; ++t) {
    Vector x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    for (double v : forward(tanh_net, x)) {
      REQUIRE(v > -1.0);
      REQUIRE(v < 1.0);
    }
    for (double v : forward(scaled, x)) REQUIRE(std::abs(v) <= 0.05);
  }
}

namespace {

double scalar_loss(const Mlp& net, const Vector& x, const Vector& dl_dy) {
  Vector y = forward(net, x);
  double l = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) l += dl_dy[i] * y[i];
  return l;
}

}  // namespace

TEST_CASE("backward matches central finite differences on random networks") {
  Rng rng(11);
  const Activation acts[] = {Activation::Linear, Activation::Tanh, Activation::ScaledTanh};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng t = rng.split(trial);
    const int in_dim = 2 + t.uniform_int(5);
    const int out_dim = 1 + t.uniform_int(3);
    Activation act = acts[t.uniform_int(3)];
    std::vector<int> sizes{in_dim};
    const int depth = 1 + t.uniform_int(3);  // up to three hidden layers
    for (int l = 0; l < depth; ++l) sizes.push_back(3 + t.uniform_int(10));
    sizes.push_back(out_dim);
    Mlp net = make_mlp(sizes, act, act == Activation::ScaledTanh ? 0.8 : 1.0, t);
    Vector x(in_dim), dl_dy(out_dim);
    for (double& v : x) v = t.uniform(-1.0, 1.0);
    for (double& v : dl_dy) v = t.uniform(-1.0, 1.0);

    Backprop bp = backward(net, x, dl_dy);
    const double h = 1e-6;
    Vector params = flatten_params(net);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Mlp probe = net;
      Vector p = params;
      p[i] += h;
      set_params(probe, p);
      double plus = scalar_loss(probe, x, dl_dy);
      p[i] -= 2.0 * h;
      set_params(probe, p);
      double minus = scalar_loss(probe, x, dl_dy);
      double fd = (plus - minus) / (2.0 * h);
      worst = std::max(worst, std::abs(bp.dparams[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vector xp = x;
      xp[i] += h;
      double plus = scalar_loss(net, xp, dl_dy);
      xp[i] -= 2.0 * h;
      double minus = scalar_loss(net, xp, dl_dy);
      double fd = (plus - minus) / (2.0 * h);
      worst = std::max(worst, std::abs(bp.dx[i] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  REQUIRE(worst <= 1e-5);
}

TEST_CASE("parameter flattening round trips") {
  Rng rng(5);
  Mlp net = make_mlp({4, 6, 3}, Activation::Tanh, 1.0, rng);
  Vector p = flatten_params(net);
  REQUIRE(p.size() == param_count(net));

  Mlp other = make_mlp({4, 6, 3}, Activation::Tanh, 1.0);
  set_params(other, p);
  REQUIRE(flatten_params(other) == p);
  REQUIRE(forward(other, {0.1, 0.2, 0.3, 0.4}) == forward(net, {0.1, 0.2, 0.3, 0.4}));

  REQUIRE_THROWS_AS(set_params(other, Vector(3, 0.0)), std::invalid_argument);
}

TEST_CASE("softmax closed forms") {
  Vector p = softmax_temp({0.0, 0.0}, 1.0);
  REQUIRE(p[0] == Catch::Approx(0.5).epsilon(1e-15));
  REQUIRE(p[1] == Catch::Approx(0.5).epsilon(1e-15));

  // softmax(ln 1, ln 3) = (1/4, 3/4).
  Vector q = softmax_temp({std::log(1.0), std::log(3.0)}, 1.0);
  REQUIRE(q[0] == Catch::Approx(0.25).epsilon(1e-12));
  REQUIRE(q[1] == Catch::Approx(0.75).epsilon(1e-12));

  // Temperature tau rescales logits: softmax_temp(q, tau) = softmax(q / tau).
  Vector hot = softmax_temp({2.0, 0.0}, 2.0);
  Vector ref = softmax_temp({1.0, 0.0}, 1.0);
  REQUIRE(hot[0] == Catch::Approx(ref[0]).epsilon(1e-12));

  // Large logits stay finite via max-subtraction.
  Vector big = softmax_temp({1e6, 0.0}, 1.0);
  REQUIRE(big[0] == Catch::Approx(1.0).epsilon(1e-12));

  REQUIRE_THROWS_AS(softmax_temp({1.0, 2.0}, 0.0), std::invalid_argument);
}

TEST_CASE("kl divergence") {
  Vector p{0.25, 0.75};
  REQUIRE(kl_div(p, p) == Catch::Approx(0.0).margin(1e-15));

  // KL((1,0) || (0.5,0.5)) = ln 2.
  REQUIRE(kl_div({1.0, 0.0}, {0.5, 0.5}) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(kl_div({0.5, 0.5}, {0.25, 0.75}) >= 0.0);
  REQUIRE_THROWS_AS(kl_div({1.0, 0.0}, {0.0, 1.0}), std::domain_error);
}

TEST_CASE("sgd step arithmetic") {
  Vector p{1.0, 2.0};
  Vector g{0.5, -1.0};
  Vector out = sgd_step(p, g, 0.1);
  REQUIRE(out[0] == Catch::Approx(0.95).epsilon(1e-15));
  REQUIRE(out[1] == Catch::Approx(2.1).epsilon(1e-15));
  sgd_step_inplace(p, g, 0.1);
  REQUIRE(p == out);
}

TEST_CASE("mlp serialization text") {
  Rng rng(9);
  Mlp net = make_mlp({2, 3, 1}, Activation::ScaledTanh, 0.01, rng);
  std::string text = save_mlp(net);
  REQUIRE(text.find("\"format_version\":1") != std::string::npos);
  REQUIRE(text.find("scaled-tanh") != std::string::npos);
  REQUIRE(text.find("\"layer_sizes\":[2,3,1]") != std::string::npos);
}
