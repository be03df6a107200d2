#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dcdc/adam.hpp"
#include "dcdc/net.hpp"

using namespace dcdc;

namespace {

NetSpec make_spec(int input_dim, std::vector<int> widths) {
  NetSpec s;
  s.input_dim = input_dim;
  s.layer_widths = std::move(widths);
  return s;
}

}  // namespace

TEST_CASE("parameter count follows the dense layout") {
  // input 2 -> hidden 3 -> output: (2*3+3) + (3+1) = 13
  ValueNet net(make_spec(2, {3}));
  CHECK(net.param_count() == 13);
  // input 1 -> 4 -> 5 -> out: (1*4+4) + (4*5+5) + (5+1) = 39
  ValueNet net2(make_spec(1, {4, 5}));
  CHECK(net2.param_count() == 39);
}

TEST_CASE("zero parameters give the closed-form output") {
  // All-zero weights: hidden sigmoids output 1/2, output preactivation 0,
  // so V = softplus(0) + offset = log 2 + 0.01.
  ValueNet net(make_spec(2, {8}));
  const double v = net.forward(Vec{0.3, -0.7});
  CHECK(v == doctest::Approx(std::log(2.0) + 0.01).epsilon(1e-12));
}

TEST_CASE("forward is positive and workspace-independent") {
  SplitRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ValueNet net = ValueNet::random_init(make_spec(2, {7, 5}), rng);
    ValueNet::Workspace ws = net.make_workspace();
    const Vec x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double a = net.forward(x);
    const double b = net.forward(x, ws);
    CHECK(a == b);
    CHECK(a > 0.01);  // softplus > 0 plus the offset
  }
}

TEST_CASE("random init respects the fan-in bound") {
  SplitRng rng(9);
  ValueNet net = ValueNet::random_init(make_spec(4, {10}), rng);
  const auto& p = net.params();
  // First layer: fan_in 4 -> entries within 1/2.
  for (int i = 0; i < 4 * 10 + 10; ++i) CHECK(std::abs(p[i]) <= 0.5);
  double max_abs = 0.0;
  for (double v : p) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs > 0.0);
}

TEST_CASE("backprop gradient matches central differences") {
  SplitRng rng(17);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    ValueNet net = ValueNet::random_init(make_spec(2, {5, 7}), rng);
    Vec x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const std::vector<double> grad = net.grad_params(x);
    REQUIRE(static_cast<int>(grad.size()) == net.param_count());
    auto& p = net.params();
    for (int i = 0; i < net.param_count(); ++i) {
      const double save = p[i];
      p[i] = save + h;
      const double up = net.forward(x);
      p[i] = save - h;
      const double dn = net.forward(x);
      p[i] = save;
      const double fd = (up - dn) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      CHECK(std::abs(grad[i] - fd) / scale <= 1e-4);
    }
  }
}

TEST_CASE("value_and_accumulate_grad fuses value and scaled gradient") {
  SplitRng rng(23);
  ValueNet net = ValueNet::random_init(make_spec(1, {6}), rng);
  ValueNet::Workspace ws = net.make_workspace();
  const Vec x{0.37};
  const std::vector<double> ref = net.grad_params(x);

  std::vector<double> acc(net.param_count(), 0.0);
  const double v = net.value_and_accumulate_grad(x, 2.5, acc, ws);
  CHECK(v == doctest::Approx(net.forward(x)).epsilon(1e-14));
  for (int i = 0; i < net.param_count(); ++i)
    CHECK(acc[i] == doctest::Approx(2.5 * ref[i]).epsilon(1e-10));

  // Accumulation adds on top of existing content.
  const double v2 = net.value_and_accumulate_grad(x, -1.0, acc, ws);
  CHECK(v2 == v);
  for (int i = 0; i < net.param_count(); ++i)
    CHECK(acc[i] == doctest::Approx(1.5 * ref[i]).epsilon(1e-10));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamState st(4, 1e-3);
  std::vector<double> theta{1.0, -2.0, 0.5, 0.0};
  const std::vector<double> before = theta;
  std::vector<double> g(4, 0.0);
  adam_step(st, theta, g);
  CHECK(theta == before);
}

TEST_CASE("adam: first step has the closed form lr * g / (|g| + eps)") {
  const double lr = 1e-3, eps = 1e-8;
  AdamState st(3, lr);
  std::vector<double> theta{0.0, 0.0, 0.0};
  std::vector<double> g{2.0, -0.5, 1e-6};
  adam_step(st, theta, g);
  for (int i = 0; i < 3; ++i) {
    const double expect = -lr * g[i] / (std::abs(g[i]) + eps);
    CHECK(theta[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("adam: deterministic across runs and scales with lr_scale") {
  std::vector<double> t1{1.0, 1.0}, t2{1.0, 1.0};
  AdamState s1(2, 1e-3), s2(2, 1e-3);
  std::vector<double> g{0.3, -0.8};
  for (int k = 0; k < 10; ++k) {
    adam_step(s1, t1, g);
    adam_step(s2, t2, g);
  }
  CHECK(t1 == t2);

  // lr_scale = 0 freezes the parameters but still advances the moments.
  std::vector<double> t3{1.0, 1.0};
  AdamState s3(2, 1e-3);
  adam_step(s3, t3, g, 0.0);
  CHECK(t3 == std::vector<double>{1.0, 1.0});
}
