#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "grad_check.hpp"
#include "gradient_suite.hpp"
#include "kgaug/error.hpp"
#include "kgaug/numerics/adam.hpp"
#include "kgaug/numerics/lstm.hpp"
#include "kgaug/numerics/ops.hpp"

using namespace kgaug;
using namespace kgaug::num;
using testing::check_gradients;
using testing::random_tensor;
using testing::weighted_sum;

namespace {

constexpr double kGradTol = 1e-4;

void check_close(const Tensor& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("matmul: identity and unit selection") {
  Graph g;
  Var eye = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var m = g.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  CHECK(matmul(eye, m).value() == m.value());

  Var row = g.constant(Tensor::matrix({{1, 0}}));
  Var col = g.constant(Tensor::matrix({{2}, {3}}));
  CHECK(matmul(row, col).value() == Tensor::matrix({{2}}));
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Graph g;
  Var a = g.constant(Tensor({2, 3}));
  Var b = g.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x3] x [2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul: gradient matches finite differences") {
  std::mt19937_64 rng(1);
  Parameter a("a", random_tensor(rng, {3, 4}));
  Parameter b("b", random_tensor(rng, {4, 2}));
  auto res = check_gradients({&a, &b}, [&](Graph& g) {
    return weighted_sum(g, matmul(g.param(a), g.param(b)));
  });
  CHECK(res.worst < 1e-6);
}

TEST_CASE("lstm_cell: zero parameters give zero state") {
  std::mt19937_64 rng(2);
  LstmParams p = LstmParams::zeros("l", 3, 4);
  Graph g;
  LstmVars vars = bind(g, p);
  Var x = g.constant(random_tensor(rng, {2, 3}));
  LstmState prior{g.constant(random_tensor(rng, {2, 4})), g.constant(Tensor({2, 4}))};
  LstmState next = lstm_cell(x, prior, vars);
  for (double v : next.h.value().data()) CHECK(v == 0.0);
  for (double v : next.c.value().data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell: zero input, zero state and zero bias give zero output") {
  std::mt19937_64 rng(3);
  LstmParams p = LstmParams::random("l", 3, 4, rng);
  p.bias.value.fill(0.0);
  Graph g;
  LstmVars vars = bind(g, p);
  LstmState next = lstm_cell(g.constant(Tensor({1, 3})), lstm_zero_state(g, 1, 4), vars);
  for (double v : next.h.value().data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell: gradients for all parameters match finite differences") {
  std::mt19937_64 rng(4);
  LstmParams p = LstmParams::random("l", 3, 4, rng);
  Parameter x("x", random_tensor(rng, {2, 3}));
  Parameter h("h", random_tensor(rng, {2, 4}, 0.5));
  Parameter c("c", random_tensor(rng, {2, 4}, 0.5));
  auto res = check_gradients(
      {&p.input_weights, &p.recurrent_weights, &p.bias, &x, &h, &c}, [&](Graph& g) {
        LstmVars vars = bind(g, p);
        LstmState s{g.param(h), g.param(c)};
        // Two steps so the recurrent path is exercised.
        LstmState s1 = lstm_cell(g.param(x), s, vars);
        LstmState s2 = lstm_cell(g.param(x), s1, vars);
        return add(weighted_sum(g, s2.h, 5), weighted_sum(g, s2.c, 6));
      });
  INFO(res.worst_param);
  CHECK(res.worst < kGradTol);
}

TEST_CASE("lstm_cell: shape mismatch is a dimension error") {
  std::mt19937_64 rng(5);
  LstmParams p = LstmParams::random("l", 3, 4, rng);
  Graph g;
  LstmVars vars = bind(g, p);
  CHECK_THROWS_AS(lstm_cell(g.constant(Tensor({1, 5})), lstm_zero_state(g, 1, 4), vars),
                  DimensionError);
  CHECK_THROWS_AS(lstm_cell(g.constant(Tensor({1, 3})), lstm_zero_state(g, 1, 3), vars),
                  DimensionError);
}

TEST_CASE("softmax: reference values") {
  Graph g;
  check_close(softmax(g.constant(Tensor::vector({0, 0}))).value(), {0.5, 0.5}, 1e-15);
  const double e = std::exp(1.0);
  Tensor y = softmax(g.constant(Tensor::vector({1, 0}))).value();
  CHECK(std::abs(y[0] - 0.73106) < 1e-5);
  CHECK(std::abs(y[1] - 0.26894) < 1e-5);
  CHECK(y[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
  CHECK(softmax(g.constant(Tensor::vector({42.0}))).value()[0] == 1.0);
  CHECK_THROWS_AS(softmax(g.constant(Tensor::vector({}))), DomainError);
}

TEST_CASE("softmax: normalised and shift invariant on random logits") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    Graph g;
    Tensor z = random_tensor(rng, {static_cast<std::size_t>(len(rng))}, 5.0);
    Tensor zs = z;
    const double c = shift(rng);
    for (double& v : zs.data()) v += c;
    Tensor y = softmax(g.constant(z)).value();
    Tensor ys = softmax(g.constant(zs)).value();
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(y[i] > 0.0);
      CHECK(std::abs(y[i] - ys[i]) < 1e-12);
      total += y[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("softmax: large logits stay finite") {
  Graph g;
  Tensor y = softmax(g.constant(Tensor::vector({1000.0, 999.0, -1000.0}))).value();
  CHECK(y.all_finite());
  CHECK(y[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));
}

TEST_CASE("relu and cross entropy reference values") {
  Graph g;
  CHECK(relu(g.constant(Tensor::vector({-1, 2}))).value() == Tensor::vector({0, 2}));

  std::vector<std::size_t> zero{0};
  CHECK(cross_entropy(g.constant(Tensor::matrix({{1, 0, 0}})), zero).value().item() == 0.0);

  Var uniform = g.constant(Tensor::matrix({{0.25, 0.25, 0.25, 0.25}}));
  for (std::size_t label = 0; label < 4; ++label) {
    std::vector<std::size_t> l{label};
    CHECK(cross_entropy(uniform, l).value().item() == doctest::Approx(std::log(4.0)));
  }
  CHECK(std::abs(std::log(4.0) - 1.38629) < 1e-5);
  std::vector<std::size_t> bad{4};
  CHECK_THROWS_AS(cross_entropy(uniform, bad), IndexError);
}

TEST_CASE("concat backward splits the upstream gradient exactly") {
  Graph g;
  Var a = g.variable(Tensor::matrix({{1, 2}}));
  Var b = g.variable(Tensor::matrix({{3, 4, 5}}));
  std::vector<Var> parts{a, b};
  Var y = concat_cols(parts);
  Var w = g.constant(Tensor::matrix({{10, 20, 30, 40, 50}}));
  g.backward(sum(mul(y, w)));
  CHECK(a.grad() == Tensor::matrix({{10, 20}}));
  CHECK(b.grad() == Tensor::matrix({{30, 40, 50}}));
}

TEST_CASE("masked mean distributes 1/T_eff to real steps and 0 to padding") {
  Graph g;
  std::vector<Var> steps;
  for (int t = 0; t < 4; ++t) steps.push_back(g.variable(Tensor::matrix({{1.0 * t}, {2.0 * t}})));
  std::vector<std::vector<bool>> mask{{true, true, false, false}, {true, true, true, true}};
  Var o = masked_mean(steps, mask);
  CHECK(o.value() == Tensor::matrix({{0.5}, {3.0}}));
  g.backward(sum(o));
  CHECK(steps[0].grad() == Tensor::matrix({{0.5}, {0.25}}));
  CHECK(steps[1].grad() == Tensor::matrix({{0.5}, {0.25}}));
  CHECK(steps[2].grad() == Tensor::matrix({{0.0}, {0.25}}));
  CHECK(steps[3].grad() == Tensor::matrix({{0.0}, {0.25}}));

  std::vector<std::vector<bool>> empty_row{{false, false, false, false}, {true, true, true, true}};
  CHECK_THROWS_AS(masked_mean(steps, empty_row), DomainError);
}

TEST_CASE("graph: unused nodes get zero gradient and backward runs once") {
  Graph g;
  Var a = g.variable(Tensor::vector({1, 2}));
  Var unused = g.variable(Tensor::vector({3, 4}));
  Var loss = sum(scale(a, 3.0));
  g.backward(loss);
  CHECK(a.grad() == Tensor::vector({3, 3}));
  CHECK(unused.grad() == Tensor::vector({0, 0}));
  CHECK_THROWS(g.backward(loss));
}

TEST_CASE("graph: non-scalar loss is rejected") {
  Graph g;
  Var a = g.variable(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(g.backward(a), DimensionError);
}

TEST_CASE("every differentiable op passes the finite-difference check") {
  for (const testing::NamedCheck& c : testing::op_gradient_suite(7, 5)) {
    INFO(c.name << " " << c.result.worst_param << " " << c.result.worst);
    CHECK(c.result.worst < kGradTol);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter p("p", Tensor::vector({1.0, -2.0}));
  Adam opt({&p}, AdamConfig{});
  p.zero_grad();
  opt.step();
  CHECK(p.value == Tensor::vector({1.0, -2.0}));
}

TEST_CASE("adam: first bias-corrected step moves by the learning rate") {
  Parameter p("p", Tensor::vector({0.0}));
  Adam opt({&p}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  p.grad = Tensor::vector({1.0});
  opt.step();
  CHECK(p.value[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam: constant gradient approaches sign descent at the learning rate") {
  Parameter p("p", Tensor::vector({0.0}));
  const double lr = 0.01;
  Adam opt({&p}, AdamConfig{lr, 0.9, 0.999, 1e-8});
  double last = 0.0, before = 0.0;
  for (int i = 0; i < 2000; ++i) {
    p.grad = Tensor::vector({3.7});
    before = p.value[0];
    opt.step();
    last = before - p.value[0];
  }
  CHECK(last == doctest::Approx(lr).epsilon(1e-6));
  CHECK(opt.steps() == 2000);
}

TEST_CASE("adam: non-finite gradient names the parameter") {
  Parameter p("encoder.weights", Tensor::vector({1.0}));
  Adam opt({&p}, AdamConfig{});
  p.grad = Tensor::vector({std::nan("")});
  try {
    opt.step();
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("encoder.weights") != std::string::npos);
  }
  CHECK(p.value[0] == 1.0);
  CHECK(opt.steps() == 0);
}

TEST_CASE("ops reject non-finite results") {
  Graph g;
  Var a = g.constant(Tensor::vector({1e300}));
  CHECK_THROWS_AS(mul(a, a), DomainError);
}
