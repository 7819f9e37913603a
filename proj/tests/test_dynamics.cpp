#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <random>

#include "deep/dynamics.hpp"
#include "testutil.hpp"

using namespace deep;

TEST_CASE("hard sigmoid clamps to [0, 1]") {
  CHECK(hard_sigmoid(-0.5) == 0.0);
  CHECK(hard_sigmoid(0.3) == 0.3);
  CHECK(hard_sigmoid(1.7) == 1.0);
  CHECK(hard_sigmoid(0.0) == 0.0);
  CHECK(hard_sigmoid(1.0) == 1.0);
}

TEST_CASE("mse cost and its gradient") {
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << 0.0;
  CHECK(mse_cost(a, a) == 0.0);
  CHECK(mse_cost(a, b) == 0.5);

  Eigen::VectorXd c(2), d(2);
  c << 1.0, 0.0;
  d << 0.0, 1.0;
  CHECK(mse_cost(c, d) == 1.0);

  Eigen::VectorXd e(1), f(1);
  e << 0.8;
  f << 1.0;
  CHECK(cost_gradient(e, f)(0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(cost_gradient(a, a).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(mse_cost(a, wrong), std::invalid_argument);
  CHECK_THROWS_AS(cost_gradient(a, wrong), std::invalid_argument);
}

TEST_CASE("cost gradient matches central finite differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 5);
    Eigen::VectorXd y_hat(n), y(n);
    for (Index k = 0; k < n; ++k) {
      y_hat(k) = d(rng);
      y(k) = d(rng);
    }
    const Eigen::VectorXd g = cost_gradient(y_hat, y);
    const Eigen::VectorXd g_fd = testutil::fd_cost_gradient(y_hat, y);
    for (Index k = 0; k < n; ++k)
      CHECK(g(k) == doctest::Approx(g_fd(k)).epsilon(1e-6));
  }
}

TEST_CASE("vector field on hand-checked instances") {
  SUBCASE("all-zero parameters give a zero field") {
    auto net = new_complete_network<double>(4, 1, 1, 0.5, 0);
    net.weights.setZero();
    net.bias.setZero();
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(4, 0.3);
    CHECK(vector_field(net, s, Eigen::VectorXd(), 0.0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two free neurons, single connection") {
    auto net = new_complete_network<double>(2, 0, 1, 0.5, 0);
    net.weights.setZero();
    net.bias.setZero();
    net.bias_mask.setConstant(false);
    net.weights(0, 1) = 1.0;  // 0 -> 1
    Eigen::VectorXd s(2);
    s << 1.0, 0.0;
    const Eigen::VectorXd v = vector_field(net, s, Eigen::VectorXd(), 0.0);
    CHECK(v(0) == doctest::Approx(-1.0));
    CHECK(v(1) == doctest::Approx(1.0));
  }
  SUBCASE("nudge pulls outputs toward the target") {
    auto net = new_complete_network<double>(3, 0, 1, 0.5, 0);
    net.weights.setZero();
    net.bias.setZero();
    Eigen::VectorXd s = Eigen::VectorXd::Constant(3, 0.5);
    Eigen::VectorXd y(1);
    y << 1.0;
    const Eigen::VectorXd v = vector_field(net, s, y, 0.5);
    CHECK(v(2) == doctest::Approx(0.5 * (1.0 - 0.5)));
    CHECK(v(0) == 0.0);
  }
}

TEST_CASE("free drift sums to zero without biases or inputs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto net = testutil::random_network(3 + static_cast<Index>(rng() % 8), 0, 1, rng);
    net.bias.setZero();
    const Eigen::VectorXd s = testutil::random_state(net.n_total, rng);
    const double residual = vector_field(net, s, Eigen::VectorXd(), 0.0).sum();
    const double scale = net.weights.cwiseAbs().sum();
    CHECK(std::abs(residual) <= 1e-12 * scale);
  }
}

TEST_CASE("relax records steps+1 clamped states with pinned inputs") {
  std::mt19937_64 rng(31);
  Hyperparams<double> hp;
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = testutil::random_network(6, 2, 1, rng, 2.0);
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    Eigen::VectorXd s0 = testutil::random_state(6, rng);
    s0.head(2) = x;
    const auto traj = relax(net, s0, x, Eigen::VectorXd(), 0.0, 25, hp);
    CHECK(traj.states.size() == 26);
    CHECK_FALSE(traj.converged_at.has_value());
    for (const auto& s : traj.states) {
      CHECK(s.minCoeff() >= 0.0);
      CHECK(s.maxCoeff() <= 1.0);
      CHECK(s(0) == 1.0);
      CHECK(s(1) == 0.0);
    }
  }
}

TEST_CASE("relax with zero parameters is constant") {
  auto net = new_complete_network<double>(4, 1, 1, 0.5, 0);
  net.weights.setZero();
  net.bias.setZero();
  Eigen::VectorXd x(1);
  x << 0.7;
  Eigen::VectorXd s0(4);
  s0 << 0.7, 0.2, 0.4, 0.9;
  Hyperparams<double> hp;
  const auto traj = relax(net, s0, x, Eigen::VectorXd(), 0.0, 10, hp);
  for (const auto& s : traj.states) CHECK((s - s0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relax is deterministic") {
  std::mt19937_64 rng(37);
  const auto net = testutil::random_network(6, 2, 1, rng);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  Eigen::VectorXd s0 = Eigen::VectorXd::Constant(6, 0.5);
  s0.head(2) = x;
  Hyperparams<double> hp;
  const auto a = relax(net, s0, x, Eigen::VectorXd(), 0.0, 40, hp);
  const auto b = relax(net, s0, x, Eigen::VectorXd(), 0.0, 40, hp);
  for (std::size_t m = 0; m < a.states.size(); ++m)
    CHECK((a.states[m] - b.states[m]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("early stopping pads the trajectory and records the step") {
  std::mt19937_64 rng(43);
  const auto inst = testutil::make_certified_network(rng);
  Hyperparams<double> hp;
  hp.convergence_tol = 1e-9;
  Eigen::VectorXd s0 = Eigen::VectorXd::Constant(inst.net.n_total, 0.5);
  s0.head(inst.net.n_input) = inst.x;
  const auto traj = relax(inst.net, s0, inst.x, Eigen::VectorXd(), 0.0, 5000, hp);
  REQUIRE(traj.converged_at.has_value());
  CHECK(*traj.converged_at < 5000);
  CHECK(traj.states.size() == 5001);
  const auto& last = traj.states.back();
  CHECK((traj.states[traj.states.size() - 2] - last).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergence reports the failing step") {
  auto net = new_complete_network<double>(3, 0, 1, 0.5, 0);
  net.weights(0, 1) = std::numeric_limits<double>::infinity();
  Eigen::VectorXd s0 = Eigen::VectorXd::Constant(3, 0.5);
  Hyperparams<double> hp;
  CHECK_THROWS_AS(relax(net, s0, Eigen::VectorXd(), Eigen::VectorXd(), 0.0, 10, hp),
                  DivergenceError);
  try {
    relax(net, s0, Eigen::VectorXd(), Eigen::VectorXd(), 0.0, 10, hp);
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("free equilibrium of the zero network stays at state_init") {
  auto net = new_complete_network<double>(5, 2, 1, 0.5, 0);
  net.weights.setZero();
  net.bias.setZero();
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  Hyperparams<double> hp;
  const Eigen::VectorXd s0 = free_equilibrium(net, x, hp);
  CHECK(s0(0) == 1.0);
  CHECK(s0(1) == 0.0);
  for (Index j = 2; j < 5; ++j) CHECK(s0(j) == 0.5);

  const Eigen::VectorXd again = free_equilibrium(net, x, hp);
  CHECK((s0 - again).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("certified equilibria recover from interior perturbations") {
  std::mt19937_64 rng(53);
  Hyperparams<double> hp;
  hp.m0 = 2000;
  const auto inst = testutil::make_certified_network(rng);
  const Eigen::VectorXd s0 = free_equilibrium(inst.net, inst.x, hp);
  CHECK((s0 - inst.equilibrium).cwiseAbs().maxCoeff() < 1e-9);

  std::uniform_real_distribution<double> d(-0.01, 0.01);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd s = s0;
    for (Index j = inst.net.n_input; j < inst.net.n_total; ++j) s(j) += d(rng);
    const auto traj = relax(inst.net, s, inst.x, Eigen::VectorXd(), 0.0, 2000, hp);
    CHECK((traj.states.back() - s0).cwiseAbs().maxCoeff() <= 1e-6);
  }
}
