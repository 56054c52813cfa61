#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>

#include "fiberpinn/launch.hpp"
#include "fiberpinn/optim.hpp"

using namespace fiberpinn;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

struct Quadratic {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;

  explicit Quadratic(int n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = 2.0 * rng.uniform() - 1.0;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(r);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd eig(n);
    for (int i = 0; i < n; ++i) eig[i] = 1.0 + 1.5 * i;  // 1 .. 11.5, distinct
    a = q * eig.asDiagonal() * q.transpose();
    b.resize(n);
    for (int i = 0; i < n; ++i) b[i] = 2.0 * rng.uniform() - 1.0;
  }

  double operator()(std::span<const double> x, std::span<double> g) const {
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd ax = a * xv;
    Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())) = ax - b;
    return 0.5 * xv.dot(ax) - b.dot(xv);
  }
};

}  // namespace

TEST_CASE("ADAM first step has magnitude lr") {
  AdamState st;
  const ValueGradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  const auto r = adam_run(f, {1.0}, 1, st);
  // m_hat / sqrt(v_hat) = sign(g); eps perturbs the step by lr * eps / |g|
  CHECK(std::abs(r.params[0] - 0.999) <= 1e-3 * 1e-8 / 2.0 + 1e-16);
  CHECK(r.trace == std::vector<double>{1.0});
  CHECK(st.step == 1);
}

TEST_CASE("ADAM with zero gradient leaves parameters alone") {
  AdamState st;
  const ValueGradFn f = [](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    return 5.0;
  };
  const std::vector<double> x0{1.0, -2.0, 3.0};
  const auto r = adam_run(f, x0, 100, st);
  CHECK(r.params == x0);
  CHECK(r.trace.size() == 100);
}

TEST_CASE("ADAM on (w-3)^2 matches the scalar recurrence") {
  AdamState st;
  st.config.lr = 0.01;
  const ValueGradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const auto r = adam_run(f, {0.0}, 5000, st);
  double w = 0.0, m = 0.0, v = 0.0;
  for (int k = 1; k <= 5000; ++k) {
    const double g = 2.0 * (w - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w -= 0.01 * (m / (1.0 - std::pow(0.9, k))) / (std::sqrt(v / (1.0 - std::pow(0.999, k))) + 1e-8);
  }
  CHECK(r.params[0] == w);
  CHECK(std::abs(w - 3.0) < 1e-3);
}

TEST_CASE("ADAM stops on a non-finite loss and keeps the last good iterate") {
  AdamState st;
  st.config.lr = 0.5;
  int calls = 0;
  const ValueGradFn f = [&](std::span<const double> x, std::span<double> g) {
    g[0] = 1.0;
    return ++calls == 4 ? NAN : x[0];
  };
  const auto r = adam_run(f, {0.0}, 10, st);
  CHECK(r.status == OptimStatus::Diverged);
  CHECK(r.trace.size() == 3);
  CHECK(r.params[0] == doctest::Approx(-1.0));  // two finite updates of lr each
}

TEST_CASE("L-BFGS on an 8-D quadratic") {
  const Quadratic q(8, 17);
  const Eigen::VectorXd xs = q.a.ldlt().solve(q.b);
  LbfgsConfig cfg;
  cfg.grad_tol = 1e-10;
  cfg.loss_tol = 0.0;
  const auto r = lbfgs_run(std::cref(q), std::vector<double>(8, 0.0), 20, cfg);
  std::vector<double> g(8);
  q(r.params, g);
  CHECK(Eigen::Map<const Eigen::VectorXd>(g.data(), 8).norm() < 1e-10);
  CHECK(r.status == OptimStatus::GradTol);
  CHECK(r.trace.size() <= 20);
  for (int i = 0; i < 8; ++i) CHECK(r.params[i] == doctest::Approx(xs[i]).epsilon(1e-9));
  MESSAGE("quadratic iterations: " << r.trace.size());
}

TEST_CASE("L-BFGS on Rosenbrock") {
  const auto r = lbfgs_run(rosenbrock, {-1.2, 1.0}, 100);
  std::vector<double> g(2);
  CHECK(rosenbrock(r.params, g) < 1e-8);
  CHECK(r.trace.size() <= 100);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
  MESSAGE("rosenbrock iterations: " << r.trace.size() << ", status " << std::string(to_string(r.status)));
  const auto again = lbfgs_run(rosenbrock, {-1.2, 1.0}, 100);
  CHECK(again.params == r.params);
  CHECK(again.trace == r.trace);
}

TEST_CASE("L-BFGS at a stationary point returns at once") {
  const auto r = lbfgs_run(rosenbrock, {1.0, 1.0}, 50);
  CHECK(r.trace.empty());
  CHECK(r.status == OptimStatus::GradTol);
  CHECK(r.evaluations == 1);
  CHECK(r.params == std::vector<double>{1.0, 1.0});
}

TEST_CASE("L-BFGS fails gracefully with a wrong gradient") {
  // reported gradient points uphill, so no step satisfies sufficient decrease
  const ValueGradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = -2.0 * x[0];
    return x[0] * x[0];
  };
  const auto r = lbfgs_run(f, {1.0}, 10);
  CHECK(r.status == OptimStatus::LineSearchFailed);
  CHECK(r.params == std::vector<double>{1.0});
  CHECK(r.evaluations <= 41);
}

TEST_CASE("L-BFGS rejects non-finite trial points") {
  // finite only for x > 0; the first full step overshoots into the NaN region
  const ValueGradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 1.0 - 1.0 / x[0];
    return x[0] - std::log(x[0]);
  };
  const auto r = lbfgs_run(f, {5.0}, 50);
  CHECK(r.params[0] == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
}
