#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "lego/cmaes.hpp"
#include "lego/errors.hpp"

using namespace lego;

namespace {

double sphere(const Eigen::VectorXd& x, const Eigen::VectorXd& opt) { return (x - opt).squaredNorm(); }

double rosenbrock(const Eigen::VectorXd& x) {
  double f = 0;
  for (int i = 0; i + 1 < x.size(); ++i) {
    f += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
  }
  return f;
}

template <class F>
double minimize(CmaesState& s, F f, int generations) {
  double best = INFINITY;
  for (int g = 0; g < generations; ++g) {
    auto xs = cmaes_ask(s);
    std::vector<double> c;
    for (const auto& x : xs) c.push_back(f(x));
    for (double v : c) best = std::min(best, v);
    cmaes_tell(s, xs, c);
  }
  return best;
}

}  // namespace

TEST_CASE("default population") {
  CHECK(default_population(4) == 8);
  CHECK(default_population(2) == 6);
  CHECK(default_population(10) == 10);
}

TEST_CASE("sphere converges within 150 generations from sigma 0.3") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Eigen::VectorXd opt(4);
    opt << 0.3, -0.2, 0.8, 0.1;
    CmaesState s = cmaes_create(Eigen::VectorXd::Zero(4), 0.3, 0, false, seed);
    double best = minimize(s, [&](const Eigen::VectorXd& x) { return sphere(x, opt); }, 150);
    CHECK(best < 1e-6);
    CHECK(sphere(s.mean, opt) < 1e-6);
  }
}

TEST_CASE("rosenbrock in four dimensions") {
  CmaesState s = cmaes_create(Eigen::VectorXd::Zero(4), 0.5, 0, false, 3);
  CHECK(minimize(s, rosenbrock, 1500) < 1e-8);
}

TEST_CASE("unit box samples are clipped") {
  CmaesState s = cmaes_create(Eigen::VectorXd::Constant(3, 0.9), 2.0, 12, true, 4);
  for (int g = 0; g < 50; ++g) {
    auto xs = cmaes_ask(s);
    std::vector<double> c;
    for (const auto& x : xs) {
      CHECK(x.minCoeff() >= 0.0);
      CHECK(x.maxCoeff() <= 1.0);
      c.push_back(x.sum());
    }
    cmaes_tell(s, xs, c);
  }
  CHECK(s.mean.maxCoeff() < 0.05);
  CHECK_THROWS_AS(cmaes_create(Eigen::VectorXd::Constant(3, 1.5), 0.1, 0, true, 0), OptimizerError);
}

TEST_CASE("covariance stays positive definite") {
  Rng rng(9);
  CmaesState s = cmaes_create(Eigen::VectorXd::Constant(4, 0.5), 0.2, 0, true, 9);
  for (int g = 0; g < 300; ++g) {
    auto xs = cmaes_ask(s);
    std::vector<double> c;
    // adversarial: noise, plateaus, and large ties
    for (std::size_t i = 0; i < xs.size(); ++i) c.push_back(rng() % 3 == 0 ? 1e8 : uniform01(rng));
    cmaes_tell(s, xs, c);
    CHECK(min_eigenvalue(s.C) > 1e-12);
    CHECK(s.sigma > 0);
    // symmetric, and B D^2 B^T reproduces C
    CHECK((s.C - s.C.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::MatrixXd back = s.B * s.D.cwiseAbs2().asDiagonal() * s.B.transpose();
    CHECK((back - s.C).cwiseAbs().maxCoeff() < 1e-12 * (1 + s.C.norm()));
  }
}

TEST_CASE("equal costs average every candidate") {
  CmaesState s = cmaes_create(Eigen::VectorXd::Zero(3), 1.0, 10, false, 5);
  auto xs = cmaes_ask(s);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(3);
  for (const auto& x : xs) avg += x / 10.0;
  cmaes_tell(s, xs, std::vector<double>(10, 4.0));
  CHECK((s.mean - avg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mean is the weighted recombination of the best half") {
  CmaesState s = cmaes_create(Eigen::VectorXd::Zero(2), 1.0, 8, false, 6);
  const Eigen::VectorXd w = s.weights;
  auto xs = cmaes_ask(s);
  std::vector<double> c{5, 1, 7, 3, 8, 2, 6, 4};
  // ranks by cost: indices 1, 5, 3, 7
  Eigen::VectorXd expect = w[0] * xs[1] + w[1] * xs[5] + w[2] * xs[3] + w[3] * xs[7];
  cmaes_tell(s, xs, c);
  CHECK((s.mean - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.generation == 1);
}

TEST_CASE("ask is reproducible and checks its inputs") {
  CmaesState a = cmaes_create(Eigen::VectorXd::Zero(4), 0.3, 0, false, 77);
  CmaesState b = cmaes_create(Eigen::VectorXd::Zero(4), 0.3, 0, false, 77);
  auto xa = cmaes_ask(a), xb = cmaes_ask(b);
  REQUIRE(xa.size() == 8);
  for (std::size_t i = 0; i < xa.size(); ++i) CHECK(xa[i] == xb[i]);
  std::vector<double> bad(8, 1.0);
  bad[2] = NAN;
  CHECK_THROWS_AS(cmaes_tell(a, xa, bad), OptimizerError);
  CHECK_THROWS_AS(cmaes_tell(a, std::vector<Eigen::VectorXd>(xa.begin(), xa.end() - 1),
                             std::vector<double>(7, 1.0)),
                  OptimizerError);
  CHECK_THROWS_AS(cmaes_create(Eigen::VectorXd::Zero(4), 0.0, 0, false, 0), OptimizerError);
  CHECK_THROWS_AS(cmaes_create(Eigen::VectorXd::Zero(4), 0.1, 1, false, 0), OptimizerError);
}

TEST_CASE("min_eigenvalue") {
  Eigen::MatrixXd m(3, 3);
  m << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  // characteristic roots of this tridiagonal matrix: 3 and 3 +- sqrt(3)
  CHECK(min_eigenvalue(m) == doctest::Approx(3 - std::sqrt(3.0)).epsilon(1e-12));
}
