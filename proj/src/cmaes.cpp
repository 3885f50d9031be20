#include "lego/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "lego/errors.hpp"

namespace lego {

namespace {

void decompose(CmaesState& s) {
  s.C = 0.5 * (s.C + s.C.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.C);
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite() ||
      eig.eigenvalues().minCoeff() <= 0.0) {
    throw OptimizerError("covariance is not positive definite");
  }
  s.B = eig.eigenvectors();
  s.D = eig.eigenvalues().cwiseSqrt();
}

}  // namespace

int default_population(int n) { return 4 + static_cast<int>(std::floor(3.0 * std::log(n))); }

CmaesState cmaes_create(const Eigen::VectorXd& mean, double sigma, int lambda, bool unit_box,
                        std::uint64_t seed) {
  const int n = static_cast<int>(mean.size());
  if (n < 1) throw OptimizerError("empty search space");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw OptimizerError("sigma must be positive");
  if (!mean.allFinite()) throw OptimizerError("mean must be finite");
  if (unit_box && (mean.minCoeff() < 0.0 || mean.maxCoeff() > 1.0)) {
    throw OptimizerError("initial mean outside bounds");
  }
  CmaesState s;
  s.n = n;
  s.lambda = lambda > 0 ? lambda : default_population(n);
  if (s.lambda < 2) throw OptimizerError("population must be at least 2");
  s.mu = s.lambda / 2;
  s.unit_box = unit_box;
  s.mean = mean;
  s.sigma = sigma;
  s.C = Eigen::MatrixXd::Identity(n, n);
  s.B = Eigen::MatrixXd::Identity(n, n);
  s.D = Eigen::VectorXd::Ones(n);
  s.p_sigma = Eigen::VectorXd::Zero(n);
  s.p_c = Eigen::VectorXd::Zero(n);

  s.weights = Eigen::VectorXd::Zero(s.lambda);
  for (int i = 0; i < s.mu; ++i) s.weights[i] = std::log(s.mu + 0.5) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  const double nn = n;
  s.c_sigma = (s.mu_eff + 2.0) / (nn + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (nn + 1.0)) - 1.0) + s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / nn) / (nn + 4.0 + 2.0 * s.mu_eff / nn);
  s.c_1 = 2.0 / ((nn + 1.3) * (nn + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                                     ((nn + 2.0) * (nn + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(nn) * (1.0 - 1.0 / (4.0 * nn) + 1.0 / (21.0 * nn * nn));
  s.rng.seed(seed);
  return s;
}

std::vector<Eigen::VectorXd> cmaes_ask(CmaesState& s) {
  if (!(s.D.minCoeff() > 0) || !s.D.allFinite() || !(s.sigma >= 0)) {
    throw OptimizerError("degenerate covariance");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(s.lambda));
  for (int k = 0; k < s.lambda; ++k) {
    Eigen::VectorXd z(s.n);
    for (int i = 0; i < s.n; ++i) z[i] = normal01(s.rng);
    Eigen::VectorXd x = s.mean + s.sigma * (s.B * s.D.asDiagonal() * z);
    if (s.unit_box) x = x.cwiseMax(0.0).cwiseMin(1.0);
    out.push_back(std::move(x));
  }
  return out;
}

void cmaes_tell(CmaesState& s, const std::vector<Eigen::VectorXd>& xs,
                const std::vector<double>& costs) {
  if (static_cast<int>(xs.size()) != s.lambda || costs.size() != xs.size()) {
    throw OptimizerError("tell needs exactly lambda candidates and costs");
  }
  for (double c : costs) {
    if (!std::isfinite(c)) throw OptimizerError("non-finite cost");
  }
  std::vector<int> order(static_cast<std::size_t>(s.lambda));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return costs[a] < costs[b]; });

  // rank weights, averaged over runs of equal cost
  Eigen::VectorXd w(s.lambda);
  for (int r = 0; r < s.lambda;) {
    int e = r;
    while (e + 1 < s.lambda && costs[order[e + 1]] == costs[order[r]]) ++e;
    double avg = s.weights.segment(r, e - r + 1).mean();
    for (int i = r; i <= e; ++i) w[order[i]] = avg;
    r = e + 1;
  }

  const Eigen::VectorXd old_mean = s.mean;
  Eigen::MatrixXd y(s.n, s.lambda);
  for (int k = 0; k < s.lambda; ++k) y.col(k) = (xs[k] - old_mean) / s.sigma;
  const Eigen::VectorXd y_w = y * w;
  s.mean = old_mean + s.sigma * y_w;

  const Eigen::MatrixXd c_inv_sqrt = s.B * s.D.cwiseInverse().asDiagonal() * s.B.transpose();
  s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma +
              std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * (c_inv_sqrt * y_w);
  const double ps_norm = s.p_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * (s.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (s.n + 1.0)) * s.chi_n;
  s.p_c = (1.0 - s.c_c) * s.p_c +
          (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) * y_w;

  Eigen::MatrixXd rank_mu = y * w.asDiagonal() * y.transpose();
  const double delta_h = h_sigma ? 0.0 : s.c_c * (2.0 - s.c_c);
  s.C = (1.0 - s.c_1 - s.c_mu) * s.C + s.c_1 * (s.p_c * s.p_c.transpose() + delta_h * s.C) +
        s.c_mu * rank_mu;
  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  ++s.generation;
  decompose(s);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace lego
