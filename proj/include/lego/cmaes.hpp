#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lego/rng.hpp"

namespace lego {

/// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates and
/// cumulative step-size adaptation. With `unit_box` set, samples are clipped
/// into [0, 1]^n before they are returned and used in the update.
struct CmaesState {
  int n = 0;
  int lambda = 0;
  int mu = 0;
  int generation = 0;
  bool unit_box = false;

  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd C;
  Eigen::MatrixXd B;       // eigenvectors of C
  Eigen::VectorXd D;       // sqrt of eigenvalues of C
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;

  Eigen::VectorXd weights;  // lambda entries, zero past mu
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  Rng rng;
};

int default_population(int n);

CmaesState cmaes_create(const Eigen::VectorXd& mean, double sigma, int lambda, bool unit_box,
                        std::uint64_t seed);

std::vector<Eigen::VectorXd> cmaes_ask(CmaesState& state);

/// Costs must be finite. Candidates with equal cost share the mean of their
/// rank weights.
void cmaes_tell(CmaesState& state, const std::vector<Eigen::VectorXd>& xs,
                const std::vector<double>& costs);

double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace lego
