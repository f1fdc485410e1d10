#pragma once

#include "partly/data.hpp"
#include "partly/family.hpp"

#include <limits>
#include <vector>

namespace partly {

struct MleOptions {
  double tau = std::numeric_limits<double>::infinity();
  int max_iterations = 100;
  double tolerance = 1e-8;  // on |u_n / n|, scaled by m
  int info_panels = 16;     // composite GL7 panels per subject for J_n
};

struct MleFit {
  Vector theta_hat;
  double log_likelihood = 0.0;
  Vector score;               // u_n(theta_hat)
  Matrix information;         // J_n = int alpha*^t F_n alpha* ds
  Matrix observed_information;  // -i_n / n, diagnostic
  Matrix covariance;          // J_n^{-1} / n
  bool converged = false;
  std::vector<double> trace;  // log-likelihood per iteration
};

// All r covariate columns must be covered by `block` (block.p() == r).
double log_likelihood(const Dataset& ds, const ParametricBlock& block, const Vector& theta,
                      double tau = std::numeric_limits<double>::infinity());

// Score u_n and observed information -i_n (both unnormalized).
struct ScoreInfo {
  double value = 0.0;
  Vector score;
  Matrix info;
};
ScoreInfo likelihood_derivatives(const Dataset& ds, const ParametricBlock& block,
                                 const Vector& theta, double tau);

// int alpha*^t F_n alpha* ds with F_n = n^{-1} sum Y_i z_i z_i^t / z_i^t alpha.
Matrix mle_information(const Dataset& ds, const ParametricBlock& block, const Vector& theta,
                       double tau, int panels = 16);

MleFit fit_mle(const Dataset& ds, const ParametricBlock& block, const Vector& theta_init,
               const MleOptions& options = {});

}  // namespace partly
