#pragma once

#include "partly/aalen.hpp"
#include "partly/family.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace partly {

// plain: V_n = n^{-1} sum Y_i z_(1) z_(1)^t. optimal: the Schur complement
// F~_11 - F~_12 F~_22^{-1} F~_21, which needs an optimally weighted Aalen fit.
enum class VnChoice { plain, optimal };

struct StepAOptions {
  VnChoice vn = VnChoice::plain;
  std::optional<Vector> theta_init;
  int max_iterations = 100;
  double tolerance = 1e-8;  // on |S_n|
};

// Step (a) problem data on the Aalen grid: V_n per interval, jumps of the
// parametric block, and 7-point quadrature nodes per interval.
class StepAProblem {
 public:
  StepAProblem(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
               VnChoice vn);

  double criterion(const Vector& theta) const;
  Vector estimating_function(const Vector& theta) const;  // S_n
  Matrix gamma(const Vector& theta) const;                 // Gamma_n without E_n
  // sum over components of Hess alpha_j weighted by the j-th entry of
  // V_n (dA~ - alpha ds); dS_n/dtheta = E_n - Gamma_n.
  Matrix residual_curvature(const Vector& theta) const;
  Matrix omega(const Vector& theta) const;
  Vector default_init() const;

  const std::vector<Matrix>& V() const { return V_; }
  const std::vector<Matrix>& dQ() const { return dQ_; }
  const ParametricBlock& block() const { return block_; }
  const AalenFit& aalen() const { return aalen_; }

 private:
  const AalenFit& aalen_;
  ParametricBlock block_;
  std::vector<Matrix> V_;   // per interval, p x p
  std::vector<Matrix> dQ_;  // per interval, [G^{-1} dH G^{-1}]_11
  std::vector<Index> event_intervals_;
};

struct StepAResult {
  Vector theta_hat;
  Matrix Gamma;
  Matrix Omega;
  Vector S;
  double criterion = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

StepAResult fit_step_a(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                       const StepAOptions& options = {});

StepAResult solve_step_a(const StepAProblem& prob, const StepAOptions& options = {});

double criterion(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                 const Vector& theta, VnChoice vn = VnChoice::plain);

// Backfitted nonparametric block: jumps at events plus a drift
// -G_22^{-1} G_21 alpha_(1)(s, theta) ds between knots.
class A2Path {
 public:
  A2Path() = default;
  A2Path(std::vector<double> knots, std::vector<Vector> values, std::vector<Matrix> drift,
         ParametricBlock block, Vector theta);
  Vector operator()(double t) const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Vector>& values() const { return values_; }
  const std::vector<Matrix>& drift() const { return drift_; }

 private:
  std::vector<double> knots_;
  std::vector<Vector> values_;  // at knots (after jumps)
  std::vector<Matrix> drift_;   // per interval, q x p
  ParametricBlock block_;
  Vector theta_;
};

// Uses the grid and weighted moments of `aalen`.
A2Path backfit_step_b(const Dataset& ds, const AalenFit& aalen, const Vector& theta,
                      const ParametricBlock& block);
A2Path backfit_step_b(const Dataset& ds, const TimeGrid& grid, const Vector& theta,
                      const ParametricBlock& block, const WeightFn& weights = {});

struct PartlyOptions {
  StepAOptions step_a;
};

struct PartlyFit {
  Index n = 0, p = 0, q = 0;
  ParametricBlock block;
  VnChoice vn = VnChoice::plain;
  std::shared_ptr<const AalenFit> aalen;
  Vector theta_hat;
  Matrix Gamma, Omega;
  Matrix theta_cov;  // Gamma^{-1} Omega Gamma^{-1} / n
  A2Path A2;
  std::vector<Matrix> V, dQ;  // per interval

  // Running sums at knots for the joint covariance.
  std::vector<Matrix> M_cum;  // q x q
  std::vector<Matrix> C_cum;  // q x m
  std::vector<Matrix> J_cum;  // q x m
  bool used_fallback = false;

  double tau() const { return aalen->tau(); }
  Vector A1(double t) const;
};

PartlyFit fit_partly(const Dataset& ds, std::shared_ptr<const AalenFit> aalen,
                     const ParametricBlock& block, const PartlyOptions& options = {});
PartlyFit fit_partly(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                     const PartlyOptions& options = {});

struct JointCovariance {
  Matrix xi;  // full (p+q) x (p+q), already divided by n
  Matrix xi11, xi21, xi22;
  bool repaired = false;
  bool logged = false;
  double min_eigenvalue = 0.0;
};

JointCovariance joint_covariance(const PartlyFit& fit, double t);

// int F~_22^{-1} ds + J Omega_0^{-1} J^t, divided by n. Valid when V_n is the
// optimal choice and the Aalen fit uses optimal weights.
Matrix xi22_optimal_crosscheck(const PartlyFit& fit, double t);

struct SurvivalRow {
  double t, S, se, lo, hi;
};

std::vector<SurvivalRow> survival_curve(const PartlyFit& fit, const Vector& z,
                                        const std::vector<double>& times);

}  // namespace partly
