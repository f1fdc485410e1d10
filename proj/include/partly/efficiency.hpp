#pragma once

#include "partly/aalen.hpp"
#include "partly/family.hpp"

#include <functional>
#include <vector>

namespace partly {

// i.i.d. gamma(c, gamma) covariates, common constant hazard alpha and
// shifted Pareto censoring rho(s) = (1 + alpha s / gamma)^{-k}.
struct GammaSetup {
  double c = 1.0, gamma = 1.0, alpha = 1.0;
  Index r = 2, p = 1, q = 1;
  double k = 0.0;

  void check() const;
  double rho(double s) const;
};

// a I_r + b e_r e_r^t, kept as its two scalars.
struct Compound {
  Index r = 1;
  double a = 1.0, b = 0.0;

  Compound inverse() const;
  double diagonal() const { return a + b; }
  Matrix dense() const;
};

struct GammaMoments {
  double f = 0.0, g = 0.0, h = 0.0;
};

// F0 = rho f M, G0 = rho g M, dH0 = rho h M ds with M = c^{-1} I_r + e_r e_r^t.
GammaMoments gamma_moments(const GammaSetup& gs, double s);
Compound gamma_shape(const GammaSetup& gs);

double are_weights(const GammaSetup& gs);
double ineff_parametric(const GammaSetup& gs, double u);
// `printed` swaps the 1 + cr and 1 + cq denominators for 1 - cr and 1 - cq.
double ineff_backfit(const GammaSetup& gs, double u, bool printed = false);

// F(s), r x r, ordered parametric columns first.
using FPath = std::function<Matrix(double)>;

FPath gamma_f_path(const GammaSetup& gs);
// F~_n from an optimally weighted Aalen fit; constant between knots.
FPath empirical_f_path(const AalenFit& fit);

struct SieveSpec {
  Index K = 10;
  double tau = 1.0;
  ParametricBlock block;
  Vector theta;
  FPath F;
  int threads = 1;
};

struct SieveInformation {
  Matrix omega11;                // m x m
  Matrix omega12;                // m x qK, window l in columns l q .. l q + q - 1
  std::vector<Matrix> omega22;   // K diagonal q x q blocks
  Matrix omega11_inv;            // (Omega_11 - Omega_12 Omega_22^{-1} Omega_21)^{-1}
};

SieveInformation sieve_information(const SieveSpec& spec);

// Inverse of int (alpha*)^t (F11 - F12 F22^{-1} F21) alpha* ds over [0, tau],
// composite 7-point rule with `panels` panels.
Matrix sieve_limit(const SieveSpec& spec, int panels = 2000);

}  // namespace partly
