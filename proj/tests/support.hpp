#pragma once

#include "partly/data.hpp"

#include <random>

namespace partly::testing {

// Three subjects: (1, event, (1,0)), (2, event, (1,1)), (3, censored, (1,0)).
inline Dataset three_subjects(Index p = 0) {
  Vector t(3);
  t << 1, 2, 3;
  Matrix z(3, 2);
  z << 1, 0, 1, 1, 1, 0;
  return make_dataset(t, {1, 1, 0}, z, p);
}

// Random right-censored data with an intercept column and r-1 uniform
// covariates; hazards are positive so any fit is well posed.
inline Dataset random_dataset(std::mt19937_64& rng, Index n, Index r, Index p,
                              bool ties = false) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector t(n);
  std::vector<int> status(static_cast<std::size_t>(n));
  Matrix z(n, r);
  for (Index i = 0; i < n; ++i) {
    z(i, 0) = 1.0;
    for (Index j = 1; j < r; ++j) z(i, j) = unif(rng);
    const double h = 0.5 + z.row(i).sum();
    double ti = -std::log(unif(rng)) / h;
    const double c = 2.0 * unif(rng);
    if (ties) ti = std::ceil(ti * 20.0) / 20.0;
    t(i) = std::max(std::min(ti, c), 1e-6);
    status[static_cast<std::size_t>(i)] = ti <= c ? 1 : 0;
  }
  return make_dataset(t, status, z, p);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace partly::testing
