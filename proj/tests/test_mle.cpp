#include "doctest.h"
#include "support.hpp"

#include "partly/mle.hpp"

#include <cmath>

using namespace partly;

namespace {

Dataset occurrence_data() {
  // D = 2 events, total exposure R = 6.
  Vector t(3);
  t << 1, 2, 3;
  return make_dataset(t, {1, 1, 0}, Matrix::Ones(3, 1), 1);
}

}  // namespace

TEST_CASE("log-likelihood of a constant hazard") {
  const Dataset ds = occurrence_data();
  const ParametricBlock block({HazardFamily::constant()});
  const double ll = log_likelihood(ds, block, Vector::Constant(1, 1.0 / 3.0));
  CHECK(std::abs(ll - (2.0 * std::log(1.0 / 3.0) - 2.0)) < 1e-14);
  CHECK_THROWS_AS(log_likelihood(ds, block, Vector::Constant(1, 0.0)), DomainError);

  // Each subject twice doubles the log-likelihood.
  Vector t2(6);
  t2 << 1, 2, 3, 1, 2, 3;
  const Dataset twice = make_dataset(t2, {1, 1, 0, 1, 1, 0}, Matrix::Ones(6, 1), 1);
  CHECK(std::abs(log_likelihood(twice, block, Vector::Constant(1, 0.7)) -
                 2.0 * log_likelihood(ds, block, Vector::Constant(1, 0.7))) < 1e-13);
}

TEST_CASE("occurrence/exposure estimate") {
  const Dataset ds = occurrence_data();
  const ParametricBlock block({HazardFamily::constant()});
  const MleFit fit = fit_mle(ds, block, Vector::Constant(1, 1.0));
  CHECK(std::abs(fit.theta_hat(0) - 1.0 / 3.0) < 1e-10);
  CHECK(std::abs(fit.information(0, 0) - 6.0) < 1e-10);
  CHECK(std::abs(fit.covariance(0, 0) - 1.0 / 18.0) < 1e-10);
  CHECK(std::abs(fit.score(0)) / 3.0 < 1e-8);
}

TEST_CASE("score matches the finite-difference gradient") {
  std::mt19937_64 rng(201);
  const Dataset ds = partly::testing::random_dataset(rng, 80, 2, 2);
  const ParametricBlock block({HazardFamily::power(), HazardFamily::linear()});
  Vector th(3);
  th << 0.7, 1.3, 0.9;
  const auto d = likelihood_derivatives(ds, block, th, 1e300);
  for (Index a = 0; a < 3; ++a) {
    const double h = 1e-6 * (1.0 + std::abs(th(a)));
    Vector up = th, dn = th;
    up(a) += h;
    dn(a) -= h;
    const double fd = (log_likelihood(ds, block, up) - log_likelihood(ds, block, dn)) / (2 * h);
    CHECK(std::abs(fd - d.score(a)) <= 1e-5 * std::max(1.0, std::abs(fd)));
    const Vector fdg = (likelihood_derivatives(ds, block, up, 1e300).score -
                        likelihood_derivatives(ds, block, dn, 1e300).score) / (2 * h);
    CHECK((fdg + d.info.col(a)).norm() <= 1e-5 * std::max(1.0, fdg.norm()));
  }
}

TEST_CASE("information is invariant to subject order") {
  std::mt19937_64 rng(203);
  const Dataset ds = partly::testing::random_dataset(rng, 50, 2, 2);
  const ParametricBlock block({HazardFamily::constant(), HazardFamily::linear()});
  Vector th(2);
  th << 1.0, 0.8;
  const Matrix J = mle_information(ds, block, th, 1e300);
  Vector t = ds.times.reverse();
  std::vector<int> st(ds.status.rbegin(), ds.status.rend());
  Matrix z = ds.z.colwise().reverse();
  const Dataset rev = make_dataset(t, st, z, 2);
  CHECK((mle_information(rev, block, th, 1e300) - J).norm() < 1e-12);
}

TEST_CASE("power-family fit at moderate n") {
  std::mt19937_64 rng(207);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index n = 2000;
  Vector t(n);
  std::vector<int> st(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    // A(t) = 0.5 t^1.5.
    const double T = std::pow(-std::log(u(rng)) / 0.5, 1.0 / 1.5);
    const double C = 3.0 * u(rng);
    t(i) = std::min(T, C);
    st[static_cast<std::size_t>(i)] = T <= C;
  }
  const Dataset ds = make_dataset(t, st, Matrix::Ones(n, 1), 1);
  const ParametricBlock block({HazardFamily::power()});
  Vector init(2);
  init << 1.0, 1.0;
  const MleFit fit = fit_mle(ds, block, init);
  CHECK(fit.converged);
  CHECK(std::abs(fit.theta_hat(0) - 0.5) < 4.0 * std::sqrt(fit.covariance(0, 0)));
  CHECK(std::abs(fit.theta_hat(1) - 1.5) < 4.0 * std::sqrt(fit.covariance(1, 1)));
  CHECK(fit.score.norm() / n < 1e-8);
  // J_n and the observed information agree to first order.
  CHECK((fit.information - fit.observed_information).norm() < 0.2 * fit.information.norm());
}
