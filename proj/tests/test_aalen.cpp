#include "doctest.h"
#include "support.hpp"

#include "partly/aalen.hpp"
#include "partly/quadrature.hpp"

#include <Eigen/LU>
#include <sstream>

using namespace partly;
using partly::testing::random_dataset;
using partly::testing::three_subjects;

TEST_CASE("three-subject increments and variance") {
  const Dataset ds = three_subjects();
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));

  // Normal equations written out by hand and solved with a full-pivot LU.
  Matrix G1(2, 2), G2(2, 2);
  G1 << 3, 1, 1, 1;
  G2 << 2, 1, 1, 1;
  Vector e1(2), e2(2);
  e1 << 1, 0;
  e2 << 1, 1;
  const Vector d1 = G1.fullPivLu().solve(e1);
  const Vector d2 = G2.fullPivLu().solve(e2);
  CHECK(std::abs(d1(0) - 0.5) < 1e-15);
  CHECK(std::abs(d1(1) + 0.5) < 1e-15);

  const auto inc = fit.event_increments();
  REQUIRE(inc.size() == 2);
  CHECK((inc[0] - d1).norm() < 1e-12);
  CHECK((inc[1] - d2).norm() < 1e-12);
  CHECK((fit.cumulative(2.0) - (d1 + d2)).norm() < 1e-12);
  CHECK(std::abs(fit.cumulative(2.0)(0) - 0.5) < 1e-12);
  CHECK(std::abs(fit.cumulative(2.0)(1) - 0.5) < 1e-12);

  // Var = n^{-1} G^{-1} dH G^{-1} with G = G1/3, dH = e1 e1^t / 3.
  const Matrix Gi = (G1 / 3.0).fullPivLu().inverse();
  const Matrix v1 = Gi * (e1 * e1.transpose() / 3.0) * Gi / 3.0;
  Matrix expect(2, 2);
  expect << 0.25, -0.25, -0.25, 0.25;
  CHECK((v1 - expect).norm() < 1e-12);
  CHECK((fit.variance_path(1.0) - expect).norm() < 1e-12);
  CHECK(fit.variance_path(0.0).norm() == 0.0);
}

TEST_CASE("intercept-only fit is Nelson-Aalen") {
  std::mt19937_64 rng(17);
  const Dataset base = random_dataset(rng, 60, 1, 0, true);
  const TimeGrid g = build_time_grid(base);
  const AalenFit fit = fit_aalen(base, g);
  double na = 0.0, var = 0.0;
  for (Index k = 1; k <= g.intervals(); ++k) {
    const double u = g.knots[static_cast<std::size_t>(k)];
    double d = 0.0, y = 0.0;
    for (Index i = 0; i < base.n(); ++i) {
      y += base.times(i) >= u;
      d += base.times(i) == u && base.status[static_cast<std::size_t>(i)] == 1;
    }
    na += d / y;
    var += d / (y * y);
    CHECK(std::abs(fit.cumulative(u)(0) - na) < 1e-12);
    CHECK(std::abs(fit.variance_path(u)(0, 0) - var) < 1e-12);
  }
}

TEST_CASE("identical covariate columns fail at the first event") {
  Vector t(3);
  t << 1, 2, 3;
  Matrix z(3, 2);
  z << 1, 1, 2, 2, 3, 3;
  const Dataset ds = make_dataset(t, {1, 1, 0}, z, 0);
  CHECK_THROWS_AS(fit_aalen(ds, build_time_grid(ds)), RankError);
}

TEST_CASE("rank failure late in follow-up truncates the fit") {
  // Past t = 3 only one covariate pattern remains at risk.
  Vector t(5);
  t << 1, 2, 3, 4, 5;
  Matrix z(5, 2);
  z << 1, 0, 1, 1, 1, 1, 1, 0, 1, 0;
  const Dataset ds = make_dataset(t, {1, 1, 1, 1, 1}, z, 0);
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
  CHECK(fit.warning.has_value());
  CHECK(fit.tau() == 3.0);
}

TEST_CASE("common weight factor leaves the increments unchanged") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = random_dataset(rng, 80, 3, 0);
    const TimeGrid g = build_time_grid(ds);
    const AalenFit plain = fit_aalen(ds, g);
    const double c = 0.5 + rep;
    const AalenFit scaled = fit_aalen(ds, g, [c](Index, double s) { return c * (1.0 + s); });
    REQUIRE(plain.increments.size() == scaled.increments.size());
    for (std::size_t k = 0; k < plain.increments.size(); ++k) {
      CHECK((plain.increments[k] - scaled.increments[k]).norm() < 1e-10);
    }
  }
}

TEST_CASE("variance paths are symmetric, PSD and Loewner nondecreasing") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset ds = random_dataset(rng, 100, 3, 0, rep % 2 == 0);
    const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
    for (auto option : {VarianceOption::counting, VarianceOption::risk_set}) {
      const auto path = aalen_variance(ds, fit, option);
      for (std::size_t k = 1; k < path.size(); ++k) {
        const Matrix& v = path.values()[k];
        CHECK((v - v.transpose()).norm() == 0.0);
        if (option == VarianceOption::counting) {
          Eigen::SelfAdjointEigenSolver<Matrix> inc(v - path.values()[k - 1]);
          CHECK(inc.eigenvalues().minCoeff() > -1e-12);
        }
      }
    }
  }
}

TEST_CASE("risk-set variance option for a single covariate") {
  // dH = n^{-1} Y dA, so the variance increment is dA / (n Ybar) = dN / Y^2.
  std::mt19937_64 rng(31);
  const Dataset ds = random_dataset(rng, 40, 1, 0);
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
  const auto a = aalen_variance(ds, fit, VarianceOption::counting);
  const auto b = aalen_variance(ds, fit, VarianceOption::risk_set);
  CHECK((a.values().back() - b.values().back()).norm() < 1e-12);
}

TEST_CASE("kernel smoother") {
  SmoothedAlpha one({0.5}, {Vector::Ones(1)}, 0.1, 10.0);
  CHECK(std::abs(one(0.5)(0) - 7.5) < 1e-12);
  CHECK(one(0.7)(0) == 0.0);
  CHECK(one(0.3)(0) == 0.0);

  // Reflection keeps the mass of a jump near the boundary on [0, tau].
  SmoothedAlpha edge({0.05, 0.95}, {Vector::Ones(1), Vector::Ones(1)}, 0.2, 1.0);
  const double mass = gl7(0.0, 1.0, [&](double s) { return edge(s)(0); }, 400);
  CHECK(std::abs(mass - 2.0) < 1e-6);

  std::mt19937_64 rng(37);
  const Dataset ds = random_dataset(rng, 400, 2, 0);
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
  const auto sm = smooth_alpha(fit, default_bandwidth(fit.tau(), ds.n()));
  const Vector total = gl7(0.0, fit.tau(), [&](double s) -> Vector { return sm(s); }, 2000);
  const Vector A = fit.cumulative(fit.tau());
  for (Index j = 0; j < 2; ++j) CHECK(std::abs(total(j) - A(j)) <= 0.02 * std::abs(A(j)));
}

TEST_CASE("optimal weights") {
  // Intercept only with a constant smoothed hazard gives F = Ybar / theta.
  std::mt19937_64 rng(41);
  const Dataset ds = random_dataset(rng, 200, 1, 0);
  const TimeGrid g = build_time_grid(ds);
  const AalenFit plain = fit_aalen(ds, g);
  const AalenFit opt = fit_aalen_optimal(ds, g);
  // One covariate: the weights cancel in the increments.
  for (Index k = 0; k < g.intervals(); ++k) {
    CHECK(std::abs(plain.increments[static_cast<std::size_t>(k)](0) -
                   opt.increments[static_cast<std::size_t>(k)](0)) < 1e-12);
  }
  for (Index k = 1; k <= g.intervals(); k += 7) {
    const double u = g.knots[static_cast<std::size_t>(k)];
    const double h = (*opt.pilot)(u)(0);
    double y = 0.0;
    for (Index i = 0; i < ds.n(); ++i) y += ds.times(i) >= u;
    CHECK(std::abs(opt.risk.G[static_cast<std::size_t>(k - 1)](0, 0) -
                   y / ds.n() / h) < 1e-12);
  }

  // A negative pilot hazard violates the floor.
  Vector t(4);
  t << 1, 2, 3, 4;
  Matrix z(4, 2);
  z << 1, 0, 1, 1, 1, 0, 1, 1;
  const Dataset bad = make_dataset(t, {1, 0, 1, 1}, z, 0);
  CHECK_THROWS_AS(fit_aalen_optimal(bad, build_time_grid(bad), 0.5), DomainError);
}

TEST_CASE("optimal variance path for a constant hazard") {
  // F~ = Ybar / theta when the smoothed hazard equals theta everywhere.
  std::mt19937_64 rng(43);
  const Dataset ds = random_dataset(rng, 150, 1, 0);
  const TimeGrid g = build_time_grid(ds);
  const double theta = 0.8;
  const AalenFit fit = fit_aalen(ds, g, [theta](Index, double) { return 1.0 / theta; });
  double v = 0.0;
  for (Index k = 1; k <= g.intervals(); ++k) {
    const double u = g.knots[static_cast<std::size_t>(k)];
    const double du = u - g.knots[static_cast<std::size_t>(k - 1)];
    double y = 0.0;
    for (Index i = 0; i < ds.n(); ++i) y += ds.times(i) >= u;
    v += theta * du / (y / ds.n()) / ds.n();
    const Matrix F = fit.risk.G[static_cast<std::size_t>(k - 1)];
    CHECK(std::abs(F(0, 0) - y / ds.n() / theta) < 1e-12);
  }
  double acc = 0.0;
  for (Index k = 1; k <= g.intervals(); ++k) {
    const double du = g.knots[static_cast<std::size_t>(k)] - g.knots[static_cast<std::size_t>(k - 1)];
    acc += du / fit.risk.G[static_cast<std::size_t>(k - 1)](0, 0) / ds.n();
  }
  CHECK(std::abs(acc - v) < 1e-12);
}

TEST_CASE("aalen csv layout") {
  const Dataset ds = three_subjects();
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
  std::istringstream in(aalen_csv(fit, {"z1", "z2"}));
  std::string line;
  std::getline(in, line);
  CHECK(line == "time,z1,z2,se_z1,se_z2");
  const std::vector<std::vector<double>> expect = {
      {0, 0, 0, 0, 0}, {1, 0.5, -0.5, 0.5, 0.5}, {2, 0.5, 0.5, 0.5, std::sqrt(1.25)}};
  for (const auto& row : expect) {
    REQUIRE(std::getline(in, line));
    std::istringstream cells(line);
    std::string cell;
    for (double v : row) {
      REQUIRE(std::getline(cells, cell, ','));
      CHECK(std::abs(std::stod(cell) - v) < 1e-14);
    }
    CHECK(!std::getline(cells, cell, ','));
  }
  CHECK(!std::getline(in, line));
}
