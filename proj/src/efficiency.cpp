#include "partly/efficiency.hpp"
#include "partly/linalg.hpp"
#include "partly/parallel.hpp"
#include "partly/quadrature.hpp"

#include <cmath>

namespace partly {

void GammaSetup::check() const {
  if (!(c > 0.0) || !(gamma > 0.0) || !(alpha > 0.0)) {
    throw InputError("gamma setup needs c, gamma, alpha > 0");
  }
  if (!(k >= 0.0)) throw InputError("Pareto exponent k must be nonnegative");
  if (r < 1 || p < 0 || q < 0 || p + q != r) throw InputError("gamma setup needs r = p + q >= 1");
}

double GammaSetup::rho(double s) const { return std::pow(1.0 + alpha * s / gamma, -k); }

Compound Compound::inverse() const {
  if (a == 0.0 || a + static_cast<double>(r) * b == 0.0) {
    throw RankError("compound matrix is singular", 0.0);
  }
  return {r, 1.0 / a, -b / (a * (a + static_cast<double>(r) * b))};
}

Matrix Compound::dense() const {
  return a * Matrix::Identity(r, r) + b * Matrix::Ones(r, r);
}

GammaMoments gamma_moments(const GammaSetup& gs, double s) {
  gs.check();
  if (!(s >= 0.0)) throw InputError("s must be nonnegative");
  const double cr = gs.c * static_cast<double>(gs.r);
  const double base = gs.gamma + gs.alpha * s;
  // c^2 gamma^{cr} / base^e, computed on the log scale.
  auto term = [&](double e) {
    return std::exp(2.0 * std::log(gs.c) + cr * std::log(gs.gamma) - e * std::log(base));
  };
  GammaMoments m;
  m.g = term(cr + 2.0);
  m.f = term(cr + 1.0) / ((cr + 1.0) * gs.alpha);
  m.h = term(cr + 3.0) * (cr + 2.0) * gs.alpha;
  return m;
}

Compound gamma_shape(const GammaSetup& gs) {
  gs.check();
  return {gs.r, 1.0 / gs.c, 1.0};
}

double are_weights(const GammaSetup& gs) {
  gs.check();
  const double cr = gs.c * static_cast<double>(gs.r);
  return (cr + 2.0) / (cr + 1.0);
}

namespace {

void check_u(double u) {
  if (!(u > 0.0) || !std::isfinite(u)) throw InputError("u must be positive");
}

// (1 + u)^e - 1; expm1 keeps relative accuracy for small u.
double grow(double u, double e) {
  return u < 1e-3 ? std::expm1(e * std::log1p(u)) : std::pow(1.0 + u, e) - 1.0;
}

}  // namespace

double ineff_parametric(const GammaSetup& gs, double u) {
  gs.check();
  check_u(u);
  const double e = gs.c * static_cast<double>(gs.r) + gs.k;
  return grow(u, e + 2.0) / (e * (e + 2.0) * u * u);
}

double ineff_backfit(const GammaSetup& gs, double u, bool printed) {
  gs.check();
  check_u(u);
  if (gs.q < 1) throw InputError("backfit ratio needs q >= 1");
  const double c = gs.c;
  const double r = static_cast<double>(gs.r), p = static_cast<double>(gs.p),
               q = static_cast<double>(gs.q);
  const double cr = c * r, cq = c * q;
  const double sign = printed ? -1.0 : 1.0;
  const double v = grow(u, cr + gs.k + 2.0);
  const double kappa = (cr + gs.k + 2.0) * p * (cr + gs.k) / ((cq + 1.0) * (cr + 1.0));
  const double num = (1.0 + c * (r - 1.0)) / (1.0 + sign * cr) * v;
  const double den = (1.0 + c * (q - 1.0)) / (1.0 + sign * cq) * v + c * c * kappa * u * u;
  return num / den;
}

FPath gamma_f_path(const GammaSetup& gs) {
  gs.check();
  const Matrix M = gamma_shape(gs).dense();
  return [gs, M](double s) { return Matrix(gs.rho(s) * gamma_moments(gs, s).f * M); };
}

FPath empirical_f_path(const AalenFit& fit) {
  if (fit.scheme != WeightScheme::optimal) {
    throw InputError("empirical F path needs an optimally weighted Aalen fit");
  }
  auto G = std::make_shared<const std::vector<Matrix>>(fit.risk.G);
  const TimeGrid grid = fit.grid;
  return [G, grid](double s) {
    if (s < 0.0 || s > grid.tau) throw InputError("F path evaluated outside [0, tau]");
    const Index k = std::max<Index>(1, grid.interval_of(s));
    return (*G)[static_cast<std::size_t>(k - 1)];
  };
}

namespace {

void check_spec(const SieveSpec& spec) {
  if (spec.K < 1) throw InputError("sieve needs K >= 1");
  if (!(spec.tau > 0.0) || !std::isfinite(spec.tau)) throw InputError("sieve needs a finite tau > 0");
  if (!spec.F) throw InputError("sieve needs an F path");
  if (spec.block.p() < 1) throw InputError("sieve needs a parametric block");
  spec.block.check(spec.theta);
}

struct Window {
  Matrix a11;  // int (alpha*)^t F11 alpha* over the window
  Matrix b;    // int (alpha*)^t F12 over the window, m x q
  Matrix d;    // int F22 over the window
};

Window integrate_window(const SieveSpec& spec, double lo, double hi, Index q) {
  const Index p = spec.block.p(), m = spec.block.m();
  Window w{Matrix::Zero(m, m), Matrix::Zero(m, q), Matrix::Zero(q, q)};
  gl7_points(lo, hi, [&](double s, double wt) {
    const Matrix F = spec.F(s);
    const Matrix grad = spec.block.evaluate(s, spec.theta).grad;  // p x m
    w.a11 += wt * grad.transpose() * F.topLeftCorner(p, p) * grad;
    w.b += wt * grad.transpose() * F.topRightCorner(p, q);
    w.d += wt * F.bottomRightCorner(q, q);
  });
  return w;
}

}  // namespace

SieveInformation sieve_information(const SieveSpec& spec) {
  check_spec(spec);
  const Index p = spec.block.p(), m = spec.block.m();
  const Index r = spec.F(0.0).rows();
  const Index q = r - p;
  if (q < 1) throw InputError("sieve needs at least one nonparametric column");
  const Index K = spec.K;
  std::vector<Window> windows(static_cast<std::size_t>(K));
  parallel_for(K, spec.threads, [&](Index l) {
    const double lo = spec.tau * static_cast<double>(l) / static_cast<double>(K);
    const double hi = spec.tau * static_cast<double>(l + 1) / static_cast<double>(K);
    windows[static_cast<std::size_t>(l)] = integrate_window(spec, lo, hi, q);
  });
  SieveInformation out;
  out.omega11 = Matrix::Zero(m, m);
  out.omega12 = Matrix::Zero(m, q * K);
  Matrix schur = Matrix::Zero(m, m);
  for (Index l = 0; l < K; ++l) {
    const Window& w = windows[static_cast<std::size_t>(l)];
    const double at = spec.tau * static_cast<double>(l) / static_cast<double>(K);
    const Matrix dinv = linalg::inverse_or_throw(linalg::symmetrize(w.d), at,
                                                 "sieve block Omega_22 for window " +
                                                     std::to_string(l + 1));
    out.omega11 += w.a11;
    out.omega12.middleCols(l * q, q) = w.b;
    out.omega22.push_back(w.d);
    schur += w.b * dinv * w.b.transpose();
  }
  out.omega11 = linalg::symmetrize(out.omega11);
  out.omega11_inv = linalg::inverse_or_throw(linalg::symmetrize(out.omega11 - schur), 0.0,
                                             "sieve Schur complement");
  return out;
}

Matrix sieve_limit(const SieveSpec& spec, int panels) {
  check_spec(spec);
  if (panels < 1) throw InputError("panels must be positive");
  const Index p = spec.block.p();
  const Matrix info = gl7(
      0.0, spec.tau,
      [&](double s) {
        const Matrix F = spec.F(s);
        const Matrix grad = spec.block.evaluate(s, spec.theta).grad;
        const Matrix S = linalg::schur_leading(F, p, s);
        return Matrix(grad.transpose() * S * grad);
      },
      panels);
  return linalg::inverse_or_throw(linalg::symmetrize(info), 0.0, "sieve limit information");
}

}  // namespace partly
