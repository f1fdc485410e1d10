#include "partly/partly_fit.hpp"
#include "partly/format.hpp"
#include "partly/linalg.hpp"
#include "partly/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace partly {

namespace {

double knot(const TimeGrid& g, Index k) { return g.knots[static_cast<std::size_t>(k)]; }

}  // namespace

StepAProblem::StepAProblem(const Dataset& ds, const AalenFit& aalen,
                           const ParametricBlock& block, VnChoice vn)
    : aalen_(aalen), block_(block) {
  const Index p = ds.p;
  if (block.p() != p) {
    throw InputError("parametric block has " + std::to_string(block.p()) +
                     " components but the dataset has p = " + std::to_string(p));
  }
  if (aalen.r() != ds.r()) throw InputError("Aalen fit does not match the dataset");
  const Index K = aalen.grid.intervals();
  V_.reserve(static_cast<std::size_t>(K));
  if (vn == VnChoice::optimal) {
    if (aalen.scheme != WeightScheme::optimal || !aalen.pilot) {
      throw InputError("optimal V_n requires a smoothed pilot; fit the Aalen model with "
                       "optimal weights first");
    }
    for (Index k = 1; k <= K; ++k) {
      V_.push_back(linalg::schur_leading(aalen.risk.G[static_cast<std::size_t>(k - 1)], p,
                                         knot(aalen.grid, k)));
    }
  } else if (aalen.scheme == WeightScheme::plain) {
    for (Index k = 1; k <= K; ++k) {
      V_.push_back(aalen.risk.G[static_cast<std::size_t>(k - 1)].topLeftCorner(p, p));
    }
  } else {
    const RiskTable plain = build_risk_table(ds, aalen.grid, {});
    for (Index k = 1; k <= K; ++k) {
      V_.push_back(plain.G[static_cast<std::size_t>(k - 1)].topLeftCorner(p, p));
    }
  }
  dQ_.assign(static_cast<std::size_t>(K), Matrix::Zero(p, p));
  for (Index k = 1; k <= K; ++k) {
    const auto slot = static_cast<std::size_t>(k - 1);
    if (aalen.risk.events[slot].empty()) continue;
    const Matrix& gi = aalen.G_inv[slot];
    dQ_[slot] = linalg::symmetrize(gi * aalen.risk.dH[slot] * gi).topLeftCorner(p, p);
    event_intervals_.push_back(k);
  }
}

double StepAProblem::criterion(const Vector& theta) const {
  block_.check(theta);
  const auto& g = aalen_.grid;
  const Index p = block_.p();
  double c = 0.0;
  for (Index k = 1; k <= g.intervals(); ++k) {
    const Matrix& V = V_[static_cast<std::size_t>(k - 1)];
    gl7_points(knot(g, k - 1), knot(g, k), [&](double s, double w) {
      const Vector a = block_.alpha(s, theta);
      c += w * a.dot(V * a);
    });
  }
  for (Index k : event_intervals_) {
    const auto slot = static_cast<std::size_t>(k - 1);
    const Vector a = block_.alpha(knot(g, k), theta);
    c -= 2.0 * a.dot(V_[slot] * aalen_.increments[slot].head(p));
  }
  return c;
}

Vector StepAProblem::estimating_function(const Vector& theta) const {
  block_.check(theta);
  const auto& g = aalen_.grid;
  const Index p = block_.p();
  Vector S = Vector::Zero(block_.m());
  for (Index k = 1; k <= g.intervals(); ++k) {
    const Matrix& V = V_[static_cast<std::size_t>(k - 1)];
    gl7_points(knot(g, k - 1), knot(g, k), [&](double s, double w) {
      const auto v = block_.evaluate(s, theta);
      S.noalias() -= w * v.grad.transpose() * (V * v.alpha);
    });
  }
  for (Index k : event_intervals_) {
    const auto slot = static_cast<std::size_t>(k - 1);
    const auto v = block_.evaluate(knot(g, k), theta);
    S.noalias() += v.grad.transpose() * (V_[slot] * aalen_.increments[slot].head(p));
  }
  return S;
}

Matrix StepAProblem::gamma(const Vector& theta) const {
  block_.check(theta);
  const auto& g = aalen_.grid;
  Matrix G = Matrix::Zero(block_.m(), block_.m());
  for (Index k = 1; k <= g.intervals(); ++k) {
    const Matrix& V = V_[static_cast<std::size_t>(k - 1)];
    gl7_points(knot(g, k - 1), knot(g, k), [&](double s, double w) {
      const auto v = block_.evaluate(s, theta);
      G.noalias() += w * v.grad.transpose() * V * v.grad;
    });
  }
  return linalg::symmetrize(G);
}

Matrix StepAProblem::residual_curvature(const Vector& theta) const {
  block_.check(theta);
  const auto& g = aalen_.grid;
  const Index m = block_.m();
  Matrix E = Matrix::Zero(m, m);
  // sum_j Hess alpha_j(s) times the j-th entry of a weighted residual.
  auto add = [&](double s, const Vector& resid, double w) {
    for (Index j = 0; j < block_.p(); ++j) {
      const auto& f = block_.component(j);
      const Index o = block_.offset(j), d = f.size();
      E.block(o, o, d, d) += (w * resid(j)) * f.hessian(s, block_.slice(theta, j));
    }
  };
  for (Index k = 1; k <= g.intervals(); ++k) {
    const Matrix& V = V_[static_cast<std::size_t>(k - 1)];
    gl7_points(knot(g, k - 1), knot(g, k), [&](double s, double w) {
      add(s, V * block_.alpha(s, theta), -w);
    });
  }
  for (Index k : event_intervals_) {
    const auto slot = static_cast<std::size_t>(k - 1);
    add(knot(g, k), V_[slot] * aalen_.increments[slot].head(block_.p()), 1.0);
  }
  return linalg::symmetrize(E);
}

Matrix StepAProblem::omega(const Vector& theta) const {
  const auto& g = aalen_.grid;
  Matrix O = Matrix::Zero(block_.m(), block_.m());
  for (Index k : event_intervals_) {
    const auto slot = static_cast<std::size_t>(k - 1);
    const auto v = block_.evaluate(knot(g, k), theta);
    const Matrix va = V_[slot] * v.grad;
    O.noalias() += va.transpose() * dQ_[slot] * va;
  }
  return linalg::symmetrize(O);
}

Vector StepAProblem::default_init() const {
  const auto& g = aalen_.grid;
  const double tau = g.tau;
  const Vector A_tau = aalen_.cumulative(tau);
  Vector theta(block_.m());
  for (Index j = 0; j < block_.p(); ++j) {
    const auto& f = block_.component(j);
    const Index o = block_.offset(j);
    switch (f.kind()) {
      case FamilyKind::constant: {
        double num = 0.0, den = 0.0;
        for (Index k = 1; k <= g.intervals(); ++k) {
          const auto slot = static_cast<std::size_t>(k - 1);
          const double v = V_[slot](j, j);
          den += v * (knot(g, k) - knot(g, k - 1));
          num += v * aalen_.increments[slot](j);
        }
        theta(o) = den > 0.0 ? num / den : A_tau(j) / tau;
        break;
      }
      case FamilyKind::linear:
        theta(o) = 2.0 * A_tau(j) / (tau * tau);
        break;
      case FamilyKind::power: {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (Index k = 1; k <= g.intervals(); ++k) {
          if (!g.event[static_cast<std::size_t>(k)]) continue;
          const double a = aalen_.cumulative(knot(g, k))(j);
          if (a <= 0.0) continue;
          const double x = std::log(knot(g, k)), y = std::log(a);
          sx += x; sy += y; sxx += x * x; sxy += x * y;
          ++cnt;
        }
        double slope = 1.0, icpt = std::log(std::max(A_tau(j), 1e-3) / tau);
        const double det = cnt * sxx - sx * sx;
        if (cnt >= 2 && det > 0.0) {
          slope = std::clamp((cnt * sxy - sx * sy) / det, 0.1, 10.0);
          icpt = (sy - slope * sx) / cnt;
        }
        theta(o) = std::exp(icpt);
        theta(o + 1) = slope;
        break;
      }
      case FamilyKind::custom:
        throw InputError("custom family '" + f.name() + "' needs an explicit initial value");
    }
  }
  return theta;
}

double criterion(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                 const Vector& theta, VnChoice vn) {
  return StepAProblem(ds, aalen, block, vn).criterion(theta);
}

namespace {

// Value of C_n, or +inf outside the admissible region.
double safe_criterion(const StepAProblem& prob, const Vector& theta) {
  try {
    const double c = prob.criterion(theta);
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

StepAResult fit_step_a(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                       const StepAOptions& options) {
  return solve_step_a(StepAProblem(ds, aalen, block, options.vn), options);
}

StepAResult solve_step_a(const StepAProblem& prob, const StepAOptions& options) {
  const ParametricBlock& block = prob.block();
  const auto positive = block.positive();
  const Index m = block.m();
  Vector theta = options.theta_init ? *options.theta_init : prob.default_init();
  block.check(theta);

  StepAResult res;
  Vector phi = to_unconstrained(theta, positive);
  double c_cur = prob.criterion(theta);
  Vector S = prob.estimating_function(theta);
  const double target = 1e-3 * options.tolerance;

  for (int iter = 0; iter < options.max_iterations && S.norm() >= target; ++iter) {
    res.iterations = iter + 1;
    const Vector d = unconstrained_jacobian(theta, positive);
    Vector step;
    const Matrix gam = prob.gamma(theta);
    // Newton with the residual curvature when it is positive definite,
    // otherwise Gauss-Newton.
    auto hinv = linalg::guarded_inverse(linalg::symmetrize(gam - prob.residual_curvature(theta)));
    if (!hinv) hinv = linalg::guarded_inverse(gam);
    if (hinv) step = (*hinv * S).cwiseQuotient(d);

    bool accepted = false;
    auto try_step = [&](const Vector& dir) {
      double lambda = 1.0;
      for (int half = 0; half < 40; ++half, lambda *= 0.5) {
        const Vector phi_new = phi + lambda * dir;
        const Vector theta_new = from_unconstrained(phi_new, positive);
        const double c_new = safe_criterion(prob, theta_new);
        if (!std::isfinite(c_new)) continue;
        const Vector S_new = prob.estimating_function(theta_new);
        // Decrease in C_n, or a smaller |S_n| at round-off level changes of C_n.
        const double slack = 1e-10 * (std::abs(c_cur) + 1.0);
        if (c_new < c_cur || (c_new <= c_cur + slack && S_new.norm() < S.norm())) {
          phi = phi_new;
          theta = theta_new;
          c_cur = c_new;
          S = S_new;
          return true;
        }
      }
      return false;
    };
    if (step.size() == m) accepted = try_step(step);
    if (!accepted) {
      // Newton on C_n with a finite-difference Hessian of the phi-gradient.
      res.used_fallback = true;
      auto grad_phi = [&](const Vector& ph) -> Vector {
        const Vector th = from_unconstrained(ph, positive);
        return -2.0 * unconstrained_jacobian(th, positive).cwiseProduct(
                          prob.estimating_function(th));
      };
      Matrix H(m, m);
      for (Index a = 0; a < m; ++a) {
        const double h = 1e-6 * (1.0 + std::abs(phi(a)));
        Vector up = phi, dn = phi;
        up(a) += h;
        dn(a) -= h;
        H.col(a) = (grad_phi(up) - grad_phi(dn)) / (2.0 * h);
      }
      const Vector gphi = grad_phi(phi);
      auto hinv = linalg::guarded_inverse(linalg::symmetrize(H), 1e14);
      const Vector dir = hinv ? Vector(-(*hinv * gphi)) : Vector(-gphi);
      accepted = try_step(dir);
    }
    if (!accepted) break;
  }
  if (!(S.norm() < options.tolerance)) {
    std::ostringstream msg;
    msg << "step (a) did not converge; |S_n| = " << S.norm();
    throw ConvergenceError(msg.str());
  }
  res.theta_hat = theta;
  res.S = S;
  res.criterion = c_cur;
  res.Gamma = prob.gamma(theta);
  res.Omega = prob.omega(theta);
  return res;
}

A2Path::A2Path(std::vector<double> knots, std::vector<Vector> values, std::vector<Matrix> drift,
               ParametricBlock block, Vector theta)
    : knots_(std::move(knots)),
      values_(std::move(values)),
      drift_(std::move(drift)),
      block_(std::move(block)),
      theta_(std::move(theta)) {}

Vector A2Path::operator()(double t) const {
  if (t <= 0.0) return Vector::Zero(values_.front().size());
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.end()) return values_.back();
  const auto k = static_cast<std::size_t>(it - knots_.begin());
  if (*it == t || block_.p() == 0) return *it == t ? values_[k] : values_[k - 1];
  const Vector a = block_.integrate(knots_[k - 1], t, theta_).alpha;
  return values_[k - 1] - drift_[k - 1] * a;
}

namespace {

A2Path backfit_from_table(const Dataset& ds, const TimeGrid& grid, const RiskTable& rt,
                          const Vector& theta, const ParametricBlock& block) {
  const Index p = ds.p, q = ds.q();
  if (block.p() != p) throw InputError("parametric block does not match dataset p");
  if (q == 0) throw InputError("backfitting needs at least one nonparametric column");
  const Index K = grid.intervals();
  std::vector<Vector> values{Vector::Zero(q)};
  std::vector<Matrix> drift;
  for (Index k = 1; k <= K; ++k) {
    const auto slot = static_cast<std::size_t>(k - 1);
    const Matrix& G = rt.G[slot];
    const double u = grid.knots[static_cast<std::size_t>(k)];
    const Matrix inv22 = linalg::inverse_or_throw(G.bottomRightCorner(q, q), u, "G_22");
    Matrix D = inv22 * G.bottomLeftCorner(q, p);
    Vector next = values.back();
    if (p > 0) next -= D * block.integrate(grid.knots[slot], u, theta).alpha;
    if (!rt.events[slot].empty()) next += inv22 * rt.dE[slot].tail(q);
    values.push_back(std::move(next));
    drift.push_back(std::move(D));
  }
  return A2Path(grid.knots, std::move(values), std::move(drift), block, theta);
}

}  // namespace

A2Path backfit_step_b(const Dataset& ds, const AalenFit& aalen, const Vector& theta,
                      const ParametricBlock& block) {
  block.check(theta);
  return backfit_from_table(ds, aalen.grid, aalen.risk, theta, block);
}

A2Path backfit_step_b(const Dataset& ds, const TimeGrid& grid, const Vector& theta,
                      const ParametricBlock& block, const WeightFn& weights) {
  block.check(theta);
  return backfit_from_table(ds, grid, build_risk_table(ds, grid, weights), theta, block);
}

Vector PartlyFit::A1(double t) const { return block.integrate(0.0, t, theta_hat).alpha; }

PartlyFit fit_partly(const Dataset& ds, const AalenFit& aalen, const ParametricBlock& block,
                     const PartlyOptions& options) {
  return fit_partly(ds, std::make_shared<const AalenFit>(aalen), block, options);
}

PartlyFit fit_partly(const Dataset& ds, std::shared_ptr<const AalenFit> aalen,
                     const ParametricBlock& block, const PartlyOptions& options) {
  PartlyFit fit;
  fit.n = ds.n();
  fit.p = ds.p;
  fit.q = ds.q();
  fit.block = block;
  fit.vn = options.step_a.vn;
  fit.aalen = aalen;

  const StepAProblem prob(ds, *aalen, block, options.step_a.vn);
  if (ds.p > 0) {
    const StepAResult a = solve_step_a(prob, options.step_a);
    fit.used_fallback = a.used_fallback;
    fit.theta_hat = a.theta_hat;
    fit.Gamma = a.Gamma;
    fit.Omega = a.Omega;
  } else {
    fit.theta_hat = Vector(0);
    fit.Gamma = fit.Omega = Matrix(0, 0);
  }
  const Matrix ginv = linalg::inverse_or_throw(fit.Gamma, aalen->tau(), "Gamma");
  fit.theta_cov = linalg::symmetrize(ginv * fit.Omega * ginv) / static_cast<double>(fit.n);
  fit.V = prob.V();
  fit.dQ = prob.dQ();

  const Index p = fit.p, q = fit.q, m = block.m();
  const auto& grid = aalen->grid;
  const Index K = grid.intervals();
  fit.M_cum.assign(1, Matrix::Zero(q, q));
  fit.C_cum.assign(1, Matrix::Zero(q, m));
  fit.J_cum.assign(1, Matrix::Zero(q, m));
  if (q > 0) {
    fit.A2 = backfit_step_b(ds, *aalen, fit.theta_hat, block);
    for (Index k = 1; k <= K; ++k) {
      const auto slot = static_cast<std::size_t>(k - 1);
      const double u = grid.knots[static_cast<std::size_t>(k)];
      const Matrix& G = aalen->risk.G[slot];
      const Matrix inv22 = linalg::inverse_or_throw(G.bottomRightCorner(q, q), u, "G_22");
      Matrix M = fit.M_cum.back();
      Matrix C = fit.C_cum.back();
      if (!aalen->risk.events[slot].empty()) {
        const Matrix& dH = aalen->risk.dH[slot];
        M += inv22 * dH.bottomRightCorner(q, q) * inv22;
        const Matrix cross = (dH * aalen->G_inv[slot]).bottomLeftCorner(q, p);
        const auto v = block.evaluate(u, fit.theta_hat);
        C += inv22 * cross * fit.V[slot] * v.grad;
      }
      const Matrix dA = block.integrate(grid.knots[slot], u, fit.theta_hat).grad;
      fit.M_cum.push_back(linalg::symmetrize(M));
      fit.C_cum.push_back(std::move(C));
      fit.J_cum.push_back(fit.J_cum.back() + fit.A2.drift()[slot] * dA);
    }
  }
  return fit;
}

JointCovariance joint_covariance(const PartlyFit& fit, double t) {
  const double tau = fit.tau();
  if (t < 0.0 || t > tau * (1.0 + 1e-12)) {
    throw InputError("covariance requested at t = " + format_double(t) + " outside [0, tau]");
  }
  t = std::min(t, tau);
  const Index p = fit.p, q = fit.q;
  const double n = static_cast<double>(fit.n);
  const Matrix ginv = linalg::inverse_or_throw(fit.Gamma, tau, "Gamma");
  const Matrix sigma = fit.theta_cov * n;
  const Matrix Astar = fit.block.integrate(0.0, t, fit.theta_hat).grad;

  JointCovariance out;
  out.xi11 = Astar * sigma * Astar.transpose();
  out.xi21 = Matrix::Zero(q, p);
  out.xi22 = Matrix::Zero(q, q);
  if (q > 0 && t > 0.0) {
    const auto& knots = fit.aalen->grid.knots;
    const auto it = std::lower_bound(knots.begin(), knots.end(), t);
    const auto k = static_cast<std::size_t>(it - knots.begin());
    Matrix M, C, J;
    if (*it == t) {
      M = fit.M_cum[k];
      C = fit.C_cum[k];
      J = fit.J_cum[k];
    } else {
      M = fit.M_cum[k - 1];
      C = fit.C_cum[k - 1];
      J = fit.J_cum[k - 1] +
          fit.A2.drift()[k - 1] * fit.block.integrate(knots[k - 1], t, fit.theta_hat).grad;
    }
    const Matrix cgj = C * ginv * J.transpose();
    out.xi22 = M + J * sigma * J.transpose() - (cgj + cgj.transpose());
    out.xi21 = C * ginv * Astar.transpose() - J * sigma * Astar.transpose();
  }
  Matrix full(p + q, p + q);
  full.topLeftCorner(p, p) = out.xi11;
  full.bottomLeftCorner(q, p) = out.xi21;
  full.topRightCorner(p, q) = out.xi21.transpose();
  full.bottomRightCorner(q, q) = out.xi22;
  const auto rep = linalg::repair_psd(full / n);
  out.xi = rep.matrix;
  out.xi11 = out.xi.topLeftCorner(p, p);
  out.xi21 = out.xi.bottomLeftCorner(q, p);
  out.xi22 = out.xi.bottomRightCorner(q, q);
  out.repaired = rep.clipped;
  out.logged = rep.logged;
  out.min_eigenvalue = rep.min_eigenvalue;
  return out;
}

Matrix xi22_optimal_crosscheck(const PartlyFit& fit, double t) {
  const Index q = fit.q;
  const auto& grid = fit.aalen->grid;
  Matrix acc = Matrix::Zero(q, q);
  for (Index k = 1; k <= grid.intervals(); ++k) {
    const double lo = grid.knots[static_cast<std::size_t>(k - 1)];
    if (lo >= t) break;
    const double hi = std::min(t, grid.knots[static_cast<std::size_t>(k)]);
    const Matrix& F = fit.aalen->risk.G[static_cast<std::size_t>(k - 1)];
    acc += linalg::inverse_or_throw(F.bottomRightCorner(q, q), hi, "F_22") * (hi - lo);
  }
  const auto it = std::lower_bound(grid.knots.begin(), grid.knots.end(), t);
  const auto k = static_cast<std::size_t>(it - grid.knots.begin());
  Matrix J = (it != grid.knots.end() && *it == t)
                 ? fit.J_cum[k]
                 : Matrix(fit.J_cum[k - 1] + fit.A2.drift()[k - 1] *
                                                 fit.block.integrate(grid.knots[k - 1], t,
                                                                     fit.theta_hat).grad);
  const Matrix oinv = linalg::inverse_or_throw(fit.Gamma, t, "Omega_0");
  return (acc + J * oinv * J.transpose()) / static_cast<double>(fit.n);
}

std::vector<SurvivalRow> survival_curve(const PartlyFit& fit, const Vector& z,
                                        const std::vector<double>& times) {
  if (z.size() != fit.p + fit.q) {
    throw InputError("covariate vector has length " + std::to_string(z.size()) + ", expected " +
                     std::to_string(fit.p + fit.q));
  }
  std::vector<SurvivalRow> rows;
  for (double t : times) {
    double H = z.head(fit.p).dot(fit.A1(t));
    if (fit.q > 0) H += z.tail(fit.q).dot(fit.A2(t));
    const double S = std::exp(-H);
    const Matrix xi = joint_covariance(fit, t).xi;
    const double se = S * std::sqrt(std::max(0.0, z.dot(xi * z)));
    rows.push_back({t, S, se, std::clamp(S - 1.96 * se, 0.0, 1.0),
                    std::clamp(S + 1.96 * se, 0.0, 1.0)});
  }
  return rows;
}

}  // namespace partly
