#include "partly/mle.hpp"
#include "partly/format.hpp"
#include "partly/linalg.hpp"
#include "partly/quadrature.hpp"

#include <cmath>
#include <sstream>

namespace partly {

namespace {

void require_full_block(const Dataset& ds, const ParametricBlock& block) {
  if (block.p() != ds.r()) {
    throw InputError("maximum likelihood needs a parametric family for every covariate (" +
                     std::to_string(block.p()) + " given, " + std::to_string(ds.r()) +
                     " columns)");
  }
}

struct Exposure {
  double exit;
  bool event;
};

Exposure exposure(const Dataset& ds, Index i, double tau) {
  const double t = ds.times(i);
  return {std::min(t, tau), ds.status[static_cast<std::size_t>(i)] == 1 && t <= tau};
}

double event_hazard(const Dataset& ds, Index i, double s, const Vector& alpha) {
  const double h = ds.z.row(i).dot(alpha);
  if (!(h > 0.0)) {
    std::ostringstream msg;
    msg << "nonpositive fitted hazard " << h << " at event time " << format_double(s)
        << " of subject " << (i + 1);
    throw DomainError(msg.str());
  }
  return h;
}

// sum_j c_j * d^2 alpha_j / d theta^2 laid out in the m x m parameter space.
Matrix weighted_hessian(const ParametricBlock& block, const Vector& theta, const Vector& c,
                        double t0, double t1, bool cumulative) {
  Matrix out = Matrix::Zero(block.m(), block.m());
  for (Index j = 0; j < block.p(); ++j) {
    if (c(j) == 0.0) continue;
    const auto& f = block.component(j);
    const Vector th = block.slice(theta, j);
    const Matrix h = cumulative ? f.cumulative_hessian(t0, t1, th) : f.hessian(t1, th);
    out.block(block.offset(j), block.offset(j), th.size(), th.size()) += c(j) * h;
  }
  return out;
}

}  // namespace

double log_likelihood(const Dataset& ds, const ParametricBlock& block, const Vector& theta,
                      double tau) {
  require_full_block(ds, block);
  block.check(theta);
  double ll = 0.0;
  for (Index i = 0; i < ds.n(); ++i) {
    const auto ex = exposure(ds, i, tau);
    if (ex.event) ll += std::log(event_hazard(ds, i, ex.exit, block.alpha(ex.exit, theta)));
    const auto cum = block.integrate(0.0, ex.exit, theta);
    ll -= ds.z.row(i).dot(cum.alpha);
  }
  return ll;
}

ScoreInfo likelihood_derivatives(const Dataset& ds, const ParametricBlock& block,
                                 const Vector& theta, double tau) {
  require_full_block(ds, block);
  block.check(theta);
  const Index m = block.m();
  ScoreInfo out{0.0, Vector::Zero(m), Matrix::Zero(m, m)};
  for (Index i = 0; i < ds.n(); ++i) {
    const auto ex = exposure(ds, i, tau);
    const Vector zi = ds.z.row(i).transpose();
    if (ex.event) {
      const auto v = block.evaluate(ex.exit, theta);
      const double h = event_hazard(ds, i, ex.exit, v.alpha);
      const Vector g = v.grad.transpose() * zi;
      out.value += std::log(h);
      out.score += g / h;
      out.info += g * g.transpose() / (h * h);
      out.info -= weighted_hessian(block, theta, zi, 0.0, ex.exit, false) / h;
    }
    const auto cum = block.integrate(0.0, ex.exit, theta);
    out.value -= zi.dot(cum.alpha);
    out.score -= cum.grad.transpose() * zi;
    out.info += weighted_hessian(block, theta, zi, 0.0, ex.exit, true);
  }
  return out;
}

Matrix mle_information(const Dataset& ds, const ParametricBlock& block, const Vector& theta,
                       double tau, int panels) {
  require_full_block(ds, block);
  const Index m = block.m();
  Matrix J = Matrix::Zero(m, m);
  for (Index i = 0; i < ds.n(); ++i) {
    const auto ex = exposure(ds, i, tau);
    if (ex.exit <= 0.0) continue;
    const auto zi = ds.z.row(i);
    J += gl7(
        0.0, ex.exit,
        [&](double s) -> Matrix {
          const auto v = block.evaluate(s, theta);
          const double h = zi.dot(v.alpha);
          if (!(h > 0.0)) {
            std::ostringstream msg;
            msg << "nonpositive fitted hazard at time " << format_double(s) << " for subject "
                << (i + 1) << " in the information integral";
            throw DomainError(msg.str());
          }
          const Vector g = v.grad.transpose() * zi.transpose();
          return g * g.transpose() / h;
        },
        panels);
  }
  return linalg::symmetrize(J / static_cast<double>(ds.n()));
}

MleFit fit_mle(const Dataset& ds, const ParametricBlock& block, const Vector& theta_init,
               const MleOptions& options) {
  require_full_block(ds, block);
  block.check(theta_init);
  const auto positive = block.positive();
  const Index m = block.m();
  const double n = static_cast<double>(ds.n());

  MleFit fit;
  Vector theta = theta_init;
  Vector phi = to_unconstrained(theta, positive);
  ScoreInfo cur = likelihood_derivatives(ds, block, theta, options.tau);
  fit.trace.push_back(cur.value);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if ((cur.score / n).norm() < 1e-3 * options.tolerance * static_cast<double>(m)) {
      fit.converged = true;
      break;
    }
    const Vector d = unconstrained_jacobian(theta, positive);
    const Vector grad = d.cwiseProduct(cur.score);
    Matrix hess = d.asDiagonal() * cur.info * d.asDiagonal();
    for (Index a = 0; a < m; ++a) {
      if (positive[static_cast<std::size_t>(a)]) hess(a, a) -= theta(a) * cur.score(a);
    }
    auto inv = linalg::guarded_inverse(hess, 1e14);
    Vector step;
    if (inv) {
      step = *inv * grad;
    } else {
      // Indefinite observed information: fall back to the outer-product form.
      Matrix op = Matrix::Zero(m, m);
      for (Index i = 0; i < ds.n(); ++i) {
        const auto ex = exposure(ds, i, options.tau);
        if (!ex.event) continue;
        const auto v = block.evaluate(ex.exit, theta);
        const Vector g = v.grad.transpose() * ds.z.row(i).transpose();
        const double h = ds.z.row(i).dot(v.alpha);
        op += g * g.transpose() / (h * h);
      }
      op = d.asDiagonal() * op * d.asDiagonal();
      auto inv2 = linalg::guarded_inverse(op, 1e14);
      if (!inv2) throw ConvergenceError("likelihood information is singular");
      step = *inv2 * grad;
    }

    bool accepted = false;
    double lambda = 1.0;
    for (int half = 0; half < 40; ++half, lambda *= 0.5) {
      const Vector phi_new = phi + lambda * step;
      const Vector theta_new = from_unconstrained(phi_new, positive);
      try {
        ScoreInfo next = likelihood_derivatives(ds, block, theta_new, options.tau);
        if (std::isfinite(next.value) &&
            next.value >= cur.value - 1e-12 * std::max(1.0, std::abs(cur.value))) {
          phi = phi_new;
          theta = theta_new;
          cur = std::move(next);
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
        // Outside the admissible region: shrink the step.
      }
    }
    fit.trace.push_back(cur.value);
    if (!accepted) break;
  }
  if (!fit.converged && (cur.score / n).norm() < options.tolerance * static_cast<double>(m)) {
    fit.converged = true;
  }
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "maximum likelihood did not converge; score norm " << (cur.score / n).norm();
    throw ConvergenceError(msg.str());
  }

  fit.theta_hat = theta;
  fit.log_likelihood = cur.value;
  fit.score = cur.score;
  fit.observed_information = linalg::symmetrize(cur.info / n);
  fit.information = mle_information(ds, block, theta, options.tau, options.info_panels);
  auto inv = linalg::guarded_inverse(fit.information);
  if (!inv) throw ConvergenceError("information matrix is not positive definite at the estimate");
  fit.covariance = *inv / n;
  return fit;
}

}  // namespace partly
