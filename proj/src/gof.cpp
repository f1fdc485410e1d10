#include "partly/gof.hpp"
#include "partly/format.hpp"
#include "partly/linalg.hpp"
#include "partly/parallel.hpp"
#include "partly/quadrature.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace partly {

namespace {

double knot(const TimeGrid& g, Index k) { return g.knots[static_cast<std::size_t>(k)]; }

void check_component(const PartlyFit& fit, Index j, const MonitorWeight& weight) {
  if (fit.p < 1) throw InputError("goodness-of-fit needs a parametric block");
  const Index limit = weight.kind == MonitorWeight::Kind::estimating ? fit.block.m() : fit.p;
  if (j < 0 || j >= limit) {
    throw InputError("component " + std::to_string(j + 1) + " out of range 1.." +
                     std::to_string(limit));
  }
}

// Precomputed pieces of R_{n,j} and its covariance on the fit's grid.
// Entry k of the per-knot vectors belongs to knot u_k; interval k is
// (u_{k-1}, u_k].
class Monitor {
 public:
  Monitor(const PartlyFit& fit, Index j, const MonitorWeight& weight)
      : fit_(fit), j_(j), weight_(weight), grid_(fit.aalen->grid) {
    check_component(fit, j, weight);
    const Index K = grid_.intervals();
    const Index m = fit.block.m(), p = fit.p;
    const double rn = std::sqrt(static_cast<double>(fit.n));
    R_.assign(static_cast<std::size_t>(K + 1), 0.0);
    left_.assign(static_cast<std::size_t>(K + 1), 0.0);
    Q_.assign(static_cast<std::size_t>(K + 1), 0.0);
    psi_.assign(static_cast<std::size_t>(K + 1), Vector::Zero(m));
    phi_.assign(static_cast<std::size_t>(K + 1), Vector::Zero(m));
    jump_weight_.assign(static_cast<std::size_t>(K), Vector::Zero(p));
    for (Index k = 1; k <= K; ++k) {
      const auto slot = static_cast<std::size_t>(k - 1);
      const double lo = knot(grid_, k - 1), hi = knot(grid_, k);
      double drift = 0.0;
      Vector dpsi = Vector::Zero(m);
      gl7_points(lo, hi, [&](double s, double w) {
        const auto v = fit.block.evaluate(s, fit.theta_hat);
        const Vector kv = weight_at(s, k, v.grad);
        drift += w * kv.dot(v.alpha);
        dpsi.noalias() += w * v.grad.transpose() * kv;
      });
      left_[slot + 1] = R_[slot] - rn * drift;
      R_[slot + 1] = left_[slot + 1];
      psi_[slot + 1] = psi_[slot] + dpsi;
      Q_[slot + 1] = Q_[slot];
      phi_[slot + 1] = phi_[slot];
      if (fit.aalen->risk.events[slot].empty()) continue;
      const auto v = fit.block.evaluate(hi, fit.theta_hat);
      const Vector kv = weight_at(hi, k, v.grad);
      jump_weight_[slot] = kv;
      R_[slot + 1] += rn * kv.dot(fit.aalen->increments[slot].head(p));
      Q_[slot + 1] += kv.dot(fit.dQ[slot] * kv);
      phi_[slot + 1] += v.grad.transpose() * (fit.V[slot] * (fit.dQ[slot] * kv));
    }
  }

  // Weight vector (length p) at s in interval k, given alpha*(s).
  Vector weight_at(double s, Index k, const Matrix& grad) const {
    const Index p = fit_.p;
    switch (weight_.kind) {
      case MonitorWeight::Kind::unit:
        return Vector::Unit(p, j_);
      case MonitorWeight::Kind::scalar:
        return weight_.scalar_fn(s) * Vector::Unit(p, j_);
      case MonitorWeight::Kind::estimating:
        return fit_.V[static_cast<std::size_t>(k - 1)] * grad.col(j_);
    }
    return Vector::Zero(p);
  }

  const std::vector<double>& R() const { return R_; }
  const std::vector<double>& left() const { return left_; }
  const std::vector<Vector>& jump_weight() const { return jump_weight_; }
  const std::vector<Vector>& psi_knots() const { return psi_; }

  double value(double t) const {
    const Index k = locate(t);
    if (k < 0) return R_[static_cast<std::size_t>(-k)];
    return R_[static_cast<std::size_t>(k - 1)] -
           std::sqrt(static_cast<double>(fit_.n)) * partial(k, t).first;
  }

  Vector psi(double t) const {
    const Index k = locate(t);
    if (k < 0) return psi_[static_cast<std::size_t>(-k)];
    return psi_[static_cast<std::size_t>(k - 1)] + partial(k, t).second;
  }

  double Q(double t) const { return Q_[static_cast<std::size_t>(grid_.knot_at_or_before(t))]; }
  Vector phi(double t) const {
    return phi_[static_cast<std::size_t>(grid_.knot_at_or_before(t))];
  }

 private:
  // -k for t equal to knot k, otherwise the interval containing t.
  Index locate(double t) const {
    if (t <= 0.0) return 0;
    const auto it = std::lower_bound(grid_.knots.begin(), grid_.knots.end(), t);
    if (it == grid_.knots.end()) return -grid_.intervals();
    const auto k = static_cast<Index>(it - grid_.knots.begin());
    return *it == t ? -k : k;
  }

  // Drift and psi integrals over (u_{k-1}, t].
  std::pair<double, Vector> partial(Index k, double t) const {
    double drift = 0.0;
    Vector dpsi = Vector::Zero(fit_.block.m());
    gl7_points(knot(grid_, k - 1), t, [&](double s, double w) {
      const auto v = fit_.block.evaluate(s, fit_.theta_hat);
      const Vector kv = weight_at(s, k, v.grad);
      drift += w * kv.dot(v.alpha);
      dpsi.noalias() += w * v.grad.transpose() * kv;
    });
    return {drift, dpsi};
  }

  const PartlyFit& fit_;
  Index j_;
  MonitorWeight weight_;
  const TimeGrid& grid_;
  std::vector<double> R_, left_, Q_;
  std::vector<Vector> psi_, phi_;
  std::vector<Vector> jump_weight_;
};

double covariance(const PartlyFit& fit, const Monitor& mon, double t1, double t2) {
  const double tau = fit.tau();
  for (double t : {t1, t2}) {
    if (t < 0.0 || t > tau * (1.0 + 1e-12)) {
      throw InputError("covariance requested at t = " + format_double(t) + " outside [0, tau]");
    }
  }
  if (t1 <= 0.0 || t2 <= 0.0) return 0.0;
  t1 = std::min(t1, tau);
  t2 = std::min(t2, tau);
  const Matrix ginv = linalg::inverse_or_throw(fit.Gamma, tau, "Gamma");
  const Matrix sigma = fit.theta_cov * static_cast<double>(fit.n);
  const Vector psi1 = mon.psi(t1), psi2 = mon.psi(t2);
  return mon.Q(std::min(t1, t2)) + psi1.dot(sigma * psi2) - psi1.dot(ginv * mon.phi(t2)) -
         psi2.dot(ginv * mon.phi(t1));
}

double sup_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  for (double x : b) s = std::max(s, std::abs(x));
  return s;
}

// Draws from the Gaussian limit of (R_{n,j})_j on the knots, using one
// normal per failing subject: dW(u_k) = sum_i a_i g_i with
// a_i = (G_k^{-1} z_i w_i)_(1) / sqrt(n), so that Cov dW = dQ_k.
class GaussianLimit {
 public:
  GaussianLimit(const Dataset& ds, const PartlyFit& fit, const std::vector<const Monitor*>& mons)
      : fit_(fit), mons_(mons) {
    const auto& aalen = *fit.aalen;
    const Index K = aalen.grid.intervals(), p = fit.p;
    const double rn = std::sqrt(static_cast<double>(fit.n));
    for (Index k = 1; k <= K; ++k) {
      const auto slot = static_cast<std::size_t>(k - 1);
      const auto& ev = aalen.risk.events[slot];
      if (ev.empty()) continue;
      const Matrix grad = fit.block.evaluate(knot(aalen.grid, k), fit.theta_hat).grad;
      const Matrix proj = grad.transpose() * fit.V[slot];
      for (std::size_t e = 0; e < ev.size(); ++e) {
        const Vector a = (aalen.G_inv[slot] * ds.z.row(ev[e]).transpose()).head(p) *
                         (aalen.risk.event_weights[slot][e] / rn);
        Row row;
        row.interval = k;
        row.theta = proj * a;
        row.b.resize(mons.size());
        for (std::size_t c = 0; c < mons.size(); ++c) row.b[c] = mons[c]->jump_weight()[slot].dot(a);
        rows_.push_back(std::move(row));
      }
    }
    ginv_ = linalg::inverse_or_throw(fit.Gamma, fit.tau(), "Gamma");
  }

  // Sup statistics of one replicate, one per monitor.
  std::vector<double> draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> nd;
    const Index K = fit_.aalen->grid.intervals();
    const std::size_t C = mons_.size();
    std::vector<std::vector<double>> dw(C, std::vector<double>(static_cast<std::size_t>(K), 0.0));
    Vector beta = Vector::Zero(fit_.block.m());
    for (const Row& row : rows_) {
      const double g = nd(rng);
      beta.noalias() += g * row.theta;
      for (std::size_t c = 0; c < C; ++c) {
        dw[c][static_cast<std::size_t>(row.interval - 1)] += g * row.b[c];
      }
    }
    beta = ginv_ * beta;
    std::vector<double> out(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const auto& psi = mons_[c]->psi_knots();
      double acc = 0.0, best = 0.0;
      for (Index k = 1; k <= K; ++k) {
        const double drift = psi[static_cast<std::size_t>(k)].dot(beta);
        best = std::max(best, std::abs(acc - drift));
        acc += dw[c][static_cast<std::size_t>(k - 1)];
        best = std::max(best, std::abs(acc - drift));
      }
      out[c] = best;
    }
    return out;
  }

 private:
  struct Row {
    Index interval = 0;
    Vector theta;           // alpha*^t V a_i
    std::vector<double> b;  // K^t a_i per monitor
  };
  const PartlyFit& fit_;
  std::vector<const Monitor*> mons_;
  std::vector<Row> rows_;
  Matrix ginv_;
};

PartlyFit refit_like(const Dataset& ds, const PartlyFit& fit) {
  const TimeGrid grid = build_time_grid(ds, fit.tau());
  std::shared_ptr<const AalenFit> aalen;
  if (fit.aalen->scheme == WeightScheme::optimal) {
    aalen = std::make_shared<const AalenFit>(
        fit_aalen_optimal(ds, grid, fit.aalen->pilot->bandwidth()));
  } else {
    aalen = std::make_shared<const AalenFit>(fit_aalen(ds, grid, fit.aalen->weights));
  }
  PartlyOptions opt;
  opt.step_a.vn = fit.vn;
  opt.step_a.theta_init = fit.theta_hat;
  return fit_partly(ds, aalen, fit.block, opt);
}

struct Calibration {
  std::vector<double> observed;
  std::vector<std::vector<double>> replicates;  // [b][component]
  Index failed = 0;
};

Calibration calibrate(const Dataset& ds, const PartlyFit& fit, const std::vector<Index>& js,
                      const KsOptions& options, const MonitorWeight& weight) {
  if (options.B < 100) throw InputError("B ≥ 100 required");
  Calibration cal;
  std::vector<Monitor> mons;
  mons.reserve(js.size());
  for (Index j : js) mons.emplace_back(fit, j, weight);
  for (const auto& mon : mons) cal.observed.push_back(sup_abs(mon.R(), mon.left()));
  cal.replicates.assign(static_cast<std::size_t>(options.B), {});

  if (options.method == KsMethod::gaussian) {
    std::vector<const Monitor*> ptrs;
    for (const auto& mon : mons) ptrs.push_back(&mon);
    const GaussianLimit limit(ds, fit, ptrs);
    parallel_for(options.B, options.threads, [&](Index b) {
      auto rng = stream_rng(options.seed, static_cast<std::uint64_t>(b));
      cal.replicates[static_cast<std::size_t>(b)] = limit.draw(rng);
    });
    return cal;
  }

  if (ds.n() != fit.n || ds.p != fit.p) {
    throw InputError("bootstrap needs the dataset the fit was computed from");
  }
  std::vector<std::string> errors(static_cast<std::size_t>(options.B));
  parallel_for(options.B, options.threads, [&](Index b) {
    auto rng = stream_rng(options.seed, static_cast<std::uint64_t>(b));
    try {
      const Dataset star = bootstrap_dataset(ds, fit, rng);
      const PartlyFit refit = refit_like(star, fit);
      std::vector<double> stats;
      for (Index j : js) {
        const Monitor mon(refit, j, weight);
        stats.push_back(sup_abs(mon.R(), mon.left()));
      }
      cal.replicates[static_cast<std::size_t>(b)] = std::move(stats);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(b)] = e.what();
    }
  });
  std::string first;
  for (const auto& e : errors) {
    if (e.empty()) continue;
    ++cal.failed;
    if (first.empty()) first = e;
  }
  if (static_cast<double>(cal.failed) > 0.05 * static_cast<double>(options.B)) {
    std::ostringstream msg;
    msg << cal.failed << " of " << options.B << " bootstrap refits failed (limit 5%); first: "
        << first;
    throw ConvergenceError(msg.str());
  }
  return cal;
}

double exceed_p(double observed, const std::vector<double>& reps) {
  Index count = 0;
  for (double r : reps) count += r >= observed;
  return (1.0 + static_cast<double>(count)) / (static_cast<double>(reps.size()) + 1.0);
}

// Inverse of the running maximum of a right-continuous path given at
// knots (after jumps) and left limits, with a continuous part inside
// intervals evaluated by `inside(k, t)`.
template <class Inside>
double invert_running_max(const std::vector<double>& knots, const std::vector<double>& at,
                          const std::vector<double>& left, double level, Inside&& inside) {
  double best = 0.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (std::max(best, left[k]) >= level) {
      double lo = knots[k - 1], hi = knots[k];
      const double tol = 1e-10 * knots.back();
      for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::max(best, inside(k, mid)) >= level ? hi : lo) = mid;
      }
      return hi;
    }
    best = std::max(best, left[k]);
    if (std::max(best, at[k]) >= level) return knots[k];
    best = std::max(best, at[k]);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

double MonitoringPath::sup() const { return sup_abs(at_knots.values(), left); }

MonitoringPath monitoring_process(const PartlyFit& fit, Index j, const MonitorWeight& weight) {
  const Monitor mon(fit, j, weight);
  MonitoringPath path;
  path.j = j;
  path.at_knots = StepPath<double>(fit.aalen->grid.knots, mon.R());
  path.left = mon.left();
  return path;
}

double monitoring_value(const PartlyFit& fit, Index j, const MonitorWeight& weight, double t) {
  if (t < 0.0 || t > fit.tau() * (1.0 + 1e-12)) {
    throw InputError("monitoring process requested at t = " + format_double(t) +
                     " outside [0, tau]");
  }
  return Monitor(fit, j, weight).value(std::min(t, fit.tau()));
}

double gof_covariance(const PartlyFit& fit, Index j, const MonitorWeight& weight, double t1,
                      double t2) {
  const Monitor mon(fit, j, weight);
  const double c = covariance(fit, mon, t1, t2);
  return t1 == t2 ? std::max(c, 0.0) : c;
}

ChiSquared chi_squared_statistic(const Vector& d, const Matrix& sigma) {
  const auto rep = linalg::repair_psd(sigma);
  const auto pinv = linalg::pseudo_inverse(rep.matrix);
  ChiSquared out;
  out.df = pinv.rank;
  out.statistic = d.dot(pinv.matrix * d);
  if (out.df > 0) {
    const boost::math::chi_squared dist(static_cast<double>(out.df));
    out.p_value = boost::math::cdf(boost::math::complement(dist, std::max(out.statistic, 0.0)));
  }
  return out;
}

std::vector<double> quantile_windows(const PartlyFit& fit, Index k) {
  if (k < 1) throw InputError("need at least one window");
  const auto& aalen = *fit.aalen;
  std::vector<double> event_times;
  for (Index kk = 1; kk <= aalen.grid.intervals(); ++kk) {
    const auto& ev = aalen.risk.events[static_cast<std::size_t>(kk - 1)];
    event_times.insert(event_times.end(), ev.size(), knot(aalen.grid, kk));
  }
  const auto D = static_cast<Index>(event_times.size());
  if (D < k) {
    throw InputError("cannot form " + std::to_string(k) + " windows from " + std::to_string(D) +
                     " events");
  }
  std::vector<double> b{0.0};
  for (Index l = 1; l < k; ++l) {
    const Index idx = (l * D + k - 1) / k;  // ceil(l D / k)
    const double c = event_times[static_cast<std::size_t>(idx - 1)];
    if (c <= b.back()) throw InputError("event-count windows collapse; too many tied events");
    b.push_back(c);
  }
  if (fit.tau() <= b.back()) throw InputError("event-count windows collapse at tau");
  b.push_back(fit.tau());
  return b;
}

GofReport chi_squared_test(const PartlyFit& fit, Index j, const std::vector<double>& boundaries,
                           const MonitorWeight& weight) {
  if (boundaries.size() < 2) throw InputError("need at least one window");
  if (boundaries.front() != 0.0) throw InputError("windows must start at 0");
  if (boundaries.back() > fit.tau() * (1.0 + 1e-12)) {
    throw InputError("last window boundary exceeds tau = " + format_double(fit.tau()));
  }
  const auto& grid = fit.aalen->grid;
  for (std::size_t l = 1; l < boundaries.size(); ++l) {
    if (!(boundaries[l] > boundaries[l - 1])) throw InputError("window boundaries must increase");
    bool any = false;
    for (Index k = 1; k <= grid.intervals() && !any; ++k) {
      const double u = knot(grid, k);
      any = u > boundaries[l - 1] && u <= boundaries[l] &&
            !fit.aalen->risk.events[static_cast<std::size_t>(k - 1)].empty();
    }
    if (!any) {
      throw InputError("window (" + format_double(boundaries[l - 1]) + ", " +
                       format_double(boundaries[l]) + "] contains no events");
    }
  }
  const Monitor mon(fit, j, weight);
  const auto k = static_cast<Index>(boundaries.size()) - 1;
  GofReport rep;
  rep.j = j;
  rep.boundaries = boundaries;
  rep.increments.resize(k);
  for (Index l = 0; l < k; ++l) {
    rep.increments(l) = mon.value(boundaries[static_cast<std::size_t>(l + 1)]) -
                        mon.value(boundaries[static_cast<std::size_t>(l)]);
  }
  // Rectangle sums of the covariance function.
  Matrix C(k + 1, k + 1);
  for (Index a = 0; a <= k; ++a) {
    for (Index b = a; b <= k; ++b) {
      C(a, b) = C(b, a) = covariance(fit, mon, boundaries[static_cast<std::size_t>(a)],
                                     boundaries[static_cast<std::size_t>(b)]);
    }
  }
  rep.sigma.resize(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      rep.sigma(a, b) = C(a + 1, b + 1) - C(a, b + 1) - C(a + 1, b) + C(a, b);
    }
  }
  rep.sigma = linalg::symmetrize(rep.sigma);
  const ChiSquared cs = chi_squared_statistic(rep.increments, rep.sigma);
  rep.chi2 = cs.statistic;
  rep.df = cs.df;
  rep.chi2_p = cs.p_value;
  rep.rank_reduced = cs.df < k;
  rep.ks = sup_abs(mon.R(), mon.left());
  return rep;
}

GofReport chi_squared_test(const PartlyFit& fit, Index j, Index windows,
                           const MonitorWeight& weight) {
  return chi_squared_test(fit, j, quantile_windows(fit, windows), weight);
}

GofReport ks_test(const Dataset& ds, const PartlyFit& fit, Index j, const KsOptions& options,
                  const MonitorWeight& weight) {
  const Calibration cal = calibrate(ds, fit, {j}, options, weight);
  std::vector<double> reps;
  for (const auto& r : cal.replicates) {
    if (!r.empty()) reps.push_back(r.front());
  }
  GofReport rep;
  rep.j = j;
  rep.ks = cal.observed.front();
  rep.ks_p = exceed_p(rep.ks, reps);
  rep.method = options.method == KsMethod::gaussian ? "gaussian" : "bootstrap";
  rep.B = options.B;
  rep.seed = options.seed;
  rep.failed_replicates = cal.failed;
  return rep;
}

SimultaneousReport simultaneous_test(const Dataset& ds, const PartlyFit& fit,
                                     const KsOptions& options, const MonitorWeight& weight) {
  std::vector<Index> js;
  for (Index j = 0; j < fit.p; ++j) js.push_back(j);
  const Calibration cal = calibrate(ds, fit, js, options, weight);
  SimultaneousReport rep;
  rep.components = cal.observed;
  for (double s : cal.observed) rep.statistic += s;
  std::vector<double> reps;
  for (const auto& r : cal.replicates) {
    if (r.empty()) continue;
    double s = 0.0;
    for (double x : r) s += x;
    reps.push_back(s);
  }
  rep.p_value = exceed_p(rep.statistic, reps);
  return rep;
}

Dataset bootstrap_dataset(const Dataset& ds, const PartlyFit& fit, std::mt19937_64& rng) {
  const auto& grid = fit.aalen->grid;
  const Index K = grid.intervals(), p = fit.p, q = fit.q;
  const double tau = fit.tau();

  // Parametric and nonparametric cumulative paths at knots and left limits.
  std::vector<Vector> A_at(static_cast<std::size_t>(K + 1)), A_left(static_cast<std::size_t>(K + 1));
  A_at[0] = A_left[0] = Vector::Zero(p + q);
  for (Index k = 1; k <= K; ++k) {
    const double u = knot(grid, k);
    Vector at(p + q), left(p + q);
    at.head(p) = left.head(p) = fit.A1(u);
    if (q > 0) {
      at.tail(q) = fit.A2.values()[static_cast<std::size_t>(k)];
      left.tail(q) = fit.A2.values()[static_cast<std::size_t>(k - 1)];
      if (p > 0) {
        left.tail(q) -= fit.A2.drift()[static_cast<std::size_t>(k - 1)] *
                        fit.block.integrate(knot(grid, k - 1), u, fit.theta_hat).alpha;
      }
    }
    A_at[static_cast<std::size_t>(k)] = std::move(at);
    A_left[static_cast<std::size_t>(k)] = std::move(left);
  }
  auto hazard = [&](const Vector& z, double t) {
    double h = 0.0;
    if (p > 0) h += z.head(p).dot(fit.A1(t));
    if (q > 0) h += z.tail(q).dot(fit.A2(t));
    return h;
  };

  // Reverse Kaplan-Meier estimate of the censoring survival function.
  std::vector<Index> order(static_cast<std::size_t>(ds.n()));
  for (Index i = 0; i < ds.n(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return ds.times(a) < ds.times(b); });
  std::vector<double> c_times, c_surv;
  double surv = 1.0;
  double at_risk = static_cast<double>(ds.n());
  for (std::size_t pos = 0; pos < order.size();) {
    const double t = ds.times(order[pos]);
    double censored = 0.0, leaving = 0.0;
    while (pos < order.size() && ds.times(order[pos]) == t) {
      censored += ds.status[static_cast<std::size_t>(order[pos])] == 0;
      leaving += 1.0;
      ++pos;
    }
    if (censored > 0.0) {
      surv *= 1.0 - censored / at_risk;
      c_times.push_back(t);
      c_surv.push_back(surv);
    }
    at_risk -= leaving;
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  Vector times(ds.n());
  std::vector<int> status(static_cast<std::size_t>(ds.n()));
  std::vector<double> at(static_cast<std::size_t>(K + 1)), left(static_cast<std::size_t>(K + 1));
  for (Index i = 0; i < ds.n(); ++i) {
    const Vector z = ds.z.row(i).transpose();
    for (Index k = 0; k <= K; ++k) {
      at[static_cast<std::size_t>(k)] = z.dot(A_at[static_cast<std::size_t>(k)]);
      left[static_cast<std::size_t>(k)] = z.dot(A_left[static_cast<std::size_t>(k)]);
    }
    const double E = expo(rng);
    const double T = invert_running_max(grid.knots, at, left, E,
                                        [&](std::size_t, double t) { return hazard(z, t); });
    // Censoring by inversion of the reverse Kaplan-Meier survival function.
    const double U = unif(rng);
    double C = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < c_times.size(); ++c) {
      if (c_surv[c] <= U) {
        C = c_times[c];
        break;
      }
    }
    const double end = std::min(C, tau);
    times(i) = std::min(T, end);
    status[static_cast<std::size_t>(i)] = T <= end;
  }
  return make_dataset(std::move(times), std::move(status), ds.z, ds.p, ds.names);
}

std::string monitor_csv(const MonitoringPath& path) {
  std::ostringstream out;
  out << "time,R\n";
  const auto& knots = path.at_knots.knots();
  const auto& values = path.at_knots.values();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    out << format_double(knots[k]) << ',' << format_double(values[k]) << '\n';
  }
  return out.str();
}

std::string gof_report_text(const GofReport& r) {
  std::ostringstream out;
  out << "component: " << (r.j + 1) << '\n';
  if (!r.boundaries.empty()) {
    out << "windows: [";
    for (std::size_t l = 0; l < r.boundaries.size(); ++l) {
      out << (l ? ", " : "") << format_double(r.boundaries[l]);
    }
    out << "]\nincrements: [";
    for (Index l = 0; l < r.increments.size(); ++l) {
      out << (l ? ", " : "") << format_double(r.increments(l));
    }
    out << "]\nsigma:\n";
    for (Index a = 0; a < r.sigma.rows(); ++a) {
      out << "  - [";
      for (Index b = 0; b < r.sigma.cols(); ++b) out << (b ? ", " : "") << format_double(r.sigma(a, b));
      out << "]\n";
    }
    out << "chi2: " << format_double(r.chi2) << '\n'
        << "df: " << r.df << '\n'
        << "chi2_p: " << format_double(r.chi2_p) << '\n'
        << "rank_reduced: " << (r.rank_reduced ? "true" : "false") << '\n';
  }
  out << "ks: " << format_double(r.ks) << '\n';
  if (!r.method.empty()) {
    out << "ks_p: " << format_double(r.ks_p) << '\n'
        << "method: " << r.method << '\n'
        << "B: " << r.B << '\n'
        << "seed: " << r.seed << '\n'
        << "failed_replicates: " << r.failed_replicates << '\n';
  }
  return out.str();
}

}  // namespace partly
