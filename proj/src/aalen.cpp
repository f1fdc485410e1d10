#include "partly/aalen.hpp"
#include "partly/format.hpp"
#include "partly/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace partly {

namespace {

std::vector<Index> order_by_time_desc(const Dataset& ds) {
  std::vector<Index> idx(static_cast<std::size_t>(ds.n()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return ds.times(a) > ds.times(b); });
  return idx;
}

}  // namespace

RiskTable build_risk_table(const Dataset& ds, const TimeGrid& grid, const WeightFn& weights) {
  const Index K = grid.intervals();
  const Index r = ds.r();
  const double inv_n = 1.0 / static_cast<double>(ds.n());
  RiskTable rt;
  rt.G.assign(static_cast<std::size_t>(K), Matrix::Zero(r, r));
  rt.dE.assign(static_cast<std::size_t>(K), Vector::Zero(r));
  rt.dH.assign(static_cast<std::size_t>(K), Matrix::Zero(r, r));
  rt.events.assign(static_cast<std::size_t>(K), {});
  rt.event_weights.assign(static_cast<std::size_t>(K), {});

  const auto order = order_by_time_desc(ds);
  if (!weights) {
    Matrix acc = Matrix::Zero(r, r);
    std::size_t pos = 0;
    for (Index k = K; k >= 1; --k) {
      const double u = grid.knots[static_cast<std::size_t>(k)];
      while (pos < order.size() && ds.times(order[pos]) >= u) {
        const auto zi = ds.z.row(order[pos]);
        acc.noalias() += zi.transpose() * zi;
        ++pos;
      }
      rt.G[static_cast<std::size_t>(k - 1)] = acc * inv_n;
    }
  } else {
    for (Index k = 1; k <= K; ++k) {
      const double u = grid.knots[static_cast<std::size_t>(k)];
      Matrix acc = Matrix::Zero(r, r);
      for (Index i : order) {
        if (ds.times(i) < u) break;
        const auto zi = ds.z.row(i);
        acc.noalias() += weights(i, u) * zi.transpose() * zi;
      }
      rt.G[static_cast<std::size_t>(k - 1)] = acc * inv_n;
    }
  }

  for (Index i = 0; i < ds.n(); ++i) {
    if (ds.status[static_cast<std::size_t>(i)] != 1 || ds.times(i) > grid.tau) continue;
    auto it = std::lower_bound(grid.knots.begin(), grid.knots.end(), ds.times(i));
    const Index k = static_cast<Index>(it - grid.knots.begin());
    const double w = weights ? weights(i, grid.knots[static_cast<std::size_t>(k)]) : 1.0;
    const auto zi = ds.z.row(i);
    const auto slot = static_cast<std::size_t>(k - 1);
    rt.dE[slot] += (w * inv_n) * zi.transpose();
    rt.dH[slot].noalias() += (w * w * inv_n) * zi.transpose() * zi;
    rt.events[slot].push_back(i);
    rt.event_weights[slot].push_back(w);
  }
  return rt;
}

TimeGrid truncate_grid(const TimeGrid& grid, Index last_knot) {
  TimeGrid out;
  out.knots.assign(grid.knots.begin(), grid.knots.begin() + last_knot + 1);
  out.event.assign(grid.event.begin(), grid.event.begin() + last_knot + 1);
  out.tau = out.knots.back();
  return out;
}

std::vector<double> AalenFit::event_times() const {
  std::vector<double> out;
  for (Index k = 1; k <= grid.intervals(); ++k) {
    if (grid.event[static_cast<std::size_t>(k)]) out.push_back(grid.knots[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::vector<Vector> AalenFit::event_increments() const {
  std::vector<Vector> out;
  for (Index k = 1; k <= grid.intervals(); ++k) {
    if (grid.event[static_cast<std::size_t>(k)]) out.push_back(increments[static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

AalenFit fit_aalen(const Dataset& ds, const TimeGrid& grid, const WeightFn& weights) {
  AalenFit fit;
  fit.scheme = weights ? WeightScheme::supplied : WeightScheme::plain;
  fit.weights = weights;
  fit.risk = build_risk_table(ds, grid, weights);
  const Index K = grid.intervals();
  const Index r = ds.r();

  Index good = K;
  for (Index k = 1; k <= K; ++k) {
    auto inv = linalg::guarded_inverse(fit.risk.G[static_cast<std::size_t>(k - 1)]);
    if (!inv) {
      good = k - 1;
      break;
    }
    fit.G_inv.push_back(*std::move(inv));
  }
  if (good < K) {
    const double bad_time = grid.knots[static_cast<std::size_t>(good + 1)];
    bool any_event = false;
    for (Index k = 1; k <= good; ++k) any_event = any_event || grid.event[static_cast<std::size_t>(k)];
    if (!any_event) {
      std::ostringstream msg;
      msg << "at-risk matrix is singular or ill-conditioned at time " << format_double(bad_time)
          << " before any estimable event";
      throw RankError(msg.str(), bad_time);
    }
    std::ostringstream msg;
    msg << "at-risk matrix is singular or ill-conditioned at time " << format_double(bad_time)
        << "; fit truncated at " << format_double(grid.knots[static_cast<std::size_t>(good)]);
    fit.warning = msg.str();
    fit.grid = truncate_grid(grid, good);
    for (auto* v : {&fit.risk.G, &fit.risk.dH}) v->resize(static_cast<std::size_t>(good));
    fit.risk.dE.resize(static_cast<std::size_t>(good));
    fit.risk.events.resize(static_cast<std::size_t>(good));
    fit.risk.event_weights.resize(static_cast<std::size_t>(good));
  } else {
    fit.grid = grid;
  }

  const Index Kt = fit.grid.intervals();
  const double inv_n = 1.0 / static_cast<double>(ds.n());
  std::vector<Vector> cum{Vector::Zero(r)};
  std::vector<Matrix> var{Matrix::Zero(r, r)};
  fit.increments.reserve(static_cast<std::size_t>(Kt));
  for (Index k = 1; k <= Kt; ++k) {
    const auto slot = static_cast<std::size_t>(k - 1);
    Vector inc = Vector::Zero(r);
    Matrix dv = Matrix::Zero(r, r);
    if (!fit.risk.events[slot].empty()) {
      const Matrix& gi = fit.G_inv[slot];
      inc = gi * fit.risk.dE[slot];
      dv = gi * fit.risk.dH[slot] * gi * inv_n;
    }
    fit.increments.push_back(inc);
    cum.push_back(cum.back() + inc);
    var.push_back(linalg::symmetrize(var.back() + dv));
  }
  fit.cumulative = StepPath<Vector>(fit.grid.knots, std::move(cum));
  fit.variance_path = StepPath<Matrix>(fit.grid.knots, std::move(var));
  return fit;
}

StepPath<Matrix> aalen_variance(const Dataset& ds, const AalenFit& fit, VarianceOption option) {
  const Index K = fit.grid.intervals();
  const Index r = ds.r();
  const double inv_n = 1.0 / static_cast<double>(ds.n());
  std::vector<Matrix> var{Matrix::Zero(r, r)};
  for (Index k = 1; k <= K; ++k) {
    const auto slot = static_cast<std::size_t>(k - 1);
    Matrix dv = Matrix::Zero(r, r);
    if (!fit.risk.events[slot].empty()) {
      Matrix dH;
      if (option == VarianceOption::counting) {
        dH = fit.risk.dH[slot];
      } else {
        const double u = fit.grid.knots[static_cast<std::size_t>(k)];
        dH = Matrix::Zero(r, r);
        const Vector& inc = fit.increments[slot];
        for (Index i = 0; i < ds.n(); ++i) {
          if (ds.times(i) < u) continue;
          const double w = fit.weights ? fit.weights(i, u) : 1.0;
          const auto zi = ds.z.row(i);
          dH.noalias() += (w * w * zi.dot(inc) * inv_n) * zi.transpose() * zi;
        }
      }
      const Matrix& gi = fit.G_inv[slot];
      dv = gi * dH * gi * inv_n;
    }
    var.push_back(linalg::symmetrize(var.back() + dv));
  }
  return StepPath<Matrix>(fit.grid.knots, std::move(var));
}

SmoothedAlpha::SmoothedAlpha(std::vector<double> times, std::vector<Vector> jumps,
                             double bandwidth, double tau)
    : times_(std::move(times)), jumps_(std::move(jumps)), b_(bandwidth), tau_(tau), dim_(0) {
  if (!(bandwidth > 0.0)) throw InputError("bandwidth must be positive");
  if (times_.size() != jumps_.size()) throw InputError("jump times and sizes disagree");
  if (!jumps_.empty()) dim_ = jumps_.front().size();
}

Vector SmoothedAlpha::operator()(double s) const {
  Vector out = Vector::Zero(dim_);
  auto kernel = [this](double x) {
    const double u = x / b_;
    return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) / b_ : 0.0;
  };
  auto lo = std::lower_bound(times_.begin(), times_.end(), s - b_);
  auto hi = std::upper_bound(times_.begin(), times_.end(), s + b_);
  for (auto it = lo; it != hi; ++it) {
    out += kernel(s - *it) * jumps_[static_cast<std::size_t>(it - times_.begin())];
  }
  // Reflected copies of jumps within b of either boundary.
  if (s < b_) {
    auto end0 = std::upper_bound(times_.begin(), times_.end(), b_ - s);
    for (auto it = times_.begin(); it != end0; ++it) {
      out += kernel(s + *it) * jumps_[static_cast<std::size_t>(it - times_.begin())];
    }
  }
  if (s > tau_ - b_) {
    auto start = std::lower_bound(times_.begin(), times_.end(), tau_ - (b_ - (tau_ - s)));
    for (auto it = start; it != times_.end(); ++it) {
      out += kernel(s - (2.0 * tau_ - *it)) * jumps_[static_cast<std::size_t>(it - times_.begin())];
    }
  }
  return out;
}

double default_bandwidth(double tau, Index n) {
  return 1.5 * tau * std::pow(static_cast<double>(n), -0.2);
}

SmoothedAlpha smooth_alpha(const AalenFit& fit, double bandwidth) {
  return SmoothedAlpha(fit.event_times(), fit.event_increments(), bandwidth, fit.tau());
}

AalenFit fit_aalen_optimal(const Dataset& ds, const TimeGrid& grid,
                           std::optional<double> bandwidth) {
  const AalenFit plain = fit_aalen(ds, grid);
  const double b = bandwidth ? *bandwidth : default_bandwidth(plain.tau(), ds.n());
  auto pilot = std::make_shared<const SmoothedAlpha>(smooth_alpha(plain, b));
  const TimeGrid& g = plain.grid;
  const Index K = g.intervals();

  // Fitted hazards at each interval's right knot, cached per knot.
  auto cache = std::make_shared<std::vector<Vector>>();
  cache->reserve(static_cast<std::size_t>(K) + 1);
  for (double u : g.knots) cache->push_back((*pilot)(u));
  double hmax = 0.0;
  for (Index k = 1; k <= K; ++k) {
    const double u = g.knots[static_cast<std::size_t>(k)];
    for (Index i = 0; i < ds.n(); ++i) {
      if (ds.times(i) >= u) hmax = std::max(hmax, ds.z.row(i).dot((*cache)[static_cast<std::size_t>(k)]));
    }
  }
  const double floor = 1e-8 * hmax;
  for (Index k = 1; k <= K; ++k) {
    const double u = g.knots[static_cast<std::size_t>(k)];
    for (Index i = 0; i < ds.n(); ++i) {
      if (ds.times(i) < u) continue;
      const double h = ds.z.row(i).dot((*cache)[static_cast<std::size_t>(k)]);
      if (!(h > floor) || hmax <= 0.0) {
        std::ostringstream msg;
        msg << "smoothed hazard z^t alpha = " << h << " is below the floor for subject "
            << (i + 1) << " at time " << format_double(u);
        throw DomainError(msg.str());
      }
    }
  }
  const auto knots = std::make_shared<std::vector<double>>(g.knots);
  const Matrix z = ds.z;
  WeightFn w = [pilot, cache, knots, z](Index i, double s) {
    auto it = std::lower_bound(knots->begin(), knots->end(), s);
    if (it != knots->end() && *it == s) {
      return 1.0 / z.row(i).dot((*cache)[static_cast<std::size_t>(it - knots->begin())]);
    }
    return 1.0 / z.row(i).dot((*pilot)(s));
  };

  AalenFit fit = fit_aalen(ds, g, w);
  fit.scheme = WeightScheme::optimal;
  fit.pilot = pilot;
  const double inv_n = 1.0 / static_cast<double>(ds.n());
  std::vector<Matrix> var{Matrix::Zero(ds.r(), ds.r())};
  for (Index k = 1; k <= fit.grid.intervals(); ++k) {
    const double du = fit.grid.knots[static_cast<std::size_t>(k)] - fit.grid.knots[static_cast<std::size_t>(k - 1)];
    var.push_back(var.back() + fit.G_inv[static_cast<std::size_t>(k - 1)] * (du * inv_n));
  }
  fit.variance_path = StepPath<Matrix>(fit.grid.knots, std::move(var));
  return fit;
}

std::string aalen_csv(const AalenFit& fit, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "time";
  for (const auto& n : names) out << ',' << n;
  for (const auto& n : names) out << ",se_" << n;
  out << '\n';
  const auto& knots = fit.cumulative.knots();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    out << format_double(knots[k]);
    const Vector& a = fit.cumulative.values()[k];
    const Matrix& v = fit.variance_path.values()[k];
    for (Index j = 0; j < a.size(); ++j) out << ',' << format_double(a(j));
    for (Index j = 0; j < a.size(); ++j) out << ',' << format_double(std::sqrt(std::max(0.0, v(j, j))));
    out << '\n';
  }
  return out.str();
}

}  // namespace partly
