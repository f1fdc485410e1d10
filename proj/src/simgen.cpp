#include "partly/simgen.hpp"
#include "partly/format.hpp"
#include "partly/mle.hpp"
#include "partly/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace partly {

Vector HazardTruth::alpha(double s) const {
  Vector a(r());
  for (Index j = 0; j < r(); ++j) {
    a(j) = families[static_cast<std::size_t>(j)].alpha(s, theta[static_cast<std::size_t>(j)]);
  }
  return a;
}

Vector HazardTruth::cumulative(double t) const {
  Vector a(r());
  for (Index j = 0; j < r(); ++j) {
    a(j) = families[static_cast<std::size_t>(j)].cumulative(0.0, t,
                                                            theta[static_cast<std::size_t>(j)]);
  }
  return a;
}

double cumulative_hazard(const HazardTruth& truth, const Vector& z, double t) {
  return t <= 0.0 ? 0.0 : z.dot(truth.cumulative(t));
}

std::optional<double> closed_form_inverse(const HazardTruth& truth, const Vector& z,
                                          double level) {
  // H_z(t) = sum_e c_e t^e.
  std::vector<std::pair<double, double>> terms;  // exponent, coefficient
  auto add = [&](double e, double c) {
    for (auto& [ex, co] : terms) {
      if (std::abs(ex - e) < 1e-12) {
        co += c;
        return;
      }
    }
    terms.emplace_back(e, c);
  };
  for (Index j = 0; j < truth.r(); ++j) {
    const auto& f = truth.families[static_cast<std::size_t>(j)];
    const Vector& th = truth.theta[static_cast<std::size_t>(j)];
    if (z(j) == 0.0) continue;
    switch (f.kind()) {
      case FamilyKind::constant:
        add(1.0, z(j) * th(0));
        break;
      case FamilyKind::linear:
        add(2.0, 0.5 * z(j) * th(0));
        break;
      case FamilyKind::power:
        add(th(1), z(j) * th(0));
        break;
      case FamilyKind::custom:
        return std::nullopt;
    }
  }
  terms.erase(std::remove_if(terms.begin(), terms.end(), [](const auto& t) { return t.second == 0.0; }),
              terms.end());
  if (terms.empty()) return std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    if (t.second < 0.0) return std::nullopt;
  }
  if (terms.size() == 1) return std::pow(level / terms[0].second, 1.0 / terms[0].first);
  if (terms.size() == 2) {
    std::sort(terms.begin(), terms.end());
    if (std::abs(terms[0].first - 1.0) < 1e-12 && std::abs(terms[1].first - 2.0) < 1e-12) {
      const double c1 = terms[0].second, c2 = terms[1].second;
      return 2.0 * level / (c1 + std::sqrt(c1 * c1 + 4.0 * c2 * level));
    }
  }
  return std::nullopt;
}

double bisection_inverse(const HazardTruth& truth, const Vector& z, double level, double scale) {
  double lo = 0.0, hi = scale;
  int doublings = 0;
  while (cumulative_hazard(truth, z, hi) < level) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1000) return std::numeric_limits<double>::infinity();
  }
  const double tol = 1e-10 * scale;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cumulative_hazard(truth, z, mid) >= level ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

constexpr int kCheckPoints = 200;

std::vector<Vector> alpha_grid(const HazardTruth& truth, double horizon) {
  std::vector<Vector> out;
  for (int g = 1; g <= kCheckPoints; ++g) out.push_back(truth.alpha(horizon * g / kCheckPoints));
  return out;
}

void check_against(const std::vector<Vector>& grid, const Vector& z, double horizon, Index subject) {
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double h = z.dot(grid[g]);
    if (h < 0.0) {
      std::ostringstream msg;
      msg << "true hazard " << format_double(h) << " is negative at t = "
          << format_double(horizon * static_cast<double>(g + 1) / kCheckPoints);
      if (subject >= 0) msg << " for subject " << (subject + 1);
      throw DomainError(msg.str());
    }
  }
}

double draw_censoring(const CensorLaw& law, std::mt19937_64& rng) {
  switch (law.kind) {
    case CensorLaw::Kind::none:
      return std::numeric_limits<double>::infinity();
    case CensorLaw::Kind::uniform:
      return std::uniform_real_distribution<double>(law.a, law.b)(rng);
    case CensorLaw::Kind::degenerate:
      return law.a;
    case CensorLaw::Kind::exponential:
      return std::exponential_distribution<double>(law.a)(rng);
  }
  return std::numeric_limits<double>::infinity();
}

double inversion_scale(double tau, const CensorLaw& censor) {
  if (std::isfinite(tau)) return tau;
  if (censor.kind == CensorLaw::Kind::uniform) return censor.b;
  if (censor.kind == CensorLaw::Kind::degenerate) return censor.a;
  return 1.0;
}

SurvivalDraw draw_unchecked(const Vector& z, const HazardTruth& truth, const CensorLaw& censor,
                            double tau, std::mt19937_64& rng) {
  const double U = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double E = -std::log(U);
  const auto cf = closed_form_inverse(truth, z, E);
  const double T = cf ? *cf : bisection_inverse(truth, z, E, inversion_scale(tau, censor));
  const double C = draw_censoring(censor, rng);
  const double end = std::min(C, tau);
  return {std::min(T, end), T <= end ? 1 : 0};
}

}  // namespace

void check_hazard(const HazardTruth& truth, const Vector& z, double horizon) {
  check_against(alpha_grid(truth, horizon), z, horizon, -1);
}

SurvivalDraw sample_survival(const Vector& z, const HazardTruth& truth, const CensorLaw& censor,
                             double tau, std::mt19937_64& rng) {
  if (z.size() != truth.r()) throw InputError("covariate vector does not match the hazard truth");
  const double horizon = std::isfinite(tau) ? tau : inversion_scale(tau, censor);
  check_hazard(truth, z, horizon);
  return draw_unchecked(z, truth, censor, tau, rng);
}

double Scenario::horizon() const {
  if (std::isfinite(tau)) return tau;
  switch (censor.kind) {
    case CensorLaw::Kind::uniform:
      return censor.b;
    case CensorLaw::Kind::degenerate:
      return censor.a;
    case CensorLaw::Kind::exponential:
      return 20.0 / censor.a;
    case CensorLaw::Kind::none:
      break;
  }
  throw InputError("scenario needs a finite tau or a bounded censoring law");
}

Scenario reference_scenario(Index n) {
  Scenario sc;
  sc.name = "power-linear";
  sc.covariates = {ColumnLaw::uniform(0.0, 40.0), ColumnLaw::uniform(0.0, 8.0),
                   ColumnLaw::constant(1.0), ColumnLaw::uniform(8.0, 16.0).with(1, -1.0)};
  Vector pw(2), lin(1), base(1), eff(1);
  pw << 0.123, 2.0;
  lin << 0.567;
  base << 0.572;
  eff << 0.123;
  sc.truth.families = {HazardFamily::power(), HazardFamily::linear(), HazardFamily::linear(),
                       HazardFamily::linear()};
  sc.truth.theta = {pw, lin, base, eff};
  sc.p = 2;
  sc.censor = CensorLaw::uniform(0.0, 1.0);
  sc.n = n;
  sc.names = {"z1", "z2", "z3", "z4"};
  return sc;
}

void validate_scenario(const Scenario& sc) {
  const Index r = sc.r();
  if (r < 1) throw InputError("scenario has no covariates");
  if (static_cast<Index>(sc.truth.theta.size()) != r) {
    throw InputError("scenario truth needs one parameter vector per family");
  }
  for (Index j = 0; j < r; ++j) {
    sc.truth.families[static_cast<std::size_t>(j)].check(sc.truth.theta[static_cast<std::size_t>(j)]);
  }
  if (sc.p < 0 || sc.p > r) throw InputError("scenario p must lie in 0..r");
  if (sc.n < 1) throw InputError("scenario n must be positive");
  if (sc.fixed_z) {
    if (sc.fixed_z->rows() != sc.n || sc.fixed_z->cols() != r) {
      throw InputError("fixed covariate matrix must be n x r");
    }
  } else if (static_cast<Index>(sc.covariates.size()) != r) {
    throw InputError("scenario needs one covariate law per column");
  }
  if (!sc.names.empty() && static_cast<Index>(sc.names.size()) != r) {
    throw InputError("scenario names must match the number of columns");
  }
  for (std::size_t j = 0; j < sc.covariates.size(); ++j) {
    const auto& c = sc.covariates[j];
    if (c.kind == ColumnLaw::Kind::uniform && !(c.b > c.a)) {
      throw InputError("uniform covariate law needs a < b");
    }
    for (const auto& [k, coef] : c.plus) {
      if (k < 0 || k >= static_cast<Index>(j)) {
        throw InputError("covariate law may only add earlier columns");
      }
    }
  }
  if (sc.censor.kind == CensorLaw::Kind::uniform && !(sc.censor.b > sc.censor.a && sc.censor.a >= 0.0)) {
    throw InputError("uniform censoring needs 0 <= a < b");
  }
  if (sc.censor.kind == CensorLaw::Kind::exponential && !(sc.censor.a > 0.0)) {
    throw InputError("exponential censoring needs a positive rate");
  }
  if (sc.censor.kind == CensorLaw::Kind::degenerate && !(sc.censor.a > 0.0)) {
    throw InputError("degenerate censoring needs a positive time");
  }
  (void)sc.horizon();
}

Matrix draw_covariates(const Scenario& sc, std::mt19937_64& rng) {
  if (sc.fixed_z) return *sc.fixed_z;
  Matrix z(sc.n, sc.r());
  for (Index i = 0; i < sc.n; ++i) {
    for (Index j = 0; j < sc.r(); ++j) {
      const auto& law = sc.covariates[static_cast<std::size_t>(j)];
      z(i, j) = law.kind == ColumnLaw::Kind::constant
                    ? law.a
                    : std::uniform_real_distribution<double>(law.a, law.b)(rng);
      for (const auto& [k, coef] : law.plus) z(i, j) += coef * z(i, k);
    }
  }
  return z;
}

Dataset simulate_dataset(const Scenario& sc, const Matrix& z, std::mt19937_64& rng) {
  const double horizon = sc.horizon();
  const auto grid = alpha_grid(sc.truth, horizon);
  Vector times(z.rows());
  std::vector<int> status(static_cast<std::size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    const Vector zi = z.row(i).transpose();
    check_against(grid, zi, horizon, i);
    const SurvivalDraw d = draw_unchecked(zi, sc.truth, sc.censor, sc.tau, rng);
    times(i) = d.time;
    status[static_cast<std::size_t>(i)] = d.status;
  }
  std::vector<std::string> names = sc.names;
  if (names.empty()) {
    for (Index j = 0; j < sc.r(); ++j) names.push_back("z" + std::to_string(j + 1));
  }
  return make_dataset(std::move(times), std::move(status), z, sc.p, std::move(names));
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::aalen:
      return "aalen";
    case Estimator::mle:
      return "mle";
    case Estimator::partly:
      return "partly";
  }
  return "unknown";
}

namespace {

std::string at_label(Index j, double t) {
  return "A" + std::to_string(j + 1) + "(" + format_double(t) + ")";
}

void push(std::vector<McRow>& rows, Index rep, const std::string& est, std::string name,
          double value, double truth, double se) {
  rows.push_back({rep, est, std::move(name), value, truth, se, (value - truth) / se});
}

std::vector<McRow> fit_replicate(const Scenario& sc, const Dataset& ds, Estimator e, Index rep,
                                 const MonteCarloOptions& options) {
  const auto& times = options.times;
  std::vector<McRow> rows;
  const std::string name = estimator_name(e);
  const Index r = sc.r(), p = sc.p;
  switch (e) {
    case Estimator::aalen: {
      const AalenFit fit = fit_aalen(ds, build_time_grid(ds, options.fit_tau));
      for (double t : times) {
        if (t > fit.tau()) throw RankError("requested time beyond the Aalen fit", t);
        const Vector A = fit.cumulative(t);
        const Matrix& V = fit.variance_path(t);
        const Vector truth = sc.truth.cumulative(t);
        for (Index j = 0; j < r; ++j) {
          push(rows, rep, name, at_label(j, t), A(j), truth(j), std::sqrt(V(j, j)));
        }
      }
      break;
    }
    case Estimator::mle: {
      Dataset full = ds;
      full.p = r;
      const ParametricBlock block(sc.truth.families);
      Vector init(block.m());
      for (Index j = 0; j < r; ++j) init.segment(block.offset(j), block.component(j).size()) =
          sc.truth.theta[static_cast<std::size_t>(j)];
      MleOptions mopt;
      if (options.fit_tau) mopt.tau = *options.fit_tau;
      const MleFit fit = fit_mle(full, block, init, mopt);
      for (Index a = 0; a < block.m(); ++a) {
        push(rows, rep, name, "theta" + std::to_string(a + 1), fit.theta_hat(a), init(a),
             std::sqrt(fit.covariance(a, a)));
      }
      break;
    }
    case Estimator::partly: {
      const std::vector<HazardFamily> fams(sc.truth.families.begin(),
                                           sc.truth.families.begin() + p);
      const ParametricBlock block(fams);
      const TimeGrid grid = build_time_grid(ds, options.fit_tau);
      PartlyOptions popt;
      popt.step_a.vn = options.vn;
      const PartlyFit fit =
          options.vn == VnChoice::optimal
              ? fit_partly(ds, fit_aalen_optimal(ds, grid), block, popt)
              : fit_partly(ds, fit_aalen(ds, grid), block, popt);
      Index a = 0;
      for (Index j = 0; j < p; ++j) {
        const Vector& th = sc.truth.theta[static_cast<std::size_t>(j)];
        for (Index c = 0; c < th.size(); ++c, ++a) {
          push(rows, rep, name, "theta" + std::to_string(a + 1), fit.theta_hat(a), th(c),
               std::sqrt(fit.theta_cov(a, a)));
        }
      }
      for (double t : times) {
        if (t > fit.tau()) throw RankError("requested time beyond the fit", t);
        const Vector truth = sc.truth.cumulative(t);
        const Vector A2 = fit.A2(t);
        const Matrix xi = joint_covariance(fit, t).xi22;
        for (Index j = 0; j < r - p; ++j) {
          push(rows, rep, name, at_label(p + j, t), A2(j), truth(p + j), std::sqrt(xi(j, j)));
        }
      }
      break;
    }
  }
  return rows;
}

}  // namespace

MonteCarloTable run_monte_carlo(const Scenario& sc, const MonteCarloOptions& options) {
  validate_scenario(sc);
  if (options.reps < 1) throw InputError("reps must be at least 1");
  if (std::find(options.estimators.begin(), options.estimators.end(), Estimator::partly) !=
          options.estimators.end() &&
      sc.p < 1) {
    throw InputError("partly mode requires p ≥ 1");
  }
  MonteCarloTable table;
  table.seed = options.seed;
  table.reps = options.reps;
  // Covariates come from their own stream and are held fixed across replicates.
  auto zrng = stream_rng(options.seed, ~std::uint64_t{0});
  table.covariates = draw_covariates(sc, zrng);

  const auto R = static_cast<std::size_t>(options.reps);
  std::vector<std::vector<McRow>> rows(R);
  std::vector<std::vector<std::string>> failures(R);
  std::vector<double> fractions(R, 0.0);
  parallel_for(options.reps, options.threads, [&](Index rep) {
    auto rng = stream_rng(options.seed, static_cast<std::uint64_t>(rep));
    const Dataset ds = simulate_dataset(sc, table.covariates, rng);
    double ev = 0.0;
    for (int s : ds.status) ev += s;
    fractions[static_cast<std::size_t>(rep)] = ev / static_cast<double>(ds.n());
    for (Estimator e : options.estimators) {
      try {
        auto r = fit_replicate(sc, ds, e, rep, options);
        auto& dst = rows[static_cast<std::size_t>(rep)];
        dst.insert(dst.end(), r.begin(), r.end());
      } catch (const std::exception& ex) {
        failures[static_cast<std::size_t>(rep)].push_back(std::to_string(rep) + " " +
                                                          estimator_name(e) + ": " + ex.what());
      }
    }
  });
  Index failed_reps = 0;
  for (std::size_t k = 0; k < R; ++k) {
    table.rows.insert(table.rows.end(), rows[k].begin(), rows[k].end());
    table.failures.insert(table.failures.end(), failures[k].begin(), failures[k].end());
    failed_reps += !failures[k].empty();
    table.event_fraction += fractions[k] / static_cast<double>(R);
  }
  if (static_cast<double>(failed_reps) > 0.05 * static_cast<double>(R)) {
    throw ConvergenceError(std::to_string(failed_reps) + " of " + std::to_string(R) +
                           " replications failed (limit 5%); first: " + table.failures.front());
  }
  return table;
}

std::vector<McSummaryRow> MonteCarloTable::summary(SeSource se, double level) const {
  std::vector<McSummaryRow> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<std::vector<const McRow*>> groups;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.estimator, row.estimand);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      McSummaryRow s;
      s.estimator = row.estimator;
      s.estimand = row.estimand;
      s.truth = row.truth;
      out.push_back(s);
      groups.emplace_back();
    }
    groups[it->second].push_back(&row);
  }
  const double crit =
      boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto& s = out[g];
    const auto& rs = groups[g];
    const double n = static_cast<double>(rs.size());
    s.count = static_cast<Index>(rs.size());
    for (const auto* r : rs) {
      s.mean += r->estimate / n;
      s.mean_se += r->se / n;
    }
    double ss = 0.0;
    for (const auto* r : rs) ss += (r->estimate - s.mean) * (r->estimate - s.mean);
    s.mc_sd = rs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::vector<double> z;
    for (const auto* r : rs) {
      z.push_back(se == SeSource::plugin ? r->z : (r->estimate - r->truth) / s.mc_sd);
    }
    for (double v : z) s.z_mean += v / n;
    double zz = 0.0;
    for (double v : z) zz += (v - s.z_mean) * (v - s.z_mean);
    s.z_sd = rs.size() > 1 ? std::sqrt(zz / (n - 1.0)) : 0.0;
    for (double v : z) s.coverage += (std::abs(v) <= crit) / n;
  }
  return out;
}

const McSummaryRow* MonteCarloTable::find(const std::vector<McSummaryRow>& rows,
                                          const std::string& estimator,
                                          const std::string& estimand) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && r.estimand == estimand) return &r;
  }
  return nullptr;
}

std::string mc_table_csv(const MonteCarloTable& table) {
  std::ostringstream out;
  out << "rep,estimator,estimand,estimate,truth,se,z\n";
  for (const auto& r : table.rows) {
    out << r.rep << ',' << r.estimator << ',' << r.estimand << ',' << format_double(r.estimate)
        << ',' << format_double(r.truth) << ',' << format_double(r.se) << ',' << format_double(r.z)
        << '\n';
  }
  return out.str();
}

std::string mc_summary_csv(const std::vector<McSummaryRow>& rows) {
  std::ostringstream out;
  out << "estimator,estimand,truth,mean,mc_sd,mean_se,z_mean,z_sd,coverage,count\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.estimand << ',' << format_double(r.truth) << ','
        << format_double(r.mean) << ',' << format_double(r.mc_sd) << ',' << format_double(r.mean_se)
        << ',' << format_double(r.z_mean) << ',' << format_double(r.z_sd) << ','
        << format_double(r.coverage) << ',' << r.count << '\n';
  }
  return out.str();
}

}  // namespace partly
