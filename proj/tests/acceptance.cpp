// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "config.hpp"
#include "support.hpp"

#include "partly/aalen.hpp"
#include "partly/efficiency.hpp"
#include "partly/gof.hpp"
#include "partly/mle.hpp"
#include "partly/parallel.hpp"
#include "partly/partly_fit.hpp"
#include "partly/simgen.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

using namespace partly;
using partly::testing::random_dataset;
using partly::testing::three_subjects;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

int workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

void criterion(int id, double budget_seconds, const std::function<void(Verdict&)>& body, int& failed) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << "[exception: " << e.what() << "] ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < budget_seconds, "runtime over " + std::to_string(budget_seconds) + " s");
  std::printf("criterion %d: %s (%.2f s) %s\n", id, v.pass ? "PASS" : "FAIL", secs, v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.pass) ++failed;
}

// 1. Three-subject oracle.
void small_instance(Verdict& v) {
  const Dataset ds = three_subjects();
  const AalenFit fit = fit_aalen(ds, build_time_grid(ds));
  const auto inc = fit.event_increments();
  v.require(inc.size() == 2, "two event increments");
  Vector d1(2), d2(2);
  d1 << 0.5, -0.5;
  d2 << 0.0, 1.0;
  Matrix var(2, 2);
  var << 0.25, -0.25, -0.25, 0.25;
  const double e1 = (inc[0] - d1).cwiseAbs().maxCoeff();
  const double e2 = (inc[1] - d2).cwiseAbs().maxCoeff();
  const double e3 = (fit.variance_path(1.0) - var).cwiseAbs().maxCoeff();
  v.require(e1 < 1e-12 && e2 < 1e-12, "increments");
  v.require(e3 < 1e-12, "variance at t=1");
  v.detail << "max errors " << e1 << ", " << e2 << ", " << e3;
}

// 2. Reductions.
void reductions(Verdict& v) {
  std::mt19937_64 rng(2);
  // Intercept only, with ties: Aalen against Nelson-Aalen summed directly.
  const Dataset one = random_dataset(rng, 300, 1, 0, true);
  const TimeGrid g1 = build_time_grid(one);
  const AalenFit a1 = fit_aalen(one, g1);
  double na = 0.0, worst_na = 0.0;
  for (Index k = 1; k <= g1.intervals(); ++k) {
    const double u = g1.knots[static_cast<std::size_t>(k)];
    double d = 0.0, y = 0.0;
    for (Index i = 0; i < one.n(); ++i) {
      y += one.times(i) >= u;
      d += one.times(i) == u && one.status[static_cast<std::size_t>(i)] == 1;
    }
    na += d / y;
    worst_na = std::max(worst_na, std::abs(a1.cumulative(u)(0) - na));
  }
  v.require(worst_na < 1e-10, "intercept-only Aalen vs Nelson-Aalen");

  // Constant family: MLE and step (a) against D / R on [0, tau].
  const Dataset p1 = make_dataset(one.times, one.status, one.z, 1);
  const double tau = g1.tau;
  double D = 0.0, R = 0.0;
  for (Index i = 0; i < p1.n(); ++i) {
    R += std::min(p1.times(i), tau);
    D += p1.status[static_cast<std::size_t>(i)] == 1 && p1.times(i) <= tau;
  }
  const ParametricBlock cst({HazardFamily::constant()});
  MleOptions mopt;
  mopt.tau = tau;
  const MleFit mle = fit_mle(p1, cst, Vector::Constant(1, 1.0), mopt);
  const StepAResult sa = fit_step_a(p1, fit_aalen(p1, g1), cst);
  const double e_mle = std::abs(mle.theta_hat(0) - D / R), e_sa = std::abs(sa.theta_hat(0) - D / R);
  v.require(e_mle < 1e-10, "constant MLE vs D/R");
  v.require(e_sa < 1e-10, "constant step (a) vs D/R");

  // p = 0 backfit against the Aalen fit.
  const Dataset three = random_dataset(rng, 200, 3, 0);
  const TimeGrid g3 = build_time_grid(three);
  const AalenFit a3 = fit_aalen(three, g3);
  const A2Path b = backfit_step_b(three, a3.grid, Vector(0), ParametricBlock());
  double worst_b = 0.0;
  for (double u : a3.grid.knots) worst_b = std::max(worst_b, (b(u) - a3.cumulative(u)).cwiseAbs().maxCoeff());
  v.require(worst_b < 1e-10, "p = 0 backfit vs Aalen");
  v.detail << "Nelson-Aalen " << worst_na << ", MLE " << e_mle << ", step (a) " << e_sa
           << ", backfit " << worst_b;
}

// 3 and 4. Monte Carlo at the shipped design.
struct McRun {
  MonteCarloTable table;
  std::vector<McSummaryRow> summary;
};

McRun reference_mc() {
  const cli::RunConfig cfg = cli::load_config(std::string(PARTLY_CONFIGS) + "/reference_scenario.yaml");
  MonteCarloOptions opt;
  opt.reps = cfg.simulate.reps;
  opt.seed = cfg.seed.value();
  opt.threads = workers();
  opt.times = cfg.simulate.times;
  opt.fit_tau = cfg.simulate.fit_tau;
  opt.estimators = {Estimator::aalen, Estimator::partly};
  McRun run{run_monte_carlo(*cfg.scenario, opt), {}};
  run.summary = run.table.summary();
  return run;
}

void mc_reproduction(Verdict& v, const McRun& mc) {
  const MonteCarloTable& t = mc.table;
  v.require(t.reps == 200, "200 replications");
  v.require(t.failures.empty(), std::to_string(t.failures.size()) + " failed fits");
  v.require(std::abs(t.event_fraction - 0.55) <= 0.08, "event fraction");
  v.detail << "events " << t.event_fraction << ";";
  for (const char* e : {"theta1", "theta2", "theta3", "A3(0.5)", "A4(0.5)"}) {
    const McSummaryRow* r = t.find(mc.summary, "partly", e);
    if (!r) {
      v.require(false, std::string("missing ") + e);
      continue;
    }
    v.require(std::abs(r->z_mean) < 0.15, std::string(e) + " z mean");
    v.require(r->z_sd >= 0.85 && r->z_sd <= 1.15, std::string(e) + " z sd");
    v.require(r->coverage >= 0.90 && r->coverage <= 0.98, std::string(e) + " coverage");
    char buf[160];
    std::snprintf(buf, sizeof buf, " %s z=%.3f/%.3f cov=%.3f;", e, r->z_mean, r->z_sd, r->coverage);
    v.detail << buf;
  }
}

void efficiency_gain(Verdict& v, const McRun& mc) {
  for (const char* j : {"A3", "A4"}) {
    for (const char* t : {"0.3", "0.5", "0.7"}) {
      const std::string e = std::string(j) + "(" + t + ")";
      const McSummaryRow* p = mc.table.find(mc.summary, "partly", e);
      const McSummaryRow* a = mc.table.find(mc.summary, "aalen", e);
      if (!p || !a) {
        v.require(false, "missing " + e);
        continue;
      }
      v.require(p->mc_sd <= a->mc_sd, e);
      char buf[120];
      std::snprintf(buf, sizeof buf, " %s %.5g<=%.5g;", e.c_str(), p->mc_sd, a->mc_sd);
      v.detail << buf;
    }
  }
}

// 5. GOF size and power on the power component.
struct Rates {
  double chisq = 0.0, ks = 0.0;
  Index failures = 0;
};

Rates gof_rates(const Scenario& sc, const ParametricBlock& block, double fit_tau, std::uint64_t seed,
                Index reps) {
  std::vector<int> chi(static_cast<std::size_t>(reps), 0), ks(static_cast<std::size_t>(reps), 0),
      bad(static_cast<std::size_t>(reps), 0);
  parallel_for(reps, workers(), [&](Index rep) {
    auto rng = stream_rng(seed, static_cast<std::uint64_t>(rep));
    const Matrix z = draw_covariates(sc, rng);
    const Dataset ds = simulate_dataset(sc, z, rng);
    const auto i = static_cast<std::size_t>(rep);
    try {
      auto aalen = std::make_shared<const AalenFit>(fit_aalen(ds, build_time_grid(ds, fit_tau)));
      const PartlyFit fit = fit_partly(ds, aalen, block);
      KsOptions ko;
      ko.B = 1000;
      ko.seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(rep + 1));
      chi[i] = chi_squared_test(fit, 0, 4).chi2_p < 0.05;
      ks[i] = ks_test(ds, fit, 0, ko).ks_p < 0.05;
    } catch (const std::exception&) {
      bad[i] = 1;
    }
  });
  Rates r;
  for (Index i = 0; i < reps; ++i) {
    r.chisq += chi[static_cast<std::size_t>(i)];
    r.ks += ks[static_cast<std::size_t>(i)];
    r.failures += bad[static_cast<std::size_t>(i)];
  }
  r.chisq /= static_cast<double>(reps);
  r.ks /= static_cast<double>(reps);
  return r;
}

void gof_size_power(Verdict& v) {
  const cli::RunConfig cfg = cli::load_config(std::string(PARTLY_CONFIGS) + "/reference_scenario.yaml");
  const Scenario& sc = *cfg.scenario;
  const double fit_tau = cfg.simulate.fit_tau.value_or(sc.horizon());
  const Rates null = gof_rates(sc, ParametricBlock({HazardFamily::power(), HazardFamily::linear()}), fit_tau,
                               501, 200);
  const Rates alt = gof_rates(sc, ParametricBlock({HazardFamily::constant(), HazardFamily::linear()}), fit_tau,
                              502, 200);
  v.require(null.failures == 0 && alt.failures == 0, "failed fits");
  v.require(null.chisq >= 0.02 && null.chisq <= 0.10, "chi-squared size");
  v.require(null.ks >= 0.02 && null.ks <= 0.10, "KS size");
  v.require(alt.chisq > 0.30, "chi-squared power");
  v.require(alt.ks > 0.30, "KS power");
  v.detail << "size chisq " << null.chisq << " ks " << null.ks << "; power chisq " << alt.chisq << " ks "
           << alt.ks;
}

// 6. Closed forms of the gamma setup.
GammaSetup gamma_setup(double c, double gamma, double alpha, Index p, Index q, double k) {
  GammaSetup gs;
  gs.c = c;
  gs.gamma = gamma;
  gs.alpha = alpha;
  gs.p = p;
  gs.q = q;
  gs.r = p + q;
  gs.k = k;
  return gs;
}

void closed_forms(Verdict& v) {
  const GammaSetup unit = gamma_setup(1, 1, 1, 1, 1, 0);
  v.require(are_weights(unit) == 4.0 / 3.0, "are = 4/3");
  v.require(ineff_parametric(unit, 1.0) == 1.875, "ineff = 1.875");

  double worst = 0.0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const GammaSetup gs = trial == 0 ? unit
                                     : gamma_setup(0.3 + 2 * u(rng), 0.5 + 2 * u(rng), 0.5 + 2 * u(rng), 1,
                                                   1 + static_cast<Index>(2 * u(rng)), 0.5 + 2 * u(rng));
    auto f_rho = [&](double s) { return gamma_moments(gs, s).f * gs.rho(s); };
    const double int_f = boost::math::quadrature::exp_sinh<double>().integrate(f_rho);
    const double cr = gs.c * static_cast<double>(gs.r);
    const double closed = gs.c * gs.c / (gs.alpha * gs.alpha * (cr + 1.0) * (cr + gs.k));
    worst = std::max(worst, rel(int_f, closed));
    const double t = 1.3 * gs.gamma / gs.alpha;
    const double int_inv = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) { return 1.0 / f_rho(s); }, 0.0, t, 15, 1e-13);
    worst = std::max(worst, rel(ineff_parametric(gs, 1.3), int_inv * int_f / (t * t)));
    const double plain = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) {
          const GammaMoments m = gamma_moments(gs, s);
          return m.h / (gs.rho(s) * m.g * m.g);
        },
        0.0, t, 15, 1e-13);
    worst = std::max(worst, rel(are_weights(gs), plain / int_inv));
    for (double s : {0.1, 0.8, 3.0}) {
      const double h = 1e-5 * (1.0 + s);
      const GammaMoments m = gamma_moments(gs, s), up = gamma_moments(gs, s + h), dn = gamma_moments(gs, s - h);
      worst = std::max(worst, rel(-(up.f - dn.f) / (2 * h), m.g));
      worst = std::max(worst, rel(-(up.g - dn.g) / (2 * h), m.h));
    }
  }
  v.require(worst < 1e-6, "quadrature and derivative cross-checks");
  v.detail << "are " << are_weights(unit) << ", ineff " << ineff_parametric(unit, 1.0)
           << ", worst relative cross-check " << worst;
}

// 7. Sieve convergence for the constant family.
void sieve(Verdict& v) {
  SieveSpec spec;
  spec.tau = 1.0;
  spec.block = ParametricBlock({HazardFamily::constant()});
  spec.theta = Vector::Constant(1, 1.0);
  spec.F = gamma_f_path(gamma_setup(1, 1, 1, 1, 1, 0));
  spec.threads = workers();
  // F = f (I + e e^t) with f = 1 / (3 (1 + s)^3); limit information int (F11 - F12^2 / F22).
  const double info = boost::math::quadrature::tanh_sinh<double>().integrate(
      [](double s) {
        const double f = 1.0 / (3.0 * std::pow(1.0 + s, 3.0));
        return 2.0 * f - f * f / (2.0 * f);
      },
      0.0, 1.0);
  const double limit = 1.0 / info;
  double prev = 0.0;
  for (Index K : {10, 20, 40, 80, 160, 320}) {
    spec.K = K;
    const double x = sieve_information(spec).omega11_inv(0, 0);
    v.require(x >= prev - 1e-12 * std::abs(x), "nondecreasing at K=" + std::to_string(K));
    prev = x;
  }
  spec.K = 200;
  const double at200 = sieve_information(spec).omega11_inv(0, 0);
  v.require(rel(at200, limit) < 0.01, "within 1% at K=200");
  v.detail << "K=200 " << at200 << " vs limit " << limit << " (relative " << rel(at200, limit) << ")";
}

// 8. Derivatives, inversion, determinism.
void derivatives_and_determinism(Verdict& v) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_grad = 0.0;
  for (const HazardFamily& f : {HazardFamily::constant(), HazardFamily::power(), HazardFamily::linear()}) {
    for (int i = 0; i < 20; ++i) {
      const double s = 0.05 + 2.0 * u(rng);
      Vector th(f.size());
      for (Index a = 0; a < th.size(); ++a) th(a) = 0.3 + 2.0 * u(rng);
      const Vector g = f.grad(s, th);
      const Vector cg = f.cumulative_grad(0.0, s, th);
      Vector fd(th.size()), cfd(th.size());
      for (Index a = 0; a < th.size(); ++a) {
        const double h = 1e-6 * std::max(1.0, std::abs(th(a)));
        Vector up = th, dn = th;
        up(a) += h;
        dn(a) -= h;
        fd(a) = (f.alpha(s, up) - f.alpha(s, dn)) / (2 * h);
        cfd(a) = (f.cumulative(0.0, s, up) - f.cumulative(0.0, s, dn)) / (2 * h);
      }
      worst_grad = std::max(worst_grad, (g - fd).norm() / fd.norm());
      worst_grad = std::max(worst_grad, (cg - cfd).norm() / cfd.norm());
    }
  }
  v.require(worst_grad < 1e-5, "family gradients");

  // sample_survival against the quadratic-formula inverse of a t + b t^2 / 2.
  HazardTruth truth;
  truth.families = {HazardFamily::constant(), HazardFamily::linear()};
  Vector c0(1), c1(1);
  c0 << 0.7;
  c1 << 1.9;
  truth.theta = {c0, c1};
  double worst_inv = 0.0;
  for (int i = 0; i < 200; ++i) {
    Vector z(2);
    z << 0.2 + u(rng), 0.2 + u(rng);
    std::mt19937_64 draw(1000 + static_cast<std::uint64_t>(i)), copy = draw;
    const double E = -std::log(std::uniform_real_distribution<double>(0.0, 1.0)(copy));
    const double a = z(0) * 0.7, b = z(1) * 1.9 / 2.0;
    const double oracle = 2.0 * E / (a + std::sqrt(a * a + 4.0 * b * E));
    const SurvivalDraw d = sample_survival(z, truth, CensorLaw::none(), 1e6, draw);
    worst_inv = std::max(worst_inv, std::abs(d.time - oracle));
    const double bis = bisection_inverse(truth, z, E, 1.0);
    worst_inv = std::max(worst_inv, std::abs(bis - oracle));
  }
  v.require(worst_inv < 1e-9, "inversion");

  // Byte determinism of the randomized pipelines.
  Scenario sc = reference_scenario(1000);
  MonteCarloOptions mo;
  mo.reps = 4;
  mo.seed = 77;
  mo.fit_tau = 0.9;
  mo.estimators = {Estimator::aalen, Estimator::mle, Estimator::partly};
  mo.threads = 1;
  const std::string one = mc_table_csv(run_monte_carlo(sc, mo));
  mo.threads = 3;
  const std::string three = mc_table_csv(run_monte_carlo(sc, mo));
  v.require(one == three, "Monte Carlo table across thread counts");

  std::mt19937_64 r1 = stream_rng(5, 0), r2 = stream_rng(5, 0);
  const Matrix z1 = draw_covariates(reference_scenario(400), r1);
  const Matrix z2 = draw_covariates(reference_scenario(400), r2);
  const Dataset ds = simulate_dataset(reference_scenario(400), z1, r1);
  v.require(serialize_dataset(ds) == serialize_dataset(simulate_dataset(reference_scenario(400), z2, r2)),
            "simulated dataset");
  auto aalen = std::make_shared<const AalenFit>(fit_aalen(ds, build_time_grid(ds, 0.9)));
  const PartlyFit fit = fit_partly(ds, aalen, ParametricBlock({HazardFamily::power(), HazardFamily::linear()}));
  for (KsMethod m : {KsMethod::gaussian, KsMethod::bootstrap}) {
    KsOptions ko;
    ko.method = m;
    ko.B = 100;
    ko.seed = 31;
    ko.threads = 1;
    const std::string a = gof_report_text(ks_test(ds, fit, 0, ko));
    ko.threads = 3;
    const std::string b = gof_report_text(ks_test(ds, fit, 0, ko));
    v.require(a == b, m == KsMethod::gaussian ? "gaussian KS" : "bootstrap KS");
  }
  v.detail << "worst gradient " << worst_grad << ", worst inversion " << worst_inv
           << ", MC/dataset/KS outputs identical";
}

}  // namespace

int main() {
  int failed = 0;
  criterion(1, 1.0, small_instance, failed);
  criterion(2, 1.0, reductions, failed);
  McRun mc;
  criterion(3, 900.0, [&](Verdict& v) {
    mc = reference_mc();
    mc_reproduction(v, mc);
  }, failed);
  criterion(4, 1.0, [&](Verdict& v) { efficiency_gain(v, mc); }, failed);
  criterion(5, 1800.0, gof_size_power, failed);
  criterion(6, 60.0, closed_forms, failed);
  criterion(7, 60.0, sieve, failed);
  criterion(8, 300.0, derivatives_and_determinism, failed);
  std::printf("%d of 8 criteria failed\n", failed);
  return failed;
}
