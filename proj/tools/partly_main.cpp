#include "config.hpp"

#include "partly/aalen.hpp"
#include "partly/data.hpp"
#include "partly/efficiency.hpp"
#include "partly/format.hpp"
#include "partly/gof.hpp"
#include "partly/mle.hpp"
#include "partly/partly_fit.hpp"
#include "partly/simgen.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace partly;
using partly::cli::RunConfig;

namespace {

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir_) / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (fs::path(dir_) / name).string());
    out << text;
    names_.push_back(name);
  }

  void manifest(const RunConfig& config) {
    std::ofstream out(fs::path(dir_) / "manifest.yaml", std::ios::binary);
    if (!out) throw InputError("cannot write manifest");
    out << cli::manifest_text(config, names_);
  }

 private:
  std::string dir_;
  std::vector<std::string> names_;
};

Dataset load_data(RunConfig& c) {
  Schema schema;
  schema.time_column = c.dataset.time;
  schema.status_column = c.dataset.status;
  schema.parametric = c.dataset.parametric;
  schema.nonparametric = c.dataset.nonparametric;
  Dataset ds = read_dataset_file(c.dataset.path, schema);
  c.dataset.nonparametric.assign(ds.names.begin() + ds.p, ds.names.end());
  return ds;
}

ParametricBlock make_block(const std::vector<std::string>& families) {
  std::vector<HazardFamily> out;
  for (const auto& f : families) out.push_back(HazardFamily::from_name(f));
  return ParametricBlock(out);
}

std::optional<Vector> initial_theta(const RunConfig& c, const ParametricBlock& block) {
  if (c.model.theta_init.empty()) return std::nullopt;
  if (static_cast<Index>(c.model.theta_init.size()) != block.m()) {
    throw InputError("model.theta_init needs " + std::to_string(block.m()) + " values");
  }
  return Vector(Eigen::Map<const Vector>(c.model.theta_init.data(), block.m()));
}

AalenFit pilot_fit(const RunConfig& c, const Dataset& ds) {
  const TimeGrid grid = build_time_grid(ds, c.fit.tau);
  AalenFit fit = c.fit.weights == "optimal" ? fit_aalen_optimal(ds, grid, c.fit.bandwidth)
                                            : fit_aalen(ds, grid);
  if (fit.warning) std::cerr << "warning: " << *fit.warning << '\n';
  return fit;
}

PartlyFit partly_fit(const RunConfig& c, const Dataset& ds) {
  const ParametricBlock block = make_block(c.model.families);
  PartlyOptions opt;
  opt.step_a.vn = c.fit.vn == "optimal" ? VnChoice::optimal : VnChoice::plain;
  opt.step_a.theta_init = initial_theta(c, block);
  auto aalen = std::make_shared<const AalenFit>(pilot_fit(c, ds));
  PartlyFit fit = fit_partly(ds, aalen, block, opt);
  if (fit.used_fallback) std::cerr << "note: step (a) used the Gauss-Newton fallback\n";
  return fit;
}

std::string theta_csv(const ParametricBlock& block, const std::vector<std::string>& columns,
                      const Vector& theta, const Matrix& cov) {
  std::ostringstream out;
  out << "column,family,parameter,estimate,se\n";
  for (Index j = 0; j < block.p(); ++j) {
    const HazardFamily& f = block.component(j);
    for (Index a = 0; a < f.size(); ++a) {
      const Index k = block.offset(j) + a;
      out << columns[static_cast<std::size_t>(j)] << ',' << f.name() << ',' << (a + 1) << ','
          << format_double(theta(k)) << ',' << format_double(std::sqrt(std::max(0.0, cov(k, k))))
          << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> slice(const std::vector<std::string>& names, Index from, Index count) {
  return {names.begin() + from, names.begin() + from + count};
}

int cmd_fit(RunConfig& c) {
  Outputs out(c.out);
  const Dataset ds = load_data(c);
  if (c.fit.mode == "aalen") {
    const AalenFit fit = pilot_fit(c, ds);
    out.write("A.csv", aalen_csv(fit, ds.names));
  } else if (c.fit.mode == "mle") {
    const Dataset full = make_dataset(ds.times, ds.status, ds.z, ds.r(), ds.names);
    const ParametricBlock block = make_block(c.model.families);
    if (block.p() != full.r()) throw InputError("mle mode needs one family per covariate column");
    Vector init;
    if (auto given = initial_theta(c, block)) {
      init = *given;
    } else {
      const AalenFit aalen = fit_aalen(full, build_time_grid(full, c.fit.tau));
      init = StepAProblem(full, aalen, block, VnChoice::plain).default_init();
    }
    MleOptions mopt;
    if (c.fit.tau) mopt.tau = *c.fit.tau;
    const MleFit fit = fit_mle(full, block, init, mopt);
    out.write("theta.csv", theta_csv(block, full.names, fit.theta_hat, fit.covariance));
    std::ostringstream report;
    report << "log_likelihood: " << format_double(fit.log_likelihood) << '\n'
           << "converged: " << (fit.converged ? "true" : "false") << '\n'
           << "iterations: " << fit.trace.size() << '\n';
    out.write("mle_report.txt", report.str());
    std::cout << report.str();
  } else {
    const PartlyFit fit = partly_fit(c, ds);
    const auto par = slice(ds.names, 0, ds.p), non = slice(ds.names, ds.p, ds.q());
    out.write("A.csv", aalen_csv(*fit.aalen, ds.names));
    out.write("theta.csv", theta_csv(fit.block, par, fit.theta_hat, fit.theta_cov));

    std::ostringstream a2;
    a2 << "time";
    for (const auto& n : non) a2 << ',' << n;
    for (const auto& n : non) a2 << ",se_" << n;
    a2 << '\n';
    const auto& knots = fit.A2.knots();
    for (std::size_t k = 0; k < knots.size(); ++k) {
      const Vector v = fit.A2.values()[k];
      const Matrix xi22 = joint_covariance(fit, knots[k]).xi22;
      a2 << format_double(knots[k]);
      for (Index j = 0; j < v.size(); ++j) a2 << ',' << format_double(v(j));
      for (Index j = 0; j < v.size(); ++j) a2 << ',' << format_double(std::sqrt(std::max(0.0, xi22(j, j))));
      a2 << '\n';
    }
    out.write("A2.csv", a2.str());

    if (!c.fit.xi_times.empty()) {
      std::ostringstream xi;
      xi << "time,row,col,value\n";
      for (double t : c.fit.xi_times) {
        const JointCovariance jc = joint_covariance(fit, t);
        if (jc.logged) std::cerr << "warning: covariance at t=" << format_double(t) << " was repaired\n";
        for (Index a = 0; a < jc.xi.rows(); ++a) {
          for (Index b = 0; b < jc.xi.cols(); ++b) {
            xi << format_double(t) << ',' << (a + 1) << ',' << (b + 1) << ',' << format_double(jc.xi(a, b))
               << '\n';
          }
        }
      }
      out.write("xi_t.csv", xi.str());
    }
    if (!c.fit.survival_z.empty()) {
      if (static_cast<Index>(c.fit.survival_z.size()) != ds.r()) {
        throw InputError("fit.survival_z needs " + std::to_string(ds.r()) + " values");
      }
      const Vector z = Eigen::Map<const Vector>(c.fit.survival_z.data(), ds.r());
      std::ostringstream sv;
      sv << "time,S,se,lower,upper\n";
      for (const SurvivalRow& row : survival_curve(fit, z, c.fit.survival_times)) {
        sv << format_double(row.t) << ',' << format_double(row.S) << ',' << format_double(row.se) << ','
           << format_double(row.lo) << ',' << format_double(row.hi) << '\n';
      }
      out.write("survival.csv", sv.str());
    }
  }
  out.manifest(c);
  return 0;
}

int cmd_gof(RunConfig& c) {
  Outputs out(c.out);
  const Dataset ds = load_data(c);
  const PartlyFit fit = partly_fit(c, ds);
  const MonitorWeight weight =
      c.gof.weight == "estimating" ? MonitorWeight::estimating() : MonitorWeight::unit();
  std::vector<Index> components = c.gof.components;
  if (components.empty()) {
    for (Index j = 1; j <= fit.p; ++j) components.push_back(j);
  }
  KsOptions ks;
  ks.method = c.gof.method == "bootstrap" ? KsMethod::bootstrap : KsMethod::gaussian;
  ks.B = c.gof.B;
  ks.seed = c.seed.value_or(0);
  ks.threads = c.threads;

  std::string report;
  for (Index j1 : components) {
    if (j1 < 1 || j1 > fit.p) {
      throw InputError("component " + std::to_string(j1) + " outside 1.." + std::to_string(fit.p));
    }
    const Index j = j1 - 1;
    out.write("monitor_" + std::to_string(j1) + ".csv", monitor_csv(monitoring_process(fit, j, weight)));
    GofReport r;
    if (c.gof.test != "ks") {
      r = c.gof.boundaries.empty() ? chi_squared_test(fit, j, c.gof.windows, weight)
                                   : chi_squared_test(fit, j, c.gof.boundaries, weight);
    }
    if (c.gof.test != "chisq") {
      const GofReport k = ks_test(ds, fit, j, ks, weight);
      r.j = j;
      r.ks = k.ks;
      r.ks_p = k.ks_p;
      r.method = k.method;
      r.B = k.B;
      r.seed = k.seed;
      r.failed_replicates = k.failed_replicates;
    }
    report += (report.empty() ? "" : "\n") + gof_report_text(r);
  }
  if (c.gof.simultaneous) {
    const SimultaneousReport s = simultaneous_test(ds, fit, ks, weight);
    std::ostringstream t;
    t << "\nsimultaneous: " << format_double(s.statistic) << "\nsimultaneous_p: " << format_double(s.p_value)
      << '\n';
    report += t.str();
  }
  out.write("gof_report.txt", report);
  std::cout << report;
  out.manifest(c);
  return 0;
}

int cmd_simulate(RunConfig& c) {
  Outputs out(c.out);
  MonteCarloOptions opt;
  opt.reps = c.simulate.reps;
  opt.seed = *c.seed;
  opt.threads = c.threads;
  opt.estimators.clear();
  for (const auto& e : c.simulate.estimators) {
    opt.estimators.push_back(e == "aalen" ? Estimator::aalen : e == "mle" ? Estimator::mle : Estimator::partly);
  }
  opt.times = c.simulate.times;
  opt.fit_tau = c.simulate.fit_tau;
  opt.vn = c.simulate.vn == "optimal" ? VnChoice::optimal : VnChoice::plain;
  opt.se = c.simulate.se == "monte_carlo" ? SeSource::monte_carlo : SeSource::plugin;
  opt.level = c.simulate.level;
  const MonteCarloTable table = run_monte_carlo(*c.scenario, opt);
  out.write("mc_table.csv", mc_table_csv(table));
  out.write("mc_summary.csv", mc_summary_csv(table.summary(opt.se, opt.level)));
  if (!table.failures.empty()) {
    std::string text;
    for (const auto& f : table.failures) text += f + '\n';
    out.write("mc_failures.txt", text);
    std::cerr << table.failures.size() << " replicate fits failed; see mc_failures.txt\n";
  }
  std::cout << "reps: " << table.reps << "\nevent_fraction: " << format_double(table.event_fraction) << '\n';
  out.manifest(c);
  return 0;
}

int cmd_efficiency(RunConfig& c) {
  Outputs out(c.out);
  const cli::EfficiencyConfig& e = c.efficiency;
  e.setup.check();
  std::ostringstream csv;
  std::string name;
  if (e.sieve) {
    name = "sieve.csv";
    if (e.setup.p < 1 || e.setup.q < 1) throw InputError("sieve needs p >= 1 and q >= 1");
    SieveSpec spec;
    spec.tau = e.tau;
    spec.block = ParametricBlock(std::vector<HazardFamily>(static_cast<std::size_t>(e.setup.p),
                                                           HazardFamily::from_name(e.family)));
    spec.theta = e.theta.empty() ? Vector(Vector::Ones(spec.block.m()))
                                 : Vector(Eigen::Map<const Vector>(e.theta.data(),
                                                                   static_cast<Index>(e.theta.size())));
    if (spec.theta.size() != spec.block.m()) {
      throw InputError("efficiency.theta needs " + std::to_string(spec.block.m()) + " values");
    }
    spec.F = gamma_f_path(e.setup);
    spec.threads = c.threads;
    const Matrix limit = sieve_limit(spec);
    csv << "K,parameter,variance,limit,relative_gap\n";
    for (Index K : e.K_grid) {
      spec.K = K;
      const Matrix v = sieve_information(spec).omega11_inv;
      for (Index a = 0; a < v.rows(); ++a) {
        csv << K << ',' << (a + 1) << ',' << format_double(v(a, a)) << ',' << format_double(limit(a, a))
            << ',' << format_double((limit(a, a) - v(a, a)) / limit(a, a)) << '\n';
      }
    }
  } else if (e.curve == "are") {
    name = "efficiency.csv";
    csv << "are\n" << format_double(are_weights(e.setup)) << '\n';
  } else {
    name = "efficiency.csv";
    csv << "u,ratio\n";
    for (double u : e.u_grid) {
      const double v = e.curve == "param" ? ineff_parametric(e.setup, u) : ineff_backfit(e.setup, u, e.printed);
      csv << format_double(u) << ',' << format_double(v) << '\n';
    }
  }
  out.write(name, csv.str());
  std::cout << csv.str();
  out.manifest(c);
  return 0;
}

template <class T>
void take(const CLI::Option* opt, const T& value, T& target) {
  if (opt->count() > 0) target = value;
}

template <class T>
void take(const CLI::Option* opt, const T& value, std::optional<T>& target) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive hazards regression with parametric and nonparametric regressor functions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "partly " PARTLY_VERSION);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", config_path, "YAML config or a manifest from an earlier run");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_seed = app.add_option("--seed", seed, "Seed for randomized procedures");
  auto* o_threads = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  // Dataset and model flags shared by fit and gof.
  struct DataFlags {
    std::string path, time, status;
    std::vector<std::string> parametric, nonparametric, families;
    std::vector<double> theta_init;
    std::string weights, vn;
    double tau = 0, bandwidth = 0;
    CLI::Option *o_path, *o_time, *o_status, *o_par, *o_non, *o_fam, *o_init, *o_weights, *o_vn,
        *o_tau, *o_bw;
  };
  auto add_data_flags = [](CLI::App* sub, DataFlags& f) {
    f.o_path = sub->add_option("dataset", f.path, "Dataset CSV");
    f.o_time = sub->add_option("--time", f.time, "Time column");
    f.o_status = sub->add_option("--status", f.status, "Status column");
    f.o_par = sub->add_option("--parametric", f.parametric, "Parametric covariate columns")->delimiter(',')->allow_extra_args(false);
    f.o_non = sub->add_option("--nonparametric", f.nonparametric, "Nonparametric covariate columns")
                  ->delimiter(',')->allow_extra_args(false);
    f.o_fam = sub->add_option("--families", f.families, "Family per parametric column")->delimiter(',')->allow_extra_args(false);
    f.o_init = sub->add_option("--theta-init", f.theta_init, "Starting parameters")->delimiter(',')->allow_extra_args(false);
    f.o_weights = sub->add_option("--weights", f.weights, "Aalen weights")
                      ->check(CLI::IsMember({"plain", "optimal"}));
    f.o_vn = sub->add_option("--vn", f.vn, "Step (a) weight matrix")->check(CLI::IsMember({"plain", "optimal"}));
    f.o_tau = sub->add_option("--tau", f.tau, "End of the fitting interval");
    f.o_bw = sub->add_option("--bandwidth", f.bandwidth, "Pilot smoothing bandwidth");
  };
  auto apply_data_flags = [](const DataFlags& f, RunConfig& c) {
    if (f.o_path->count()) c.dataset.path = fs::absolute(f.path).lexically_normal().string();
    take(f.o_time, f.time, c.dataset.time);
    take(f.o_status, f.status, c.dataset.status);
    take(f.o_par, f.parametric, c.dataset.parametric);
    take(f.o_non, f.nonparametric, c.dataset.nonparametric);
    take(f.o_fam, f.families, c.model.families);
    take(f.o_init, f.theta_init, c.model.theta_init);
    take(f.o_weights, f.weights, c.fit.weights);
    take(f.o_vn, f.vn, c.fit.vn);
    take(f.o_tau, f.tau, c.fit.tau);
    take(f.o_bw, f.bandwidth, c.fit.bandwidth);
  };

  auto* fit = app.add_subcommand("fit", "Fit the Aalen, maximum likelihood or partly parametric model");
  DataFlags fit_flags;
  add_data_flags(fit, fit_flags);
  std::string mode;
  std::vector<double> xi_times, survival_z, survival_times;
  auto* o_mode = fit->add_option("--mode", mode, "Estimator")->check(CLI::IsMember({"aalen", "mle", "partly"}));
  auto* o_xi = fit->add_option("--xi-times", xi_times, "Write the joint covariance at these times")->delimiter(',')->allow_extra_args(false);
  auto* o_sz = fit->add_option("--survival-z", survival_z, "Covariate vector for survival.csv")->delimiter(',')->allow_extra_args(false);
  auto* o_st = fit->add_option("--survival-times", survival_times, "Times for survival.csv")->delimiter(',')->allow_extra_args(false);

  auto* gof = app.add_subcommand("gof", "Goodness-of-fit tests for the parametric components");
  DataFlags gof_flags;
  add_data_flags(gof, gof_flags);
  std::vector<Index> components;
  std::string test, method, weight;
  Index windows = 4, B = 1000;
  std::vector<double> boundaries;
  auto* o_comp = gof->add_option("--component", components, "Component(s), 1-based")->delimiter(',')->allow_extra_args(false);
  auto* o_test = gof->add_option("--test", test, "Test")->check(CLI::IsMember({"chisq", "ks", "both"}));
  auto* o_windows = gof->add_option("--windows", windows, "Number of chi-squared windows");
  auto* o_bounds = gof->add_option("--boundaries", boundaries, "Explicit window boundaries")->delimiter(',')->allow_extra_args(false);
  auto* o_method = gof->add_option("--method", method, "KS calibration")
                       ->check(CLI::IsMember({"gaussian", "bootstrap"}));
  auto* o_B = gof->add_option("--B", B, "KS replicates");
  auto* o_weight = gof->add_option("--weight", weight, "Monitoring weight")
                       ->check(CLI::IsMember({"unit", "estimating"}));
  auto* o_simul = gof->add_flag("--simultaneous", "Add the summed KS statistic over all components");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  std::string scenario_path, se, sim_vn;
  Index reps = 0;
  std::vector<std::string> estimators;
  std::vector<double> times;
  double fit_tau = 0, level = 0;
  auto* o_scen = sim->add_option("--scenario", scenario_path, "Scenario YAML");
  auto* o_reps = sim->add_option("--reps", reps, "Replications");
  auto* o_est = sim->add_option("--estimators", estimators, "aalen, mle, partly")->delimiter(',')->allow_extra_args(false);
  auto* o_times = sim->add_option("--times", times, "Evaluation times")->delimiter(',')->allow_extra_args(false);
  auto* o_ftau = sim->add_option("--fit-tau", fit_tau, "End of the fitting interval");
  auto* o_se = sim->add_option("--se", se, "Standard errors for the z-statistics")
                   ->check(CLI::IsMember({"plugin", "monte_carlo"}));
  auto* o_svn = sim->add_option("--vn", sim_vn, "Step (a) weight matrix")->check(CLI::IsMember({"plain", "optimal"}));
  auto* o_level = sim->add_option("--level", level, "Interval coverage level");

  auto* eff = app.add_subcommand("efficiency", "Efficiency curves and sieve convergence under gamma covariates");
  std::vector<std::string> setup_tokens, setup_flag;
  std::string curve, family;
  std::vector<double> u_grid, eff_theta;
  std::vector<Index> K_grid;
  double eff_tau = 1.0;
  eff->add_option("tokens", setup_tokens, "key=value entries: c, gamma, alpha, r, p, q, k");
  eff->add_option("--setup", setup_flag, "Comma separated key=value entries")->allow_extra_args(false);
  auto* o_curve = eff->add_option("--curve", curve, "Curve")->check(CLI::IsMember({"are", "param", "backfit"}));
  auto* o_ugrid = eff->add_option("--u-grid", u_grid, "u values")->delimiter(',')->allow_extra_args(false);
  auto* o_printed = eff->add_flag("--printed", "Backfit ratio with 1 - cr and 1 - cq denominators");
  auto* o_sieve = eff->add_flag("--sieve", "Sieve convergence table");
  auto* o_kgrid = eff->add_option("--K-grid", K_grid, "Window counts")->delimiter(',')->allow_extra_args(false);
  auto* o_family = eff->add_option("--family", family, "Family of the parametric components");
  auto* o_etheta = eff->add_option("--theta", eff_theta, "Family parameters")->delimiter(',')->allow_extra_args(false);
  auto* o_etau = eff->add_option("--tau", eff_tau, "Sieve horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig c = config_path.empty() ? RunConfig{} : cli::load_config(config_path);
    if (!c.command.empty() && c.command != command) {
      throw InputError("config was written for `" + c.command + "`, not `" + command + "`");
    }
    c.command = command;
    if (o_out->count()) c.out = fs::absolute(out_dir).lexically_normal().string();
    if (o_seed->count()) c.seed = seed;
    take(o_threads, threads, c.threads);

    if (command == "fit") {
      apply_data_flags(fit_flags, c);
      take(o_mode, mode, c.fit.mode);
      take(o_xi, xi_times, c.fit.xi_times);
      take(o_sz, survival_z, c.fit.survival_z);
      take(o_st, survival_times, c.fit.survival_times);
    } else if (command == "gof") {
      apply_data_flags(gof_flags, c);
      c.fit.mode = "partly";
      take(o_comp, components, c.gof.components);
      take(o_test, test, c.gof.test);
      take(o_windows, windows, c.gof.windows);
      take(o_bounds, boundaries, c.gof.boundaries);
      take(o_method, method, c.gof.method);
      take(o_B, B, c.gof.B);
      take(o_weight, weight, c.gof.weight);
      if (o_simul->count()) c.gof.simultaneous = true;
    } else if (command == "simulate") {
      if (o_scen->count()) {
        c.scenario = cli::load_scenario(scenario_path);
        c.simulate = cli::load_simulate_section(scenario_path);
      }
      take(o_reps, reps, c.simulate.reps);
      take(o_est, estimators, c.simulate.estimators);
      take(o_times, times, c.simulate.times);
      take(o_ftau, fit_tau, c.simulate.fit_tau);
      take(o_se, se, c.simulate.se);
      take(o_svn, sim_vn, c.simulate.vn);
      take(o_level, level, c.simulate.level);
    } else {
      std::vector<std::string> tokens = setup_flag;
      tokens.insert(tokens.end(), setup_tokens.begin(), setup_tokens.end());
      cli::apply_setup_tokens(c.efficiency.setup, tokens);
      take(o_curve, curve, c.efficiency.curve);
      take(o_ugrid, u_grid, c.efficiency.u_grid);
      if (o_printed->count()) c.efficiency.printed = true;
      if (o_sieve->count()) c.efficiency.sieve = true;
      take(o_kgrid, K_grid, c.efficiency.K_grid);
      take(o_family, family, c.efficiency.family);
      take(o_etheta, eff_theta, c.efficiency.theta);
      take(o_etau, eff_tau, c.efficiency.tau);
    }
    cli::validate(c);

    if (command == "fit") return cmd_fit(c);
    if (command == "gof") return cmd_gof(c);
    if (command == "simulate") return cmd_simulate(c);
    return cmd_efficiency(c);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const RankError& e) {
    std::cerr << "numerical failure: " << e.what() << " (t = " << format_double(e.time()) << ")\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
