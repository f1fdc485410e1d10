#pragma once

#include "partly/partly_fit.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace partly {

// Weight applied to the parametric-block increments when monitoring
// component j. `unit` is K = 1 on component j; `estimating` is row j of
// alpha*_(1)^t V_n, for which R_{n,j}(tau) = 0; `scalar` is K(s) on
// component j.
struct MonitorWeight {
  enum class Kind { unit, estimating, scalar };
  Kind kind = Kind::unit;
  std::function<double(double)> scalar_fn;

  static MonitorWeight unit() { return {}; }
  static MonitorWeight estimating() { return {Kind::estimating, {}}; }
  static MonitorWeight scalar(std::function<double(double)> fn) {
    return {Kind::scalar, std::move(fn)};
  }
};

struct MonitoringPath {
  Index j = 0;                // zero-based component
  StepPath<double> at_knots;  // R_{n,j}(u_k)
  std::vector<double> left;   // R_{n,j}(u_k-), same length as the knots
  double sup() const;         // max over knots and left limits of |R|
};

MonitoringPath monitoring_process(const PartlyFit& fit, Index j,
                                  const MonitorWeight& weight = MonitorWeight::unit());

// Value of R_{n,j} at any t in [0, tau], including the drift inside an
// interval.
double monitoring_value(const PartlyFit& fit, Index j, const MonitorWeight& weight, double t);

double gof_covariance(const PartlyFit& fit, Index j, const MonitorWeight& weight, double t1,
                      double t2);

enum class KsMethod { gaussian, bootstrap };

struct GofReport {
  Index j = 0;
  std::vector<double> boundaries;  // c_0 = 0 < ... < c_k = tau
  Vector increments;
  Matrix sigma;
  double chi2 = 0.0;
  Index df = 0;
  double chi2_p = 1.0;
  bool rank_reduced = false;

  double ks = 0.0;
  double ks_p = 1.0;
  std::string method;
  Index B = 0;
  std::uint64_t seed = 0;
  Index failed_replicates = 0;
};

struct ChiSquared {
  double statistic = 0.0;
  Index df = 0;
  double p_value = 1.0;
};

// d^t S^+ d with df = rank(S) after PSD repair.
ChiSquared chi_squared_statistic(const Vector& d, const Matrix& sigma);

// Boundaries at event-count quantiles: k windows with nearly equal event
// counts, the last one closed at tau.
std::vector<double> quantile_windows(const PartlyFit& fit, Index k);

GofReport chi_squared_test(const PartlyFit& fit, Index j, const std::vector<double>& boundaries,
                           const MonitorWeight& weight = MonitorWeight::unit());
GofReport chi_squared_test(const PartlyFit& fit, Index j, Index windows = 4,
                           const MonitorWeight& weight = MonitorWeight::unit());

struct KsOptions {
  KsMethod method = KsMethod::gaussian;
  Index B = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

// The bootstrap method needs the dataset the fit came from.
GofReport ks_test(const Dataset& ds, const PartlyFit& fit, Index j, const KsOptions& options,
                  const MonitorWeight& weight = MonitorWeight::unit());

// sum_j ||R_{n,j}|| over all parametric components with the same
// calibration as ks_test. `components` holds the individual statistics.
struct SimultaneousReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> components;
};

SimultaneousReport simultaneous_test(const Dataset& ds, const PartlyFit& fit,
                                     const KsOptions& options,
                                     const MonitorWeight& weight = MonitorWeight::unit());

// Bootstrap dataset from the fitted mixed cumulative hazard, with censoring
// drawn from the reverse Kaplan-Meier estimate.
Dataset bootstrap_dataset(const Dataset& ds, const PartlyFit& fit, std::mt19937_64& rng);

std::string monitor_csv(const MonitoringPath& path);
std::string gof_report_text(const GofReport& report);

}  // namespace partly
