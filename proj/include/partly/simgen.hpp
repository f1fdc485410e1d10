#pragma once

#include "partly/family.hpp"
#include "partly/partly_fit.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace partly {

struct ColumnLaw {
  enum class Kind { constant, uniform };
  Kind kind = Kind::uniform;
  double a = 0.0, b = 1.0;  // constant value a, or Uniform(a, b)
  // Added multiples of earlier columns: (column, coefficient).
  std::vector<std::pair<Index, double>> plus;

  static ColumnLaw constant(double v) { return {Kind::constant, v, v, {}}; }
  static ColumnLaw uniform(double a, double b) { return {Kind::uniform, a, b, {}}; }
  ColumnLaw with(Index column, double coefficient) const {
    ColumnLaw out = *this;
    out.plus.emplace_back(column, coefficient);
    return out;
  }
};

struct CensorLaw {
  enum class Kind { none, uniform, degenerate, exponential };
  Kind kind = Kind::uniform;
  double a = 0.0, b = 1.0;  // Uniform(a, b), point mass at a, or Exp(rate a)

  static CensorLaw none() { return {Kind::none, 0.0, 0.0}; }
  static CensorLaw uniform(double a, double b) { return {Kind::uniform, a, b}; }
  static CensorLaw degenerate(double c) { return {Kind::degenerate, c, c}; }
  static CensorLaw exponential(double rate) { return {Kind::exponential, rate, 0.0}; }
};

// True regressor functions, one family and parameter vector per covariate
// column. Nonparametric truths use a family too; only the first p columns
// are treated as parametric by the fits.
struct HazardTruth {
  std::vector<HazardFamily> families;
  std::vector<Vector> theta;

  Index r() const { return static_cast<Index>(families.size()); }
  Vector alpha(double s) const;
  Vector cumulative(double t) const;  // A_j(t) per column
};

double cumulative_hazard(const HazardTruth& truth, const Vector& z, double t);

// Inverse of H_z when it is a sum of monomials with at most two distinct
// exponents in {1, 2}, or a single exponent.
std::optional<double> closed_form_inverse(const HazardTruth& truth, const Vector& z, double level);

// Monotone bisection with bracket doubling; tolerance 1e-10 * scale,
// at most 200 halvings. Returns +inf when H_z stays below the level.
double bisection_inverse(const HazardTruth& truth, const Vector& z, double level, double scale);

// Throws DomainError if z^t alpha(s) < 0 on a check grid of (0, horizon].
void check_hazard(const HazardTruth& truth, const Vector& z, double horizon);

struct SurvivalDraw {
  double time;
  int status;
};

// E = -log U with U ~ Uniform(0, 1), T = H_z^{-1}(E), then C from the
// censoring law; returns (min(T, C, tau), T <= min(C, tau)).
SurvivalDraw sample_survival(const Vector& z, const HazardTruth& truth, const CensorLaw& censor,
                             double tau, std::mt19937_64& rng);

struct Scenario {
  std::string name = "scenario";
  std::vector<ColumnLaw> covariates;
  std::optional<Matrix> fixed_z;
  HazardTruth truth;
  Index p = 0;
  CensorLaw censor;
  Index n = 100;
  double tau = std::numeric_limits<double>::infinity();
  std::vector<std::string> names;

  Index r() const { return truth.r(); }
  double horizon() const;  // finite upper bound of follow-up
};

// Additive design with a power and a linear parametric component, a linear
// baseline and a linear nonparametric effect; see the shipped config.
Scenario reference_scenario(Index n = 2000);

void validate_scenario(const Scenario& sc);

Matrix draw_covariates(const Scenario& sc, std::mt19937_64& rng);

Dataset simulate_dataset(const Scenario& sc, const Matrix& z, std::mt19937_64& rng);

enum class Estimator { aalen, mle, partly };
enum class SeSource { plugin, monte_carlo };

struct MonteCarloOptions {
  Index reps = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<Estimator> estimators{Estimator::aalen, Estimator::partly};
  std::vector<double> times{0.5};
  std::optional<double> fit_tau;  // default: last event time of each replicate
  VnChoice vn = VnChoice::plain;
  SeSource se = SeSource::plugin;
  double level = 0.95;
};

struct McRow {
  Index rep = 0;
  std::string estimator;
  std::string estimand;
  double estimate = 0.0, truth = 0.0, se = 0.0, z = 0.0;
};

struct McSummaryRow {
  std::string estimator, estimand;
  double truth = 0.0, mean = 0.0, mc_sd = 0.0, mean_se = 0.0;
  double z_mean = 0.0, z_sd = 0.0, coverage = 0.0;
  Index count = 0;
};

struct MonteCarloTable {
  std::uint64_t seed = 0;
  Index reps = 0;
  std::vector<McRow> rows;
  std::vector<std::string> failures;  // "rep estimator: message"
  double event_fraction = 0.0;
  Matrix covariates;

  std::vector<McSummaryRow> summary(SeSource se = SeSource::plugin, double level = 0.95) const;
  const McSummaryRow* find(const std::vector<McSummaryRow>& rows, const std::string& estimator,
                           const std::string& estimand) const;
};

MonteCarloTable run_monte_carlo(const Scenario& sc, const MonteCarloOptions& options);

std::string estimator_name(Estimator e);
std::string mc_table_csv(const MonteCarloTable& table);
std::string mc_summary_csv(const std::vector<McSummaryRow>& rows);

}  // namespace partly
