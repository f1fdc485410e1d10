#pragma once

#include "partly/data.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace partly {

// Moments of one weight scheme on a grid. Entry k-1 belongs to interval
// (u_{k-1}, u_k] and to the jump at u_k.
struct RiskTable {
  std::vector<Matrix> G;                   // n^{-1} sum Y_i w_i z_i z_i^t
  std::vector<Vector> dE;                  // n^{-1} sum w_i z_i dN_i
  std::vector<Matrix> dH;                  // n^{-1} sum w_i^2 z_i z_i^t dN_i
  std::vector<std::vector<Index>> events;  // subjects failing at u_k
  std::vector<std::vector<double>> event_weights;
};

RiskTable build_risk_table(const Dataset& ds, const TimeGrid& grid, const WeightFn& weights);

// Kernel-smoothed increments of a cumulative estimate (Epanechnikov kernel,
// reflected at 0 and tau).
class SmoothedAlpha {
 public:
  SmoothedAlpha(std::vector<double> times, std::vector<Vector> jumps, double bandwidth,
                double tau);
  Vector operator()(double s) const;
  double bandwidth() const { return b_; }
  double tau() const { return tau_; }
  Index dim() const { return dim_; }

 private:
  std::vector<double> times_;
  std::vector<Vector> jumps_;
  double b_;
  double tau_;
  Index dim_;
};

enum class WeightScheme { plain, optimal, supplied };
enum class VarianceOption { counting, risk_set };

struct AalenFit {
  TimeGrid grid;  // truncated at the last estimable knot if needed
  WeightScheme scheme = WeightScheme::plain;
  WeightFn weights;
  RiskTable risk;
  std::vector<Matrix> G_inv;      // per interval
  std::vector<Vector> increments;  // per interval; zero where no event
  StepPath<Vector> cumulative;
  StepPath<Matrix> variance_path;
  std::shared_ptr<const SmoothedAlpha> pilot;  // optimal scheme only
  std::optional<std::string> warning;

  Index r() const { return cumulative.values().front().size(); }
  double tau() const { return grid.tau; }
  // Event knot times and their jumps.
  std::vector<double> event_times() const;
  std::vector<Vector> event_increments() const;
};

// Weighted least-squares Aalen estimator. An empty WeightFn means plain
// weights.
AalenFit fit_aalen(const Dataset& ds, const TimeGrid& grid, const WeightFn& weights = {});

StepPath<Matrix> aalen_variance(const Dataset& ds, const AalenFit& fit,
                                VarianceOption option = VarianceOption::counting);

double default_bandwidth(double tau, Index n);

SmoothedAlpha smooth_alpha(const AalenFit& fit, double bandwidth);

// Refit with w_i(s) = 1 / z_i^t alpha~(s) from a smoothed plain fit. The
// variance path is int F~^{-1} ds / n.
AalenFit fit_aalen_optimal(const Dataset& ds, const TimeGrid& grid,
                           std::optional<double> bandwidth = std::nullopt);

// Grid restricted to knots <= horizon (horizon must be a knot).
TimeGrid truncate_grid(const TimeGrid& grid, Index last_knot);

// CSV: time, A_1..A_r, se_1..se_r.
std::string aalen_csv(const AalenFit& fit, const std::vector<std::string>& names);

}  // namespace partly
