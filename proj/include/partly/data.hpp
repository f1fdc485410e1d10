#pragma once

#include "partly/common.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace partly {

// Right-censored survival data. Covariate columns are ordered with the
// parametric block (p columns) first, then the nonparametric block.
struct Dataset {
  Vector times;
  std::vector<int> status;
  Matrix z;
  Index p = 0;
  std::vector<std::string> names;

  Index n() const { return times.size(); }
  Index r() const { return z.cols(); }
  Index q() const { return r() - p; }
};

// Validates and assembles a dataset. Throws InputError.
Dataset make_dataset(Vector times, std::vector<int> status, Matrix z, Index p,
                     std::vector<std::string> names = {});

struct Schema {
  std::string time_column = "time";
  std::string status_column = "status";
  std::vector<std::string> parametric;
  // Empty means every remaining covariate column, in file order.
  std::vector<std::string> nonparametric;
};

Dataset load_dataset(std::string_view csv_text, const Schema& schema);
Dataset read_dataset_file(const std::string& path, const Schema& schema);
std::string serialize_dataset(const Dataset& ds);

// Knots 0 = u_0 < u_1 < ... < u_K = tau. Interval k is (u_{k-1}, u_k] and
// its risk set is {i : t_i >= u_k}.
struct TimeGrid {
  std::vector<double> knots;
  std::vector<bool> event;  // per knot
  double tau = 0.0;

  Index intervals() const { return static_cast<Index>(knots.size()) - 1; }
  // Interval containing s (0 for s <= 0, K for s >= tau).
  Index interval_of(double s) const;
  // Largest knot index with knots[k] <= s.
  Index knot_at_or_before(double s) const;
};

TimeGrid build_time_grid(const Dataset& ds, std::optional<double> tau = std::nullopt);

// Subject weight w_i(s); an empty function means w_i = 1.
using WeightFn = std::function<double(Index subject, double s)>;

// n^{-1} sum_i Y_i(s) w_i(s) z_{i,rows} z_{i,cols}^t with Y_i(s) = I(t_i >= s).
Matrix at_risk_moment(const Dataset& ds, double s, const WeightFn& weights,
                      const std::vector<Index>& rows, const std::vector<Index>& cols);

std::vector<Index> all_columns(const Dataset& ds);
std::vector<Index> parametric_columns(const Dataset& ds);
std::vector<Index> nonparametric_columns(const Dataset& ds);

// Right-continuous step function; evaluation returns the value at the
// largest knot <= s, and the first value for s below the first knot.
template <class T>
class StepPath {
 public:
  StepPath() = default;
  StepPath(std::vector<double> knots, std::vector<T> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size() || knots_.empty()) {
      throw InputError("step path needs one value per knot");
    }
  }

  const T& operator()(double s) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    if (it == knots_.begin()) return values_.front();
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<T>& values() const { return values_; }
  std::size_t size() const { return knots_.size(); }

 private:
  std::vector<double> knots_;
  std::vector<T> values_;
};

// CSV with columns `time`, then one column per component.
std::string step_path_csv(const StepPath<Vector>& path, const std::vector<std::string>& names);

}  // namespace partly
