#pragma once

#include "partly/common.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace partly {

enum class FamilyKind { constant, power, linear, custom };

// Evaluators for a user-supplied family. `cumulative` and
// `cumulative_grad` are optional; without them integrals use quadrature.
struct CustomFamily {
  std::string name = "custom";
  Index parameters = 1;
  std::function<double(double, const Vector&)> alpha;
  std::function<Vector(double, const Vector&)> grad;
  std::function<Matrix(double, const Vector&)> hessian;
  std::function<double(double, const Vector&)> cumulative;   // A(t)
  std::function<Vector(double, const Vector&)> cumulative_grad;
  std::function<bool(const Vector&)> admissible;
  std::vector<bool> positive;  // parameters optimized on the log scale
};

// One parametric regressor function alpha_j(s, theta_j).
class HazardFamily {
 public:
  static HazardFamily constant();
  // theta1 * theta2 * s^(theta2 - 1), both parameters positive.
  static HazardFamily power();
  // theta * s.
  static HazardFamily linear();
  static HazardFamily custom(CustomFamily spec);
  static HazardFamily from_name(const std::string& name);

  FamilyKind kind() const { return kind_; }
  std::string name() const;
  Index size() const;
  bool closed_form() const;
  std::vector<bool> positive() const;

  // Throws DomainError outside the admissible region.
  void check(const Vector& theta) const;

  double alpha(double s, const Vector& theta) const;
  Vector grad(double s, const Vector& theta) const;
  Matrix hessian(double s, const Vector& theta) const;

  double cumulative(double t0, double t1, const Vector& theta) const;
  Vector cumulative_grad(double t0, double t1, const Vector& theta) const;
  Matrix cumulative_hessian(double t0, double t1, const Vector& theta) const;

 private:
  FamilyKind kind_ = FamilyKind::constant;
  std::shared_ptr<const CustomFamily> custom_;
};

// Stacked p-block alpha_(1)(s, theta) with a disjoint parameter slice per
// component.
class ParametricBlock {
 public:
  ParametricBlock() = default;
  explicit ParametricBlock(std::vector<HazardFamily> components);

  Index p() const { return static_cast<Index>(components_.size()); }
  Index m() const { return m_; }
  Index offset(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
  const HazardFamily& component(Index j) const { return components_[static_cast<std::size_t>(j)]; }
  const std::vector<HazardFamily>& components() const { return components_; }

  Vector slice(const Vector& theta, Index j) const;
  void check(const Vector& theta) const;
  std::vector<bool> positive() const;

  struct Value {
    Vector alpha;  // p
    Matrix grad;   // p x m
  };
  Value evaluate(double s, const Vector& theta) const;
  Vector alpha(double s, const Vector& theta) const;
  Value integrate(double t0, double t1, const Vector& theta) const;

 private:
  std::vector<HazardFamily> components_;
  std::vector<Index> offsets_;
  Index m_ = 0;
};

// Optimizer coordinates: log theta for positivity-constrained entries.
Vector to_unconstrained(const Vector& theta, const std::vector<bool>& positive);
Vector from_unconstrained(const Vector& phi, const std::vector<bool>& positive);
// d theta / d phi (diagonal).
Vector unconstrained_jacobian(const Vector& theta, const std::vector<bool>& positive);

}  // namespace partly
