#include "partly/family.hpp"
#include "partly/quadrature.hpp"

#include <cmath>
#include <sstream>

namespace partly {

namespace {

constexpr int kCustomPanels = 4;

// t^a log t and friends with the t = 0 limit (a > 0).
double pow_log(double t, double a, int k) {
  if (t == 0.0) return 0.0;
  const double lt = std::log(t);
  return std::pow(t, a) * std::pow(lt, k);
}

}  // namespace

HazardFamily HazardFamily::constant() { return HazardFamily{}; }

HazardFamily HazardFamily::power() {
  HazardFamily f;
  f.kind_ = FamilyKind::power;
  return f;
}

HazardFamily HazardFamily::linear() {
  HazardFamily f;
  f.kind_ = FamilyKind::linear;
  return f;
}

HazardFamily HazardFamily::custom(CustomFamily spec) {
  if (!spec.alpha || !spec.grad) throw InputError("custom family needs alpha and gradient");
  if (spec.parameters < 1) throw InputError("custom family needs at least one parameter");
  if (spec.positive.empty()) spec.positive.assign(static_cast<std::size_t>(spec.parameters), false);
  if (static_cast<Index>(spec.positive.size()) != spec.parameters) {
    throw InputError("custom family positivity mask has wrong length");
  }
  HazardFamily f;
  f.kind_ = FamilyKind::custom;
  f.custom_ = std::make_shared<const CustomFamily>(std::move(spec));
  return f;
}

HazardFamily HazardFamily::from_name(const std::string& name) {
  if (name == "constant") return constant();
  if (name == "power") return power();
  if (name == "linear") return linear();
  throw InputError("unknown hazard family '" + name + "' (expected constant, power or linear)");
}

std::string HazardFamily::name() const {
  switch (kind_) {
    case FamilyKind::constant: return "constant";
    case FamilyKind::power: return "power";
    case FamilyKind::linear: return "linear";
    case FamilyKind::custom: return custom_->name;
  }
  return "";
}

Index HazardFamily::size() const {
  switch (kind_) {
    case FamilyKind::power: return 2;
    case FamilyKind::custom: return custom_->parameters;
    default: return 1;
  }
}

bool HazardFamily::closed_form() const {
  return kind_ != FamilyKind::custom ||
         (custom_->cumulative && custom_->cumulative_grad);
}

std::vector<bool> HazardFamily::positive() const {
  switch (kind_) {
    case FamilyKind::power: return {true, true};
    case FamilyKind::custom: return custom_->positive;
    default: return std::vector<bool>(static_cast<std::size_t>(size()), false);
  }
}

void HazardFamily::check(const Vector& theta) const {
  if (theta.size() != size()) {
    throw DomainError(name() + " family expects " + std::to_string(size()) + " parameters");
  }
  if (!theta.allFinite()) throw DomainError(name() + " family parameter is not finite");
  if (kind_ == FamilyKind::power && !(theta(0) > 0.0 && theta(1) > 0.0)) {
    std::ostringstream msg;
    msg << "power family requires theta1 > 0 and theta2 > 0 (got " << theta(0) << ", "
        << theta(1) << ")";
    throw DomainError(msg.str());
  }
  if (kind_ == FamilyKind::custom && custom_->admissible && !custom_->admissible(theta)) {
    throw DomainError(name() + " family parameter outside admissible region");
  }
}

double HazardFamily::alpha(double s, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::constant: return th(0);
    case FamilyKind::linear: return th(0) * s;
    case FamilyKind::power:
      if (s == 0.0) {
        if (th(1) < 1.0) throw DomainError("power family is unbounded at s = 0 when theta2 < 1");
        return th(1) == 1.0 ? th(0) : 0.0;
      }
      return th(0) * th(1) * std::pow(s, th(1) - 1.0);
    case FamilyKind::custom: return custom_->alpha(s, th);
  }
  return 0.0;
}

Vector HazardFamily::grad(double s, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::constant: return Vector::Ones(1);
    case FamilyKind::linear: return Vector::Constant(1, s);
    case FamilyKind::power: {
      Vector g(2);
      if (s == 0.0) {
        if (th(1) <= 1.0) throw DomainError("power family gradient is unbounded at s = 0");
        g.setZero();
        return g;
      }
      const double sp = std::pow(s, th(1) - 1.0);
      g << th(1) * sp, th(0) * sp * (1.0 + th(1) * std::log(s));
      return g;
    }
    case FamilyKind::custom: return custom_->grad(s, th);
  }
  return {};
}

Matrix HazardFamily::hessian(double s, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::power: {
      Matrix h = Matrix::Zero(2, 2);
      if (s == 0.0) {
        if (th(1) <= 1.0) throw DomainError("power family Hessian is unbounded at s = 0");
        return h;
      }
      const double sp = std::pow(s, th(1) - 1.0);
      const double ls = std::log(s);
      h(0, 1) = h(1, 0) = sp * (1.0 + th(1) * ls);
      h(1, 1) = th(0) * sp * ls * (2.0 + th(1) * ls);
      return h;
    }
    case FamilyKind::custom:
      if (custom_->hessian) return custom_->hessian(s, th);
      throw InputError(name() + " family has no Hessian evaluator");
    default: return Matrix::Zero(1, 1);
  }
}

double HazardFamily::cumulative(double t0, double t1, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::constant: return th(0) * (t1 - t0);
    case FamilyKind::linear: return 0.5 * th(0) * (t1 * t1 - t0 * t0);
    case FamilyKind::power: return th(0) * (std::pow(t1, th(1)) - std::pow(t0, th(1)));
    case FamilyKind::custom:
      if (custom_->cumulative) return custom_->cumulative(t1, th) - custom_->cumulative(t0, th);
      if (t1 == t0) return 0.0;
      return gl7(t0, t1, [&](double s) { return custom_->alpha(s, th); }, kCustomPanels);
  }
  return 0.0;
}

Vector HazardFamily::cumulative_grad(double t0, double t1, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::constant: return Vector::Constant(1, t1 - t0);
    case FamilyKind::linear: return Vector::Constant(1, 0.5 * (t1 * t1 - t0 * t0));
    case FamilyKind::power: {
      Vector g(2);
      g << std::pow(t1, th(1)) - std::pow(t0, th(1)),
          th(0) * (pow_log(t1, th(1), 1) - pow_log(t0, th(1), 1));
      return g;
    }
    case FamilyKind::custom:
      if (custom_->cumulative_grad) {
        return custom_->cumulative_grad(t1, th) - custom_->cumulative_grad(t0, th);
      }
      if (t1 == t0) return Vector::Zero(size());
      return gl7(t0, t1, [&](double s) -> Vector { return custom_->grad(s, th); }, kCustomPanels);
  }
  return {};
}

Matrix HazardFamily::cumulative_hessian(double t0, double t1, const Vector& th) const {
  switch (kind_) {
    case FamilyKind::power: {
      Matrix h = Matrix::Zero(2, 2);
      h(0, 1) = h(1, 0) = pow_log(t1, th(1), 1) - pow_log(t0, th(1), 1);
      h(1, 1) = th(0) * (pow_log(t1, th(1), 2) - pow_log(t0, th(1), 2));
      return h;
    }
    case FamilyKind::custom:
      if (t1 == t0) return Matrix::Zero(size(), size());
      return gl7(t0, t1, [&](double s) -> Matrix { return hessian(s, th); }, kCustomPanels);
    default: return Matrix::Zero(1, 1);
  }
}

ParametricBlock::ParametricBlock(std::vector<HazardFamily> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    offsets_.push_back(m_);
    m_ += c.size();
  }
}

Vector ParametricBlock::slice(const Vector& theta, Index j) const {
  return theta.segment(offset(j), component(j).size());
}

void ParametricBlock::check(const Vector& theta) const {
  if (theta.size() != m_) {
    throw DomainError("parameter vector has length " + std::to_string(theta.size()) +
                      ", expected " + std::to_string(m_));
  }
  for (Index j = 0; j < p(); ++j) component(j).check(slice(theta, j));
}

std::vector<bool> ParametricBlock::positive() const {
  std::vector<bool> out;
  for (const auto& c : components_) {
    const auto pc = c.positive();
    out.insert(out.end(), pc.begin(), pc.end());
  }
  return out;
}

ParametricBlock::Value ParametricBlock::evaluate(double s, const Vector& theta) const {
  Value v{Vector(p()), Matrix::Zero(p(), m_)};
  for (Index j = 0; j < p(); ++j) {
    const Vector th = slice(theta, j);
    v.alpha(j) = component(j).alpha(s, th);
    v.grad.row(j).segment(offset(j), th.size()) = component(j).grad(s, th).transpose();
  }
  return v;
}

Vector ParametricBlock::alpha(double s, const Vector& theta) const {
  Vector a(p());
  for (Index j = 0; j < p(); ++j) a(j) = component(j).alpha(s, slice(theta, j));
  return a;
}

ParametricBlock::Value ParametricBlock::integrate(double t0, double t1, const Vector& theta) const {
  if (t0 < 0.0 || t1 < t0) throw InputError("integration limits must satisfy 0 <= t0 <= t1");
  Value v{Vector(p()), Matrix::Zero(p(), m_)};
  for (Index j = 0; j < p(); ++j) {
    const Vector th = slice(theta, j);
    v.alpha(j) = component(j).cumulative(t0, t1, th);
    v.grad.row(j).segment(offset(j), th.size()) =
        component(j).cumulative_grad(t0, t1, th).transpose();
  }
  return v;
}

Vector to_unconstrained(const Vector& theta, const std::vector<bool>& positive) {
  Vector phi = theta;
  for (Index a = 0; a < theta.size(); ++a) {
    if (positive[static_cast<std::size_t>(a)]) phi(a) = std::log(theta(a));
  }
  return phi;
}

Vector from_unconstrained(const Vector& phi, const std::vector<bool>& positive) {
  Vector theta = phi;
  for (Index a = 0; a < phi.size(); ++a) {
    if (positive[static_cast<std::size_t>(a)]) theta(a) = std::exp(phi(a));
  }
  return theta;
}

Vector unconstrained_jacobian(const Vector& theta, const std::vector<bool>& positive) {
  Vector d = Vector::Ones(theta.size());
  for (Index a = 0; a < theta.size(); ++a) {
    if (positive[static_cast<std::size_t>(a)]) d(a) = theta(a);
  }
  return d;
}

}  // namespace partly
