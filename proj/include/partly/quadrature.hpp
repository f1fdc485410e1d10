#pragma once

#include <array>

namespace partly {

// 7-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 7> kGlNodes = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
    0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
inline constexpr std::array<double, 7> kGlWeights = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

// Maps the rule to [a, b]; calls f(node, weight) for each point.
template <class F>
void gl7_points(double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
    f(mid + half * kGlNodes[g], half * kGlWeights[g]);
  }
}

// Composite rule with `panels` equal panels. F returns a value type that
// supports += and scalar multiplication (double, Eigen vectors/matrices).
template <class F>
auto gl7(double a, double b, F&& f, int panels = 1) {
  const double h = (b - a) / panels;
  auto acc = f(a + 0.5 * h);
  acc *= 0.0;
  for (int k = 0; k < panels; ++k) {
    gl7_points(a + k * h, a + (k + 1) * h, [&](double s, double w) { acc += w * f(s); });
  }
  return acc;
}

}  // namespace partly
