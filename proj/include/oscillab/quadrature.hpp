#pragma once

#include <vector>

namespace oscillab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for Int f(x) e^{-x^2} dx (physicists' weight).
QuadratureRule gauss_hermite(int n);

// Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace oscillab
