#include "oscillab/hermite.hpp"

#include <cmath>
#include <stdexcept>

namespace oscillab {

std::vector<double> eigenfunction_column(int n_max, double omega, double x) {
  if (n_max < 0) throw std::invalid_argument("eigenfunction: n >= 0 required");
  if (!(omega > 0.0)) throw std::invalid_argument("eigenfunction: omega > 0 required");
  const double y = std::sqrt(omega) * x;
  std::vector<double> phi(n_max + 1);
  const double scale = std::pow(omega, 0.25);
  double hm2 = 0.0;
  double hm1 = std::pow(M_PI, -0.25) * std::exp(-0.5 * y * y);
  phi[0] = scale * hm1;
  for (int n = 1; n <= n_max; ++n) {
    const double h = y * std::sqrt(2.0 / n) * hm1 - std::sqrt((n - 1.0) / n) * hm2;
    hm2 = hm1;
    hm1 = h;
    phi[n] = scale * h;
  }
  return phi;
}

double eigenfunction(int n, double omega, double x) {
  return eigenfunction_column(n, omega, x)[n];
}

}  // namespace oscillab
