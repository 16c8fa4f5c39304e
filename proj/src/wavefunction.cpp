#include "oscillab/wavefunction.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace oscillab {

Complex psi_stc(int n, double x, const TrajectoryPoint& p, double omega_in) {
  const double r = std::abs(p.xi);
  if (!(r > 0.0)) throw std::runtime_error("psi_stc: |xi| must be positive");
  const double dr = (p.xi.real() * p.dxi.real() + p.xi.imag() * p.dxi.imag()) / r;
  const double y = (x - p.eta) / r;
  const double phase = p.deta * (x - p.eta) + 0.5 * (dr / r) * (x - p.eta) * (x - p.eta) +
                       p.sigma - (n + 0.5) * p.gamma;
  return (1.0 / std::sqrt(r)) * std::exp(Complex(0.0, phase)) *
         eigenfunction(n, omega_in, y);
}

GeneratingCoefficients generating_coefficients(Complex xi, Complex dxi,
                                               double eta, double deta,
                                               double sigma, double t,
                                               double w_in, double w_out) {
  GeneratingCoefficients g;
  if (std::abs(xi) == 0.0)
    throw std::runtime_error("generating_coefficients: xi = 0");
  const Complex I(0.0, 1.0);
  const Complex K = -I * dxi / xi + w_out;
  if (std::abs(K) < 1e-300)
    throw std::runtime_error("generating_coefficients: singular frame (K = 0)");
  g.K = K;
  const Complex e_out = std::exp(I * w_out * t);
  // e^{-2 i gamma} = (conj(xi)/|xi|)^2, single-valued
  const Complex u = std::conj(xi) / std::abs(xi);
  g.A = 0.5 * e_out * e_out * (2.0 * w_out / K - 1.0);
  g.B = 0.5 * (2.0 * w_in / (K * xi * xi) - u * u);
  g.C = 2.0 * std::sqrt(w_in * w_out) / (K * xi) * e_out;
  g.L = -std::sqrt(2.0 * w_in) / (K * xi) * (w_out * eta - I * deta);
  g.D = std::sqrt(2.0 * w_out) * e_out * ((1.0 - w_out / K) * eta + I * deta / K);
  g.M = 0.5 * w_out * (w_out / K - 1.0) * eta * eta - 0.5 * deta * deta / K -
        I * w_out * eta * deta / K + I * (0.5 * w_out * t + sigma);
  g.prefactor = std::sqrt(2.0 * std::sqrt(w_in * w_out) / (K * xi));
  return g;
}

GeneratingCoefficients generating_coefficients(const TrajectoryPoint& p,
                                               double w_in, double w_out) {
  return generating_coefficients(p.xi, p.dxi, p.eta, p.deta, p.sigma, p.t,
                                 w_in, w_out);
}

CoefficientMatrix coefficients_cnm(const GeneratingCoefficients& g, int n_max) {
  if (n_max < 0) throw std::invalid_argument("coefficients_cnm: n_max >= 0");
  const int N = n_max + 1;
  // ch[a][b] = sqrt(a! b!) * [z1^a z2^b] exp(A z1^2 + B z2^2 + C z1 z2 + D z1 + L z2)
  std::vector<Complex> ch(N * N, Complex(0.0, 0.0));
  auto at = [&](int a, int b) -> Complex& { return ch[a * N + b]; };
  at(0, 0) = 1.0;
  for (int a = 0; a + 1 < N; ++a) {
    const Complex prev = (a >= 1) ? at(a - 1, 0) : Complex(0.0);
    at(a + 1, 0) = (2.0 * g.A * std::sqrt(double(a)) * prev + g.D * at(a, 0)) /
                   std::sqrt(double(a + 1));
  }
  for (int b = 0; b + 1 < N; ++b) {
    for (int a = 0; a < N; ++a) {
      const Complex below = (b >= 1) ? at(a, b - 1) : Complex(0.0);
      const Complex left = (a >= 1) ? at(a - 1, b) : Complex(0.0);
      at(a, b + 1) = (2.0 * g.B * std::sqrt(double(b)) * below +
                      g.C * std::sqrt(double(a)) * left + g.L * at(a, b)) /
                     std::sqrt(double(b + 1));
    }
  }
  CoefficientMatrix m;
  m.n_max = n_max;
  m.c.resize(N * N);
  const Complex c00 = g.c00();
  // row index n is the in-state (z2 power), column m the out-state (z1 power)
  for (int n = 0; n < N; ++n)
    for (int mm = 0; mm < N; ++mm) m.c[n * N + mm] = at(mm, n) * c00;
  return m;
}

double CoefficientMatrix::row_unitarity_defect(int n) const {
  double s = 0.0;
  for (int m = 0; m <= n_max; ++m) s += std::norm((*this)(n, m));
  return std::abs(s - 1.0);
}

void CoefficientMatrix::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "n,m,re_c,im_c,abs2\n";
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n_max; ++m) {
      const Complex v = (*this)(n, m);
      out << n << ',' << m << ',' << v.real() << ',' << v.imag() << ','
          << std::norm(v) << '\n';
    }
}

}  // namespace oscillab
