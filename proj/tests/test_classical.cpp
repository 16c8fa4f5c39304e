#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "oscillab/classical.hpp"

using namespace oscillab;

namespace {

ScenarioConfig base_config() {
  ScenarioConfig c;
  c.omega_in = c.omega_out = 1.0;
  c.omega0_sq = TimeProfile::constant(1.0);
  c.f0 = TimeProfile::constant(0.0);
  c.t_min = -20.0;
  c.t_max = 40.0;
  c.grid_nt = 6001;
  return c;
}

// Tabulated sample of a Gaussian force pulse A exp(-(t-t0)^2/tau^2).
TimeProfile gaussian_pulse(double A, double t0, double tau, double lo, double hi) {
  std::vector<double> ts, vs;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    ts.push_back(t);
    const double z = (t - t0) / tau;
    vs.push_back(A * std::exp(-z * z));
  }
  return TimeProfile::tabulated(std::move(ts), std::move(vs));
}

// Smooth random frequency-squared profile pinned to w_in^2 / w_out^2 at the
// ends: a few random Fourier modes under a smooth envelope.
TimeProfile random_smooth_w2(std::mt19937& rng, double w_in, double w_out,
                             double lo, double hi) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double a1 = 0.35 * uni(rng), a2 = 0.35 * uni(rng), a3 = 0.2 * uni(rng);
  const double f1 = 0.21 + 0.12 * std::abs(uni(rng));
  const double f2 = 0.44 + 0.2 * std::abs(uni(rng));
  const double f3 = 0.83 + 0.3 * std::abs(uni(rng));
  std::vector<double> ts, vs;
  const int n = 4001;
  const double ramp0 = lo + 0.25 * (hi - lo), ramp1 = hi - 0.25 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    double s = 0.0;
    if (t > ramp0 && t < ramp1) {
      const double x = (t - ramp0) / (ramp1 - ramp0);
      s = x * x * (3 - 2 * x) * (1 - x) * x * 4.0;  // zero at both ends
    }
    double base = w_in * w_in;
    if (t >= ramp1) base = w_out * w_out;
    else if (t > ramp0) {
      const double x = (t - ramp0) / (ramp1 - ramp0);
      base = w_in * w_in + (w_out * w_out - w_in * w_in) * x * x * (3 - 2 * x);
    }
    const double wig = s * (a1 * std::sin(f1 * t) + a2 * std::sin(f2 * t + 1.0) +
                            a3 * std::sin(f3 * t + 2.0));
    ts.push_back(t);
    vs.push_back(base + wig);
  }
  return TimeProfile::tabulated(std::move(ts), std::move(vs));
}

}  // namespace

TEST_SUITE_BEGIN("classical");

TEST_CASE("constant frequency gives the free phasor") {
  const ScenarioConfig c = base_config();
  const ClassicalSolution sol = solve_xi0(c);
  for (double t : {-15.0, -3.7, 0.0, 8.2, 25.0}) {
    CHECK(std::abs(sol.xi(t) - std::exp(Complex(0.0, t))) < 1e-8);
    CHECK(sol.r(t) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.gamma(t) == doctest::Approx(t).epsilon(1e-9));
  }
  CHECK(sol.wronskian_defect() < 1e-8);
}

TEST_CASE("sudden frequency jump reproduces the matching constants") {
  ScenarioConfig c = base_config();
  c.omega_out = 2.0;
  c.omega0_sq = TimeProfile::step(0.0, 1.0, 4.0);
  const ClassicalSolution sol = solve_xi0(c);
  const AsymptoticData a = extract_asymptotics(sol);
  // value/derivative matching at t = 0: C1 = (w2+w1)/(2 w2), C2 = (w2-w1)/(2 w2)
  CHECK(std::abs(a.C1 - Complex(0.75, 0.0)) < 1e-6);
  CHECK(std::abs(a.C2 - Complex(0.25, 0.0)) < 1e-6);
  CHECK(a.rho == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
  CHECK(a.fit_error < 1e-6);
}

TEST_CASE("slow smooth ramp suppresses the reflected amplitude") {
  ScenarioConfig c = base_config();
  c.omega_out = 1.5;
  c.t_min = -40.0;
  c.t_max = 80.0;
  c.omega0_sq = TimeProfile::ramp(-25.0, 55.0, 1.0, 2.25);
  c.grid_nt = 12001;
  const ClassicalSolution sol = solve_xi0(c);
  const AsymptoticData a = extract_asymptotics(sol);
  CHECK(a.rho < 1e-4);
  // high-accuracy reference: denser sampling grid, same physics
  ScenarioConfig c2 = c;
  c2.grid_nt = 24001;
  const AsymptoticData a2 = extract_asymptotics(solve_xi0(c2));
  CHECK(a.rho == doctest::Approx(a2.rho).epsilon(1e-4).scale(1e-8));
}

TEST_CASE("Wronskian and Bogoliubov invariants hold for random smooth profiles") {
  std::mt19937 rng(2024);
  for (int k = 0; k < 20; ++k) {
    ScenarioConfig c = base_config();
    c.omega_out = (k % 3 == 0) ? 1.0 : 1.0 + 0.4 * (k % 5);
    c.omega0_sq = random_smooth_w2(rng, c.omega_in, c.omega_out, c.t_min, c.t_max);
    const ClassicalSolution sol = solve_xi0(c);
    CHECK(sol.wronskian_defect() < 1e-8 * c.omega_in);
    const AsymptoticData a = extract_asymptotics(sol);
    CHECK(a.bogoliubov_defect < 1e-8);
    CHECK(a.rho >= 0.0);
    CHECK(a.rho < 1.0);
  }
}

TEST_CASE("no force means no displacement and no action") {
  const ClassicalSolution sol = solve_eta0(base_config());
  for (double t : {-10.0, 0.0, 20.0}) {
    CHECK(std::abs(sol.eta(t)) < 1e-12);
    CHECK(std::abs(sol.action(t)) < 1e-12);
  }
}

TEST_CASE("force response d(t) matches an independent quadrature") {
  ScenarioConfig c = base_config();
  c.f0 = gaussian_pulse(0.7, 2.0, 3.0, c.t_min, c.t_max);
  const ClassicalSolution sol = solve_classical(c);
  // independent route: Simpson quadrature of i xi0 f0 / sqrt(2 w) on a fine grid
  const int n = 20000;
  const double h = (c.t_max - c.t_min) / n;
  Complex acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = c.t_min + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * sol.xi(t) * c.f0.value(t);
  }
  acc *= Complex(0.0, 1.0) * h / 3.0 / std::sqrt(2.0 * c.omega_in);
  CHECK(std::abs(sol.d(c.t_max) - acc) < 1e-7);

  // and eta0 reconstructs from (xi0, d): eta = (xi d* + xi* d)/sqrt(2 w)
  for (double t : {0.0, 5.0, 15.0}) {
    const Complex xi = sol.xi(t), d = sol.d(t);
    const double eta_rep = (xi * std::conj(d) + std::conj(xi) * d).real() /
                           std::sqrt(2.0 * c.omega_in);
    CHECK(sol.eta(t) == doctest::Approx(eta_rep).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("displacement is linear in the force") {
  ScenarioConfig c1 = base_config();
  c1.f0 = gaussian_pulse(0.4, 1.0, 2.0, c1.t_min, c1.t_max);
  ScenarioConfig c2 = base_config();
  c2.f0 = gaussian_pulse(0.8, 1.0, 2.0, c2.t_min, c2.t_max);
  const ClassicalSolution s1 = solve_classical(c1);
  const ClassicalSolution s2 = solve_classical(c2);
  for (double t : {3.0, 11.0, 30.0})
    CHECK(s2.eta(t) == doctest::Approx(2.0 * s1.eta(t)).epsilon(1e-8).scale(1e-10));
}

TEST_CASE("characteristics map is the identity at t_e") {
  ScenarioConfig c = base_config();
  c.f0 = gaussian_pulse(0.5, -2.0, 2.5, c.t_min, c.t_max);
  const ClassicalSolution sol = solve_classical(c);
  const CharacteristicFrame fr = make_frame(sol, 12.0);
  const std::array<double, 4> q{0.37, -0.81, 1.44, 0.26};
  const auto u = characteristics_map(fr, q, 12.0);
  for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(q[i]).epsilon(1e-9));
}

TEST_CASE("analytic Jacobian matches finite differences on the xi4 = 0 slice") {
  ScenarioConfig c = base_config();
  c.f0 = gaussian_pulse(0.5, -2.0, 2.5, c.t_min, c.t_max);
  const ClassicalSolution sol = solve_classical(c);
  const CharacteristicFrame fr = make_frame(sol, 10.0);
  const double t = 21.0;
  const std::array<double, 4> q{0.25, -0.4, 0.6, 0.0};
  const double h = 1e-5;
  double jac[4][4];
  for (int j = 0; j < 4; ++j) {
    std::array<double, 4> qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    const auto up = characteristics_map(fr, qp, t);
    const auto um = characteristics_map(fr, qm, t);
    for (int i = 0; i < 4; ++i) jac[i][j] = (up[i] - um[i]) / (2 * h);
  }
  // det via Gaussian elimination on the 4x4
  double m[4][4];
  std::copy(&jac[0][0], &jac[0][0] + 16, &m[0][0]);
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (piv != col) {
      for (int k = 0; k < 4; ++k) std::swap(m[piv][k], m[col][k]);
      det = -det;
    }
    det *= m[col][col];
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  const double formula = characteristics_jacobian(fr, q, t);
  CHECK(det == doctest::Approx(formula).epsilon(1e-6));
}

TEST_CASE("vanishing frame denominator is reported") {
  const ScenarioConfig c = base_config();
  const ClassicalSolution sol = solve_classical(c);
  const CharacteristicFrame fr = make_frame(sol, 10.0);
  // pick t where e21 != 0, then solve e21 xi3 + e22 = 0 and set xi4 = 0
  const double t = 13.1;
  REQUIRE(std::abs(fr.e21(t)) > 1e-6);
  const double xi3 = -fr.e22(t) / fr.e21(t);
  const std::array<double, 4> q{0.0, 0.0, xi3, 0.0};
  CHECK_THROWS(characteristics_map(fr, q, t));
  CHECK_THROWS(characteristics_jacobian(fr, q, t));
}

TEST_CASE("CSV export writes one row per grid node") {
  const ScenarioConfig c = base_config();
  const ClassicalSolution sol = solve_classical(c);
  const std::string path = "/tmp/oscillab_test_classical.csv";
  sol.write_csv(path);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == c.grid_nt + 1);  // header + nodes
}

TEST_SUITE_END();
