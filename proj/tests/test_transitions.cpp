#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "oscillab/sde.hpp"
#include "oscillab/transitions.hpp"
#include "oscillab/wavefunction.hpp"

using namespace oscillab;
namespace tr = oscillab::transitions;

namespace {

ScenarioConfig no_noise_config() {
  ScenarioConfig c;
  c.omega_in = c.omega_out = 1.0;
  c.omega0_sq = TimeProfile::constant(1.0);
  c.t_min = -15.0;
  c.t_max = 35.0;
  c.grid_nt = 3001;
  c.seed = 7;
  return c;
}

ScenarioConfig force_noise_config(double eps2) {
  ScenarioConfig c = no_noise_config();
  c.eps2 = eps2;
  c.t2 = 0.0;
  c.p2 = TimeProfile::step(22.0, 1.0, 0.0);
  return c;
}

ScenarioConfig window_freq_config(double eps1, double t_e = 12.566) {
  ScenarioConfig c = no_noise_config();
  c.eps1 = eps1;
  c.t1 = 0.0;
  c.t_e = t_e;
  c.p1 = TimeProfile::step(t_e, 1.0, 0.0);
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("transitions");

TEST_CASE("no noise gives the identity table through the closed-form pipeline") {
  const ScenarioConfig c = no_noise_config();
  const ClassicalSolution cl = solve_classical(c);
  const tr::TransitionTable tab = tr::w_nm_eps1_zero(c, cl, 6);
  // diagonal to the classical integrator's accuracy, off-diagonal to zero
  for (int n = 0; n <= 6; ++n)
    for (int m = 0; m <= 6; ++m)
      CHECK(tab.at(n, m) == doctest::Approx(n == m ? 1.0 : 0.0).epsilon(1e-9));
}

TEST_CASE("force noise conserves each row of the averaged table") {
  const ScenarioConfig c = force_noise_config(0.05);
  const ClassicalSolution cl = solve_classical(c);
  const tr::TransitionTable tab = tr::w_nm_eps1_zero(c, cl, 32);
  CHECK(std::abs(tab.row_sum(0) - 1.0) < 1e-4);
  CHECK(std::abs(tab.row_sum(1) - 1.0) < 1e-4);
  for (int m = 0; m <= 32; ++m) CHECK(tab.at(0, m) >= -1e-12);
}

TEST_CASE("closed-form pipeline agrees with the Monte Carlo estimator") {
  const ScenarioConfig c = force_noise_config(0.01);
  const ClassicalSolution cl = solve_classical(c);
  const tr::TransitionTable tab = tr::w_nm_eps1_zero(c, cl, 8);
  sde::SdeOptions opt;
  const auto mc = sde::mc_transition_table(c, cl, 20000, 8, c.t_max, opt, 2);
  for (int m = 0; m <= 3; ++m) {
    const double tol = 3.0 * mc.sem_at(0, m) + 0.01 * tab.at(0, m) + 1e-5;
    CHECK(std::abs(tab.at(0, m) - mc.at(0, m)) < tol);
  }
}

TEST_CASE("upward and downward first transitions match for symmetric driving") {
  // equal in/out frequencies with pure force noise: the Gaussian kernel is
  // time-reversal symmetric, so W01 = W10
  const ScenarioConfig c = force_noise_config(0.04);
  const ClassicalSolution cl = solve_classical(c);
  const tr::TransitionTable tab = tr::w_nm_eps1_zero(c, cl, 24);
  CHECK(tab.at(0, 1) == doctest::Approx(tab.at(1, 0)).epsilon(1e-6));
}

TEST_CASE("weight functions equal the squared amplitudes on matched inputs") {
  // with |xi| = |xi0(t1)| the sink factor drops and |c_nm|^2 = H_nm exactly
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double w_in = 0.8 + 0.4 * std::abs(uni(rng));
    const double w_out = 0.9 + 0.5 * std::abs(uni(rng));
    const double xi1abs = 0.7 + 0.6 * std::abs(uni(rng));
    const std::array<double, 4> u{0.8 * uni(rng), 0.8 * uni(rng),
                                  0.9 * uni(rng), 0.6 + 0.8 * std::abs(uni(rng))};
    const double theta = 3.0 * uni(rng);
    TrajectoryPoint p;
    p.t = 2.0 * uni(rng);
    p.xi = xi1abs * std::exp(Complex(0.0, theta));
    p.dxi = Complex(u[2], u[3]) * p.xi;
    p.eta = u[0];
    p.deta = u[1];
    p.sigma = uni(rng);
    const auto gen = generating_coefficients(p, w_in, w_out);
    const CoefficientMatrix cm = coefficients_cnm(gen, 2);
    for (int n = 0; n <= 1; ++n)
      for (int m = 0; m <= 1; ++m) {
        const double h = tr::h_weight(n, m, u, w_in, w_out, xi1abs);
        CHECK(std::norm(cm(n, m)) == doctest::Approx(h).epsilon(1e-9));
      }
  }
}

TEST_CASE("reduced weights match their stated special cases") {
  const ScenarioConfig c = window_freq_config(0.01);
  const ClassicalSolution cl = solve_classical(c);
  const AsymptoticData asym = extract_asymptotics(cl);
  const CharacteristicFrame fr = make_frame(cl, c.t_e);
  const auto rw = tr::make_reduced_weights(asym, fr, c.omega_in, c.omega_out,
                                           std::abs(cl.xi(c.t1)));
  // without force: mu's collapse onto the endpoint trajectory values (zero)
  CHECK(rw.mu1 == doctest::Approx(-fr.d5).epsilon(1e-12));
  CHECK(rw.mu2 == doctest::Approx(-fr.d6).epsilon(1e-12));
  CHECK(std::abs(rw.mu1) < 1e-9);
  // rho = 0 collapses the quadratic to its unmixed form
  CHECK(asym.rho < 1e-8);
  for (double x3 : {-2.0, 0.3, 1.7}) {
    const double direct =
        c.omega_in * c.omega_out *
        ((fr.d1 * fr.d1 + fr.d2 * fr.d2) * x3 * x3 -
         2.0 * (fr.d2 * fr.d4 + fr.d1 * fr.d3) * x3 +
         (fr.d3 * fr.d3 + fr.d4 * fr.d4));
    CHECK(rw.sigma(x3) == doctest::Approx(direct).epsilon(1e-8));
  }
  // H01/H00 carries the quadratic bracket
  const double x1 = 0.4, x2 = -0.3, x3 = 0.8;
  const double ratio = rw.hbar(0, 1, x1, x2, x3) / rw.hbar(0, 0, x1, x2, x3);
  const double arg = x2 - x1 * x3 - x3 * rw.mu1 + rw.mu2;
  const double expect =
      2.0 * c.omega_out * c.omega_in * c.omega_in / rw.sigma(x3) * arg * arg;
  CHECK(ratio == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("full 4D pipeline entry is sane on a coarse grid") {
  ScenarioConfig c = window_freq_config(0.01, 6.283);
  const ClassicalSolution cl = solve_classical(c);
  tr::Eps2ZeroFullOptions opt;
  opt.shape4.dims = 4;
  // the (z1, z2) delta sits on its invariant point; one cell is exact
  opt.shape4.ax[0] = {-0.05, 0.05, 1};
  opt.shape4.ax[1] = {-0.05, 0.05, 1};
  opt.shape4.ax[2] = {-1.6, 1.6, 32};
  opt.shape4.ax[3] = {0.3, 2.2, 28};
  opt.threads = 2;
  const auto e = tr::w_nm_eps2_zero_full_entry(c, cl, 0, 0, opt);
  CHECK(e.w > 0.85);
  CHECK(e.w < 1.01);
  CHECK(e.drift < 0.05);
}

TEST_CASE("table csv lists computed entries with the regime tag") {
  const ScenarioConfig c = no_noise_config();
  const ClassicalSolution cl = solve_classical(c);
  const tr::TransitionTable tab = tr::w_nm_eps1_zero(c, cl, 2);
  const std::string path = "/tmp/oscillab_test_table.csv";
  tab.write_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,m,W,err,regime,scenario_hash");
  int rows = 0;
  bool has_regime = false;
  while (std::getline(in, line)) {
    ++rows;
    has_regime = has_regime || line.find("eps1_zero") != std::string::npos;
  }
  CHECK(rows == 9);
  CHECK(has_regime);
}

TEST_SUITE_END();
