#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "oscillab/classical.hpp"
#include "oscillab/fp.hpp"
#include "oscillab/rng.hpp"
#include "oscillab/sde.hpp"

using namespace oscillab;
using oscillab::sde::SdeOptions;

namespace {

ScenarioConfig force_noise_config(double eps2 = 0.1, double omega = 1.0) {
  ScenarioConfig c;
  c.omega_in = c.omega_out = omega;
  c.omega0_sq = TimeProfile::constant(omega * omega);
  c.f0 = TimeProfile::constant(0.0);
  c.p2 = TimeProfile::step(28.0, 1.0, 0.0);
  c.eps2 = eps2;
  c.t2 = 0.0;
  c.t1 = 0.0;
  c.t_min = -10.0;
  c.t_max = 40.0;
  c.grid_nt = 4001;
  c.seed = 99;
  return c;
}

ScenarioConfig freq_noise_config(double eps1 = 0.01) {
  ScenarioConfig c;
  c.omega_in = c.omega_out = 1.0;
  c.omega0_sq = TimeProfile::constant(1.0);
  c.p1 = TimeProfile::step(12.6, 1.0, 0.0);
  c.eps1 = eps1;
  c.t1 = 0.0;
  c.t2 = 0.0;
  c.t_e = 12.6;
  c.t_min = -10.0;
  c.t_max = 40.0;
  c.grid_nt = 4001;
  c.seed = 4242;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("sde");

TEST_CASE("streams are reproducible and distinct") {
  NoiseStream a(123, 7), b(123, 7), c(123, 8);
  std::vector<double> va, vb, vc;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.gaussian());
    vb.push_back(b.gaussian());
    vc.push_back(c.gaussian());
  }
  CHECK(va == vb);
  CHECK(va != vc);
}

TEST_CASE("gaussian moments look right") {
  NoiseStream ns(5, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ns.gaussian();
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  s /= n;
  s2 /= n;
  s4 /= n;
  CHECK(std::abs(s) < 4.0 / std::sqrt(double(n)));
  CHECK(s2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s4 == doctest::Approx(3.0).epsilon(0.06));
}

TEST_CASE("philox blocks depend on every counter word") {
  const std::uint32_t key[2] = {1, 2};
  const std::uint32_t c1[4] = {0, 0, 0, 0};
  const std::uint32_t c2[4] = {1, 0, 0, 0};
  const std::uint32_t c3[4] = {0, 0, 1, 0};
  std::uint32_t o1[4], o2[4], o3[4];
  philox4x32(key, c1, o1);
  philox4x32(key, c2, o2);
  philox4x32(key, c3, o3);
  CHECK(!(o1[0] == o2[0] && o1[1] == o2[1]));
  CHECK(!(o1[0] == o3[0] && o1[1] == o3[1]));
}

TEST_CASE("noiseless limit of the force-noise trajectory") {
  ScenarioConfig c = force_noise_config(0.0);
  c.f0 = TimeProfile::tabulated({-10.0, -2.0, 0.0, 2.0, 40.0},
                                {0.0, 0.0, 0.8, 0.0, 0.0});
  const ClassicalSolution cl = solve_classical(c);
  NoiseStream ns(c.seed, 0);
  SdeOptions opt;
  opt.dt = 2e-4;
  opt.drift = sde::DriftScheme::Heun;
  const sde::EtaState s = sde::simulate_eta(c, cl, ns, 25.0, opt);
  CHECK(std::abs(s.eta - cl.eta(25.0)) < 1e-6);
  CHECK(std::abs(s.deta - cl.deta(25.0)) < 1e-6);
  CHECK(std::abs(s.sigma - cl.action(25.0)) < 1e-6);
}

TEST_CASE("force-noise variance matches the closed-form covariance") {
  // omega != 1 so any mixed-up frequency power in the covariance would show
  const double omega = 1.3;
  ScenarioConfig c = force_noise_config(0.08, omega);
  const ClassicalSolution cl = solve_classical(c);
  const double t = 9.0;
  const fp::GaussianP1 g = fp::analytic_p1(c, cl, t);

  SdeOptions opt;
  opt.dt = c.period_in() / 400.0;
  const std::size_t n_paths = 40000;
  auto fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::EtaState s = sde::simulate_eta(c, cl, ns, t, opt);
    obs[0] = s.eta;
    obs[1] = s.deta;
    obs[2] = s.eta * s.eta;
    obs[3] = s.deta * s.deta;
    obs[4] = s.eta * s.deta;
    return false;
  };
  const auto st = sde::run_ensemble(c.seed, n_paths, 5, 2, fn);
  // means follow the deterministic trajectory (zero here)
  CHECK(std::abs(st.mean[0] - cl.eta(t)) < 4.0 * st.sem[0]);
  CHECK(std::abs(st.mean[1] - cl.deta(t)) < 4.0 * st.sem[1]);
  const double var1 = st.mean[2] - st.mean[0] * st.mean[0];
  const double var2 = st.mean[3] - st.mean[1] * st.mean[1];
  const double cov = st.mean[4] - st.mean[0] * st.mean[1];
  CHECK(var1 == doctest::Approx(g.s11).epsilon(0.04));
  CHECK(var2 == doctest::Approx(g.s22).epsilon(0.04));
  CHECK(cov == doctest::Approx(g.s12).epsilon(0.12).scale(g.s11));
  // exact closed form for the position variance at constant frequency
  const double exact =
      c.eps2 / (omega * omega) * (t - std::sin(2.0 * omega * t) / (2.0 * omega));
  CHECK(g.s11 == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("weak error of the Euler-Maruyama scheme halves with the step") {
  const double omega = 1.0, eps2 = 0.25, T = 6.0;
  const double exact =
      eps2 / (omega * omega) * (T - std::sin(2.0 * omega * T) / (2.0 * omega));
  auto weak_var = [&](double dt) {
    const long n = std::lround(T / dt);
    const std::size_t paths = 60000;
    double acc = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
      NoiseStream ns(77, p);
      double x1 = 0.0, x2 = 0.0;
      for (long k = 0; k < n; ++k) {
        const double dw = ns.increment(dt);
        const double nx1 = x1 + x2 * dt;
        const double nx2 = x2 - omega * omega * x1 * dt + std::sqrt(2.0 * eps2) * dw;
        x1 = nx1;
        x2 = nx2;
      }
      acc += x1 * x1;
    }
    return acc / paths;
  };
  const double e1 = std::abs(weak_var(T / 50) - exact);
  const double e2 = std::abs(weak_var(T / 100) - exact);
  const double slope = std::log2(e1 / e2);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("noiseless limit of the frequency-noise system") {
  ScenarioConfig c = freq_noise_config(0.0);
  c.omega_out = 1.5;
  c.omega0_sq = TimeProfile::ramp(2.0, 8.0, 1.0, 2.25);
  const ClassicalSolution cl = solve_classical(c);
  NoiseStream ns(1, 0);
  SdeOptions opt;
  opt.dt = 2e-4;
  opt.drift = sde::DriftScheme::Heun;
  const sde::UState s = sde::simulate_u(c, cl, ns, 20.0, opt);
  const Complex phi = cl.dxi(20.0) / cl.xi(20.0);
  CHECK(std::abs(s.u3 - phi.real()) < 1e-6);
  CHECK(std::abs(s.u4 - phi.imag()) < 1e-6);
  // exponential reconstruction recovers xi itself
  const TrajectoryPoint p = sde::point_from_u(cl, s, c.t1, 20.0);
  CHECK(std::abs(p.xi - cl.xi(20.0)) < 1e-5);
}

TEST_CASE("weak frequency noise keeps the phase velocity near omega") {
  ScenarioConfig c = freq_noise_config(1e-3);
  const ClassicalSolution cl = solve_classical(c);
  SdeOptions opt;
  const double t = 6.3;  // about one period
  auto fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::UState s = sde::simulate_u(c, cl, ns, t, opt);
    obs[0] = s.u4;
    return s.flagged;
  };
  const auto st = sde::run_ensemble(c.seed, 20000, 1, 2, fn);
  CHECK(std::abs(st.mean[0] - 1.0) < 0.05);  // O(eps1) + O(dt)
}

TEST_CASE("per-path Wronskian of the reconstructed trajectory shrinks with dt") {
  // the substitution identity is exact in continuum; the discrete defect is
  // the strong error of the scheme (order 1: the noise is additive in u3)
  ScenarioConfig c = freq_noise_config(0.05);
  const ClassicalSolution cl = solve_classical(c);
  auto defect_rms = [&](double dt) {
    SdeOptions opt;
    opt.dt = dt;
    double acc = 0.0;
    const int paths = 48;
    for (int id = 0; id < paths; ++id) {
      NoiseStream ns(3, static_cast<std::uint64_t>(id));
      const sde::UState s = sde::simulate_u(c, cl, ns, 10.0, opt);
      const TrajectoryPoint p = sde::point_from_u(cl, s, c.t1, 10.0);
      const double w = (std::conj(p.xi) * p.dxi).imag();
      acc += (w - c.omega_in) * (w - c.omega_in);
    }
    return std::sqrt(acc / paths);
  };
  const double d1 = defect_rms(c.period_in() / 200.0);
  const double d2 = defect_rms(c.period_in() / 3200.0);
  CHECK(d1 < 1.0);
  CHECK(d1 / d2 > 6.0);  // 16x smaller step, first-order strong error
}

TEST_CASE("general system reduces to the pure force-noise marginals") {
  ScenarioConfig c = force_noise_config(0.06);
  const ClassicalSolution cl = solve_classical(c);
  const double t = 8.0;
  SdeOptions opt;
  auto fn_eta = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::EtaState s = sde::simulate_eta(c, cl, ns, t, opt);
    obs[0] = s.eta * s.eta;
    return false;
  };
  auto fn_z = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::UState s = sde::simulate_z(c, cl, ns, t, opt);
    obs[0] = s.u1 * s.u1;
    return s.flagged;
  };
  const auto se = sde::run_ensemble(c.seed, 16000, 1, 2, fn_eta);
  const auto sz = sde::run_ensemble(c.seed + 1, 16000, 1, 2, fn_z);
  const double tol = 3.0 * std::hypot(se.sem[0], sz.sem[0]) + 2e-3 * se.mean[0];
  CHECK(std::abs(se.mean[0] - sz.mean[0]) < tol);
  // and the frequency components stay deterministic
  NoiseStream ns(c.seed, 5);
  const sde::UState s = sde::simulate_z(c, cl, ns, t, opt);
  const Complex phi = cl.dxi(t) / cl.xi(t);
  CHECK(std::abs(s.u3 - phi.real()) < 5e-3);
  CHECK(std::abs(s.u4 - phi.imag()) < 5e-3);
}

TEST_CASE("ensemble statistics do not depend on the worker count") {
  ScenarioConfig c = freq_noise_config(0.02);
  const ClassicalSolution cl = solve_classical(c);
  SdeOptions opt;
  auto fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::UState s = sde::simulate_u(c, cl, ns, 9.0, opt);
    obs[0] = s.u3;
    obs[1] = s.i3;
    return s.flagged;
  };
  const auto a = sde::run_ensemble(c.seed, 4096, 2, 1, fn);
  const auto b = sde::run_ensemble(c.seed, 4096, 2, 2, fn);
  const auto d = sde::run_ensemble(c.seed, 4096, 2, 7, fn);
  CHECK(a.mean == b.mean);
  CHECK(a.sem == b.sem);
  CHECK(a.mean == d.mean);
}

TEST_CASE("runaway trajectories are flagged and the policy aborts loudly") {
  ScenarioConfig c = freq_noise_config(80.0);  // absurdly strong noise
  const ClassicalSolution cl = solve_classical(c);
  SdeOptions opt;
  opt.flag_threshold = 10.0;  // flag early
  std::size_t flagged = 0;
  for (std::uint64_t id = 0; id < 64; ++id) {
    NoiseStream ns(c.seed, id);
    if (sde::simulate_u(c, cl, ns, 12.0, opt).flagged) ++flagged;
  }
  CHECK(flagged > 0);
  auto fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    const sde::UState s = sde::simulate_u(c, cl, ns, 12.0, opt);
    obs[0] = s.u3;
    return s.flagged;
  };
  CHECK_THROWS(sde::run_ensemble(c.seed, 512, 1, 2, fn));
}

TEST_CASE("mc_average applies the flag policy") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto e = sde::mc_average(v, {});
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.n == 4);
  std::vector<unsigned char> flags{0, 1, 0, 0};
  CHECK_THROWS(sde::mc_average(v, flags));  // 25% flagged
}

TEST_CASE("no-noise transition estimator is exactly the identity") {
  ScenarioConfig c = force_noise_config(0.0);
  const ClassicalSolution cl = solve_classical(c);
  SdeOptions opt;
  const auto tab = sde::mc_transition_table(c, cl, 64, 4, 30.0, opt, 2);
  for (int n = 0; n <= 4; ++n)
    for (int m = 0; m <= 4; ++m) {
      CHECK(tab.at(n, m) == doctest::Approx(n == m ? 1.0 : 0.0).epsilon(1e-9));
      CHECK(tab.sem_at(n, m) < 1e-12);
    }
}

TEST_CASE("ito substitution: zero noise keeps all processes at zero") {
  NoiseStream ns(9, 0);
  SdeOptions opt;
  opt.dt = 1e-3;
  const sde::ItoState s = sde::simulate_ito_wavefunction(0.0, 0.0, ns, 2.0, opt);
  CHECK(std::abs(s.xi1) == 0.0);
  CHECK(std::abs(s.xi2) == 0.0);
  CHECK(std::abs(s.xi3) == 0.0);
}

TEST_CASE("ito substitution satisfies the wave-equation increment to O(dt)") {
  // reference envelope phi = exp(alpha + beta y^2) with
  // beta' = 2 i beta^2 + eps2, alpha' = i beta; co-integrated by RK4.
  const double eps2 = 0.3, t2 = 0.0, T = 1.0;
  auto residual_rms = [&](double dt) {
    const long n = std::lround(T / dt);
    NoiseStream ns(21, 4);
    NoiseStream shadow(21, 4);  // same draws, used to recover each dW
    sde::SdeOptions opt;
    opt.dt = dt;
    std::vector<std::array<double, 6>> path(n + 1, {0, 0, 0, 0, 0, 0});
    long idx = 1;
    sde::Observer obs = [&](double, const double* s, int) {
      for (int k = 0; k < 6; ++k) path[idx][k] = s[k];
      ++idx;
    };
    (void)sde::simulate_ito_wavefunction(eps2, t2, ns, T, opt, obs);
    std::vector<Complex> alpha(n + 1), beta(n + 1);
    alpha[0] = Complex(0.0, 0.0);
    beta[0] = Complex(-0.5, 0.0);
    const Complex I(0, 1);
    auto fb = [&](Complex b) { return 2.0 * I * b * b + eps2; };
    auto fa = [&](Complex b) { return I * b; };
    for (long k = 0; k < n; ++k) {
      const Complex b = beta[k];
      const Complex k1 = fb(b), k2 = fb(b + 0.5 * dt * k1),
                    k3 = fb(b + 0.5 * dt * k2), k4 = fb(b + dt * k3);
      beta[k + 1] = b + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const Complex a1 = fa(b), a2 = fa(b + 0.5 * dt * k1),
                    a3 = fa(b + 0.5 * dt * k2), a4 = fa(b + dt * k3);
      alpha[k + 1] = alpha[k] + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    }
    auto psi = [&](long k, double x) {
      const Complex xi1(path[k][0], path[k][1]);
      const Complex xi2(path[k][2], path[k][3]);
      const Complex xi3(path[k][4], path[k][5]);
      const Complex y = x - xi2;
      return std::exp(I * (xi1 * y + xi3) + alpha[k] + beta[k] * y * y);
    };
    auto psi_xx = [&](long k, double x) {
      const Complex xi1(path[k][0], path[k][1]);
      const Complex xi2(path[k][2], path[k][3]);
      const Complex y = x - xi2;
      const Complex d1 = I * xi1 + 2.0 * beta[k] * y;
      return (d1 * d1 + 2.0 * beta[k]) * psi(k, x);
    };
    double acc = 0.0;
    long cnt = 0;
    const double amp = std::sqrt(2.0 * eps2);
    for (long k = 0; k < n; ++k) {
      const double dw = shadow.increment(dt);
      for (double x : {-0.7, 0.2, 1.1}) {
        const Complex lhs = psi(k + 1, x) - psi(k, x);
        const Complex rhs = 0.5 * I * psi_xx(k, x) * dt + I * amp * x * psi(k, x) * dw;
        acc += std::norm(lhs - rhs);
        ++cnt;
      }
    }
    return std::sqrt(acc / cnt);
  };
  const double r1 = residual_rms(2e-3);
  const double r2 = residual_rms(1e-3);
  CHECK(r1 / r2 == doctest::Approx(2.0).epsilon(0.5));  // O(dt) residual
}

TEST_CASE("checkpoint files round trip bit-exactly") {
  std::vector<double> states{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const std::string path = "/tmp/oscillab_test_ensemble.bin";
  sde::write_checkpoint(path, 0.01, 3, states);
  const sde::Checkpoint cp = sde::read_checkpoint(path);
  CHECK(cp.dim == 3);
  CHECK(cp.dt == 0.01);
  CHECK(cp.states == states);
}

TEST_SUITE_END();
