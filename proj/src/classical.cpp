#include "oscillab/classical.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace oscillab {

namespace {

// State layout: [xi1, xi2, dxi1, dxi2, gamma, eta, deta, sigma, d_re, d_im]
using State = std::array<double, 10>;

struct ClassicalRhs {
  const ScenarioConfig* c;
  void operator()(const State& x, State& dxdt, double t) const {
    const double w2 = c->omega0_sq.value(t);
    const double f0 = c->f0.value(t);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    dxdt[0] = x[2];
    dxdt[1] = x[3];
    dxdt[2] = -w2 * x[0];
    dxdt[3] = -w2 * x[1];
    dxdt[4] = (x[0] * x[3] - x[1] * x[2]) / r2;  // d(arg xi)/dt
    dxdt[5] = x[6];
    dxdt[6] = f0 - w2 * x[5];
    dxdt[7] = 0.5 * x[6] * x[6] - 0.5 * w2 * x[5] * x[5] + f0 * x[5];
    const double s = 1.0 / std::sqrt(2.0 * c->omega_in);
    dxdt[8] = -x[1] * f0 * s;  // d' = i xi0 f0 / sqrt(2 omega_in)
    dxdt[9] = x[0] * f0 * s;
  }
};

// Cubic Hermite on a uniform grid, given nodal values and slopes.
double hermite_eval(const std::vector<double>& ts, const std::vector<double>& ys,
                    const std::vector<double>& ms, double t) {
  const double t0 = ts.front(), t1 = ts.back();
  if (t <= t0) return ys.front();
  if (t >= t1) return ys.back();
  const double h = (t1 - t0) / static_cast<double>(ts.size() - 1);
  size_t i = static_cast<size_t>((t - t0) / h);
  if (i >= ts.size() - 1) i = ts.size() - 2;
  const double s = (t - ts[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * ys[i] + (s3 - 2 * s2 + s) * h * ms[i] +
         (-2 * s3 + 3 * s2) * ys[i + 1] + (s3 - s2) * h * ms[i + 1];
}

}  // namespace

Complex ClassicalSolution::xi(double time) const {
  return {hermite_eval(t, xi01, dxi01, time), hermite_eval(t, xi02, dxi02, time)};
}

Complex ClassicalSolution::dxi(double time) const {
  // slopes of dxi at the nodes are -omega0_sq * xi
  const size_t n = t.size();
  const double t0 = t.front(), t1 = t.back();
  double tt = std::clamp(time, t0, t1);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  size_t i = static_cast<size_t>((tt - t0) / h);
  if (i >= n - 1) i = n - 2;
  const double s = (tt - t[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  auto blend = [&](const std::vector<double>& ys, const std::vector<double>& xs) {
    const double m0 = -w2[i] * xs[i], m1 = -w2[i + 1] * xs[i + 1];
    return (2 * s3 - 3 * s2 + 1) * ys[i] + (s3 - 2 * s2 + s) * h * m0 +
           (-2 * s3 + 3 * s2) * ys[i + 1] + (s3 - s2) * h * m1;
  };
  return {blend(dxi01, xi01), blend(dxi02, xi02)};
}

double ClassicalSolution::r(double time) const { return std::abs(xi(time)); }

double ClassicalSolution::gamma(double time) const {
  // slope of gamma is Im(dxi/xi)
  const size_t n = t.size();
  const double t0 = t.front(), t1 = t.back();
  double tt = std::clamp(time, t0, t1);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  size_t i = static_cast<size_t>((tt - t0) / h);
  if (i >= n - 1) i = n - 2;
  const double s = (tt - t[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  auto slope = [&](size_t k) {
    const double r2 = xi01[k] * xi01[k] + xi02[k] * xi02[k];
    return (xi01[k] * dxi02[k] - xi02[k] * dxi01[k]) / r2;
  };
  return (2 * s3 - 3 * s2 + 1) * gamma0[i] + (s3 - 2 * s2 + s) * h * slope(i) +
         (-2 * s3 + 3 * s2) * gamma0[i + 1] + (s3 - s2) * h * slope(i + 1);
}

double ClassicalSolution::eta(double time) const {
  return hermite_eval(t, eta0, deta0, time);
}

double ClassicalSolution::deta(double time) const {
  const size_t n = t.size();
  const double t0 = t.front(), t1 = t.back();
  double tt = std::clamp(time, t0, t1);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  size_t i = static_cast<size_t>((tt - t0) / h);
  if (i >= n - 1) i = n - 2;
  const double s = (tt - t[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double m0 = f[i] - w2[i] * eta0[i];
  const double m1 = f[i + 1] - w2[i + 1] * eta0[i + 1];
  return (2 * s3 - 3 * s2 + 1) * deta0[i] + (s3 - 2 * s2 + s) * h * m0 +
         (-2 * s3 + 3 * s2) * deta0[i + 1] + (s3 - s2) * h * m1;
}

double ClassicalSolution::action(double time) const {
  const size_t n = t.size();
  const double t0 = t.front(), t1 = t.back();
  double tt = std::clamp(time, t0, t1);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  size_t i = static_cast<size_t>((tt - t0) / h);
  if (i >= n - 1) i = n - 2;
  const double s = (tt - t[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  auto slope = [&](size_t k) {
    return 0.5 * deta0[k] * deta0[k] - 0.5 * w2[k] * eta0[k] * eta0[k] +
           f[k] * eta0[k];
  };
  return (2 * s3 - 3 * s2 + 1) * sigma[i] + (s3 - 2 * s2 + s) * h * slope(i) +
         (-2 * s3 + 3 * s2) * sigma[i + 1] + (s3 - s2) * h * slope(i + 1);
}

Complex ClassicalSolution::d(double time) const {
  const double s = 1.0 / std::sqrt(2.0 * omega_in);
  auto slope_re = [&](size_t k) { return -xi02[k] * f[k] * s; };
  auto slope_im = [&](size_t k) { return xi01[k] * f[k] * s; };
  const size_t n = t.size();
  const double t0 = t.front(), t1 = t.back();
  double tt = std::clamp(time, t0, t1);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  size_t i = static_cast<size_t>((tt - t0) / h);
  if (i >= n - 1) i = n - 2;
  const double u = (tt - t[i]) / h;
  const double u2 = u * u, u3 = u2 * u;
  auto blend = [&](const std::vector<double>& ys, auto&& m) {
    return (2 * u3 - 3 * u2 + 1) * ys[i] + (u3 - 2 * u2 + u) * h * m(i) +
           (-2 * u3 + 3 * u2) * ys[i + 1] + (u3 - u2) * h * m(i + 1);
  };
  return {blend(d_re, slope_re), blend(d_im, slope_im)};
}

double ClassicalSolution::wronskian_defect() const {
  double worst = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double w = xi01[i] * dxi02[i] - xi02[i] * dxi01[i];
    worst = std::max(worst, std::abs(w - omega_in));
  }
  return worst;
}

void ClassicalSolution::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "t,xi01,xi02,dxi01,dxi02,eta0,deta0,sigma\n";
  for (size_t i = 0; i < t.size(); ++i) {
    out << t[i] << ',' << xi01[i] << ',' << xi02[i] << ',' << dxi01[i] << ','
        << dxi02[i] << ',' << eta0[i] << ',' << deta0[i] << ',' << sigma[i]
        << '\n';
  }
}

ClassicalSolution solve_classical(const ScenarioConfig& config) {
  namespace ode = boost::numeric::odeint;
  const int nt = config.grid_nt;
  ClassicalSolution sol;
  sol.omega_in = config.omega_in;
  sol.omega_out = config.omega_out;
  sol.t.resize(nt);
  const double h = (config.t_max - config.t_min) / (nt - 1);
  for (int i = 0; i < nt; ++i) sol.t[i] = config.t_min + h * i;

  State x{};
  const double w_in = config.omega_in, t0 = config.t_min;
  x[0] = std::cos(w_in * t0);
  x[1] = std::sin(w_in * t0);
  x[2] = -w_in * std::sin(w_in * t0);
  x[3] = w_in * std::cos(w_in * t0);
  x[4] = w_in * t0;  // continuous phase seed

  auto reserve = [&](std::vector<double>& v) { v.reserve(nt); };
  reserve(sol.xi01);
  reserve(sol.xi02);
  reserve(sol.dxi01);
  reserve(sol.dxi02);
  reserve(sol.gamma0);
  reserve(sol.eta0);
  reserve(sol.deta0);
  reserve(sol.sigma);
  reserve(sol.d_re);
  reserve(sol.d_im);
  reserve(sol.w2);
  reserve(sol.f);

  ClassicalRhs rhs{&config};
  auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
  auto observer = [&](const State& s, double time) {
    sol.xi01.push_back(s[0]);
    sol.xi02.push_back(s[1]);
    sol.dxi01.push_back(s[2]);
    sol.dxi02.push_back(s[3]);
    sol.gamma0.push_back(s[4]);
    sol.eta0.push_back(s[5]);
    sol.deta0.push_back(s[6]);
    sol.sigma.push_back(s[7]);
    sol.d_re.push_back(s[8]);
    sol.d_im.push_back(s[9]);
    sol.w2.push_back(config.omega0_sq.value(time));
    sol.f.push_back(config.f0.value(time));
  };
  try {
    ode::integrate_times(stepper, rhs, x, sol.t.begin(), sol.t.end(), h / 8.0,
                         observer);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("classical integration failed: ") +
                             e.what());
  }
  return sol;
}

ClassicalSolution solve_xi0(const ScenarioConfig& config) {
  return solve_classical(config);
}

ClassicalSolution solve_eta0(const ScenarioConfig& config) {
  return solve_classical(config);
}

AsymptoticData extract_asymptotics(const ClassicalSolution& sol) {
  const double w = sol.omega_out;
  const double t_max = sol.t.back();
  // Tail window: one out-period, required to lie in the asymptotic region.
  const double tail = 2.0 * M_PI / w;
  const double ta = t_max - tail;
  if (ta <= sol.t.front())
    throw std::runtime_error("extract_asymptotics: window too short");
  for (size_t i = 0; i < sol.t.size(); ++i) {
    if (sol.t[i] >= ta && std::abs(sol.w2[i] - w * w) > 1e-8 * std::max(1.0, w * w))
      throw std::runtime_error(
          "extract_asymptotics: asymptotic region not reached "
          "(omega0_sq still varies inside the final out-period)");
  }

  const Complex iw(0.0, w);
  const int m = 64;
  Complex c1_acc = 0.0, c2_acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const double t = ta + (tail * k) / m;
    const Complex xi = sol.xi(t), dxi = sol.dxi(t);
    const Complex e = std::exp(Complex(0.0, -w * t));
    c1_acc += 0.5 * (xi + dxi / iw) * e;
    c2_acc += 0.5 * (xi - dxi / iw) / e;
  }
  AsymptoticData a;
  a.C1 = c1_acc / static_cast<double>(m);
  a.C2 = c2_acc / static_cast<double>(m);
  a.delta1 = std::arg(a.C1);
  a.delta2 = std::arg(a.C2);
  a.delta = a.delta1 + a.delta2;
  a.rho = std::norm(a.C2) / std::norm(a.C1);
  a.d = sol.d(t_max);
  a.nu = std::norm(a.d);
  a.beta = std::arg(a.d);

  double fit = 0.0;
  for (int k = 0; k <= 4 * m; ++k) {
    const double t = ta + (tail * k) / (4 * m);
    const Complex rec = a.C1 * std::exp(Complex(0.0, w * t)) +
                        a.C2 * std::exp(Complex(0.0, -w * t));
    fit = std::max(fit, std::abs(sol.xi(t) - rec));
  }
  a.fit_error = fit;
  a.bogoliubov_defect =
      std::abs((w / sol.omega_in) * (std::norm(a.C1) - std::norm(a.C2)) - 1.0);
  return a;
}

CharacteristicFrame make_frame(const ClassicalSolution& sol, double t_e) {
  CharacteristicFrame fr{};
  fr.t_e = t_e;
  fr.omega_in = sol.omega_in;
  fr.solution = &sol;
  fr.d1 = sol.xi(t_e).real();
  fr.d2 = sol.xi(t_e).imag();
  fr.d3 = sol.dxi(t_e).real();
  fr.d4 = sol.dxi(t_e).imag();
  fr.d5 = sol.eta(t_e);
  fr.d6 = sol.deta(t_e);
  return fr;
}

double CharacteristicFrame::e21(double t) const {
  const Complex xi = solution->xi(t);
  return d1 * xi.imag() - d2 * xi.real();
}
double CharacteristicFrame::e22(double t) const {
  const Complex xi = solution->xi(t);
  return d4 * xi.real() - d3 * xi.imag();
}
double CharacteristicFrame::e11(double t) const {
  const Complex dxi = solution->dxi(t);
  return d1 * dxi.imag() - d2 * dxi.real();
}
double CharacteristicFrame::e12(double t) const {
  const Complex dxi = solution->dxi(t);
  return d4 * dxi.real() - d3 * dxi.imag();
}
double CharacteristicFrame::h1(double t) const {
  const Complex xi = solution->xi(t);
  return (d2 * d6 - d4 * d5) * xi.real() + (d3 * d5 - d1 * d6) * xi.imag() +
         omega_in * solution->eta(t);
}
double CharacteristicFrame::h2(double t) const {
  const Complex dxi = solution->dxi(t);
  return (d2 * d6 - d4 * d5) * dxi.real() + (d3 * d5 - d1 * d6) * dxi.imag() +
         omega_in * solution->deta(t);
}

std::array<double, 4> characteristics_map(const CharacteristicFrame& fr,
                                          const std::array<double, 4>& q,
                                          double t) {
  const double E11 = fr.e11(t), E12 = fr.e12(t), E21 = fr.e21(t), E22 = fr.e22(t);
  const double H1 = fr.h1(t), H2 = fr.h2(t);
  const double win = fr.omega_in;
  const double den = (E21 * q[2] + E22) * (E21 * q[2] + E22) +
                     E21 * E21 * q[3] * q[3];
  if (den == 0.0)
    throw std::runtime_error("characteristics_map: singular frame denominator");
  std::array<double, 4> u;
  u[0] = (E22 * q[0] + E21 * q[1] + H1) / win;
  u[1] = (E12 * q[0] + E11 * q[1] + H2) / win;
  u[2] = ((E11 * q[2] + E12) * (E21 * q[2] + E22) + E11 * E21 * q[3] * q[3]) / den;
  // The Wronskian e11 e22 - e12 e21 = omega_in^2 fixes the xi4 scale so that
  // the map is the identity at t = t_e.
  u[3] = win * win * q[3] / den;
  return u;
}

double characteristics_jacobian(const CharacteristicFrame& fr,
                                const std::array<double, 4>& q, double t) {
  const double E21 = fr.e21(t), E22 = fr.e22(t);
  const double den = E21 * q[2] + E22;
  if (den == 0.0)
    throw std::runtime_error("characteristics_jacobian: singular denominator");
  const double win = fr.omega_in;
  const double d2 = den * den;
  return (win * win * win * win) / (d2 * d2);
}

}  // namespace oscillab
