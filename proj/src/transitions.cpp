#include "oscillab/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "oscillab/quadrature.hpp"
#include "oscillab/sde.hpp"
#include "oscillab/wavefunction.hpp"

namespace oscillab {
namespace transitions {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int p_nm(int n, int m) { return (n == 0) ? 1 : 3; (void)m; }
}  // namespace

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Eps1Zero: return "eps1_zero";
    case Regime::Eps2ZeroFull: return "eps2_zero_full";
    case Regime::Eps2ZeroReduced: return "eps2_zero_reduced";
    case Regime::General: return "general";
    case Regime::MonteCarlo: return "mc";
  }
  return "?";
}

double TransitionTable::row_sum(int n) const {
  double s = 0.0;
  for (int m = 0; m <= n_max; ++m) {
    const double x = at(n, m);
    if (!std::isnan(x)) s += x;
  }
  return s;
}

void TransitionTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "n,m,W,err,regime,scenario_hash\n";
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n_max; ++m) {
      const double x = at(n, m);
      if (std::isnan(x)) continue;
      out << n << ',' << m << ',' << x << ',' << err_at(n, m) << ','
          << regime_name(regime) << ',' << scenario_hash << '\n';
    }
}

// ---------------------------------------------------------------------------
// eps1 = 0 closed-form pipeline
// ---------------------------------------------------------------------------

namespace {

// |c_nm|^2 averaged over the Gaussian density at time t.
std::vector<double> averaged_cnm2(const ScenarioConfig& c,
                                  const ClassicalSolution& cl, double t,
                                  int n_max, int order) {
  const int N = n_max + 1;
  std::vector<double> acc(static_cast<std::size_t>(N) * N, 0.0);
  const fp::GaussianP1 g = fp::analytic_p1(c, cl, t);

  TrajectoryPoint p;
  p.t = t;
  p.xi = cl.xi(t);
  p.dxi = cl.dxi(t);
  p.sigma = 0.0;  // phase only; |c_nm| is sigma-independent
  p.gamma = cl.gamma(t);

  auto add_point = [&](double x1, double x2, double weight) {
    p.eta = x1;
    p.deta = x2;
    const auto gen = generating_coefficients(p, c.omega_in, c.omega_out);
    const CoefficientMatrix cm = coefficients_cnm(gen, n_max);
    for (std::size_t j = 0; j < acc.size(); ++j)
      acc[j] += weight * std::norm(cm.c[j]);
  };

  if (g.degenerate) {
    add_point(g.mean1, g.mean2, 1.0);
    return acc;
  }
  // principal axes of the covariance
  const double tr = g.s11 + g.s22;
  const double det = g.s11 * g.s22 - g.s12 * g.s12;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
  double v1x, v1y;
  if (std::abs(g.s12) > 1e-300) {
    v1x = l1 - g.s22;
    v1y = g.s12;
  } else {
    v1x = g.s11 >= g.s22 ? 1.0 : 0.0;
    v1y = g.s11 >= g.s22 ? 0.0 : 1.0;
  }
  const double nrm = std::hypot(v1x, v1y);
  v1x /= nrm;
  v1y /= nrm;
  const double v2x = -v1y, v2y = v1x;
  if (l2 <= 0.0) throw std::runtime_error("averaged_cnm2: covariance not SPD");

  const QuadratureRule rule = gauss_hermite(order);
  const double s1 = std::sqrt(2.0 * l1), s2 = std::sqrt(2.0 * l2);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) {
      const double z1 = rule.nodes[i], z2 = rule.nodes[j];
      const double x1 = g.mean1 + s1 * z1 * v1x + s2 * z2 * v2x;
      const double x2 = g.mean2 + s1 * z1 * v1y + s2 * z2 * v2y;
      add_point(x1, x2, rule.weights[i] * rule.weights[j] / M_PI);
    }
  return acc;
}

}  // namespace

TransitionTable w_nm_eps1_zero(const ScenarioConfig& c,
                               const ClassicalSolution& cl, int n_max,
                               const Eps1ZeroOptions& opt) {
  if (c.eps1 != 0.0)
    throw std::invalid_argument("w_nm_eps1_zero: requires eps1 = 0");
  const double t_eval = opt.t_eval > 0.0 ? opt.t_eval : c.t_max;
  const double span = t_eval - std::min(c.t2, t_eval);
  const int K = std::max(2, opt.plateau_samples);
  const int N = n_max + 1;

  std::vector<std::vector<double>> samples;
  for (int k = 0; k < K; ++k) {
    const double t = t_eval - 0.2 * span * (1.0 - static_cast<double>(k) / (K - 1));
    samples.push_back(averaged_cnm2(c, cl, t, n_max, opt.quad_order));
  }
  TransitionTable tab;
  tab.regime = Regime::Eps1Zero;
  tab.scenario_hash = c.hash();
  tab.n_max = n_max;
  tab.w = samples.back();
  tab.err.assign(tab.w.size(), 0.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < tab.w.size(); ++j) {
    double spread = 0.0;
    for (const auto& s : samples) spread = std::max(spread, std::abs(s[j] - tab.w[j]));
    tab.err[j] = spread;
    if (tab.w[j] > 1e-8)
      worst = std::max(worst, spread / std::max(tab.w[j], 1e-2));
  }
  if (worst > 50.0 * opt.plateau_rtol)
    throw std::runtime_error(
        "w_nm_eps1_zero: no plateau across the final window (relative drift " +
        std::to_string(worst) + ")");
  (void)N;
  return tab;
}

// ---------------------------------------------------------------------------
// weight functions
// ---------------------------------------------------------------------------

double h_weight(int n, int m, const std::array<double, 4>& u, double w_in,
                double w_out, double xi_t1_abs) {
  const double u1 = u[0], u2 = u[1], u3 = u[2], u4 = u[3];
  const double k2 = (w_out + u4) * (w_out + u4) + u3 * u3;  // |K|^2
  const double h00 =
      2.0 * std::sqrt(w_in * w_out) / (xi_t1_abs * std::sqrt(k2)) *
      std::exp(0.5 * w_out * (2.0 * w_out * (u4 + w_out) / k2 - 2.0) * u1 * u1 -
               (u4 + w_out) / k2 * u2 * u2 +
               2.0 * w_out * u3 / k2 * u1 * u2);
  if (n == 0 && m == 0) return h00;
  if (n == 0 && m == 1) {
    const double a = u2 - u1 * u3;
    return 2.0 * w_out / k2 * (a * a + u1 * u1 * u4 * u4) * h00;
  }
  if (n == 1 && m == 0) {
    return 2.0 * w_in / (xi_t1_abs * xi_t1_abs * k2) *
           (w_out * w_out * u1 * u1 + u2 * u2) * h00;
  }
  if (n == 1 && m == 1) {
    const Complex K(w_out + u4, -u3);
    const Complex z = K - Complex(w_out * u1, -u2) * Complex(u1 * u4, u2 - u1 * u3);
    return 4.0 * w_in * w_out / (xi_t1_abs * xi_t1_abs * k2 * k2) * std::norm(z) *
           h00;
  }
  throw std::invalid_argument("h_weight: only n, m in {0, 1}");
}

ReducedWeights make_reduced_weights(const AsymptoticData& a,
                                    const CharacteristicFrame& fr, double w_in,
                                    double w_out, double xi_t1_abs) {
  ReducedWeights rw;
  rw.omega_in = w_in;
  rw.omega_out = w_out;
  rw.xi_t1_abs = xi_t1_abs;
  const double d1 = fr.d1, d2 = fr.d2, d3 = fr.d3, d4 = fr.d4;
  const double rho = a.rho, delta = a.delta, nu = a.nu, beta = a.beta;
  const double sr = std::sqrt(rho);
  const double cd = std::cos(delta), sd = std::sin(delta);
  rw.mu1 = -fr.d5 + std::sqrt(2.0 * nu / w_in) * (d1 * std::cos(beta) + d2 * std::sin(beta));
  rw.mu2 = -fr.d6 + std::sqrt(2.0 * nu / w_in) * (d3 * std::cos(beta) + d4 * std::sin(beta));
  rw.pref = w_in * w_out / (1.0 - rho);
  rw.c2 = (d1 * d1 + d2 * d2) * (1.0 + rho) -
          2.0 * sr * ((d1 * d1 - d2 * d2) * cd + 2.0 * d1 * d2 * sd);
  rw.c1 = -(d2 * d4 + d1 * d3) * (1.0 + rho) +
          2.0 * sr * ((d1 * d4 + d2 * d3) * sd + (d1 * d3 - d2 * d4) * cd);
  rw.c0 = (d3 * d3 + d4 * d4) * (1.0 + rho) +
          2.0 * sr * ((d4 * d4 - d3 * d3) * cd - 2.0 * d3 * d4 * sd);
  return rw;
}

double ReducedWeights::sigma(double xi3) const {
  return pref * (c2 * xi3 * xi3 + 2.0 * c1 * xi3 + c0);
}

double ReducedWeights::hbar(int n, int m, double xi1, double xi2,
                            double xi3) const {
  const double S = sigma(xi3);
  if (!(S > 0.0))
    throw std::runtime_error("ReducedWeights: Sigma(xi3) <= 0 on the domain");
  const double arg = xi3 * (xi1 + mu1) - xi2 - mu2;
  const double h00 = 2.0 * std::sqrt(omega_in * omega_out) /
                     (xi_t1_abs * std::sqrt(S)) *
                     std::exp(-omega_out * omega_in * omega_in / S * arg * arg);
  if (n == 0 && m == 0) return h00;
  if (n == 0 && m == 1)
    return 2.0 * omega_out * omega_in * omega_in / S * arg * arg * h00;
  throw std::invalid_argument("ReducedWeights::hbar: pairs (0,0) and (0,1) only");
}

// ---------------------------------------------------------------------------
// default domains
// ---------------------------------------------------------------------------

GridShape default_shape3(const ScenarioConfig& c, int n_cells) {
  const double w = c.omega_out;
  GridShape s;
  s.dims = 3;
  s.ax[0] = {-0.8, 0.8, std::max(8, n_cells / 3)};
  s.ax[1] = {-0.8 * w, 0.8 * w, std::max(8, n_cells / 3)};
  s.ax[2] = {-8.0 * w, 8.0 * w, n_cells};
  return s;
}

GridShape default_shape4(const ScenarioConfig& c, const ClassicalSolution& cl,
                         int n12, int n34) {
  // pilot ensemble quantile box around the deterministic start
  const double w = c.omega_in;
  const Complex phi = cl.dxi(c.t1) / cl.xi(c.t1);
  double lo1 = cl.eta(c.t1), hi1 = lo1;
  double lo2 = cl.deta(c.t1), hi2 = lo2;
  double lo3 = phi.real(), hi3 = lo3;
  double lo4 = phi.imag(), hi4 = lo4;
  sde::SdeOptions opt;
  const double t_stop = c.t_e > c.t1 ? c.t_e : c.t_max;
  for (std::uint64_t id = 0; id < 512; ++id) {
    NoiseStream ns(c.seed ^ 0x9e3779b97f4a7c15ull, id);
    sde::Observer obs = [&](double, const double* s, int) {
      lo1 = std::min(lo1, s[0]); hi1 = std::max(hi1, s[0]);
      lo2 = std::min(lo2, s[1]); hi2 = std::max(hi2, s[1]);
      lo3 = std::min(lo3, s[2]); hi3 = std::max(hi3, s[2]);
      lo4 = std::min(lo4, s[3]); hi4 = std::max(hi4, s[3]);
    };
    (void)sde::simulate_z(c, cl, ns, t_stop, opt, obs);
  }
  auto pad = [](double lo, double hi, double min_half) {
    const double mid = 0.5 * (lo + hi);
    const double half = std::max(min_half, 0.7 * (hi - lo));
    return std::array<double, 2>{mid - half, mid + half};
  };
  GridShape s;
  s.dims = 4;
  // (z1, z2) = (eta, deta) stays pinned at the origin when there is neither
  // force noise nor an initial displacement; one cell represents that delta
  // exactly (every face velocity vanishes on it)
  const bool pinned = c.eps2 <= 0.0 && std::abs(cl.eta(c.t1)) < 1e-12 &&
                      std::abs(cl.deta(c.t1)) < 1e-12 &&
                      std::abs(c.f0.value(0.5 * (c.t1 + t_stop))) < 1e-12;
  if (pinned) {
    s.ax[0] = {-0.05, 0.05, 1};
    s.ax[1] = {-0.05 * w, 0.05 * w, 1};
  } else {
    const auto b1 = pad(lo1, hi1, 0.1);
    const auto b2 = pad(lo2, hi2, 0.1 * w);
    s.ax[0] = {b1[0], b1[1], n12};
    s.ax[1] = {b2[0], b2[1], n12};
  }
  const auto b3 = pad(lo3, hi3, 0.4 * w);
  const auto b4 = pad(lo4, hi4, 0.4 * w);
  s.ax[2] = {b3[0], b3[1], n34};
  s.ax[3] = {std::max(0.02 * w, b4[0]), b4[1], n34};
  return s;
}

// ---------------------------------------------------------------------------
// eps2 = 0 full pipeline
// ---------------------------------------------------------------------------

namespace {

double integral_h_q(const GridFunction& q, int n, int m, double w_in,
                    double w_out, double xi_t1_abs) {
  const GridShape& s = q.shape;
  const double dv = s.cell_volume();
  double acc = 0.0;
  std::size_t idx = 0;
  for (int i0 = 0; i0 < s.ax[0].n; ++i0)
    for (int i1 = 0; i1 < s.ax[1].n; ++i1)
      for (int i2 = 0; i2 < s.ax[2].n; ++i2)
        for (int i3 = 0; i3 < s.ax[3].n; ++i3, ++idx) {
          const std::array<double, 4> u{s.ax[0].center(i0), s.ax[1].center(i1),
                                        s.ax[2].center(i2), s.ax[3].center(i3)};
          acc += h_weight(n, m, u, w_in, w_out, xi_t1_abs) * q.v[idx] * dv;
        }
  return acc;
}

// March a (possibly sink-carrying) 4D solution, refreshing coefficient
// samples only when the gated profile scalars change.
void march_fp4d(fp::ExplicitFpEngine& engine, std::vector<double>& field,
                const ScenarioConfig& c, double t0, double t1, double cfl) {
  double t = t0;
  auto scalars = [&](double tt) {
    return std::array<double, 4>{c.omega0_sq.value(tt), c.f0.value(tt),
                                 c.noise_amp1(tt), c.noise_amp2(tt)};
  };
  engine.refresh(t);
  auto last = scalars(t);
  while (t < t1 - 1e-13) {
    const auto now = scalars(t);
    if (now != last) {
      engine.refresh(t);
      last = now;
    }
    double dt = engine.stable_dt(cfl);
    dt = std::min(dt, t1 - t);
    engine.heun_step(field, dt, false);
    t += dt;
  }
}

}  // namespace

FullPipelineEntry w_nm_eps2_zero_full_entry(const ScenarioConfig& c,
                                            const ClassicalSolution& cl, int n,
                                            int m,
                                            const Eps2ZeroFullOptions& opt) {
  GridShape shape = opt.shape4;
  if (shape.dims == 0) shape = default_shape4(c, cl);
  fp::ExplicitFpEngine engine = fp::make_fp4d_engine(c, shape, p_nm(n, m), opt.threads);

  const Complex phi = cl.dxi(c.t1) / cl.xi(c.t1);
  const std::array<double, 4> u0{cl.eta(c.t1), cl.deta(c.t1), phi.real(),
                                 phi.imag()};
  std::array<double, 4> widths{};
  for (int d = 0; d < 4; ++d)
    widths[d] = opt.init_width_cells * shape.ax[d].h();
  GridFunction q = GridFunction::gaussian_blob(shape, u0, widths);

  const double xi1abs = std::abs(cl.xi(c.t1));
  march_fp4d(engine, q.v, c, c.t1, c.t_e, opt.cfl);
  const double i0 = integral_h_q(q, n, m, c.omega_in, c.omega_out, xi1abs);
  // after the window the integral must sit still; its drift is the error bar
  march_fp4d(engine, q.v, c, c.t_e, c.t_e + opt.settle_periods * c.period_in(),
             opt.cfl);
  const double i1 = integral_h_q(q, n, m, c.omega_in, c.omega_out, xi1abs);

  FullPipelineEntry e;
  e.w = i1;
  e.drift = std::abs(i1 - i0) / std::max(std::abs(i1), 1e-12);
  e.q = std::move(q);
  return e;
}

TransitionTable w_nm_eps2_zero_full(const ScenarioConfig& c,
                                    const ClassicalSolution& cl, int n_max,
                                    const Eps2ZeroFullOptions& opt) {
  if (n_max > 1)
    throw std::invalid_argument("w_nm_eps2_zero_full: weights known for n,m <= 1");
  TransitionTable tab;
  tab.regime = Regime::Eps2ZeroFull;
  tab.scenario_hash = c.hash();
  tab.n_max = n_max;
  const int N = n_max + 1;
  tab.w.assign(static_cast<std::size_t>(N) * N, kNaN);
  tab.err.assign(tab.w.size(), 0.0);
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n_max; ++m) {
      const FullPipelineEntry e = w_nm_eps2_zero_full_entry(c, cl, n, m, opt);
      tab.w[n * N + m] = e.w;
      tab.err[n * N + m] = e.drift * std::abs(e.w);
    }
  return tab;
}

// ---------------------------------------------------------------------------
// reduced pipeline
// ---------------------------------------------------------------------------

namespace {

double integrate_qbar_hbar(const GridFunction& qbar, const ReducedWeights& rw,
                           int n, int m, int gl_order) {
  const GridShape& s = qbar.shape;
  if (gl_order <= 0) {
    const double dv = s.cell_volume();
    double acc = 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < s.ax[0].n; ++i)
      for (int j = 0; j < s.ax[1].n; ++j)
        for (int k = 0; k < s.ax[2].n; ++k, ++idx)
          acc += rw.hbar(n, m, s.ax[0].center(i), s.ax[1].center(j),
                         s.ax[2].center(k)) *
                 qbar.v[idx] * dv;
    return acc;
  }
  const QuadratureRule g1 = gauss_legendre(gl_order, s.ax[0].lo, s.ax[0].hi);
  const QuadratureRule g2 = gauss_legendre(gl_order, s.ax[1].lo, s.ax[1].hi);
  const QuadratureRule g3 = gauss_legendre(gl_order, s.ax[2].lo, s.ax[2].hi);
  double acc = 0.0;
  for (int i = 0; i < gl_order; ++i)
    for (int j = 0; j < gl_order; ++j)
      for (int k = 0; k < gl_order; ++k) {
        const std::array<double, 4> x{g1.nodes[i], g2.nodes[j], g3.nodes[k], 0.0};
        acc += g1.weights[i] * g2.weights[j] * g3.weights[k] *
               rw.hbar(n, m, x[0], x[1], x[2]) * qbar.interp(x);
      }
  return acc;
}

fp::StationaryParams stationary_params(const ScenarioConfig& c, double p,
                                   bool with_eps2) {
  fp::StationaryParams par;
  par.omega = c.omega_out;
  par.f0 = c.f0.value(c.t_max);
  par.eps1 = c.eps1;
  par.eps2 = with_eps2 ? c.eps2 : 0.0;
  par.p_nm = p;
  return par;
}

}  // namespace

TransitionTable w_nm_eps2_zero_reduced(const ScenarioConfig& c,
                                       const ClassicalSolution& cl,
                                       const ReducedOptions& opt) {
  if (c.eps2 != 0.0)
    throw std::invalid_argument("w_nm_eps2_zero_reduced: requires eps2 = 0");
  TransitionTable tab;
  tab.regime = Regime::Eps2ZeroReduced;
  tab.scenario_hash = c.hash();
  tab.n_max = 1;
  tab.w.assign(4, kNaN);
  tab.err.assign(4, 0.0);

  const AsymptoticData asym = extract_asymptotics(cl);
  const CharacteristicFrame frame = make_frame(cl, c.t_e);
  const double xi1abs = std::abs(cl.xi(c.t1));
  const ReducedWeights rw =
      make_reduced_weights(asym, frame, c.omega_in, c.omega_out, xi1abs);

  GridShape shape3 = opt.shape3;
  if (shape3.dims == 0) shape3 = default_shape3(c);
  GridShape shape4 = opt.shape4;
  if (shape4.dims == 0) {
    shape4.dims = 4;
    shape4.ax[0] = shape3.ax[0];
    shape4.ax[1] = shape3.ax[1];
    shape4.ax[2] = shape3.ax[2];
    shape4.ax[3] = {0.0, 2.5 * c.omega_out, 40};
  }

  const Complex phi = cl.dxi(c.t1) / cl.xi(c.t1);
  const std::array<double, 4> u0{cl.eta(c.t1), cl.deta(c.t1), phi.real(),
                                 phi.imag()};

  for (int m = 0; m <= 1; ++m) {
    const double p = p_nm(0, m);
    fp::ExplicitFpEngine eng3 =
        fp::make_shortened3_engine(stationary_params(c, p, false), shape3,
                                   opt.rec, opt.threads);
    const fp::StationaryResult qbar = fp::solve_stationary(eng3, false);

    fp::ExplicitFpEngine eng4 = fp::make_fp4d_stationary_engine(
        stationary_params(c, p, false), shape4, opt.threads);
    std::array<double, 4> cdef{}, wdef{};
    for (int d = 0; d < 4; ++d) {
      cdef[d] = 0.5 * (shape4.ax[d].lo + shape4.ax[d].hi);
      wdef[d] = 0.25 * (shape4.ax[d].hi - shape4.ax[d].lo);
    }
    fp::MarchingOptions mo;
    mo.tol = 1e-8;
    const fp::StationaryResult Y = fp::solve_stationary_marching(
        eng4, true, GridFunction::gaussian_blob(shape4, cdef, wdef), mo);

    auto y_at = [&Y](const std::array<double, 4>& u) { return Y.q.interp(u); };
    const double cnm = fp::normalization_constant(qbar.q, y_at, u0);
    const double inm = integrate_qbar_hbar(qbar.q, rw, 0, m, opt.gl_order);
    const double w = std::pow(c.omega_in, p) * cnm * inm;
    tab.w[0 * 2 + m] = w;
    const double span = (c.t_e - c.t1);
    tab.err[0 * 2 + m] =
        std::abs(w) * (std::abs(qbar.lambda) + std::abs(Y.lambda)) * span;
  }
  return tab;
}

// ---------------------------------------------------------------------------
// general pipeline
// ---------------------------------------------------------------------------

TransitionTable w_nm_general(const ScenarioConfig& c,
                             const ClassicalSolution& cl,
                             const GeneralOptions& opt) {
  TransitionTable tab;
  tab.regime = Regime::General;
  tab.scenario_hash = c.hash();
  tab.n_max = 1;
  tab.w.assign(4, kNaN);
  tab.err.assign(4, 0.0);

  const AsymptoticData asym = extract_asymptotics(cl);
  const CharacteristicFrame frame = make_frame(cl, c.t_e);
  const double xi1abs = std::abs(cl.xi(c.t1));
  const ReducedWeights rw =
      make_reduced_weights(asym, frame, c.omega_in, c.omega_out, xi1abs);

  GridShape shape3 = opt.shape3;
  if (shape3.dims == 0) shape3 = default_shape3(c);
  GridShape shape4 = opt.shape4;
  if (shape4.dims == 0) {
    shape4.dims = 4;
    shape4.ax[0] = shape3.ax[0];
    shape4.ax[1] = shape3.ax[1];
    shape4.ax[2] = shape3.ax[2];
    shape4.ax[3] = {0.0, 2.5 * c.omega_out, 40};
  }

  const double t_gt = std::max(c.t1, c.t2);
  const Complex phi1 = cl.dxi(c.t1) / cl.xi(c.t1);

  for (int m = 0; m <= 1; ++m) {
    const double p = p_nm(0, m);
    fp::ExplicitFpEngine eng3 = fp::make_shortened3_engine(
        stationary_params(c, p, true), shape3, fp::Reconstruction::Fromm,
        opt.threads);
    const fp::StationaryResult qbar = fp::solve_stationary(eng3, false);

    fp::ExplicitFpEngine eng4 = fp::make_fp4d_stationary_engine(
        stationary_params(c, p, true), shape4, opt.threads);
    std::array<double, 4> cdef{}, wdef{};
    for (int d = 0; d < 4; ++d) {
      cdef[d] = 0.5 * (shape4.ax[d].lo + shape4.ax[d].hi);
      wdef[d] = 0.25 * (shape4.ax[d].hi - shape4.ax[d].lo);
    }
    fp::MarchingOptions mo;
    mo.tol = 1e-8;
    const fp::StationaryResult Y = fp::solve_stationary_marching(
        eng4, true, GridFunction::gaussian_blob(shape4, cdef, wdef), mo);
    auto y_at = [&Y](const std::array<double, 4>& u) { return Y.q.interp(u); };

    // denominator of C_nm(z_>): shared across endpoints
    double denom = 0.0;
    {
      const double dv = qbar.q.shape.cell_volume();
      std::size_t idx = 0;
      for (int i = 0; i < shape3.ax[0].n; ++i)
        for (int j = 0; j < shape3.ax[1].n; ++j)
          for (int k = 0; k < shape3.ax[2].n; ++k, ++idx) {
            const std::array<double, 4> u{shape3.ax[0].center(i),
                                          shape3.ax[1].center(j),
                                          shape3.ax[2].center(k), 0.0};
            denom += y_at(u) * qbar.q.v[idx] * dv;
          }
    }
    if (std::abs(denom) < 1e-12)
      throw std::runtime_error("w_nm_general: conjugate normalization degenerate");

    // A = Int R(z_>, t_>) Y(z_>) dz_> / denom
    double a_nm = 0.0;
    if (c.t2 <= c.t1) {
      // force noise first: R = P1 (x) delta at the deterministic (z3, z4)
      const fp::GaussianP1 g = fp::analytic_p1(c, cl, t_gt);
      if (g.degenerate) {
        a_nm = y_at({g.mean1, g.mean2, phi1.real(), phi1.imag()}) / denom;
      } else {
        const int order = 24;
        const QuadratureRule rule = gauss_hermite(order);
        const double trc = g.s11 + g.s22;
        const double det = g.s11 * g.s22 - g.s12 * g.s12;
        const double disc = std::sqrt(std::max(0.0, 0.25 * trc * trc - det));
        const double l1 = 0.5 * trc + disc, l2 = 0.5 * trc - disc;
        double v1x = (std::abs(g.s12) > 1e-300) ? l1 - g.s22 : 1.0;
        double v1y = (std::abs(g.s12) > 1e-300) ? g.s12 : 0.0;
        const double nrm = std::hypot(v1x, v1y);
        v1x /= nrm;
        v1y /= nrm;
        const double s1 = std::sqrt(2.0 * std::max(l1, 0.0));
        const double s2 = std::sqrt(2.0 * std::max(l2, 0.0));
        double acc = 0.0;
        for (int i = 0; i < order; ++i)
          for (int j = 0; j < order; ++j) {
            const double z1 = rule.nodes[i], z2 = rule.nodes[j];
            const double x1 = g.mean1 + s1 * z1 * v1x - s2 * z2 * v1y;
            const double x2 = g.mean2 + s1 * z1 * v1y + s2 * z2 * v1x;
            acc += rule.weights[i] * rule.weights[j] / M_PI *
                   y_at({x1, x2, phi1.real(), phi1.imag()});
          }
        a_nm = acc / denom;
      }
    } else {
      // frequency noise first: R = 4D density at t2
      fp::ExplicitFpEngine eng = fp::make_fp4d_engine(c, shape4, 0.0, opt.threads);
      const std::array<double, 4> z0{cl.eta(c.t1), cl.deta(c.t1), phi1.real(),
                                     phi1.imag()};
      std::array<double, 4> widths{};
      for (int d = 0; d < 4; ++d) widths[d] = 2.0 * shape4.ax[d].h();
      GridFunction r = GridFunction::gaussian_blob(shape4, z0, widths);
      march_fp4d(eng, r.v, c, c.t1, t_gt, 0.4);
      const double dv = shape4.cell_volume();
      double acc = 0.0;
      std::size_t idx = 0;
      for (int i0 = 0; i0 < shape4.ax[0].n; ++i0)
        for (int i1 = 0; i1 < shape4.ax[1].n; ++i1)
          for (int i2 = 0; i2 < shape4.ax[2].n; ++i2)
            for (int i3 = 0; i3 < shape4.ax[3].n; ++i3, ++idx)
              acc += r.v[idx] * Y.q.v[idx] * dv;
      a_nm = acc / denom;
    }

    const double inm = integrate_qbar_hbar(qbar.q, rw, 0, m, opt.gl_order);
    tab.w[0 * 2 + m] = std::pow(c.omega_in, p) * a_nm * inm;
    tab.err[0 * 2 + m] = std::abs(tab.w[0 * 2 + m]) *
                         (std::abs(qbar.lambda) + std::abs(Y.lambda)) *
                         (c.t_e - std::min(c.t1, c.t2));
  }
  return tab;
}

}  // namespace transitions
}  // namespace oscillab
