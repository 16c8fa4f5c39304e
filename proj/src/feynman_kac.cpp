#include "oscillab/feynman_kac.hpp"

#include <cmath>
#include <stdexcept>

#include "oscillab/sde.hpp"

namespace oscillab {
namespace kac {

namespace {

fp::ExplicitFpEngine make_engine(const Generator& gen, const FunctionalSpec& fs,
                                 const std::array<double, 4>* endpoint,
                                 const SolveOptions& opt) {
  fp::FpCoefficients co;
  auto drift = gen.drift;
  co.velocity = [drift](int axis, const std::array<double, 4>& x, double) {
    return drift(axis, x);
  };
  if (gen.diffusion) {
    auto diff = gen.diffusion;
    co.diffusion = [diff](int a, int b, const std::array<double, 4>& x, double) {
      return diff(a, b, x);
    };
  }
  if (fs.v1) {
    auto v1 = fs.v1;
    if (endpoint) {
      const std::array<double, 4> xp = *endpoint;
      co.sink = [v1, xp](const std::array<double, 4>& x, double) {
        return v1(x, xp);
      };
    } else {
      co.sink = [v1](const std::array<double, 4>& x, double) {
        return v1(x, x);  // endpoint-independent: second argument unused
      };
    }
  }
  return fp::ExplicitFpEngine(gen.shape, std::move(co),
                              fp::Reconstruction::Fromm, opt.threads);
}

double pick_dt(const fp::ExplicitFpEngine& engine, const FunctionalSpec& fs,
               const SolveOptions& opt, double span) {
  double dt = std::min(engine.stable_dt(opt.cfl), opt.dt_max);
  // sink stiffness guard (V1 sampled over the grid corners is enough here)
  (void)fs;
  const long n = std::max(1L, std::lround(std::ceil(span / dt)));
  return span / static_cast<double>(n);
}

GridFunction initial_blob(const GridShape& shape, const SolveOptions& opt) {
  std::array<double, 4> widths{1.0, 1.0, 1.0, 1.0};
  for (int d = 0; d < shape.dims; ++d)
    widths[d] = opt.init_width_cells * shape.ax[d].h();
  return GridFunction::gaussian_blob(shape, opt.x0, widths);
}

}  // namespace

double QFamily::diagonal(const std::array<double, 4>& x) const {
  if (!endpoint_dependent || endpoints.size() == 1) return q[0].interp(x);
  // linear interpolation across the endpoint family (1D endpoint grids only)
  if (shape.dims != 1)
    throw std::runtime_error("QFamily::diagonal: endpoint coupling supported in 1D");
  const double lo = endpoints.front()[0], hi = endpoints.back()[0];
  const int m = static_cast<int>(endpoints.size());
  double s = (x[0] - lo) / (hi - lo) * (m - 1);
  s = std::clamp(s, 0.0, static_cast<double>(m - 1));
  int i = std::min(m - 2, static_cast<int>(s));
  const double w = s - i;
  return (1.0 - w) * q[i].interp(x) + w * q[i + 1].interp(x);
}

QFamily solve_q(const Generator& gen, const FunctionalSpec& fs,
                const SolveOptions& opt) {
  QFamily fam;
  fam.shape = gen.shape;
  fam.endpoint_dependent = fs.v1_endpoint_dependent && fs.v1 != nullptr;
  std::vector<std::array<double, 4>> endpoints;
  if (fam.endpoint_dependent) {
    if (gen.shape.dims != 1)
      throw std::runtime_error("solve_q: endpoint-dependent V1 supported in 1D");
    const Axis& a = gen.shape.ax[0];
    const int m = fs.endpoint_points_per_axis;
    for (int i = 0; i < m; ++i) {
      std::array<double, 4> xp{};
      xp[0] = a.lo + (a.hi - a.lo) * i / (m - 1);
      endpoints.push_back(xp);
    }
  } else {
    endpoints.push_back({0.0, 0.0, 0.0, 0.0});
  }

  const double span = fs.t - fs.t0;
  for (std::size_t e = 0; e < endpoints.size(); ++e) {
    fp::ExplicitFpEngine engine =
        make_engine(gen, fs, fam.endpoint_dependent ? &endpoints[e] : nullptr, opt);
    GridFunction q = initial_blob(gen.shape, opt);
    const double dt = pick_dt(engine, fs, opt, span);
    const long n = std::lround(span / dt);
    for (long k = 0; k < n; ++k) engine.heun_step(q.v, dt, false);
    fam.q.push_back(std::move(q));
  }
  fam.endpoints = std::move(endpoints);
  return fam;
}

double average(const QFamily& fam, const FunctionalSpec& fs) {
  const GridShape& s = fam.shape;
  const double dv = s.cell_volume();
  double acc = 0.0;
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < s.dims; ++d) n[d] = s.ax[d].n;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2)
        for (int i3 = 0; i3 < n[3]; ++i3) {
          std::array<double, 4> x{};
          const int id[4] = {i0, i1, i2, i3};
          for (int d = 0; d < s.dims; ++d) x[d] = s.ax[d].center(id[d]);
          double qv;
          if (fam.endpoint_dependent) {
            qv = fam.diagonal(x);
          } else {
            const auto st = s.strides();
            qv = fam.q[0].v[i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3]];
          }
          const double w2 = fs.v2 ? fs.v2(x) : 0.0;
          acc += std::exp(-w2) * qv * dv;
        }
  return acc;
}

NeumannResult neumann_terms(const Generator& gen, const FunctionalSpec& fs,
                            int k_max, const SolveOptions& opt) {
  if (fs.v1_endpoint_dependent)
    throw std::runtime_error("neumann_terms: endpoint-independent V1 only");
  // plain generator (no sink) for all terms; V1 appears in the sources
  FunctionalSpec plain = fs;
  plain.v1 = nullptr;
  fp::ExplicitFpEngine engine = make_engine(gen, plain, nullptr, opt);

  const std::size_t ncell = gen.shape.size();
  std::vector<double> v1_field(ncell, 0.0);
  if (fs.v1) {
    std::array<int, 4> n{1, 1, 1, 1};
    for (int d = 0; d < gen.shape.dims; ++d) n[d] = gen.shape.ax[d].n;
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n[0]; ++i0)
      for (int i1 = 0; i1 < n[1]; ++i1)
        for (int i2 = 0; i2 < n[2]; ++i2)
          for (int i3 = 0; i3 < n[3]; ++i3, ++idx) {
            std::array<double, 4> x{};
            const int id[4] = {i0, i1, i2, i3};
            for (int d = 0; d < gen.shape.dims; ++d) x[d] = gen.shape.ax[d].center(id[d]);
            v1_field[idx] = fs.v1(x, x);
          }
  }

  const double span = fs.t - fs.t0;
  const double dt = pick_dt(engine, fs, opt, span);
  const long nsteps = std::lround(span / dt);

  std::vector<std::vector<double>> q(k_max + 1, std::vector<double>(ncell, 0.0));
  q[0] = initial_blob(gen.shape, opt).v;

  // coupled Heun: q_j' = A q_j + V1 q_{j-1}
  std::vector<std::vector<double>> k1(k_max + 1, std::vector<double>(ncell));
  std::vector<std::vector<double>> mid(k_max + 1, std::vector<double>(ncell));
  std::vector<double> tmp(ncell);
  for (long s = 0; s < nsteps; ++s) {
    for (int j = 0; j <= k_max; ++j) {
      engine.apply(q[j].data(), k1[j].data(), false);
      if (j > 0)
        for (std::size_t i = 0; i < ncell; ++i) k1[j][i] += v1_field[i] * q[j - 1][i];
      for (std::size_t i = 0; i < ncell; ++i) mid[j][i] = q[j][i] + dt * k1[j][i];
    }
    for (int j = 0; j <= k_max; ++j) {
      engine.apply(mid[j].data(), tmp.data(), false);
      if (j > 0)
        for (std::size_t i = 0; i < ncell; ++i) tmp[i] += v1_field[i] * mid[j - 1][i];
      for (std::size_t i = 0; i < ncell; ++i)
        q[j][i] += 0.5 * dt * (k1[j][i] + tmp[i]);
    }
  }

  NeumannResult res;
  GridFunction sum = GridFunction::zeros(gen.shape);
  double prev_norm = 0.0;
  for (int j = 0; j <= k_max; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < ncell; ++i) {
      sum.v[i] += (j % 2 ? -1.0 : 1.0) * q[j][i];
      norm += q[j][i] * q[j][i];
    }
    norm = std::sqrt(norm);
    res.term_norms.push_back(norm);
    if (j >= 2 && norm > prev_norm) res.diverging = true;
    prev_norm = norm;
    res.partial_sums.push_back(sum);
  }
  return res;
}

ResidualReport integral_equation_residual(const Generator& gen,
                                          const FunctionalSpec& fs,
                                          const SolveOptions& opt, int n_tau,
                                          bool substitute_q0) {
  if (fs.v1_endpoint_dependent)
    throw std::runtime_error("integral_equation_residual: endpoint-independent V1 only");
  const std::size_t ncell = gen.shape.size();
  FunctionalSpec plain = fs;
  plain.v1 = nullptr;
  fp::ExplicitFpEngine plain_engine = make_engine(gen, plain, nullptr, opt);
  fp::ExplicitFpEngine sink_engine = make_engine(gen, fs, nullptr, opt);

  std::vector<double> v1_field(ncell, 0.0);
  if (fs.v1) {
    std::array<int, 4> n{1, 1, 1, 1};
    for (int d = 0; d < gen.shape.dims; ++d) n[d] = gen.shape.ax[d].n;
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n[0]; ++i0)
      for (int i1 = 0; i1 < n[1]; ++i1)
        for (int i2 = 0; i2 < n[2]; ++i2)
          for (int i3 = 0; i3 < n[3]; ++i3, ++idx) {
            std::array<double, 4> x{};
            const int id[4] = {i0, i1, i2, i3};
            for (int d = 0; d < gen.shape.dims; ++d) x[d] = gen.shape.ax[d].center(id[d]);
            v1_field[idx] = fs.v1(x, x);
          }
  }

  const double span = fs.t - fs.t0;
  const double dt = pick_dt(sink_engine, fs, opt, span);
  const long nsteps = std::lround(span / dt);
  if (n_tau > nsteps) n_tau = static_cast<int>(nsteps);

  // March Q (with sink) and Q0 (plain), remembering snapshots of the
  // integrand V1*Q on a coarse tau grid.
  std::vector<double> qfield = initial_blob(gen.shape, opt).v;
  std::vector<double> q0 = qfield;
  std::vector<long> snap_steps(n_tau + 1);
  for (int j = 0; j <= n_tau; ++j)
    snap_steps[j] = std::lround(static_cast<double>(j) * nsteps / n_tau);
  std::vector<std::vector<double>> integrand(n_tau + 1,
                                             std::vector<double>(ncell));
  std::vector<double> snap_time(n_tau + 1);
  int next_snap = 0;
  for (long s = 0; s <= nsteps; ++s) {
    if (next_snap <= n_tau && s == snap_steps[next_snap]) {
      const std::vector<double>& src = substitute_q0 ? q0 : qfield;
      for (std::size_t i = 0; i < ncell; ++i)
        integrand[next_snap][i] = v1_field[i] * src[i];
      snap_time[next_snap] = fs.t0 + s * dt;
      ++next_snap;
    }
    if (s == nsteps) break;
    sink_engine.heun_step(qfield, dt, false);
    plain_engine.heun_step(q0, dt, false);
  }

  // Propagate each snapshot to the final time under the plain generator and
  // combine with trapezoid weights in tau.
  std::vector<double> integral(ncell, 0.0);
  for (int j = 0; j <= n_tau; ++j) {
    std::vector<double> g = integrand[j];
    const long from = snap_steps[j];
    for (long s = from; s < nsteps; ++s) plain_engine.heun_step(g, dt, false);
    double w = (j == 0 || j == n_tau) ? 0.5 : 1.0;
    w *= span / n_tau;
    for (std::size_t i = 0; i < ncell; ++i) integral[i] += w * g[i];
  }

  ResidualReport rep;
  double rn = 0.0, qn = 0.0;
  for (std::size_t i = 0; i < ncell; ++i) {
    const double r = qfield[i] + integral[i] - q0[i];
    rn += r * r;
    qn += q0[i] * q0[i];
  }
  rep.residual_norm = std::sqrt(rn);
  rep.q0_norm = std::sqrt(qn);
  return rep;
}

McKacResult mc_kac_average(
    const Generator& gen, const std::array<double, 4>& x0, double t0, double t,
    double dt, std::size_t n_paths, std::uint64_t seed,
    const std::function<double(const std::array<double, 4>&)>& running,
    const std::function<double(const std::array<double, 4>&)>& endpoint_factor,
    const std::function<double(const std::array<double, 4>&)>& v2,
    int threads) {
  const int dim = gen.shape.dims;
  const long nsteps = std::max(1L, std::lround(std::ceil((t - t0) / dt)));
  const double h = (t - t0) / nsteps;
  // b from D = b b^T / 2: diagonal diffusion only in the MC helper
  auto path_fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    std::array<double, 4> x = x0;
    double acc = 0.0;
    for (long s = 0; s < nsteps; ++s) {
      if (running) acc += running(x) * h;
      std::array<double, 4> xn = x;
      for (int d = 0; d < dim; ++d) {
        const double drift = gen.drift ? gen.drift(d, x) : 0.0;
        double b = 0.0;
        if (gen.diffusion) {
          const double Dd = gen.diffusion(d, d, x);
          b = Dd > 0.0 ? std::sqrt(2.0 * Dd) : 0.0;
        }
        xn[d] += drift * h + (b != 0.0 ? b * ns.increment(h) : 0.0);
      }
      x = xn;
    }
    const double ef = endpoint_factor ? endpoint_factor(x) : 1.0;
    const double w2 = v2 ? v2(x) : 0.0;
    obs[0] = std::exp(-ef * acc - w2);
    return false;
  };
  const auto st = sde::run_ensemble(seed, n_paths, 1, threads, path_fn);
  return {st.mean[0], st.sem[0]};
}

}  // namespace kac
}  // namespace oscillab
