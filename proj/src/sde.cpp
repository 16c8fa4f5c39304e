#include "oscillab/sde.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace oscillab {
namespace sde {

double SdeOptions::resolved_dt(const ScenarioConfig& c) const {
  return dt > 0.0 ? dt : c.period_in() / 200.0;
}

int default_threads() {
  if (const char* env = std::getenv("OSCILLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

inline int substeps_for(double u3, double h, const SdeOptions& opt) {
  const double need = std::abs(u3) * h / opt.substep_target;
  if (need <= 1.0) return 1;
  int m = 1;
  while (m < need && m < opt.max_substeps) m <<= 1;
  return m;
}

}  // namespace

EtaState simulate_eta(const ScenarioConfig& c, const ClassicalSolution& cl,
                      NoiseStream& noise, double t_final, const SdeOptions& opt,
                      const Observer& obs) {
  EtaState s;
  const double t_start = c.t2;
  if (t_final <= t_start) {
    s.eta = cl.eta(t_final);
    s.deta = cl.deta(t_final);
    s.sigma = cl.action(t_final);
    return s;
  }
  s.eta = cl.eta(t_start);
  s.deta = cl.deta(t_start);
  s.sigma = cl.action(t_start);

  const double dt0 = opt.resolved_dt(c);
  const long nsteps = std::max(1L, std::lround(std::ceil((t_final - t_start) / dt0)));
  const double h = (t_final - t_start) / nsteps;
  double t = t_start;
  for (long k = 0; k < nsteps; ++k) {
    const double w2 = c.omega0_sq.value(t);
    const double f0 = c.f0.value(t);
    const double amp = c.noise_amp2(t);
    const double dw = amp != 0.0 ? noise.increment(h) : 0.0;
    const double a1 = s.deta;
    const double a2 = f0 - w2 * s.eta;
    const double as = 0.5 * s.deta * s.deta - 0.5 * w2 * s.eta * s.eta + f0 * s.eta;
    if (opt.drift == DriftScheme::Euler) {
      s.sigma += as * h + s.eta * amp * dw;
      s.eta += a1 * h;
      s.deta += a2 * h + amp * dw;
    } else {
      const double e1 = s.eta + a1 * h;
      const double e2 = s.deta + a2 * h + amp * dw;
      const double tn = t + h;
      const double w2n = c.omega0_sq.value(tn);
      const double f0n = c.f0.value(tn);
      const double b1 = e2;
      const double b2 = f0n - w2n * e1;
      const double bs = 0.5 * e2 * e2 - 0.5 * w2n * e1 * e1 + f0n * e1;
      s.sigma += 0.5 * (as + bs) * h + s.eta * amp * dw;
      s.eta += 0.5 * (a1 + b1) * h;
      s.deta += 0.5 * (a2 + b2) * h + amp * dw;
    }
    t = t_start + (k + 1) * h;
    if (obs) {
      const double state[3] = {s.eta, s.deta, s.sigma};
      obs(t, state, 3);
    }
  }
  return s;
}

namespace {

// Shared core of the four-component systems. Runs from t1; force noise is
// gated by the scenario, so the eps2 = 0 case is the frequency-noise system.
UState run_u_core(const ScenarioConfig& c, NoiseStream& noise, double t_start,
                  const UState& init, double t_final, const SdeOptions& opt,
                  const Observer& obs) {
  UState s = init;
  const double dt0 = opt.resolved_dt(c);
  const long nsteps = std::max(1L, std::lround(std::ceil((t_final - t_start) / dt0)));
  const double h = (t_final - t_start) / nsteps;
  const double flag_level = opt.flag_threshold * c.omega_in;
  double t = t_start;
  for (long k = 0; k < nsteps && !s.flagged; ++k) {
    const int m = substeps_for(s.u3, h, opt);
    const double hs = h / m;
    for (int j = 0; j < m; ++j) {
      const double tj = t + j * hs;
      const double w2 = c.omega0_sq.value(tj);
      const double f0 = c.f0.value(tj);
      const double amp1 = c.noise_amp1(tj);
      const double amp2 = c.noise_amp2(tj);
      const double dw1 = amp1 != 0.0 ? noise.increment(hs) : 0.0;
      const double dw2 = amp2 != 0.0 ? noise.increment(hs) : 0.0;

      const double a1 = s.u2;
      const double a2 = f0 - w2 * s.u1;
      const double a3 = s.u4 * s.u4 - s.u3 * s.u3 - w2;
      const double a4 = -2.0 * s.u3 * s.u4;
      const double as = 0.5 * s.u2 * s.u2 - 0.5 * w2 * s.u1 * s.u1 + f0 * s.u1;
      const double noise2 = -amp1 * s.u1 * dw1 + amp2 * dw2;
      const double noise3 = -amp1 * dw1;
      const double noise_s = -0.5 * s.u1 * s.u1 * amp1 * dw1 + s.u1 * amp2 * dw2;

      if (opt.drift == DriftScheme::Euler) {
        s.i3 += s.u3 * hs;
        s.i4 += s.u4 * hs;
        s.sigma += as * hs + noise_s;
        s.u1 += a1 * hs;
        s.u2 += a2 * hs + noise2;
        s.u3 += a3 * hs + noise3;
        s.u4 += a4 * hs;
      } else {
        UState p = s;
        p.u1 += a1 * hs;
        p.u2 += a2 * hs + noise2;
        p.u3 += a3 * hs + noise3;
        p.u4 += a4 * hs;
        const double tn = tj + hs;
        const double w2n = c.omega0_sq.value(tn);
        const double f0n = c.f0.value(tn);
        const double b1 = p.u2;
        const double b2 = f0n - w2n * p.u1;
        const double b3 = p.u4 * p.u4 - p.u3 * p.u3 - w2n;
        const double b4 = -2.0 * p.u3 * p.u4;
        const double bs = 0.5 * p.u2 * p.u2 - 0.5 * w2n * p.u1 * p.u1 + f0n * p.u1;
        s.i3 += 0.5 * (s.u3 + p.u3) * hs;
        s.i4 += 0.5 * (s.u4 + p.u4) * hs;
        s.sigma += 0.5 * (as + bs) * hs + noise_s;
        s.u1 += 0.5 * (a1 + b1) * hs;
        s.u2 += 0.5 * (a2 + b2) * hs + noise2;
        s.u3 += 0.5 * (a3 + b3) * hs + noise3;
        s.u4 += 0.5 * (a4 + b4) * hs;
      }
      if (std::abs(s.u3) > flag_level) {
        s.flagged = true;
        break;
      }
    }
    t = t_start + (k + 1) * h;
    if (obs) {
      const double state[7] = {s.u1, s.u2, s.u3, s.u4, s.i3, s.i4, s.sigma};
      obs(t, state, 7);
    }
  }
  return s;
}

UState u_initial(const ScenarioConfig& c, const ClassicalSolution& cl,
                 double eta, double deta, double sigma) {
  UState s;
  s.u1 = eta;
  s.u2 = deta;
  const Complex phi = cl.dxi(c.t1) / cl.xi(c.t1);
  s.u3 = phi.real();
  s.u4 = phi.imag();
  s.sigma = sigma;
  return s;
}

}  // namespace

UState simulate_u(const ScenarioConfig& c, const ClassicalSolution& cl,
                  NoiseStream& noise, double t_final, const SdeOptions& opt,
                  const Observer& obs) {
  const UState init =
      u_initial(c, cl, cl.eta(c.t1), cl.deta(c.t1), cl.action(c.t1));
  if (t_final <= c.t1) {
    UState s = init;
    const Complex phi = cl.dxi(t_final) / cl.xi(t_final);
    s.u1 = cl.eta(t_final);
    s.u2 = cl.deta(t_final);
    s.u3 = phi.real();
    s.u4 = phi.imag();
    s.sigma = cl.action(t_final);
    return s;
  }
  return run_u_core(c, noise, c.t1, init, t_final, opt, obs);
}

UState simulate_z(const ScenarioConfig& c, const ClassicalSolution& cl,
                  NoiseStream& noise, double t_final, const SdeOptions& opt,
                  const Observer& obs) {
  // Before t1 only (eta, deta) can be random; xi stays classical.
  if (t_final <= c.t1) {
    const EtaState e = simulate_eta(c, cl, noise, t_final, opt);
    UState s;
    s.u1 = e.eta;
    s.u2 = e.deta;
    const Complex phi = cl.dxi(t_final) / cl.xi(t_final);
    s.u3 = phi.real();
    s.u4 = phi.imag();
    s.sigma = e.sigma;
    s.flagged = e.flagged;
    return s;
  }
  EtaState e;
  if (c.t2 < c.t1) {
    e = simulate_eta(c, cl, noise, c.t1, opt);
  } else {
    e.eta = cl.eta(c.t1);
    e.deta = cl.deta(c.t1);
    e.sigma = cl.action(c.t1);
  }
  const UState init = u_initial(c, cl, e.eta, e.deta, e.sigma);
  return run_u_core(c, noise, c.t1, init, t_final, opt, obs);
}

ItoState simulate_ito_wavefunction(double eps2, double t2, NoiseStream& noise,
                                   double t_final, const SdeOptions& opt,
                                   const Observer& obs) {
  ItoState s;
  if (t_final <= t2) return s;
  const double dt0 = opt.dt > 0.0 ? opt.dt : 1e-3;
  const long nsteps = std::max(1L, std::lround(std::ceil((t_final - t2) / dt0)));
  const double h = (t_final - t2) / nsteps;
  const double amp = std::sqrt(2.0 * eps2);
  const Complex I(0.0, 1.0);
  for (long k = 0; k < nsteps; ++k) {
    const double dw = noise.increment(h);
    const Complex a1 = -2.0 * I * eps2 * s.xi2;
    const Complex a3 = 0.5 * s.xi1 * s.xi1 - I * eps2 * s.xi2 * s.xi2;
    const Complex x1 = s.xi1;
    s.xi1 += a1 * h + amp * dw;
    s.xi3 += a3 * h + amp * s.xi2 * dw;
    s.xi2 += x1 * h;
    if (obs) {
      const double state[6] = {s.xi1.real(), s.xi1.imag(), s.xi2.real(),
                               s.xi2.imag(), s.xi3.real(), s.xi3.imag()};
      obs(t2 + (k + 1) * h, state, 6);
    }
  }
  return s;
}

TrajectoryPoint point_eps1_zero(const ClassicalSolution& cl, const EtaState& s,
                                double t) {
  TrajectoryPoint p;
  p.t = t;
  p.xi = cl.xi(t);
  p.dxi = cl.dxi(t);
  p.eta = s.eta;
  p.deta = s.deta;
  p.sigma = s.sigma;
  p.gamma = cl.gamma(t);
  return p;
}

TrajectoryPoint point_from_u(const ClassicalSolution& cl, const UState& s,
                             double t1, double t) {
  TrajectoryPoint p;
  p.t = t;
  const Complex xi1 = cl.xi(t1);
  p.xi = xi1 * std::exp(Complex(s.i3, s.i4));
  p.dxi = Complex(s.u3, s.u4) * p.xi;
  p.eta = s.u1;
  p.deta = s.u2;
  p.sigma = s.sigma;
  p.gamma = cl.gamma(t1) + s.i4;
  return p;
}

namespace {

constexpr std::size_t kChunk = 256;

struct ChunkStats {
  std::vector<double> mean;  // per observable
  std::vector<double> m2;
  std::size_t n = 0;
  std::size_t flagged = 0;
};

}  // namespace

EnsembleStats run_ensemble(
    std::uint64_t seed, std::size_t n_paths, std::size_t n_obs, int threads,
    const std::function<bool(std::uint64_t, NoiseStream&, double*)>& path_fn) {
  const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<ChunkStats> chunks(n_chunks);
  std::atomic<std::size_t> next{0};
  if (threads <= 0) threads = default_threads();

  auto worker = [&]() {
    std::vector<double> obs(n_obs);
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_chunks) break;
      ChunkStats& cs = chunks[k];
      cs.mean.assign(n_obs, 0.0);
      cs.m2.assign(n_obs, 0.0);
      const std::size_t lo = k * kChunk;
      const std::size_t hi = std::min(n_paths, lo + kChunk);
      for (std::size_t id = lo; id < hi; ++id) {
        NoiseStream ns(seed, id);
        const bool flagged = path_fn(id, ns, obs.data());
        if (flagged) {
          ++cs.flagged;
          continue;
        }
        ++cs.n;
        // Welford update, per chunk
        for (std::size_t j = 0; j < n_obs; ++j) {
          const double d = obs[j] - cs.mean[j];
          cs.mean[j] += d / static_cast<double>(cs.n);
          cs.m2[j] += d * (obs[j] - cs.mean[j]);
        }
      }
    }
  };

  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  EnsembleStats out;
  out.mean.assign(n_obs, 0.0);
  out.sem.assign(n_obs, 0.0);
  std::vector<double> m2(n_obs, 0.0);
  std::size_t n = 0;
  for (const ChunkStats& cs : chunks) {
    out.n_flagged += cs.flagged;
    if (cs.n == 0) continue;
    // Chan's pairwise combination, sequential over chunks
    const std::size_t na = n, nb = cs.n;
    const double nab = static_cast<double>(na + nb);
    for (std::size_t j = 0; j < n_obs; ++j) {
      const double delta = cs.mean[j] - out.mean[j];
      out.mean[j] += delta * static_cast<double>(nb) / nab;
      m2[j] += cs.m2[j] + delta * delta * static_cast<double>(na) *
                              static_cast<double>(nb) / nab;
    }
    n += nb;
  }
  out.n_used = n;
  if (n_paths > 0 &&
      static_cast<double>(out.n_flagged) > 0.01 * static_cast<double>(n_paths))
    throw std::runtime_error(
        "ensemble: flagged-trajectory fraction exceeds 1% (" +
        std::to_string(out.n_flagged) + " of " + std::to_string(n_paths) + ")");
  for (std::size_t j = 0; j < n_obs; ++j) {
    if (n >= 2) {
      const double var = m2[j] / static_cast<double>(n - 1);
      out.sem[j] = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    }
  }
  return out;
}

McEstimate mc_average(const std::vector<double>& values,
                      const std::vector<unsigned char>& flags) {
  if (!flags.empty() && flags.size() != values.size())
    throw std::invalid_argument("mc_average: flag vector size mismatch");
  McEstimate e;
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!flags.empty() && flags[i]) {
      ++e.flagged;
      continue;
    }
    ++n;
    const double d = values[i] - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (values[i] - mean);
  }
  if (!values.empty() &&
      static_cast<double>(e.flagged) > 0.01 * static_cast<double>(values.size()))
    throw std::runtime_error("mc_average: flagged fraction exceeds 1%");
  e.mean = mean;
  e.n = n;
  if (n >= 2) e.sem = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return e;
}

McTransitionTable mc_transition_table(const ScenarioConfig& c,
                                      const ClassicalSolution& cl,
                                      std::size_t n_paths, int n_max,
                                      double t_eval, const SdeOptions& opt,
                                      int threads) {
  const int N = n_max + 1;
  const std::size_t n_obs = static_cast<std::size_t>(N) * N;
  const bool xi_random = c.eps1 > 0.0;

  auto path_fn = [&](std::uint64_t, NoiseStream& ns, double* obs) -> bool {
    TrajectoryPoint p;
    bool flagged = false;
    if (xi_random) {
      const UState s = simulate_z(c, cl, ns, t_eval, opt);
      flagged = s.flagged;
      if (!flagged) p = point_from_u(cl, s, c.t1, t_eval);
    } else {
      const EtaState s = simulate_eta(c, cl, ns, t_eval, opt);
      flagged = s.flagged;
      if (!flagged) p = point_eps1_zero(cl, s, t_eval);
    }
    if (flagged) return true;
    const auto gen = generating_coefficients(p, c.omega_in, c.omega_out);
    const CoefficientMatrix cm = coefficients_cnm(gen, n_max);
    for (std::size_t j = 0; j < n_obs; ++j) obs[j] = std::norm(cm.c[j]);
    return false;
  };

  const EnsembleStats st = run_ensemble(c.seed, n_paths, n_obs, threads, path_fn);
  McTransitionTable t;
  t.n_max = n_max;
  t.w = st.mean;
  t.sem = st.sem;
  t.n_paths = st.n_used;
  t.n_flagged = st.n_flagged;
  return t;
}

void write_checkpoint(const std::string& path, double dt, int dim,
                      const std::vector<double>& states) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char magic[4] = {'O', 'S', 'L', 'B'};
  const std::uint32_t version = 1;
  const std::uint64_t n = dim > 0 ? states.size() / dim : 0;
  const std::uint32_t d = static_cast<std::uint32_t>(dim);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&dt), 8);
  out.write(reinterpret_cast<const char*>(states.data()),
            static_cast<std::streamsize>(states.size() * sizeof(double)));
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, dim = 0;
  std::uint64_t n = 0;
  Checkpoint cp;
  in.read(magic, 4);
  if (std::memcmp(magic, "OSLB", 4) != 0)
    throw std::runtime_error(path + ": not an ensemble checkpoint");
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&cp.dt), 8);
  cp.dim = static_cast<int>(dim);
  cp.states.resize(n * dim);
  in.read(reinterpret_cast<char*>(cp.states.data()),
          static_cast<std::streamsize>(cp.states.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return cp;
}

}  // namespace sde
}  // namespace oscillab
