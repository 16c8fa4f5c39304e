#include "oscillab/fp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace oscillab {
namespace fp {

namespace {

void parallel_lines(std::size_t n_lines, int threads,
                    const std::function<void(std::size_t, std::size_t)>& fn) {
  if (threads <= 1 || n_lines < 64) {
    fn(0, n_lines);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n_lines + threads - 1) / threads;
  for (int k = 1; k < threads; ++k) {
    const std::size_t lo = per * k;
    if (lo >= n_lines) break;
    pool.emplace_back(fn, lo, std::min(n_lines, lo + per));
  }
  fn(0, std::min(per, n_lines));
  for (auto& t : pool) t.join();
}

// Simpson quadrature of f on [a, b] with n panels (n even).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (b <= a) return 0.0;
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Analytic Gaussian density
// ---------------------------------------------------------------------------

GaussianP1 analytic_p1(const ScenarioConfig& c, const ClassicalSolution& cl,
                       double t) {
  GaussianP1 g;
  g.t = t;
  g.omega_in = c.omega_in;
  const double w2 = c.omega_in * c.omega_in;
  // eps2 p2(s) Theta(s - t2), with the gate closed at s = t2 so the
  // quadrature endpoint carries the interior value
  auto gate = [&](double s) {
    if (c.eps2 <= 0.0 || s < c.t2) return 0.0;
    const double p = std::max(0.0, c.p2.value(s));
    return c.eps2 * p;
  };
  const int panels = std::max(1024, 256 * static_cast<int>((t - c.t2) / c.period_in() + 1));
  g.b1 = simpson([&](double s) { return gate(s) * cl.xi(s).real() * cl.xi(s).real(); },
                 c.t2, t, panels) / w2;
  g.b3 = simpson([&](double s) { return gate(s) * cl.xi(s).imag() * cl.xi(s).imag(); },
                 c.t2, t, panels) / w2;
  g.b2 = -2.0 *
         simpson([&](double s) { return gate(s) * cl.xi(s).real() * cl.xi(s).imag(); },
                 c.t2, t, panels) / w2;
  g.mean1 = cl.eta(t);
  g.mean2 = cl.deta(t);
  const Complex xi = cl.xi(t), dxi = cl.dxi(t);
  g.xi01 = xi.real();
  g.xi02 = xi.imag();
  g.dxi01 = dxi.real();
  g.dxi02 = dxi.imag();
  g.degenerate = g.det_y() <= 0.0;
  // covariance of (x1, x2): x - mean = Jinv y with Jinv = [[xi02, xi01], [dxi02, dxi01]]
  const double v11 = 2.0 * g.b1, v12 = g.b2, v22 = 2.0 * g.b3;
  g.s11 = g.xi02 * (v11 * g.xi02 + v12 * g.xi01) + g.xi01 * (v12 * g.xi02 + v22 * g.xi01);
  g.s12 = g.dxi02 * (v11 * g.xi02 + v12 * g.xi01) + g.dxi01 * (v12 * g.xi02 + v22 * g.xi01);
  g.s22 = g.dxi02 * (v11 * g.dxi02 + v12 * g.dxi01) + g.dxi01 * (v12 * g.dxi02 + v22 * g.dxi01);
  return g;
}

double GaussianP1::density(double x1, double x2) const {
  if (degenerate)
    throw std::runtime_error("analytic_p1: degenerate covariance (delta limit)");
  const double det = s11 * s22 - s12 * s12;
  const double dx = x1 - mean1, dy = x2 - mean2;
  const double q = (s22 * dx * dx - 2.0 * s12 * dx * dy + s11 * dy * dy) / det;
  return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(det));
}

double GaussianP1::density_y_form(double x1, double x2) const {
  if (degenerate)
    throw std::runtime_error("analytic_p1: degenerate covariance (delta limit)");
  const double w = omega_in;
  const double dx = x1 - mean1, dy = x2 - mean2;
  const double y1 = -(dxi01 * dx - xi01 * dy) / w;
  const double y2 = (dxi02 * dx - xi02 * dy) / w;
  const double det = det_y();
  return std::exp(-(b3 * y1 * y1 + b1 * y2 * y2 - b2 * y1 * y2) / det) /
         (2.0 * M_PI * w * std::sqrt(det));
}

GridFunction p1_grid(const GaussianP1& p, const Axis& a1, const Axis& a2) {
  GridShape s;
  s.dims = 2;
  s.ax[0] = a1;
  s.ax[1] = a2;
  GridFunction g = GridFunction::zeros(s);
  for (int i = 0; i < a1.n; ++i)
    for (int j = 0; j < a2.n; ++j)
      g.v[static_cast<std::size_t>(i) * a2.n + j] =
          p.density(a1.center(i), a2.center(j));
  return g;
}

// ---------------------------------------------------------------------------
// ExplicitFpEngine
// ---------------------------------------------------------------------------

ExplicitFpEngine::ExplicitFpEngine(const GridShape& shape, FpCoefficients coeffs,
                                   Reconstruction rec, int threads)
    : shape_(shape), co_(std::move(coeffs)), rec_(rec), threads_(threads) {
  if (threads_ <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads_ = hw > 0 ? static_cast<int>(hw) : 1;
  }
  scratch_.resize(shape_.size());
  refresh(0.0);
}

void ExplicitFpEngine::refresh(double t) {
  sampled_t_ = t;
  const int dims = shape_.dims;
  const std::size_t n_cells = shape_.size();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < dims; ++d) n[d] = shape_.ax[d].n;

  // ghost factors: zero (absorbing) unless a tail model is configured
  for (auto& g : ghost_) g = {0.0, 0.0, 0.0, 0.0};
  for (auto& g : ghost_face_) g = {0.0, 0.0};
  for (const TailGhost& tg : co_.tails) {
    if (tg.axis < 0 || tg.axis >= dims) continue;
    const Axis& ax = shape_.ax[tg.axis];
    auto prof = [&](double x) {
      return std::pow(x * x + tg.omega2, tg.power);
    };
    const double edge_lo = prof(ax.center(0));
    const double edge_hi = prof(ax.center(ax.n - 1));
    ghost_[tg.axis][0] = prof(ax.center(-1)) / edge_lo;
    ghost_[tg.axis][1] = prof(ax.center(-2)) / edge_lo;
    ghost_[tg.axis][2] = prof(ax.center(ax.n)) / edge_hi;
    ghost_[tg.axis][3] = prof(ax.center(ax.n + 1)) / edge_hi;
    ghost_face_[tg.axis][0] = prof(ax.face(0)) / edge_lo;
    ghost_face_[tg.axis][1] = prof(ax.face(ax.n)) / edge_hi;
  }

  // face velocities
  for (int a = 0; a < dims; ++a) {
    std::size_t cnt = 1;
    for (int d = 0; d < dims; ++d)
      cnt *= static_cast<std::size_t>(d == a ? n[d] + 1 : n[d]);
    vface_[a].assign(cnt, 0.0);
    std::array<int, 4> m = n;
    m[a] += 1;
    std::array<double, 4> x{};
    std::size_t idx = 0;
    for (int i0 = 0; i0 < m[0]; ++i0)
      for (int i1 = 0; i1 < (dims > 1 ? m[1] : 1); ++i1)
        for (int i2 = 0; i2 < (dims > 2 ? m[2] : 1); ++i2)
          for (int i3 = 0; i3 < (dims > 3 ? m[3] : 1); ++i3) {
            const int id[4] = {i0, i1, i2, i3};
            for (int d = 0; d < dims; ++d)
              x[d] = (d == a) ? shape_.ax[d].face(id[d]) : shape_.ax[d].center(id[d]);
            vface_[a][idx++] = co_.velocity(a, x, t);
          }
  }

  // cell-centered diffusion
  has_diffusion_ = false;
  mixed_pairs_.clear();
  dab_.clear();
  if (co_.diffusion) {
    std::array<double, 4> x{};
    auto sample_cells = [&](auto&& f, std::vector<double>& out) {
      out.assign(n_cells, 0.0);
      std::size_t idx = 0;
      double maxv = 0.0;
      for (int i0 = 0; i0 < n[0]; ++i0)
        for (int i1 = 0; i1 < n[1]; ++i1)
          for (int i2 = 0; i2 < n[2]; ++i2)
            for (int i3 = 0; i3 < n[3]; ++i3) {
              const int id[4] = {i0, i1, i2, i3};
              for (int d = 0; d < dims; ++d) x[d] = shape_.ax[d].center(id[d]);
              out[idx] = f(x);
              maxv = std::max(maxv, std::abs(out[idx]));
              ++idx;
            }
      return maxv;
    };
    for (int a = 0; a < dims; ++a) {
      const double m = sample_cells(
          [&](const std::array<double, 4>& xc) { return co_.diffusion(a, a, xc, t); },
          daa_[a]);
      if (m > 0.0) has_diffusion_ = true;
      else daa_[a].clear();
    }
    for (int a = 0; a < dims; ++a)
      for (int b = a + 1; b < dims; ++b) {
        std::vector<double> field;
        const double m = sample_cells(
            [&](const std::array<double, 4>& xc) { return co_.diffusion(a, b, xc, t); },
            field);
        if (m > 0.0) {
          mixed_pairs_.push_back({a, b});
          dab_.push_back(std::move(field));
          has_diffusion_ = true;
        }
      }
  } else {
    for (auto& d : daa_) d.clear();
  }

  has_sink_ = false;
  if (co_.sink) {
    sink_.assign(n_cells, 0.0);
    std::array<double, 4> x{};
    std::size_t idx = 0;
    for (int i0 = 0; i0 < n[0]; ++i0)
      for (int i1 = 0; i1 < n[1]; ++i1)
        for (int i2 = 0; i2 < n[2]; ++i2)
          for (int i3 = 0; i3 < n[3]; ++i3) {
            const int id[4] = {i0, i1, i2, i3};
            for (int d = 0; d < dims; ++d) x[d] = shape_.ax[d].center(id[d]);
            sink_[idx] = co_.sink(x, t);
            if (sink_[idx] != 0.0) has_sink_ = true;
            ++idx;
          }
    if (!has_sink_) sink_.clear();
  }
}

void ExplicitFpEngine::add_advection(const double* in, double* out,
                                     bool transpose) const {
  const int dims = shape_.dims;
  const auto st = shape_.strides();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < dims; ++d) n[d] = shape_.ax[d].n;

  for (int a = 0; a < dims; ++a) {
    const double h = shape_.ax[a].h();
    const std::size_t sa = st[a];
    const int na = n[a];
    // enumerate lines: iterate over all cells with index_a == 0
    std::vector<std::size_t> line_starts;
    {
      std::array<int, 4> m = n;
      m[a] = 1;
      for (int i0 = 0; i0 < m[0]; ++i0)
        for (int i1 = 0; i1 < m[1]; ++i1)
          for (int i2 = 0; i2 < m[2]; ++i2)
            for (int i3 = 0; i3 < m[3]; ++i3)
              line_starts.push_back(i0 * st[0] + i1 * st[1] + i2 * st[2] +
                                    i3 * st[3]);
    }
    // face strides for this axis: same ordering with n[a]+1 entries along a
    std::array<std::size_t, 4> fst{1, 1, 1, 1};
    {
      std::array<int, 4> m = n;
      m[a] += 1;
      for (int d = dims - 2; d >= 0; --d)
        fst[d] = fst[d + 1] * static_cast<std::size_t>(m[d + 1]);
    }
    // map a cell-line start to the face-line start: identical multi-index
    const bool fromm = rec_ == Reconstruction::Fromm;
    const double* vf = vface_[a].data();
    const auto& gh = ghost_[a];
    const auto& gface = ghost_face_[a];

    // out-of-range indices fold back onto the edge cell with the ghost factor
    auto map_cell = [na, &gh](int i) -> std::pair<int, double> {
      if (i >= 0 && i < na) return {i, 1.0};
      if (i == -1) return {0, gh[0]};
      if (i == -2) return {0, gh[1]};
      if (i == na) return {na - 1, gh[2]};
      if (i == na + 1) return {na - 1, gh[3]};
      return {0, 0.0};
    };

    auto do_lines = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t li = lo; li < hi; ++li) {
        const std::size_t base = line_starts[li];
        // recover multi-index cheaply: recompute face base from cell base
        std::size_t rem = base;
        std::size_t fbase = 0;
        for (int d = 0; d < dims; ++d) {
          const std::size_t id = rem / st[d];
          rem %= st[d];
          fbase += id * fst[d];
        }
        for (int f = 0; f <= na; ++f) {
          const double v = vf[fbase + fst[a] * f];
          if (v == 0.0) continue;
          // stencil of the reconstructed face value
          int cells[3];
          double w[3];
          int nc;
          const bool interior_face = f > 0 && f < na;
          if (!interior_face && (gface[0] != 0.0 || gface[1] != 0.0)) {
            // tail axis: the asymptotic profile fixes the face value exactly
            cells[0] = f == 0 ? 0 : na - 1;
            w[0] = f == 0 ? gface[0] : gface[1];
            nc = 1;
          } else if (v > 0.0) {
            if (fromm && interior_face) {
              cells[0] = f - 1; w[0] = 1.0;
              cells[1] = f;     w[1] = 0.25;
              cells[2] = f - 2; w[2] = -0.25;
              nc = 3;
            } else {
              cells[0] = f - 1; w[0] = 1.0; nc = 1;
            }
          } else {
            if (fromm && interior_face) {
              cells[0] = f;     w[0] = 1.0;
              cells[1] = f + 1; w[1] = -0.25;
              cells[2] = f - 1; w[2] = 0.25;
              nc = 3;
            } else {
              cells[0] = f; w[0] = 1.0; nc = 1;
            }
          }
          if (!transpose) {
            double flux = 0.0;
            for (int k = 0; k < nc; ++k) {
              const auto [ci, fac] = map_cell(cells[k]);
              if (fac != 0.0) flux += w[k] * fac * in[base + sa * ci];
            }
            flux *= v / h;
            if (f - 1 >= 0) out[base + sa * (f - 1)] -= flux;
            if (f < na) out[base + sa * f] += flux;
          } else {
            // transpose: gather (in[right] - in[left]) / h, scatter to stencil
            const double gl = (f - 1 >= 0) ? in[base + sa * (f - 1)] : 0.0;
            const double gr = (f < na) ? in[base + sa * f] : 0.0;
            const double g = v * (gr - gl) / h;
            for (int k = 0; k < nc; ++k) {
              const auto [ci, fac] = map_cell(cells[k]);
              if (fac != 0.0) out[base + sa * ci] += w[k] * fac * g;
            }
          }
        }
      }
    };
    parallel_lines(line_starts.size(), threads_, do_lines);
  }
}

void ExplicitFpEngine::add_diffusion(const double* in, double* out) const {
  const int dims = shape_.dims;
  const auto st = shape_.strides();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < dims; ++d) n[d] = shape_.ax[d].n;
  const std::size_t n_cells = shape_.size();

  for (int a = 0; a < dims; ++a) {
    if (daa_[a].empty()) continue;
    const double h2 = shape_.ax[a].h() * shape_.ax[a].h();
    const std::size_t sa = st[a];
    const int na = n[a];
    const double* D = daa_[a].data();
    const double glo = ghost_[a][0], ghi = ghost_[a][2];
    auto body = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c) {
        const int ia = static_cast<int>((c / sa) % static_cast<std::size_t>(na));
        const double pc = in[c];
        const double pm = ia > 0 ? in[c - sa] : glo * pc;
        const double pp = ia < na - 1 ? in[c + sa] : ghi * pc;
        const double dm = ia > 0 ? 0.5 * (D[c] + D[c - sa]) : D[c];
        const double dp = ia < na - 1 ? 0.5 * (D[c] + D[c + sa]) : D[c];
        out[c] += (dp * (pp - pc) - dm * (pc - pm)) / h2;
      }
    };
    parallel_lines(n_cells, threads_, body);
  }
  for (std::size_t mp = 0; mp < mixed_pairs_.size(); ++mp) {
    const int a = mixed_pairs_[mp][0], b = mixed_pairs_[mp][1];
    const std::size_t sa = st[a], sb = st[b];
    const int na = n[a], nb = n[b];
    const double hh = 4.0 * shape_.ax[a].h() * shape_.ax[b].h();
    const double* D = dab_[mp].data();
    auto body = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c) {
        const int ia = static_cast<int>((c / sa) % static_cast<std::size_t>(na));
        const int ib = static_cast<int>((c / sb) % static_cast<std::size_t>(nb));
        auto val = [&](int da, int db) -> double {
          const int ja = ia + da, jb = ib + db;
          if (ja < 0 || ja >= na || jb < 0 || jb >= nb) return 0.0;
          return in[c + static_cast<std::ptrdiff_t>(da) * static_cast<std::ptrdiff_t>(sa) +
                    static_cast<std::ptrdiff_t>(db) * static_cast<std::ptrdiff_t>(sb)];
        };
        out[c] += 2.0 * D[c] *
                  (val(1, 1) - val(1, -1) - val(-1, 1) + val(-1, -1)) / hh;
      }
    };
    parallel_lines(n_cells, threads_, body);
  }
}

void ExplicitFpEngine::add_sink(const double* in, double* out) const {
  if (!has_sink_) return;
  const std::size_t n_cells = shape_.size();
  const double* s = sink_.data();
  auto body = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) out[c] -= s[c] * in[c];
  };
  parallel_lines(n_cells, threads_, body);
}

void ExplicitFpEngine::apply(const double* in, double* out, bool transpose) const {
  std::memset(out, 0, shape_.size() * sizeof(double));
  add_advection(in, out, transpose);
  if (has_diffusion_) add_diffusion(in, out);  // symmetric part
  add_sink(in, out);
}

void ExplicitFpEngine::heun_step(std::vector<double>& f, double dt,
                                 bool transpose) const {
  const std::size_t n = shape_.size();
  std::vector<double>& k1 = scratch_;
  static thread_local std::vector<double> mid, k2;
  mid.resize(n);
  k2.resize(n);
  apply(f.data(), k1.data(), transpose);
  for (std::size_t i = 0; i < n; ++i) mid[i] = f[i] + dt * k1[i];
  apply(mid.data(), k2.data(), transpose);
  for (std::size_t i = 0; i < n; ++i) f[i] += 0.5 * dt * (k1[i] + k2[i]);
}

double ExplicitFpEngine::stable_dt(double cfl) const {
  double denom = 0.0;
  for (int a = 0; a < shape_.dims; ++a) {
    double vmax = 0.0;
    for (double v : vface_[a]) vmax = std::max(vmax, std::abs(v));
    denom += vmax / shape_.ax[a].h();
    if (!daa_[a].empty()) {
      double dmax = 0.0;
      for (double d : daa_[a]) dmax = std::max(dmax, std::abs(d));
      denom += 2.0 * dmax / (shape_.ax[a].h() * shape_.ax[a].h());
    }
  }
  for (std::size_t mp = 0; mp < mixed_pairs_.size(); ++mp) {
    double dmax = 0.0;
    for (double d : dab_[mp]) dmax = std::max(dmax, std::abs(d));
    denom += 2.0 * dmax / (shape_.ax[mixed_pairs_[mp][0]].h() *
                           shape_.ax[mixed_pairs_[mp][1]].h());
  }
  if (denom <= 0.0) return 1e30;
  return cfl / denom;
}

std::vector<MatrixEntry> ExplicitFpEngine::matrix_entries() const {
  // Emit the same stencils the apply() path uses.
  std::vector<MatrixEntry> out;
  const int dims = shape_.dims;
  const auto st = shape_.strides();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < dims; ++d) n[d] = shape_.ax[d].n;
  const std::size_t n_cells = shape_.size();
  const bool fromm = rec_ == Reconstruction::Fromm;

  for (int a = 0; a < dims; ++a) {
    const double h = shape_.ax[a].h();
    const std::size_t sa = st[a];
    const int na = n[a];
    std::array<std::size_t, 4> fst{1, 1, 1, 1};
    {
      std::array<int, 4> m = n;
      m[a] += 1;
      for (int d = dims - 2; d >= 0; --d)
        fst[d] = fst[d + 1] * static_cast<std::size_t>(m[d + 1]);
    }
    const auto& gh = ghost_[a];
    const auto& gface = ghost_face_[a];
    auto map_cell = [na, &gh](int i) -> std::pair<int, double> {
      if (i >= 0 && i < na) return {i, 1.0};
      if (i == -1) return {0, gh[0]};
      if (i == -2) return {0, gh[1]};
      if (i == na) return {na - 1, gh[2]};
      if (i == na + 1) return {na - 1, gh[3]};
      return {0, 0.0};
    };
    std::array<int, 4> m = n;
    m[a] = 1;
    for (int i0 = 0; i0 < m[0]; ++i0)
      for (int i1 = 0; i1 < m[1]; ++i1)
        for (int i2 = 0; i2 < m[2]; ++i2)
          for (int i3 = 0; i3 < m[3]; ++i3) {
            const std::size_t base =
                i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3];
            std::size_t rem = base, fbase = 0;
            for (int d = 0; d < dims; ++d) {
              const std::size_t id = rem / st[d];
              rem %= st[d];
              fbase += id * fst[d];
            }
            for (int f = 0; f <= na; ++f) {
              const double v = vface_[a][fbase + fst[a] * f];
              if (v == 0.0) continue;
              int cells[3];
              double w[3];
              int nc;
              const bool interior_face = f > 0 && f < na;
              if (!interior_face && (gface[0] != 0.0 || gface[1] != 0.0)) {
                cells[0] = f == 0 ? 0 : na - 1;
                w[0] = f == 0 ? gface[0] : gface[1];
                nc = 1;
              } else if (v > 0.0) {
                cells[0] = f - 1; w[0] = 1.0;
                cells[1] = f;     w[1] = 0.25;
                cells[2] = f - 2; w[2] = -0.25;
                nc = (fromm && interior_face) ? 3 : 1;
              } else {
                cells[0] = f;     w[0] = 1.0;
                cells[1] = f + 1; w[1] = -0.25;
                cells[2] = f - 1; w[2] = 0.25;
                nc = (fromm && interior_face) ? 3 : 1;
              }
              for (int k = 0; k < nc; ++k) {
                const auto [ci, fac] = map_cell(cells[k]);
                if (fac == 0.0) continue;
                const std::size_t col = base + sa * ci;
                const double coeff = v * w[k] * fac / h;
                if (f - 1 >= 0)
                  out.push_back({base + sa * (f - 1), col, -coeff});
                if (f < na) out.push_back({base + sa * f, col, coeff});
              }
            }
          }
  }

  for (int a = 0; a < dims; ++a) {
    if (daa_[a].empty()) continue;
    const double h2 = shape_.ax[a].h() * shape_.ax[a].h();
    const std::size_t sa = st[a];
    const int na = n[a];
    const double* D = daa_[a].data();
    const double glo = ghost_[a][0], ghi = ghost_[a][2];
    for (std::size_t c = 0; c < n_cells; ++c) {
      const int ia = static_cast<int>((c / sa) % static_cast<std::size_t>(na));
      const double dm = ia > 0 ? 0.5 * (D[c] + D[c - sa]) : D[c];
      const double dp = ia < na - 1 ? 0.5 * (D[c] + D[c + sa]) : D[c];
      double diag = -(dm + dp) / h2;
      if (ia == 0) diag += dm * glo / h2;
      if (ia == na - 1) diag += dp * ghi / h2;
      out.push_back({c, c, diag});
      if (ia > 0) out.push_back({c, c - sa, dm / h2});
      if (ia < na - 1) out.push_back({c, c + sa, dp / h2});
    }
  }
  for (std::size_t mp = 0; mp < mixed_pairs_.size(); ++mp) {
    const int a = mixed_pairs_[mp][0], b = mixed_pairs_[mp][1];
    const std::size_t sa = st[a], sb = st[b];
    const int na = n[a], nb = n[b];
    const double hh = 4.0 * shape_.ax[a].h() * shape_.ax[b].h();
    const double* D = dab_[mp].data();
    for (std::size_t c = 0; c < n_cells; ++c) {
      const int ia = static_cast<int>((c / sa) % static_cast<std::size_t>(na));
      const int ib = static_cast<int>((c / sb) % static_cast<std::size_t>(nb));
      auto add = [&](int da, int db, double sign) {
        const int ja = ia + da, jb = ib + db;
        if (ja < 0 || ja >= na || jb < 0 || jb >= nb) return;
        out.push_back({c,
                       c + static_cast<std::size_t>(da) * sa +
                           static_cast<std::size_t>(db) * sb,
                       sign * 2.0 * D[c] / hh});
      };
      add(1, 1, 1.0);
      add(1, -1, -1.0);
      add(-1, 1, -1.0);
      add(-1, -1, 1.0);
    }
  }
  if (has_sink_)
    for (std::size_t c = 0; c < n_cells; ++c)
      out.push_back({c, c, -sink_[c]});
  return out;
}

// ---------------------------------------------------------------------------
// Operator builders
// ---------------------------------------------------------------------------

ExplicitFpEngine make_fp4d_engine(const ScenarioConfig& config,
                                  const GridShape& shape4, double p_nm,
                                  int threads) {
  if (shape4.dims != 4)
    throw std::invalid_argument("make_fp4d_engine: need a 4D grid");
  const ScenarioConfig c = config;
  FpCoefficients co;
  co.velocity = [c](int axis, const std::array<double, 4>& x, double t) {
    switch (axis) {
      case 0: return x[1];
      case 1: return c.f0.value(t) - c.omega0_sq.value(t) * x[0];
      case 2: return x[3] * x[3] - x[2] * x[2] - c.omega0_sq.value(t);
      default: return -2.0 * x[2] * x[3];
    }
  };
  co.diffusion = [c](int a, int b, const std::array<double, 4>& x, double t) {
    const double a1 = c.noise_amp1(t), a2 = c.noise_amp2(t);
    const double q1 = 0.5 * a1 * a1, q2 = 0.5 * a2 * a2;
    if (a == 1 && b == 1) return q2 + q1 * x[0] * x[0];
    if ((a == 1 && b == 2) || (a == 2 && b == 1)) return q1 * x[0];
    if (a == 2 && b == 2) return q1;
    return 0.0;
  };
  if (p_nm != 0.0)
    co.sink = [p_nm](const std::array<double, 4>& x, double) {
      return p_nm * x[2];
    };
  return ExplicitFpEngine(shape4, std::move(co), Reconstruction::Fromm, threads);
}

ExplicitFpEngine make_fp4d_stationary_engine(const StationaryParams& par,
                                             const GridShape& shape4,
                                             int threads) {
  if (shape4.dims != 4)
    throw std::invalid_argument("make_fp4d_stationary_engine: need a 4D grid");
  const double w2 = par.omega * par.omega;
  FpCoefficients co;
  co.velocity = [par, w2](int axis, const std::array<double, 4>& x, double) {
    switch (axis) {
      case 0: return x[1];
      case 1: return par.f0 - w2 * x[0];
      case 2: return x[3] * x[3] - x[2] * x[2] - w2;
      default: return -2.0 * x[2] * x[3];
    }
  };
  co.diffusion = [par](int a, int b, const std::array<double, 4>& x, double) {
    if (a == 1 && b == 1) return par.eps2 + par.eps1 * x[0] * x[0];
    if ((a == 1 && b == 2) || (a == 2 && b == 1)) return par.eps1 * x[0];
    if (a == 2 && b == 2) return par.eps1;
    return 0.0;
  };
  const double p = par.p_nm;
  if (p != 0.0)
    co.sink = [p](const std::array<double, 4>& x, double) { return p * x[2]; };
  return ExplicitFpEngine(shape4, std::move(co), Reconstruction::Fromm, threads);
}

ExplicitFpEngine make_shortened3_engine(const StationaryParams& par,
                                        const GridShape& shape3,
                                        Reconstruction rec, int threads) {
  if (shape3.dims != 3)
    throw std::invalid_argument("make_shortened3_engine: need a 3D grid");
  const double w2 = par.omega * par.omega;
  FpCoefficients co;
  co.velocity = [par, w2](int axis, const std::array<double, 4>& x, double) {
    switch (axis) {
      case 0: return x[1];
      case 1: return par.f0 - w2 * x[0];
      default: return -(x[2] * x[2] + w2);
    }
  };
  co.diffusion = [par](int a, int b, const std::array<double, 4>& x, double) {
    if (a == 1 && b == 1) return par.eps2 + par.eps1 * x[0] * x[0];
    if ((a == 1 && b == 2) || (a == 2 && b == 1)) return par.eps1 * x[0];
    if (a == 2 && b == 2) return par.eps1;
    return 0.0;
  };
  const double p = par.p_nm;
  co.sink = [p](const std::array<double, 4>& x, double) { return p * x[2]; };
  co.tails.push_back({2, w2, 0.5 * (p - 2.0)});
  return ExplicitFpEngine(shape3, std::move(co), rec, threads);
}

ExplicitFpEngine make_ricatti2_engine(const StationaryParams& par,
                                      const GridShape& shape2,
                                      Reconstruction rec) {
  if (shape2.dims != 2)
    throw std::invalid_argument("make_ricatti2_engine: need a 2D grid");
  const double w2 = par.omega * par.omega;
  FpCoefficients co;
  co.velocity = [w2](int axis, const std::array<double, 4>& x, double) {
    if (axis == 0) return x[1] * x[1] - x[0] * x[0] - w2;
    return -2.0 * x[0] * x[1];
  };
  co.diffusion = [par](int a, int b, const std::array<double, 4>&, double) {
    return (a == 0 && b == 0) ? par.eps1 : 0.0;
  };
  const double p = par.p_nm;
  co.sink = [p](const std::array<double, 4>& x, double) { return p * x[0]; };
  co.tails.push_back({0, w2, 0.5 * (p - 2.0)});
  return ExplicitFpEngine(shape2, std::move(co), rec, 1);
}

ExplicitFpEngine make_ricatti1_engine(const StationaryParams& par,
                                      const GridShape& shape1,
                                      Reconstruction rec) {
  if (shape1.dims != 1)
    throw std::invalid_argument("make_ricatti1_engine: need a 1D grid");
  const double w2 = par.omega * par.omega;
  FpCoefficients co;
  co.velocity = [w2](int, const std::array<double, 4>& x, double) {
    return -(x[0] * x[0] + w2);
  };
  co.diffusion = [par](int a, int b, const std::array<double, 4>&, double) {
    return (a == 0 && b == 0) ? par.eps1 : 0.0;
  };
  const double p = par.p_nm;
  co.sink = [p](const std::array<double, 4>& x, double) { return p * x[0]; };
  co.tails.push_back({0, w2, 0.5 * (p - 2.0)});
  return ExplicitFpEngine(shape1, std::move(co), rec, 1);
}

// ---------------------------------------------------------------------------
// 2D split solver
// ---------------------------------------------------------------------------

namespace {

// Crank-Nicolson half of the x2 diffusion with constant coefficient D over
// the sub-step: (I - 0.5 dt D L) p' = (I + 0.5 dt D L) p per x1-line.
void cn_diffuse_x2(GridFunction& p, double D, double dt) {
  if (D <= 0.0 || dt <= 0.0) return;
  const int n1 = p.shape.ax[0].n, n2 = p.shape.ax[1].n;
  const double h2 = p.shape.ax[1].h();
  const double r = 0.5 * dt * D / (h2 * h2);
  std::vector<double> rhs(n2), dpr(n2), cpr(n2);
  for (int i = 0; i < n1; ++i) {
    double* row = p.v.data() + static_cast<std::size_t>(i) * n2;
    for (int j = 0; j < n2; ++j) {
      const double pm = j > 0 ? row[j - 1] : 0.0;
      const double pp = j < n2 - 1 ? row[j + 1] : 0.0;
      rhs[j] = row[j] + r * (pm - 2.0 * row[j] + pp);
    }
    // Thomas for tridiagonal (-r, 1 + 2r, -r)
    const double b = 1.0 + 2.0 * r, a = -r;
    cpr[0] = a / b;
    dpr[0] = rhs[0] / b;
    for (int j = 1; j < n2; ++j) {
      const double mlt = b - a * cpr[j - 1];
      cpr[j] = a / mlt;
      dpr[j] = (rhs[j] - a * dpr[j - 1]) / mlt;
    }
    row[n2 - 1] = dpr[n2 - 1];
    for (int j = n2 - 2; j >= 0; --j) row[j] = dpr[j] - cpr[j] * row[j + 1];
  }
}

}  // namespace

GridFunction solve_fp2d(const ScenarioConfig& c, GridFunction p, double t0,
                        double t1, const Fp2dOptions& opt,
                        Fp2dDiagnostics* diag) {
  if (p.shape.dims != 2) throw std::invalid_argument("solve_fp2d: 2D grid required");
  if (diag) {
    diag->mass_initial = p.mass();
    diag->steps = 0;
  }
  FpCoefficients co;
  co.velocity = [c](int axis, const std::array<double, 4>& x, double t) {
    if (axis == 0) return x[1];
    return c.f0.value(t) - c.omega0_sq.value(t) * x[0];
  };
  ExplicitFpEngine adv(p.shape, std::move(co), opt.rec, opt.threads);
  double t = t0;
  while (t < t1 - 1e-14) {
    adv.refresh(t);
    const double a2 = c.noise_amp2(t);
    const double dcoef = 0.5 * a2 * a2;
    double dt = std::min(opt.dt_max, adv.stable_dt(opt.cfl));
    dt = std::min(dt, t1 - t);
    cn_diffuse_x2(p, dcoef, 0.5 * dt);
    adv.heun_step(p.v, dt, false);
    cn_diffuse_x2(p, dcoef, 0.5 * dt);
    t += dt;
    if (diag) ++diag->steps;
  }
  if (diag) diag->mass_final = p.mass();
  return p;
}

}  // namespace fp
}  // namespace oscillab
