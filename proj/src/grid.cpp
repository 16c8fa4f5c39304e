#include "oscillab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace oscillab {

std::size_t GridShape::size() const {
  std::size_t s = 1;
  for (int d = 0; d < dims; ++d) s *= static_cast<std::size_t>(ax[d].n);
  return s;
}

double GridShape::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dims; ++d) v *= ax[d].h();
  return v;
}

std::array<std::size_t, 4> GridShape::strides() const {
  std::array<std::size_t, 4> s{1, 1, 1, 1};
  for (int d = dims - 2; d >= 0; --d)
    s[d] = s[d + 1] * static_cast<std::size_t>(ax[d + 1].n);
  return s;
}

GridFunction GridFunction::zeros(const GridShape& s) {
  GridFunction g;
  g.shape = s;
  g.v.assign(s.size(), 0.0);
  return g;
}

GridFunction GridFunction::gaussian_blob(const GridShape& s,
                                         const std::array<double, 4>& center,
                                         const std::array<double, 4>& widths) {
  GridFunction g = zeros(s);
  const auto st = s.strides();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < s.dims; ++d) n[d] = s.ax[d].n;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2)
        for (int i3 = 0; i3 < n[3]; ++i3) {
          double q = 0.0;
          const int idx4[4] = {i0, i1, i2, i3};
          for (int d = 0; d < s.dims; ++d) {
            const double z = (s.ax[d].center(idx4[d]) - center[d]) / widths[d];
            q += z * z;
          }
          g.v[i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3]] =
              std::exp(-0.5 * q);
        }
  const double m = g.mass();
  if (m > 0.0)
    for (double& x : g.v) x /= m;
  return g;
}

double GridFunction::mass() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s * shape.cell_volume();
}

double GridFunction::min_value() const {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double GridFunction::interp(const std::array<double, 4>& x) const {
  const auto st = shape.strides();
  std::array<int, 4> i0{0, 0, 0, 0};
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};
  for (int d = 0; d < shape.dims; ++d) {
    const Axis& a = shape.ax[d];
    double s = (x[d] - a.lo) / a.h() - 0.5;  // cell-center coordinate
    s = std::clamp(s, 0.0, static_cast<double>(a.n - 1));
    int i = static_cast<int>(s);
    if (i >= a.n - 1) i = a.n - 2 >= 0 ? a.n - 2 : 0;
    i0[d] = i;
    w[d] = a.n > 1 ? s - i : 0.0;
  }
  double acc = 0.0;
  const int corners = 1 << shape.dims;
  for (int c = 0; c < corners; ++c) {
    double wgt = 1.0;
    std::size_t idx = 0;
    for (int d = 0; d < shape.dims; ++d) {
      const int bit = (c >> d) & 1;
      wgt *= bit ? w[d] : (1.0 - w[d]);
      const int id = std::min(i0[d] + bit, shape.ax[d].n - 1);
      idx += st[d] * static_cast<std::size_t>(id);
    }
    acc += wgt * v[idx];
  }
  return acc;
}

std::vector<double> GridFunction::marginal(int axis) const {
  const auto st = shape.strides();
  std::vector<double> out(shape.ax[axis].n, 0.0);
  double dv = 1.0;
  for (int d = 0; d < shape.dims; ++d)
    if (d != axis) dv *= shape.ax[d].h();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < shape.dims; ++d) n[d] = shape.ax[d].n;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2)
        for (int i3 = 0; i3 < n[3]; ++i3) {
          const int idx4[4] = {i0, i1, i2, i3};
          out[idx4[axis]] +=
              v[i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3]] * dv;
        }
  return out;
}

GridFunction GridFunction::marginal2(int axis_a, int axis_b) const {
  GridShape s2;
  s2.dims = 2;
  s2.ax[0] = shape.ax[axis_a];
  s2.ax[1] = shape.ax[axis_b];
  GridFunction out = zeros(s2);
  double dv = 1.0;
  for (int d = 0; d < shape.dims; ++d)
    if (d != axis_a && d != axis_b) dv *= shape.ax[d].h();
  const auto st = shape.strides();
  std::array<int, 4> n{1, 1, 1, 1};
  for (int d = 0; d < shape.dims; ++d) n[d] = shape.ax[d].n;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2)
        for (int i3 = 0; i3 < n[3]; ++i3) {
          const int idx4[4] = {i0, i1, i2, i3};
          out.v[idx4[axis_a] * s2.ax[1].n + idx4[axis_b]] +=
              v[i0 * st[0] + i1 * st[1] + i2 * st[2] + i3 * st[3]] * dv;
        }
  return out;
}

void GridFunction::write_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char magic[4] = {'O', 'S', 'L', 'G'};
  const std::uint32_t version = 1, dtype = 0;  // 0 = float64
  const std::uint32_t dims = static_cast<std::uint32_t>(shape.dims);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&dtype), 4);
  out.write(reinterpret_cast<const char*>(&dims), 4);
  for (int d = 0; d < shape.dims; ++d) {
    const std::uint32_t n = static_cast<std::uint32_t>(shape.ax[d].n);
    out.write(reinterpret_cast<const char*>(&shape.ax[d].lo), 8);
    out.write(reinterpret_cast<const char*>(&shape.ax[d].hi), 8);
    out.write(reinterpret_cast<const char*>(&n), 4);
  }
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

GridFunction GridFunction::read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  std::uint32_t version, dtype, dims;
  in.read(magic, 4);
  if (std::memcmp(magic, "OSLG", 4) != 0)
    throw std::runtime_error(path + ": not a grid file");
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&dtype), 4);
  in.read(reinterpret_cast<char*>(&dims), 4);
  if (dtype != 0) throw std::runtime_error(path + ": unsupported dtype");
  GridFunction g;
  g.shape.dims = static_cast<int>(dims);
  for (int d = 0; d < g.shape.dims; ++d) {
    std::uint32_t n;
    in.read(reinterpret_cast<char*>(&g.shape.ax[d].lo), 8);
    in.read(reinterpret_cast<char*>(&g.shape.ax[d].hi), 8);
    in.read(reinterpret_cast<char*>(&n), 4);
    g.shape.ax[d].n = static_cast<int>(n);
  }
  g.v.resize(g.shape.size());
  in.read(reinterpret_cast<char*>(g.v.data()),
          static_cast<std::streamsize>(g.v.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated grid file");
  return g;
}

void GridFunction::write_csv(const std::string& path, int axis_a, int axis_b,
                             const std::array<int, 4>& fixed) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  const auto st = shape.strides();
  if (shape.dims == 1) {
    out << "x,value\n";
    for (int i = 0; i < shape.ax[0].n; ++i)
      out << shape.ax[0].center(i) << ',' << v[i] << '\n';
    return;
  }
  out << "x_a,x_b,value\n";
  std::array<int, 4> idx = fixed;
  for (int working = 0; working < shape.dims; ++working)
    if (working == axis_a || working == axis_b) idx[working] = 0;
  for (int ia = 0; ia < shape.ax[axis_a].n; ++ia)
    for (int ib = 0; ib < shape.ax[axis_b].n; ++ib) {
      idx[axis_a] = ia;
      idx[axis_b] = ib;
      std::size_t flat = 0;
      for (int d = 0; d < shape.dims; ++d)
        flat += st[d] * static_cast<std::size_t>(idx[d]);
      out << shape.ax[axis_a].center(ia) << ',' << shape.ax[axis_b].center(ib)
          << ',' << v[flat] << '\n';
    }
}

}  // namespace oscillab
