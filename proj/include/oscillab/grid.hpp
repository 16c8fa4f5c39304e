#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace oscillab {

// Cell-centered uniform axis: n cells on [lo, hi], centers at lo + (i+1/2) h.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;
  double h() const { return (hi - lo) / n; }
  double center(int i) const { return lo + (i + 0.5) * h(); }
  double face(int i) const { return lo + i * h(); }  // i in [0, n]
};

struct GridShape {
  int dims = 1;
  std::array<Axis, 4> ax{};
  std::size_t size() const;
  double cell_volume() const;
  // row-major strides, last axis fastest
  std::array<std::size_t, 4> strides() const;
};

// Real scalar field on a rectangular 1-4D grid, absorbing-zero boundary.
struct GridFunction {
  GridShape shape;
  std::vector<double> v;

  static GridFunction zeros(const GridShape& s);
  // Normalized Gaussian bump; widths in the same units as the axes.
  static GridFunction gaussian_blob(const GridShape& s,
                                    const std::array<double, 4>& center,
                                    const std::array<double, 4>& widths);

  double mass() const;  // integral, cell volume included
  double min_value() const;
  double max_abs() const;
  // multilinear interpolation at a physical point (clamped to the domain)
  double interp(const std::array<double, 4>& x) const;
  // marginal over all axes except `axis` (integrates the others out)
  std::vector<double> marginal(int axis) const;
  // 2D marginal onto (axis_a, axis_b)
  GridFunction marginal2(int axis_a, int axis_b) const;

  void write_binary(const std::string& path) const;
  static GridFunction read_binary(const std::string& path);
  // CSV dump: all cells for dims <= 2, else a 2D slice through fixed
  // indices of the remaining axes.
  void write_csv(const std::string& path, int axis_a = 0, int axis_b = 1,
                 const std::array<int, 4>& fixed = {0, 0, 0, 0}) const;
};

}  // namespace oscillab
