#pragma once

#include <string>
#include <vector>

namespace oscillab {

// Deterministic scalar function of time. Four kinds:
//   constant   value c everywhere
//   step       c_before for t < t0, c_after for t >= t0
//   ramp       C^1 cubic smoothstep from v0 (t <= t0) to v1 (t >= t1)
//   tabulated  piecewise-linear interpolation of (t, v) samples
class TimeProfile {
 public:
  enum class Kind { Constant, Step, Ramp, Tabulated };

  static TimeProfile constant(double c);
  static TimeProfile step(double t0, double before, double after);
  static TimeProfile ramp(double t0, double t1, double v0, double v1);
  static TimeProfile tabulated(std::vector<double> t, std::vector<double> v);

  // Parse a profile spec, e.g. "constant 1.0", "step 40 1 0",
  // "ramp -5 5 1 4", "tabulated 0 0 1 2".
  static TimeProfile parse(const std::string& spec);

  double operator()(double t) const { return value(t); }
  double value(double t) const;

  Kind kind() const { return kind_; }
  // Definition range for tabulated profiles; infinite otherwise.
  bool in_range(double t) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, d_ = 0.0;
  std::vector<double> ts_, vs_;
};

}  // namespace oscillab
