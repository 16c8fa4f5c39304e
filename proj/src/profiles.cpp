#include "oscillab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace oscillab {

TimeProfile TimeProfile::constant(double c) {
  TimeProfile p;
  p.kind_ = Kind::Constant;
  p.a_ = c;
  return p;
}

TimeProfile TimeProfile::step(double t0, double before, double after) {
  TimeProfile p;
  p.kind_ = Kind::Step;
  p.a_ = t0;
  p.b_ = before;
  p.c_ = after;
  return p;
}

TimeProfile TimeProfile::ramp(double t0, double t1, double v0, double v1) {
  if (!(t1 > t0)) throw std::invalid_argument("ramp: t1 must exceed t0");
  TimeProfile p;
  p.kind_ = Kind::Ramp;
  p.a_ = t0;
  p.b_ = t1;
  p.c_ = v0;
  p.d_ = v1;
  return p;
}

TimeProfile TimeProfile::tabulated(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("tabulated: need >= 2 samples of equal length");
  if (!std::is_sorted(t.begin(), t.end()))
    throw std::invalid_argument("tabulated: times must be increasing");
  TimeProfile p;
  p.kind_ = Kind::Tabulated;
  p.ts_ = std::move(t);
  p.vs_ = std::move(v);
  return p;
}

double TimeProfile::value(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::Step:
      return t < a_ ? b_ : c_;
    case Kind::Ramp: {
      if (t <= a_) return c_;
      if (t >= b_) return d_;
      const double s = (t - a_) / (b_ - a_);
      const double w = s * s * (3.0 - 2.0 * s);  // cubic smoothstep, C^1
      return c_ + (d_ - c_) * w;
    }
    case Kind::Tabulated: {
      if (t < ts_.front() || t > ts_.back())
        throw std::out_of_range("tabulated profile evaluated outside its grid");
      auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
      if (it == ts_.end()) return vs_.back();
      const size_t i = static_cast<size_t>(it - ts_.begin());
      if (i == 0) return vs_.front();
      const double w = (t - ts_[i - 1]) / (ts_[i] - ts_[i - 1]);
      return vs_[i - 1] + w * (vs_[i] - vs_[i - 1]);
    }
  }
  return 0.0;
}

bool TimeProfile::in_range(double t) const {
  if (kind_ != Kind::Tabulated) return true;
  return t >= ts_.front() && t <= ts_.back();
}

TimeProfile TimeProfile::parse(const std::string& spec) {
  std::istringstream ss(spec);
  std::string kind;
  ss >> kind;
  std::vector<double> args;
  double x;
  while (ss >> x) args.push_back(x);
  if (kind == "constant" && args.size() == 1) return constant(args[0]);
  if (kind == "zero" && args.empty()) return constant(0.0);
  if (kind == "one" && args.empty()) return constant(1.0);
  if (kind == "step" && args.size() == 3) return step(args[0], args[1], args[2]);
  if (kind == "ramp" && args.size() == 4)
    return ramp(args[0], args[1], args[2], args[3]);
  if (kind == "tabulated" && args.size() >= 4 && args.size() % 2 == 0) {
    std::vector<double> t, v;
    for (size_t i = 0; i < args.size(); i += 2) {
      t.push_back(args[i]);
      v.push_back(args[i + 1]);
    }
    return tabulated(std::move(t), std::move(v));
  }
  throw std::invalid_argument("cannot parse profile spec: '" + spec + "'");
}

std::string TimeProfile::describe() const {
  std::ostringstream ss;
  ss.precision(17);
  switch (kind_) {
    case Kind::Constant:
      ss << "constant " << a_;
      break;
    case Kind::Step:
      ss << "step " << a_ << " " << b_ << " " << c_;
      break;
    case Kind::Ramp:
      ss << "ramp " << a_ << " " << b_ << " " << c_ << " " << d_;
      break;
    case Kind::Tabulated:
      ss << "tabulated";
      for (size_t i = 0; i < ts_.size(); ++i) ss << " " << ts_[i] << " " << vs_[i];
      break;
  }
  return ss.str();
}

}  // namespace oscillab
