#include "oscillab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oscillab {

namespace {
constexpr double kAsymptoticTol = 1e-10;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

double ScenarioConfig::noise_amp1(double t) const {
  if (eps1 <= 0.0 || t <= t1) return 0.0;
  const double p = p1.value(t);
  return p > 0.0 ? std::sqrt(2.0 * eps1 * p) : 0.0;
}

double ScenarioConfig::noise_amp2(double t) const {
  if (eps2 <= 0.0 || t <= t2) return 0.0;
  const double p = p2.value(t);
  return p > 0.0 ? std::sqrt(2.0 * eps2 * p) : 0.0;
}

double ScenarioConfig::period_in() const { return 2.0 * M_PI / omega_in; }

std::vector<Violation> validate(const ScenarioConfig& c) {
  std::vector<Violation> out;
  auto bad = [&out](const std::string& field, const std::string& msg) {
    out.push_back({field, msg});
  };

  if (!(c.omega_in > 0.0)) bad("omega_in", "must be > 0");
  if (!(c.omega_out > 0.0)) bad("omega_out", "must be > 0");
  if (c.eps1 < 0.0) bad("eps1", "must be >= 0");
  if (c.eps2 < 0.0) bad("eps2", "must be >= 0");
  if (c.n_max < 0) bad("n_max", "must be >= 0");
  if (!(c.t_min < c.t_max)) bad("t_min", "window requires t_min < t_max");
  if (c.grid_nt < 2) bad("grid_nt", "need at least 2 samples");

  if (!std::isfinite(c.t1) || c.t1 > c.t_max) bad("t1", "t1 must be finite (inside the window)");
  if (!std::isfinite(c.t2) || c.t2 > c.t_max) bad("t2", "t2 must be finite (inside the window)");
  if (!std::isfinite(c.t_e)) bad("t_e", "t_e must be finite");
  if (c.t_e != 0.0 && !(c.t1 < c.t_e && c.t2 <= c.t_e)) bad("t_e", "requires t1, t2 < t_e");

  // Asymptotic conditions at the window ends.
  for (double t : {c.t_min, c.t_min + 1e-9}) {
    if (!c.omega0_sq.in_range(t)) {
      bad("omega0_sq", "not evaluable at t_min");
      break;
    }
    if (std::abs(c.omega0_sq.value(t) - c.omega_in * c.omega_in) >
        kAsymptoticTol * std::max(1.0, c.omega_in * c.omega_in)) {
      bad("omega0_sq", "must equal omega_in^2 at t_min");
      break;
    }
  }
  for (double t : {c.t_max, c.t_max - 1e-9}) {
    if (!c.omega0_sq.in_range(t)) {
      bad("omega0_sq", "not evaluable at t_max");
      break;
    }
    if (std::abs(c.omega0_sq.value(t) - c.omega_out * c.omega_out) >
        kAsymptoticTol * std::max(1.0, c.omega_out * c.omega_out)) {
      bad("omega0_sq", "must equal omega_out^2 at t_max");
      break;
    }
  }
  if (c.f0.in_range(c.t_min) && c.f0.in_range(c.t_max)) {
    if (std::abs(c.f0.value(c.t_min)) > kAsymptoticTol)
      bad("f0", "must vanish at t_min");
    if (std::abs(c.f0.value(c.t_max)) > kAsymptoticTol)
      bad("f0", "must vanish at t_max");
  } else {
    bad("f0", "not evaluable over the window");
  }
  if (c.eps1 > 0.0 && std::abs(c.p1.value(c.t_max)) > kAsymptoticTol)
    bad("p1", "must vanish at t_max when eps1 > 0");
  if (c.eps2 > 0.0 && std::abs(c.p2.value(c.t_max)) > kAsymptoticTol)
    bad("p2", "must vanish at t_max when eps2 > 0");

  // Gates are nonnegative wherever they can switch noise on.
  const int probes = 64;
  for (int i = 0; i <= probes; ++i) {
    const double t = c.t_min + (c.t_max - c.t_min) * i / probes;
    if (c.p1.in_range(t) && c.p1.value(t) < 0.0) {
      bad("p1", "must be >= 0");
      break;
    }
  }
  for (int i = 0; i <= probes; ++i) {
    const double t = c.t_min + (c.t_max - c.t_min) * i / probes;
    if (c.p2.in_range(t) && c.p2.value(t) < 0.0) {
      bad("p2", "must be >= 0");
      break;
    }
  }
  return out;
}

double evaluate_profile(const TimeProfile& profile, double t) {
  if (!profile.in_range(t))
    throw std::out_of_range("profile not defined at requested time");
  return profile.value(t);
}

std::string ScenarioConfig::canonical_text() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "omega_in = " << omega_in << "\n";
  ss << "omega_out = " << omega_out << "\n";
  ss << "omega0_sq = " << omega0_sq.describe() << "\n";
  ss << "f0 = " << f0.describe() << "\n";
  ss << "p1 = " << p1.describe() << "\n";
  ss << "p2 = " << p2.describe() << "\n";
  ss << "eps1 = " << eps1 << "\n";
  ss << "eps2 = " << eps2 << "\n";
  ss << "t1 = " << t1 << "\n";
  ss << "t2 = " << t2 << "\n";
  ss << "t_e = " << t_e << "\n";
  ss << "t_min = " << t_min << "\n";
  ss << "t_max = " << t_max << "\n";
  ss << "seed = " << seed << "\n";
  ss << "n_max = " << n_max << "\n";
  ss << "grid_nt = " << grid_nt << "\n";
  return ss.str();
}

std::uint64_t ScenarioConfig::hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "omega_in") c.omega_in = std::stod(value);
      else if (key == "omega_out") c.omega_out = std::stod(value);
      else if (key == "omega0_sq") c.omega0_sq = TimeProfile::parse(value);
      else if (key == "f0") c.f0 = TimeProfile::parse(value);
      else if (key == "p1") c.p1 = TimeProfile::parse(value);
      else if (key == "p2") c.p2 = TimeProfile::parse(value);
      else if (key == "eps1") c.eps1 = std::stod(value);
      else if (key == "eps2") c.eps2 = std::stod(value);
      else if (key == "t1") c.t1 = std::stod(value);
      else if (key == "t2") c.t2 = std::stod(value);
      else if (key == "t_e") c.t_e = std::stod(value);
      else if (key == "t_min") c.t_min = std::stod(value);
      else if (key == "t_max") c.t_max = std::stod(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "n_max") c.n_max = std::stoi(value);
      else if (key == "grid_nt") c.grid_nt = std::stoi(value);
      else
        throw std::runtime_error("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": bad value for '" + key + "'");
    }
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario config: " + path);
  return parse_scenario(f);
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write scenario config: " + path);
  f << config.canonical_text();
}

}  // namespace oscillab
