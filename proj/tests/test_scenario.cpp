#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oscillab/scenario.hpp"

using namespace oscillab;

namespace {

ScenarioConfig unperturbed() {
  ScenarioConfig c;
  c.omega_in = c.omega_out = 1.0;
  c.omega0_sq = TimeProfile::constant(1.0);
  c.f0 = TimeProfile::constant(0.0);
  c.p1 = TimeProfile::constant(0.0);
  c.p2 = TimeProfile::constant(0.0);
  c.eps1 = c.eps2 = 0.0;
  c.t_min = -20.0;
  c.t_max = 60.0;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("scenario");

TEST_CASE("constant profile returns its value everywhere") {
  const TimeProfile p = TimeProfile::constant(3.5);
  CHECK(p.value(-100.0) == 3.5);
  CHECK(p.value(0.0) == 3.5);
  CHECK(p.value(42.0) == 3.5);
}

TEST_CASE("unit window: 1 inside (t1, t_e), 0 past t_e") {
  // step profile encodes the cutoff; the activation side is the t1 gate
  const TimeProfile p = TimeProfile::step(40.0, 1.0, 0.0);
  CHECK(p.value(10.0) == 1.0);
  CHECK(p.value(39.9) == 1.0);
  CHECK(p.value(40.1) == 0.0);

  ScenarioConfig c = unperturbed();
  c.eps1 = 0.1;
  c.t1 = 0.0;
  c.p1 = p;
  CHECK(c.noise_amp1(-1.0) == 0.0);              // before activation
  CHECK(c.noise_amp1(5.0) == doctest::Approx(std::sqrt(0.2)));
  CHECK(c.noise_amp1(41.0) == 0.0);              // window closed
}

TEST_CASE("tabulated profile interpolates linearly") {
  const TimeProfile p = TimeProfile::tabulated({0.0, 1.0}, {0.0, 2.0});
  CHECK(p.value(0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(evaluate_profile(p, 2.0), std::out_of_range);
}

TEST_CASE("smooth ramp is C1 at its endpoints") {
  const TimeProfile p = TimeProfile::ramp(-1.0, 1.0, 1.0, 4.0);
  const double h = 1e-6;
  // one-sided slopes match across each endpoint
  CHECK(std::abs((p.value(-1.0 + h) - p.value(-1.0 - h)) / (2 * h)) < 1e-5);
  CHECK(std::abs((p.value(1.0 + h) - p.value(1.0 - h)) / (2 * h)) < 1e-5);
  CHECK(p.value(0.0) == doctest::Approx(2.5));
}

TEST_CASE("validate: unperturbed oscillator passes") {
  CHECK(validate(unperturbed()).empty());
}

TEST_CASE("validate: nonvanishing force at the window edge is flagged") {
  ScenarioConfig c = unperturbed();
  c.f0 = TimeProfile::constant(0.3);
  const auto v = validate(c);
  REQUIRE(!v.empty());
  bool found = false;
  for (const auto& violation : v) found = found || violation.field == "f0";
  CHECK(found);
}

TEST_CASE("validate: t1 beyond the window is not finite in the model sense") {
  ScenarioConfig c = unperturbed();
  c.t1 = c.t_max + 100.0;
  const auto v = validate(c);
  bool found = false;
  for (const auto& violation : v)
    found = found || (violation.field == "t1" &&
                      violation.message.find("finite") != std::string::npos);
  CHECK(found);
}

TEST_CASE("validate: frequency must settle at both asymptotic values") {
  ScenarioConfig c = unperturbed();
  c.omega_out = 2.0;  // omega0_sq still constant 1
  const auto v = validate(c);
  bool found = false;
  for (const auto& violation : v) found = found || violation.field == "omega0_sq";
  CHECK(found);
}

TEST_CASE("config file round trip preserves the scenario hash") {
  ScenarioConfig c = unperturbed();
  c.eps2 = 0.25;
  c.p2 = TimeProfile::step(30.0, 1.0, 0.0);
  c.seed = 777;
  std::stringstream ss(c.canonical_text());
  const ScenarioConfig back = parse_scenario(ss);
  CHECK(back.hash() == c.hash());
  CHECK(back.eps2 == c.eps2);
  CHECK(back.p2.value(10.0) == 1.0);
}

TEST_CASE("profile parser accepts the documented grammar") {
  CHECK(TimeProfile::parse("constant 2").value(0) == 2.0);
  CHECK(TimeProfile::parse("zero").value(5) == 0.0);
  CHECK(TimeProfile::parse("one").value(5) == 1.0);
  CHECK(TimeProfile::parse("step 1 0 3").value(2) == 3.0);
  CHECK(TimeProfile::parse("ramp 0 1 0 1").value(0.5) == doctest::Approx(0.5));
  CHECK(TimeProfile::parse("tabulated 0 0 1 2").value(0.5) == doctest::Approx(1.0));
  CHECK_THROWS(TimeProfile::parse("bogus 1 2"));
}

TEST_SUITE_END();
