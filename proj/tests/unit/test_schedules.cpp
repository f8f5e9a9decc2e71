#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nar/schedules.hpp"

using namespace nar;

TEST_CASE("delta correction closed forms") {
  // alpha1 = 1, alpha2 = 10, t0 = 1, growth by 2: delta = 2 e^{-10}
  CHECK(solve_delta(0.0, 2.0, 1.0, 10.0, 1.0) ==
        doctest::Approx(2.0 * std::exp(-10.0)).epsilon(1e-13));
  // no lag term, no correction needed
  CHECK(solve_delta(0.0, 2.0, 0.0, 10.0, 1.0) == 0.0);
  // constant schedule
  CHECK(solve_delta(1.5, 1.5, 1.0, 1.0, 2.0) == 0.0);
  CHECK_THROWS_AS(solve_delta(0.0, 1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("ramp hits its target exactly at t0 and clamps after") {
  auto r = make_ramp(1.0, 3.0, 1.0, 1.0, 2.0);
  CHECK(r.value(0.0) == 1.0);
  CHECK(r.value(2.0) == 3.0);
  CHECK(r.value(5.0) == 3.0);
  CHECK(r.value(100.0) == 3.0);
  // continuous at the clamp
  CHECK(r.value(2.0 - 1e-9) == doctest::Approx(3.0).epsilon(1e-8));
  // strictly between the endpoints inside the ramp
  const double mid = r.value(1.0);
  CHECK(mid > 1.0);
  CHECK(mid < 3.0);
  CHECK(ramp_is_monotone(r));
}

TEST_CASE("constant ramp stays put") {
  auto r = make_ramp(0.7, 0.7, 1.0, 10.0, 1.0);
  CHECK(r.constant());
  for (double t : {0.0, 0.3, 1.0, 7.0}) CHECK(r.value(t) == 0.7);
}

TEST_CASE("negative alpha2 can break monotonicity") {
  auto r = make_ramp(0.0, 1.0, 1.0, -2.0, 3.0);
  CHECK_FALSE(ramp_is_monotone(r));
}

TEST_CASE("conversion rate sigmoid") {
  CHECK(conversion_rate(0.23, 0.35, 150.0, 0.3, 0.0) == 0.23);
  // far out the lag term is dead and the rate sits at rho0 + rho_bar
  CHECK(conversion_rate(0.23, 0.35, 150.0, 0.3, 50.0) ==
        doctest::Approx(0.58).epsilon(1e-5));
  CHECK(conversion_rate(0.2, 0.3, 1.0, 0.5, 1e9) == doctest::Approx(0.5).epsilon(1e-12));
  // never clamps: still strictly below the asymptote at finite t
  CHECK(conversion_rate(0.2, 0.3, 1.0, 0.5, 10.0) < 0.5);
  // monotone when rho_bar > 0
  double prev = 0.23;
  for (int i = 1; i <= 100; ++i) {
    const double v = conversion_rate(0.23, 0.35, 150.0, 0.3, 0.5 * i);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("rate-scaled volume targets") {
  auto base = make_ramp(2.0, 2.0, 1.0, 10.0, 1.0);
  VolumeTarget vt;
  vt.kind = VolumeTarget::Kind::RateTimesVolume;
  vt.rho0 = 0.2;
  vt.rho_bar = 0.3;
  vt.rate_alpha1 = 1.0;
  vt.rate_alpha2 = 0.5;
  vt.base = base;
  CHECK(vt.value(0.0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(vt.value(1e9) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_FALSE(vt.frozen_at(1e9));  // the rate keeps creeping forever

  VolumeTarget plain;
  plain.ramp = make_ramp(0.1, 0.5, 1.0, 10.0, 1.0);
  CHECK(plain.value(1.0) == 0.5);
  CHECK(plain.frozen_at(1.0));
  CHECK_FALSE(plain.frozen_at(0.5));
}

TEST_CASE("schedule set freeze test") {
  ScheduleSet s;
  s.V = {make_ramp(0.2, 1.0, 1.0, 10.0, 1.0)};
  VolumeTarget vt;
  vt.ramp = make_ramp(0.05, 0.23, 1.0, 10.0, 1.0);
  s.v = {vt};
  s.rx = make_ramp(2.0, 2.0, 1.0, 10.0, 1.0);
  s.ry = make_ramp(2.9, 2.9, 1.0, 10.0, 1.0);
  CHECK_FALSE(s.frozen_at(0.5));
  CHECK(s.frozen_at(1.0));
  CHECK(s.frozen_at(3.0));
}
