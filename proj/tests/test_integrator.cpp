#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "tipcrit/integrator.hpp"
#include "tipcrit/quadrature.hpp"

using namespace tipcrit;

namespace {

const ScalarField& quadratic() {
  static const ScalarField f = ScalarField::parse("x^2-1");
  return f;
}

const ScalarField& cubic() {
  static const ScalarField f = ScalarField::parse("x*(x-1)*(x+2)");
  return f;
}

}  // namespace

TEST_CASE("Gauss-Kronrod adaptive quadrature on known integrals") {
  const auto r1 = integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0);
  CHECK(std::abs(r1.value - (std::exp(1.0) - 1.0)) <= 1e-13);
  const auto r2 = integrate_adaptive([](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0);
  CHECK(std::abs(r2.value - 2.0 / 1e-2 * std::atan(1.0 / 1e-2)) <= 1e-10);
  CHECK(r2.intervals > 1);
  const auto r3 = integrate_adaptive([](double x) { return std::sin(x); }, std::numbers::pi, 0.0);
  CHECK(r3.value == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("quadrature gives up on a true singularity") {
  QuadratureSettings s;
  s.max_depth = 30;
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return 1.0 / std::abs(x - 0.3); }, 0.0, 1.0, s),
                  NearSingularityError);
}

TEST_CASE("quadrature stops at the roundoff floor of a cancelling integrand") {
  // (x^2 - 1) + (1 + e) loses about 1e-16 absolutely, so near x = 0 the
  // integrand is noisy far above the absolute tolerance.
  for (double e : {1e-6, 1e-8}) {
    const auto r = integrate_adaptive([e](double x) { return 1.0 / ((x * x - 1.0) + (1.0 + e)); }, -1.0, 1.0);
    const double e_eff = (1.0 + e) - 1.0;  // what the integrand actually sees
    const double exact = 2.0 / std::sqrt(e_eff) * std::atan(1.0 / std::sqrt(e_eff));
    CHECK(r.roundoff_limited);
    CHECK(std::abs(r.value - exact) <= std::max(r.error, 1e-9 * exact));
  }
  CHECK_FALSE(integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0).roundoff_limited);
  CHECK(std::abs(first_passage_time(quadratic(), 1.0 + 1e-6, -1.0, 1.0) - oracle::quadratic_escape_time(1.0 + 1e-6)) <=
        1e-8 * oracle::quadratic_escape_time(1.0 + 1e-6));
}

TEST_CASE("rest point stays put") {
  const Trajectory tr = integrate_controlled(quadratic(), ControlSignal{}, -1.0, 0.0, 50.0);
  CHECK(tr.termination == Termination::ReachedEnd);
  CHECK(tr.final_time() == 50.0);
  for (const auto& s : tr.samples) CHECK(s.y == -1.0);
}

TEST_CASE("bang-bang pulse at M = 2 carries -1 to 1 in time pi/2") {
  const double T = std::numbers::pi / 2;
  const ControlSignal u = make_bang_bang(2.0, 0.0, T, Side::Upper);
  const Trajectory tr = integrate_controlled(quadratic(), u, -1.0, 0.0, T);
  CHECK(tr.termination == Termination::ReachedEnd);
  CHECK(std::abs(tr.final_value() - 1.0) <= 1e-6);
  // Same pulse later in a longer window; y = tan(t - t_on - pi/4) crosses 0 at t_on + pi/4.
  const ThresholdEvent ev{0.0, "zero", Crossing::Upward};
  const Trajectory hit = integrate_controlled(quadratic(), u.shifted(0.5), -1.0, 0.0, 10.0, {&ev, 1});
  CHECK(hit.termination == Termination::EventHit);
  CHECK(hit.event_label == "zero");
  CHECK(std::abs(hit.final_time() - (0.5 + std::numbers::pi / 4)) <= 1e-8);
}

TEST_CASE("finite-time escape beyond the repeller is reported as blowup") {
  const Trajectory tr = integrate_autonomous(quadratic(), 1.1, 0.0, 100.0);
  CHECK(tr.termination == Termination::Blowup);
  CHECK(tr.final_value() >= 1e6);
  // Closed form: y = -coth(t - t*), escape at t* = atanh(1/1.1).
  CHECK(tr.final_time() == doctest::Approx(std::atanh(1.0 / 1.1)).epsilon(1e-5));
  const Trajectory c = integrate_autonomous(cubic(), 1.01, 0.0, 100.0);
  CHECK(c.termination == Termination::Blowup);
}

TEST_CASE("autonomous relaxation matches closed form and RK4") {
  const Trajectory tr = integrate_autonomous(quadratic(), 0.0, 0.0, 10.0);
  CHECK(std::abs(tr.final_value() + 1.0) <= 1e-6);
  for (const auto& s : tr.samples) CHECK(std::abs(s.y + std::tanh(s.t)) <= 1e-7);

  const Trajectory c = integrate_autonomous(cubic(), 0.5, 0.0, 5.0);
  const double ref = oracle::rk4_final([](double, double y) { return y * (y - 1) * (y + 2); }, 0.5, 0.0, 5.0, 20000);
  CHECK(std::abs(c.final_value() - ref) <= 1e-7);
  const Trajectory c_long = integrate_autonomous(cubic(), 0.5, 0.0, 40.0);
  CHECK(std::abs(c_long.final_value()) <= 1e-6);
}

TEST_CASE("samples are strictly increasing in time and land on control jumps") {
  const ControlSignal u = ControlSignal::from_segments({{0.3, 0.7, 1.5}, {1.1, 1.4, -2.0}});
  const Trajectory tr = integrate_controlled(quadratic(), u, -1.0, 0.0, 3.0);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t > tr.samples[i - 1].t);
  for (double jump : {0.3, 0.7, 1.1, 1.4}) {
    bool found = false;
    for (const auto& s : tr.samples) found = found || s.t == jump;
    CHECK(found);
  }
  const double ref = oracle::rk4_final(
      [&](double t, double y) { return y * y - 1 + u.value_at(t); }, -1.0, 0.0, 3.0, 300000);
  CHECK(std::abs(tr.final_value() - ref) <= 1e-6);
}

TEST_CASE("non-terminal events are all recorded in order") {
  const std::vector<ThresholdEvent> evs{{0.0, "zero_up", Crossing::Upward, false},
                                        {0.0, "zero_down", Crossing::Downward, false},
                                        {0.5, "half", Crossing::Either, false}};
  // Long enough to push y above 0 but not to 0.5; it then relaxes back down.
  const ControlSignal u = make_bang_bang(1.5, 0.0, 2.0, Side::Upper);
  const Trajectory tr = integrate_controlled(quadratic(), u, -1.0, 0.0, 10.0, evs);
  CHECK(tr.termination == Termination::ReachedEnd);
  REQUIRE(tr.hits.size() >= 2);
  for (std::size_t i = 1; i < tr.hits.size(); ++i) CHECK(tr.hits[i].t >= tr.hits[i - 1].t);
  CHECK(tr.hits.front().label == "zero_up");
  CHECK(tr.hits.back().label == "zero_down");
}

TEST_CASE("tanh drive is the analytic derivative of the ramp") {
  const ForcingProfile p = make_tanh_ramp(3.0, 1.0);
  const Drive d = Drive::from_profile(p);
  for (double t : {-2.0, -0.3, 0.0, 0.7, 4.0}) {
    const double h = 1e-5;
    CHECK(d.value(t) == doctest::Approx((p.value(t + h) - p.value(t - h)) / (2 * h)).epsilon(1e-8));
  }
  CHECK(d.value(p.end_time() + 1.0) == 0.0);
}

TEST_CASE("first_passage_time examples") {
  CHECK(std::abs(first_passage_time(quadratic(), 2.0, -1.0, 1.0) - std::numbers::pi / 2) <= 1e-10);
  try {
    first_passage_time(quadratic(), 1.0, -1.0, 1.0);
    FAIL("expected a sign-change fault");
  } catch (const SignChangeError& e) {
    CHECK(std::abs(e.location()) <= 1e-8);
  }
  const double big = first_passage_time(quadratic(), 1e6, -1.0, 1.0);
  CHECK(std::abs(big - oracle::quadratic_escape_time(1e6)) <= 1e-9 * big);
  // 2/M is only the leading term; the next is -2/(3 M^2) relative.
  CHECK(std::abs(big - 2e-6) <= 1e-6 * 2e-6);
  CHECK(std::abs(first_passage_time(cubic(), 1.0, 0.0, 1.0) - oracle::kCubicEscapeUpperM1) <= 1e-10);
  // Lower side: f - M < 0 drives the state downward.
  const double down = first_passage_time(cubic(), -3.0, 0.0, -2.0);
  CHECK(std::abs(down - oracle::passage_time([](double y) { return y * (y - 1) * (y + 2); }, -3.0, 0.0, -2.0)) <=
        1e-10);
}

TEST_CASE("property: passage time agrees with Simpson and with event-detected ODE passage") {
  oracle::Gen gen(31337);
  for (int i = 0; i < 20; ++i) {
    const oracle::RandomCubic c = oracle::random_cubic(gen);
    const ScalarField f = ScalarField::parse(c.text());
    const auto ex = oracle::grid_extrema(c, c.a, c.beta, 20000);
    const double M = -ex.min * gen.uniform(1.05, 4.0);
    const double T = first_passage_time(f, M, c.a, c.beta);
    CHECK(std::abs(T - oracle::passage_time(c, M, c.a, c.beta)) <= 1e-8 * T);

    const ThresholdEvent ev{c.beta, "beta", Crossing::Upward};
    const ControlSignal u = ControlSignal::from_segments({{0.0, 10 * T, M}});
    const Trajectory tr = integrate_controlled(f, u, c.a, 0.0, 10 * T, {&ev, 1});
    REQUIRE(tr.termination == Termination::EventHit);
    CHECK(std::abs(tr.final_time() - T) <= 1e-6 * T);
  }
}

TEST_CASE("property: event times converge under tolerance refinement") {
  oracle::Gen gen(5);
  for (int i = 0; i < 10; ++i) {
    const oracle::RandomCubic c = oracle::random_cubic(gen);
    const ScalarField f = ScalarField::parse(c.text());
    const double M = -oracle::grid_extrema(c, c.a, c.beta, 20000).min * gen.uniform(1.1, 3.0);
    const ThresholdEvent ev{c.beta, "beta", Crossing::Upward};
    const ControlSignal u = ControlSignal::from_segments({{0.0, 1e3, M}});
    IntegrationSettings coarse, fine;
    fine.rtol = coarse.rtol / 2;
    fine.atol = coarse.atol / 2;
    const double t1 = integrate_controlled(f, u, c.a, 0.0, 1e3, {&ev, 1}, coarse).final_time();
    const double t2 = integrate_controlled(f, u, c.a, 0.0, 1e3, {&ev, 1}, fine).final_time();
    CHECK(std::abs(t1 - t2) <= 10 * fine.atol);
  }
}

TEST_CASE("property: the basin is forward invariant under the autonomous flow") {
  oracle::Gen gen(17);
  struct Case {
    const ScalarField* f;
    double lo, hi;
  };
  const Case cases[] = {{&quadratic(), -6.0, 1.0}, {&cubic(), -2.0, 1.0}};
  for (const auto& c : cases) {
    const std::vector<ThresholdEvent> evs{{c.hi, "up", Crossing::Upward}, {c.lo, "down", Crossing::Downward}};
    for (int i = 0; i < 100; ++i) {
      const double y0 = gen.uniform(c.lo + 1e-3, c.hi - 1e-3);
      const Trajectory tr = integrate_autonomous(*c.f, y0, 0.0, 30.0, evs);
      CHECK(tr.termination == Termination::ReachedEnd);
      for (const auto& s : tr.samples) REQUIRE((s.y > c.lo && s.y < c.hi));
    }
  }
}

TEST_CASE("property: shifting the control shifts event times") {
  oracle::Gen gen(99);
  for (int i = 0; i < 20; ++i) {
    const double M = gen.uniform(1.1, 5.0), dt = gen.uniform(-50.0, 50.0);
    const ControlSignal u = ControlSignal::from_segments({{0.0, 0.2, 0.5 * M}, {0.4, 20.0, M}});
    const ThresholdEvent ev{1.0, "beta", Crossing::Upward};
    const double t1 = integrate_controlled(quadratic(), u, -1.0, -1.0, 30.0, {&ev, 1}).final_time();
    const double t2 = integrate_controlled(quadratic(), u.shifted(dt), -1.0, -1.0 + dt, 30.0 + dt, {&ev, 1}).final_time();
    CHECK(std::abs((t2 - t1) - dt) <= 1e-10);
  }
}

TEST_CASE("trajectory CSV export") {
  Trajectory tr;
  tr.samples = {{0.0, -1.0}, {0.1, -0.99999999999999989}};
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  CHECK(os.str() == "t,y\n0,-1\n0.10000000000000001,-0.99999999999999989\n");
}

TEST_CASE("invalid integration requests") {
  CHECK_THROWS_AS(integrate_autonomous(quadratic(), NAN, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_autonomous(quadratic(), 0.0, 1.0, 1.0), std::invalid_argument);
}
