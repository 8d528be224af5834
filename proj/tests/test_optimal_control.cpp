#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "tipcrit/integrator.hpp"
#include "tipcrit/optimal_control.hpp"

using namespace tipcrit;

namespace {

struct Setup {
  ScalarField f;
  BasinGeometry g;
};

const Setup& quadratic() {
  static const Setup s{ScalarField::parse("x^2-1"), analyze_basin(ScalarField::parse("x^2-1"), -1.0)};
  return s;
}

const Setup& cubic() {
  static const Setup s{ScalarField::parse("x*(x-1)*(x+2)"), analyze_basin(ScalarField::parse("x*(x-1)*(x+2)"), 0.0)};
  return s;
}

}  // namespace

TEST_CASE("escape_time examples") {
  const auto& q = quadratic();
  CHECK(std::abs(escape_time(q.g, q.f, Side::Upper, 2.0) - std::numbers::pi / 2) <= 1e-10);
  CHECK_THROWS_AS(escape_time(q.g, q.f, Side::Lower, 2.0), InfeasibleSideError);
  CHECK_THROWS_AS(escape_time(q.g, q.f, Side::Upper, 1.0), InfeasibleSideError);
  const auto& c = cubic();
  CHECK(std::abs(escape_time(c.g, c.f, Side::Upper, 1.0) - oracle::kCubicEscapeUpperM1) <= 1e-10);
  CHECK_THROWS_AS(escape_time(c.g, c.f, Side::Lower, 2.0), InfeasibleSideError);
  const double lower = escape_time(c.g, c.f, Side::Lower, 3.0);
  CHECK(std::abs(lower - oracle::passage_time([](double y) { return -y * (y - 1) * (y + 2); }, 3.0, -2.0, 0.0)) <=
        1e-10);
}

TEST_CASE("cost examples on the quadratic field") {
  const auto& q = quadratic();
  const CostValue c2 = cost(q.g, q.f, 2.0);
  CHECK(std::abs(c2.plus - std::numbers::pi) <= 1e-10);
  CHECK(std::isinf(c2.minus));
  CHECK(c2.total == c2.plus);
  CHECK(c2.best_side == Side::Upper);
  CHECK(std::abs(cost(q.g, q.f, 1e6).total - 2.0) <= 1e-3);
  CHECK(std::abs(cost(q.g, q.f, 1e6).total - oracle::quadratic_cost(1e6)) <= 1e-10);
  CHECK(cost(q.g, q.f, 1.0001).total > 100.0);
  CHECK(std::abs(cost(q.g, q.f, 1.0001).total - oracle::quadratic_cost(1.0001)) <= 1e-8);
  CHECK_THROWS_AS(cost(q.g, q.f, 0.5), InfeasibleSideError);
}

TEST_CASE("property: J is strictly decreasing with the right limits") {
  for (const Setup* s : {&quadratic(), &cubic()}) {
    const double mu = s->g.mu;
    double prev = kInfinity;
    for (int i = 0; i <= 200; ++i) {
      const double M = mu * (1 + 1e-3) * std::pow(1e3 / (mu * (1 + 1e-3)), i / 200.0);
      const double J = cost(s->g, s->f, M).total;
      REQUIRE(J < prev);
      prev = J;
    }
    for (Side side : {Side::Upper, Side::Lower}) {
      if (!s->g.has_boundary(side)) continue;
      const CostValue far = cost(s->g, s->f, 1e6);
      const double J_far = side == Side::Upper ? far.plus : far.minus;
      CHECK(std::abs(J_far - s->g.path_length(side)) <= 1e-3);
      const double near_M = s->g.depth(side) * (1 + 1e-6);
      const CostValue near = cost(s->g, s->f, near_M);
      const double J_near = side == Side::Upper ? near.plus : near.minus;
      REQUIRE(std::isfinite(J_near));
      CHECK(J_near > 1e3);
      if (s == &quadratic()) CHECK(std::abs(J_near - oracle::quadratic_cost(near_M)) <= 1e-8 * J_near);
    }
  }
}

TEST_CASE("cost curve CSV marks infeasible sides") {
  const auto& q = quadratic();
  const double Ms[] = {2.0, 4.0};
  std::ostringstream os;
  write_cost_curve_csv(os, cost_curve(q.g, q.f, Ms));
  const std::string s = os.str();
  CHECK(s.rfind("M,J_plus,J_minus,J\n2,3.14159265358979", 0) == 0);
  CHECK(s.find(",inf,") != std::string::npos);
}

TEST_CASE("critical_rate examples") {
  const auto& q = quadratic();
  const CriticalRate pi = critical_rate(q.g, q.f, std::numbers::pi);
  CHECK(std::abs(pi.m_c - 2.0) <= 1e-8);
  CHECK(pi.side == Side::Upper);
  CHECK(pi.bracket_lo <= pi.m_c);
  CHECK(pi.bracket_hi >= pi.m_c);
  CHECK(pi.bracket_hi - pi.bracket_lo <= 1e-8 * std::max(1.0, pi.m_c));
  for (const auto& [L, m] : oracle::kQuadraticCritical) {
    CHECK(std::abs(critical_rate(q.g, q.f, L).m_c - m) <= 1e-8 * m);
  }
  CHECK_THROWS_AS(critical_rate(q.g, q.f, 1.5), InfeasibleBudgetError);
  CHECK_THROWS_AS(critical_rate(q.g, q.f, 2.0), InfeasibleBudgetError);
}

TEST_CASE("critical_rate on the two-sided cubic basin") {
  const auto& c = cubic();
  for (const auto& [L, m] : oracle::kCubicCritical) {
    const CriticalRate cr = critical_rate(c.g, c.f, L);
    CHECK(std::abs(cr.m_c - m) <= 1e-8 * m);
    CHECK(cr.side == Side::Upper);
    CHECK(cr.m_c > c.g.mu);
  }
}

TEST_CASE("property: J(m_c(L)) = L for random budgets") {
  oracle::Gen gen(404);
  for (const Setup* s : {&quadratic(), &cubic()}) {
    for (int i = 0; i < 50; ++i) {
      const double L = s->g.R * gen.log_uniform(1.0 + 1e-3, 100.0);
      const CriticalRate cr = critical_rate(s->g, s->f, L);
      CHECK(std::abs(cost(s->g, s->f, cr.m_c).total - L) <= 1e-8 * L);
    }
  }
}

TEST_CASE("property: m_c decreases strictly and continuously in L") {
  for (const Setup* s : {&quadratic(), &cubic()}) {
    double prev_m = kInfinity, prev_drop = 0.0;
    const double ratio = std::pow(50.0 / 1.05, 1.0 / 99);
    for (int i = 0; i < 100; ++i) {
      const double L = 1.05 * s->g.R * std::pow(ratio, i);
      const double m = critical_rate(s->g, s->f, L).m_c;
      REQUIRE(m < prev_m);
      if (i > 1) {
        const double drop = std::log(prev_m / m);
        // A jump would show up as one step dropping far more than its neighbour.
        CHECK(drop < 10 * prev_drop);
      }
      if (i > 0) prev_drop = std::log(prev_m / m);
      prev_m = m;
    }
  }
}

TEST_CASE("prototype closed forms") {
  CHECK(prototype_critical_rate_smooth(3.0) == doctest::Approx(4.0 / 3.0));
  CHECK(prototype_critical_rate_smooth(4.0) == doctest::Approx(0.5));
  double prev = kInfinity;
  for (double lam = 2.1; lam < 1e4; lam *= 1.7) {
    const double r = prototype_critical_rate_smooth(lam);
    CHECK(r > 0.0);
    CHECK(r < prev);
    prev = r;
  }
  CHECK_THROWS(prototype_critical_rate_smooth(2.0));
  CHECK(std::abs(prototype_critical_slope(std::numbers::pi) - 2.0) <= 1e-12);
  CHECK(std::abs(prototype_critical_slope(3.0) - 2.162032263403312) <= 1e-10);
  CHECK(prototype_critical_slope(10.0) < prototype_critical_slope(5.0));
  CHECK_THROWS(prototype_critical_slope(1.5));
}

TEST_CASE("property: general critical_rate agrees with the implicit-equation solve") {
  const auto& q = quadratic();
  oracle::Gen gen(8);
  for (int i = 0; i < 20; ++i) {
    const double lam = 2.0 + gen.uniform(0.05, 48.0);
    const double general = critical_rate(q.g, q.f, lam).m_c;
    CHECK(std::abs(general - prototype_critical_slope(lam)) <= 1e-6);
    CHECK(std::abs(general - oracle::quadratic_critical_slope(lam)) <= 1e-6);
  }
}

TEST_CASE("optimal_bang_bang") {
  const auto& q = quadratic();
  const OptimalEscape pi = optimal_bang_bang(q.g, q.f, std::numbers::pi);
  CHECK(std::abs(pi.control.M - 2.0) <= 1e-8);
  CHECK(std::abs(pi.control.width - std::numbers::pi / 2) <= 1e-8);
  CHECK(std::abs(pi.control.cost - std::numbers::pi) <= 1e-8);
  CHECK(pi.ramp.value(pi.control.width) == doctest::Approx(std::numbers::pi).epsilon(1e-8));
  const ControlSignal d = derivative_signal(pi.ramp);
  REQUIRE(d.segments().size() == 1);
  CHECK(d.segments()[0].value == doctest::Approx(pi.control.M).epsilon(1e-12));

  const OptimalEscape four = optimal_bang_bang(q.g, q.f, 4.0);
  CHECK(four.control.M < critical_rate(q.g, q.f, 3.0).m_c);
  CHECK(std::abs(four.control.cost - 4.0) <= 1e-8);
  CHECK(std::abs(four.control.M - oracle::quadratic_critical_slope(4.0)) <= 1e-8);

  const auto& c = cubic();
  const OptimalEscape wide = optimal_bang_bang(c.g, c.f, 50.0);
  CHECK(wide.control.side == Side::Upper);
  const CostValue at = cost(c.g, c.f, wide.control.M);
  CHECK(at.plus < at.minus);
}

TEST_CASE("lower bound: equality for the optimal pulse and for any critical pulse") {
  const auto& q = quadratic();
  const OptimalEscape pi = optimal_bang_bang(q.g, q.f, std::numbers::pi);
  const LowerBoundReport r = verify_lower_bound(q.g, q.f, pi.control.signal());
  CHECK(r.satisfied);
  CHECK(r.reached_side == Side::Upper);
  CHECK(std::abs(r.integral - std::numbers::pi) <= 1e-8);
  CHECK(std::abs(r.integral - r.bound) <= 1e-8);

  const double T3 = escape_time(q.g, q.f, Side::Upper, 3.0);
  const LowerBoundReport r3 = verify_lower_bound(q.g, q.f, make_bang_bang(3.0, 0.0, T3, Side::Upper));
  CHECK(r3.integral < std::numbers::pi);
  CHECK(std::abs(r3.integral - r3.bound) <= 1e-8);
}

TEST_CASE("lower bound: two separated pulses spend strictly more") {
  const auto& q = quadratic();
  const double w1 = 0.5, gap = 0.5;
  // Second width found by bisection so the state arrives exactly at beta.
  const auto final_y = [&](double w2) {
    const ControlSignal u = ControlSignal::from_segments({{0, w1, 2.0}, {w1 + gap, w1 + gap + w2, 2.0}});
    return integrate_controlled(q.f, u, -1.0, 0.0, w1 + gap + w2).final_value();
  };
  double lo = 0.1, hi = 3.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (final_y(mid) < 1.0 ? lo : hi) = mid;
  }
  const ControlSignal u = ControlSignal::from_segments({{0, w1, 2.0}, {w1 + gap, w1 + gap + hi, 2.0}});
  const LowerBoundReport r = verify_lower_bound(q.g, q.f, u);
  CHECK(r.satisfied);
  CHECK(std::abs(r.bound - std::numbers::pi) <= 1e-8);
  CHECK(r.integral - r.bound >= 1e-3);
}

TEST_CASE("lower bound is not applicable without arrival") {
  const auto& q = quadratic();
  CHECK_THROWS_AS(verify_lower_bound(q.g, q.f, make_bang_bang(2.0, 0.0, 1.0, Side::Upper)), BoundNotApplicableError);
  CHECK_THROWS_AS(verify_lower_bound(q.g, q.f, ControlSignal{}), BoundNotApplicableError);
}
