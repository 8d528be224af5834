#include "tipcrit/optimal_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

#include "roots.hpp"
#include "tipcrit/integrator.hpp"

namespace tipcrit {

double escape_time(const BasinGeometry& geometry, const ScalarField& field, Side side, double M) {
  if (!geometry.has_boundary(side)) {
    throw InfeasibleSideError("side " + std::string(to_string(side)) + " has no finite basin boundary");
  }
  if (!(M > geometry.depth(side))) {
    throw InfeasibleSideError("M = " + std::to_string(M) + " does not exceed the depth " +
                              std::to_string(geometry.depth(side)) + " on side " + std::string(to_string(side)));
  }
  const double signed_M = sign(side) * M;
  return first_passage_time(field, signed_M, geometry.a, geometry.endpoint(side));
}

namespace {

double side_cost(const BasinGeometry& g, const ScalarField& field, Side side, double M) {
  if (!g.has_boundary(side) || !(M > g.depth(side))) return kInfinity;
  try {
    return M * escape_time(g, field, side, M);
  } catch (const QuadratureError&) {
    // Too close to the depth to resolve; the cost is effectively unbounded.
    return kInfinity;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CostValue cost(const BasinGeometry& geometry, const ScalarField& field, double M) {
  if (!(M > 0.0) || !std::isfinite(M)) throw std::invalid_argument("cost requires a finite M > 0");
  if (!(M > geometry.mu)) {
    throw InfeasibleSideError("M = " + fmt(M) + " does not exceed mu = " + fmt(geometry.mu) +
                              "; no side is escapable");
  }
  CostValue c{M, side_cost(geometry, field, Side::Upper, M), side_cost(geometry, field, Side::Lower, M), 0.0,
              Side::Upper};
  c.best_side = c.plus <= c.minus ? Side::Upper : Side::Lower;
  c.total = std::min(c.plus, c.minus);
  return c;
}

std::vector<CostValue> cost_curve(const BasinGeometry& geometry, const ScalarField& field,
                                  std::span<const double> Ms) {
  std::vector<CostValue> out;
  out.reserve(Ms.size());
  for (double M : Ms) out.push_back(cost(geometry, field, M));
  return out;
}

void write_cost_curve_csv(std::ostream& os, std::span<const CostValue> curve) {
  const auto cell = [](double v) { return std::isinf(v) ? std::string("inf") : fmt(v); };
  os << "M,J_plus,J_minus,J\n";
  for (const auto& c : curve) os << fmt(c.M) << ',' << cell(c.plus) << ',' << cell(c.minus) << ',' << cell(c.total) << '\n';
}

CriticalRate critical_rate(const BasinGeometry& geometry, const ScalarField& field, double L) {
  if (!std::isfinite(L)) throw std::invalid_argument("arclength budget must be finite");
  if (!(L > geometry.R)) {
    throw InfeasibleBudgetError("arclength below basin radius: L = " + fmt(L) + " <= R = " + fmt(geometry.R) +
                                "; no finite speed induces tipping");
  }
  const auto J = [&](double M) { return cost(geometry, field, M).total; };
  const double mu = geometry.mu;

  // J -> inf as M -> mu+, so some mu (1 + 2^-k) lies above the budget.
  double lo = mu * 1.5, J_lo = J(lo);
  for (int k = 2; J_lo <= L; ++k) {
    if (k > 52) throw std::runtime_error("could not bracket the critical rate from below");
    lo = mu * (1.0 + std::ldexp(1.0, -k));
    J_lo = J(lo);
  }
  // J -> R < L as M -> inf.
  double hi = 2.0 * lo, J_hi = J(hi);
  while (J_hi >= L) {
    lo = hi;
    J_lo = J_hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::runtime_error("could not bracket the critical rate from above");
    J_hi = J(hi);
  }

  double best = std::abs(J_lo - L) < std::abs(J_hi - L) ? lo : hi;
  double best_res = best == lo ? J_lo - L : J_hi - L;
  for (int it = 0; it < 400; ++it) {
    const bool width_ok = hi - lo <= 1e-10 * std::max(1.0, best);
    if (width_ok && std::abs(best_res) <= 1e-9 * L) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double res = J(mid) - L;
    if (std::abs(res) < std::abs(best_res)) {
      best = mid;
      best_res = res;
    }
    if (res > 0.0) lo = mid; else hi = mid;
  }
  const CostValue at = cost(geometry, field, best);
  return {best, at.best_side, L, lo, hi, best_res};
}

ControlSignal BangBangControl::signal(double onset) const { return make_bang_bang(M, onset, width, side); }

OptimalEscape optimal_bang_bang(const BasinGeometry& geometry, const ScalarField& field, double L) {
  const CriticalRate cr = critical_rate(geometry, field, L);
  const double T = escape_time(geometry, field, cr.side, cr.m_c);
  BangBangControl b{cr.m_c, T, cr.m_c * T, cr.side};
  auto ramp = PiecewiseLinear::from_knots({{0.0, 0.0}, {T, sign(cr.side) * cr.m_c * T}});
  return {b, ForcingProfile(std::move(ramp))};
}

double prototype_critical_rate_smooth(double lambda_inf) {
  if (!(lambda_inf > 2.0) || !std::isfinite(lambda_inf)) {
    throw std::invalid_argument("the tanh prototype tips only for lambda_inf > 2");
  }
  return 4.0 / (lambda_inf * (lambda_inf - 2.0));
}

double prototype_critical_slope(double lambda_inf) {
  if (!(lambda_inf > 2.0) || !std::isfinite(lambda_inf)) {
    throw std::invalid_argument("the linear-ramp prototype tips only for lambda_inf > 2");
  }
  const auto g = [lambda_inf](double m) {
    const double s = std::sqrt(m - 1.0);
    return 2.0 * m / s * std::atan(1.0 / s) - lambda_inf;
  };
  double lo = 2.0, hi = 2.0;
  while (g(lo) <= 0.0) lo = 1.0 + 0.5 * (lo - 1.0);
  while (g(hi) >= 0.0) hi *= 2.0;
  return detail::bisect(g, lo, hi);
}

LowerBoundReport verify_lower_bound(const BasinGeometry& geometry, const ScalarField& field,
                                    const ControlSignal& u) {
  if (u.empty()) throw BoundNotApplicableError("the zero control never leaves the attractor");
  const auto segs = u.segments();
  std::vector<ThresholdEvent> events;
  if (geometry.has_boundary(Side::Upper)) events.push_back({geometry.beta, "upper", Crossing::Upward});
  if (geometry.has_boundary(Side::Lower)) events.push_back({geometry.alpha, "lower", Crossing::Downward});
  const Trajectory tr =
      integrate_controlled(field, u, geometry.a, segs.front().t_start, segs.back().t_end, events);

  std::optional<Side> reached;
  if (tr.termination == Termination::EventHit) {
    reached = tr.event_label == "upper" ? Side::Upper : Side::Lower;
  } else if (tr.termination == Termination::ReachedEnd) {
    const double tol = 1e-6 * geometry.R;
    const double y = tr.final_value();
    if (geometry.has_boundary(Side::Upper) && std::abs(y - geometry.beta) <= tol) reached = Side::Upper;
    if (geometry.has_boundary(Side::Lower) && std::abs(y - geometry.alpha) <= tol) reached = Side::Lower;
  }
  if (!reached) {
    throw BoundNotApplicableError("the control does not carry the state from a to the basin boundary (final y = " +
                                  fmt(tr.final_value()) + ")");
  }
  const double integral = u.abs_integral();
  const double bound = cost(geometry, field, u.ess_sup()).total;
  return {integral, bound, integral >= bound - 1e-6, *reached};
}

}  // namespace tipcrit
