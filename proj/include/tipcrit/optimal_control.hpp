#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tipcrit/field.hpp"
#include "tipcrit/forcing.hpp"
#include "tipcrit/side.hpp"

namespace tipcrit {

// The requested side has no finite endpoint, or M does not exceed its depth.
class InfeasibleSideError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// L <= R: no finite speed can push the state out of the basin (CLI exit 3).
class InfeasibleBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Escape time T_M under the constant control sign*M:
//   Upper: integral a..beta of dy / (f + M)
//   Lower: integral alpha..a of dy / (M - f)
double escape_time(const BasinGeometry& geometry, const ScalarField& field, Side side, double M);

struct CostValue {
  double M;
  double plus;   // M * T_M on the upper side, +inf if infeasible
  double minus;  // same for the lower side
  double total;  // min(plus, minus)
  Side best_side;
};

// Throws InfeasibleSideError when both sides are infeasible (M <= mu).
CostValue cost(const BasinGeometry& geometry, const ScalarField& field, double M);

std::vector<CostValue> cost_curve(const BasinGeometry& geometry, const ScalarField& field,
                                  std::span<const double> Ms);

// "M,J_plus,J_minus,J", "inf" for infeasible sides.
void write_cost_curve_csv(std::ostream& os, std::span<const CostValue> curve);

struct CriticalRate {
  double m_c;
  Side side;
  double L;
  double bracket_lo;
  double bracket_hi;
  double residual;  // J(m_c) - L
};

// The unique M with J(M) = L, by bisection on the decreasing cost curve.
CriticalRate critical_rate(const BasinGeometry& geometry, const ScalarField& field, double L);

struct BangBangControl {
  double M;
  double width;  // T_M
  double cost;   // M * T_M
  Side side;

  ControlSignal signal(double onset = 0.0) const;
};

struct OptimalEscape {
  BangBangControl control;
  // lambda rising (or falling) linearly at slope sign*M for time T_M from t = 0.
  ForcingProfile ramp;
};

OptimalEscape optimal_bang_bang(const BasinGeometry& geometry, const ScalarField& field, double L);

// Tanh-ramp family on f = x^2 - 1: r_c = 4 / (lambda_inf (lambda_inf - 2)).
double prototype_critical_rate_smooth(double lambda_inf);

// Linear-ramp family on f = x^2 - 1: the m solving
//   2m / sqrt(m - 1) * arctan(1 / sqrt(m - 1)) = lambda_inf.
double prototype_critical_slope(double lambda_inf);

// The control does not carry the pullback state to the basin boundary.
class BoundNotApplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LowerBoundReport {
  double integral;  // integral of |u|
  double bound;     // J(ess sup |u|)
  bool satisfied;
  Side reached_side;
};

// Checks the fuel lower bound: any u steering y from a to the boundary spends
// at least J(ess sup |u|). Arrival is confirmed by simulation.
LowerBoundReport verify_lower_bound(const BasinGeometry& geometry, const ScalarField& field,
                                    const ControlSignal& u);

}  // namespace tipcrit
