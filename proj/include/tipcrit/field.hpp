#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tipcrit/expr.hpp"
#include "tipcrit/side.hpp"

namespace tipcrit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// |df| at an equilibrium must exceed this for the point to count as hyperbolic.
inline constexpr double kHyperbolicityFloor = 1e-8;

struct Interval {
  double lo;
  double hi;

  double width() const noexcept { return hi - lo; }
};

// The autonomous dynamics y' = f(y) together with exact symbolic derivatives.
class ScalarField {
 public:
  explicit ScalarField(FieldExpr f);

  static ScalarField parse(std::string_view text);

  double operator()(double y) const { return f_(y); }
  double slope(double y) const { return df_(y); }
  double curvature(double y) const { return d2f_(y); }

  const FieldExpr& expr() const noexcept { return f_; }
  const FieldExpr& derivative() const noexcept { return df_; }
  std::string to_string() const { return f_.to_string(); }

 private:
  FieldExpr f_;
  FieldExpr df_;
  FieldExpr d2f_;
};

enum class Stability { Attracting, Repelling };

struct EquilibriumPoint {
  double location;
  Stability stability;
  double derivative_value;
};

// Base for every failure of the field analysis layer (CLI exit code 2).
class FieldAnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonHyperbolicError : public FieldAnalysisError {
 public:
  NonHyperbolicError(double location, double derivative);
  double location() const noexcept { return location_; }

 private:
  double location_;
};

class NoEquilibriaError : public FieldAnalysisError {
 public:
  using FieldAnalysisError::FieldAnalysisError;
};

class NotAttractingError : public FieldAnalysisError {
 public:
  using FieldAnalysisError::FieldAnalysisError;
};

class EmptyBasinBoundaryError : public FieldAnalysisError {
 public:
  using FieldAnalysisError::FieldAnalysisError;
};

// Equilibria of f on [lo, hi], ordered by location. Every sign change of f on
// a uniform grid is refined by bisection; tangential zeros and roots with
// |df| <= kHyperbolicityFloor raise NonHyperbolicError.
std::vector<EquilibriumPoint> find_equilibria(const ScalarField& field, Interval interval,
                                              std::size_t grid_n = 20001);

struct Extrema {
  double min_value;
  double argmin;
  double max_value;
  double argmax;
};

// Global extrema of f on the closed interval: dense grid, then Newton
// refinement of every bracketed root of df.
Extrema extrema_on(const ScalarField& field, Interval interval, std::size_t grid_n = 10001);

// Basin of the attractor a: D = (alpha, beta), with the depth constants
//   mu_plus  = -min f on [a, beta]   (+inf when beta is infinite)
//   mu_minus =  max f on [alpha, a]  (+inf when alpha is infinite)
//   mu       = min(mu_minus, mu_plus)
// and the radius R = min(a - alpha, beta - a).
struct BasinGeometry {
  double a;
  double alpha;
  double beta;
  double R;
  double mu_minus;
  double mu_plus;
  double mu;

  bool has_boundary(Side side) const noexcept { return std::isfinite(endpoint(side)); }
  double endpoint(Side side) const noexcept { return side == Side::Upper ? beta : alpha; }
  double depth(Side side) const noexcept { return side == Side::Upper ? mu_plus : mu_minus; }
  // Path length from a to the endpoint on that side.
  double path_length(Side side) const noexcept {
    return side == Side::Upper ? beta - a : a - alpha;
  }
};

inline constexpr std::size_t kExtremumGrid = 10001;

BasinGeometry analyze_basin(const ScalarField& field, double attractor, Interval search_interval,
                            std::size_t grid_n = 20001);

// Convenience for the CLI default: search [a - 100, a + 100].
BasinGeometry analyze_basin(const ScalarField& field, double attractor);

}  // namespace tipcrit
