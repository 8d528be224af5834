#include "tipcrit/field.hpp"

#include <algorithm>
#include <sstream>

#include "roots.hpp"

namespace tipcrit {

namespace {

constexpr double kRootResidual = 1e-10;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::vector<double> uniform_grid(Interval interval, std::size_t n) {
  std::vector<double> xs(n);
  const double h = interval.width() / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) xs[i] = interval.lo + h * static_cast<double>(i);
  xs.back() = interval.hi;
  return xs;
}

// Evaluates f but reports evaluation faults as analysis errors.
double checked(const ScalarField& field, double x) {
  try {
    return field(x);
  } catch (const EvalError& e) {
    throw FieldAnalysisError("cannot evaluate field at x = " + format_number(x) + ": " + e.what());
  }
}

double checked_slope(const ScalarField& field, double x) {
  try {
    return field.slope(x);
  } catch (const EvalError& e) {
    throw FieldAnalysisError("cannot evaluate derivative at x = " + format_number(x) + ": " + e.what());
  }
}

}  // namespace

ScalarField::ScalarField(FieldExpr f)
    : f_(std::move(f)), df_(differentiate(f_)), d2f_(differentiate(df_)) {}

ScalarField ScalarField::parse(std::string_view text) { return ScalarField(parse_field(text)); }

NonHyperbolicError::NonHyperbolicError(double location, double derivative)
    : FieldAnalysisError("non-hyperbolic equilibrium at x = " + format_number(location) +
                         " (df = " + format_number(derivative) + ")"),
      location_(location) {}

std::vector<EquilibriumPoint> find_equilibria(const ScalarField& field, Interval interval,
                                              std::size_t grid_n) {
  if (!(interval.lo < interval.hi)) throw std::invalid_argument("find_equilibria: empty interval");
  if (grid_n < 2) throw std::invalid_argument("find_equilibria: grid_n must be >= 2");

  const std::vector<double> xs = uniform_grid(interval, grid_n);
  std::vector<double> fs(grid_n), dfs(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    fs[i] = checked(field, xs[i]);
    dfs[i] = checked_slope(field, xs[i]);
  }

  std::vector<double> roots;
  const auto f = [&](double x) { return checked(field, x); };
  for (std::size_t i = 0; i < grid_n; ++i) {
    if (fs[i] == 0.0) {
      roots.push_back(xs[i]);
      continue;
    }
    if (i + 1 < grid_n && fs[i + 1] != 0.0 && (fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
      const double r = detail::bisect(f, xs[i], xs[i + 1]);
      const double fr = std::abs(f(r));
      const double local = std::max({1.0, std::abs(fs[i]), std::abs(fs[i + 1])});
      if (fr > kRootResidual * local || fr > std::min(std::abs(fs[i]), std::abs(fs[i + 1]))) {
        throw FieldAnalysisError("field changes sign without a root near x = " + format_number(r) +
                                 " (discontinuity?)");
      }
      roots.push_back(r);
    }
  }

  // Tangential zeros (f touches 0 without changing sign) only show up as
  // near-zero values of f at critical points.
  const auto df = [&](double x) { return checked_slope(field, x); };
  const auto d2f = [&](double x) { return field.curvature(x); };
  for (std::size_t i = 0; i + 1 < grid_n; ++i) {
    if (dfs[i] == 0.0 || (dfs[i] < 0.0) == (dfs[i + 1] < 0.0)) continue;
    if ((fs[i] < 0.0) != (fs[i + 1] < 0.0)) continue;
    const double c = detail::safeguarded_newton(df, d2f, xs[i], xs[i + 1]);
    const double local = std::max({1.0, std::abs(fs[i]), std::abs(fs[i + 1])});
    if (std::abs(f(c)) <= kRootResidual * local) throw NonHyperbolicError(c, df(c));
  }

  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double p, double q) {
                            return std::abs(p - q) <= 1e-12 * std::max(1.0, std::abs(p));
                          }),
              roots.end());

  if (roots.empty()) {
    throw NoEquilibriaError("no equilibria found in [" + format_number(interval.lo) + ", " +
                            format_number(interval.hi) + "]");
  }

  std::vector<EquilibriumPoint> out;
  out.reserve(roots.size());
  for (double r : roots) {
    const double d = df(r);
    if (std::abs(d) <= kHyperbolicityFloor) throw NonHyperbolicError(r, d);
    out.push_back({r, d < 0.0 ? Stability::Attracting : Stability::Repelling, d});
  }
  return out;
}

Extrema extrema_on(const ScalarField& field, Interval interval, std::size_t grid_n) {
  if (interval.lo > interval.hi) throw std::invalid_argument("extrema_on: lo > hi");
  Extrema ex{kInfinity, interval.lo, -kInfinity, interval.lo};
  auto visit = [&](double x, double v) {
    if (v < ex.min_value) {
      ex.min_value = v;
      ex.argmin = x;
    }
    if (v > ex.max_value) {
      ex.max_value = v;
      ex.argmax = x;
    }
  };
  if (interval.lo == interval.hi) {
    visit(interval.lo, checked(field, interval.lo));
    return ex;
  }
  grid_n = std::max<std::size_t>(grid_n, 2);
  const std::vector<double> xs = uniform_grid(interval, grid_n);
  std::vector<double> dfs(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    visit(xs[i], checked(field, xs[i]));
    dfs[i] = checked_slope(field, xs[i]);
  }
  const auto df = [&](double x) { return checked_slope(field, x); };
  const auto d2f = [&](double x) { return field.curvature(x); };
  for (std::size_t i = 0; i + 1 < grid_n; ++i) {
    if (dfs[i] == 0.0 || dfs[i + 1] == 0.0 || (dfs[i] < 0.0) == (dfs[i + 1] < 0.0)) continue;
    const double c = detail::safeguarded_newton(df, d2f, xs[i], xs[i + 1]);
    visit(c, checked(field, c));
  }
  return ex;
}

BasinGeometry analyze_basin(const ScalarField& field, double attractor, Interval search,
                            std::size_t grid_n) {
  if (!(search.lo < attractor && attractor < search.hi)) {
    throw std::invalid_argument("analyze_basin: attractor must lie inside the search interval");
  }
  const std::vector<EquilibriumPoint> eqs = find_equilibria(field, search, grid_n);

  // Snap the user's attractor onto the nearest refined equilibrium.
  auto nearest = std::min_element(eqs.begin(), eqs.end(), [&](const auto& p, const auto& q) {
    return std::abs(p.location - attractor) < std::abs(q.location - attractor);
  });
  if (std::abs(nearest->location - attractor) > 1e-6 * std::max(1.0, std::abs(attractor))) {
    throw NotAttractingError("x = " + format_number(attractor) + " is not an equilibrium");
  }
  if (nearest->stability != Stability::Attracting) {
    throw NotAttractingError("equilibrium at x = " + format_number(nearest->location) +
                             " is not attracting (df = " + format_number(nearest->derivative_value) +
                             ")");
  }
  double a = nearest->location;
  if (std::abs(checked(field, attractor)) <= std::abs(checked(field, a))) a = attractor;

  BasinGeometry g{};
  g.a = a;
  g.alpha = nearest == eqs.begin() ? -kInfinity : std::prev(nearest)->location;
  g.beta = std::next(nearest) == eqs.end() ? kInfinity : std::next(nearest)->location;
  if (!std::isfinite(g.alpha) && !std::isfinite(g.beta)) {
    throw EmptyBasinBoundaryError("basin of x = " + format_number(a) +
                                  " has no finite boundary point in the search interval");
  }
  g.R = std::min(g.a - g.alpha, g.beta - g.a);
  g.mu_plus = std::isfinite(g.beta) ? -extrema_on(field, {g.a, g.beta}, kExtremumGrid).min_value
                                    : kInfinity;
  g.mu_minus = std::isfinite(g.alpha) ? extrema_on(field, {g.alpha, g.a}, kExtremumGrid).max_value
                                      : kInfinity;
  g.mu = std::min(g.mu_minus, g.mu_plus);
  if (!(g.mu > 0.0)) {
    throw FieldAnalysisError("basin depth constant is not positive (mu = " + format_number(g.mu) + ")");
  }
  return g;
}

BasinGeometry analyze_basin(const ScalarField& field, double attractor) {
  return analyze_basin(field, attractor, {attractor - 100.0, attractor + 100.0});
}

}  // namespace tipcrit
