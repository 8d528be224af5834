#pragma once

// Bracketed scalar root refinement shared by the analysis modules.

#include <algorithm>
#include <cmath>
#include <limits>

namespace tipcrit::detail {

// Plain bisection of a sign change on [lo, hi] down to floating resolution.
// Returns the visited point with the smallest |g|.
template <class G>
double bisect(const G& g, double lo, double hi) {
  double glo = g(lo);
  double best = lo, best_abs = std::abs(glo);
  if (const double ghi = g(hi); std::abs(ghi) < best_abs) {
    best = hi;
    best_abs = std::abs(ghi);
  }
  for (int it = 0; it < 200 && best_abs > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (std::abs(gm) < best_abs) {
      best = mid;
      best_abs = std::abs(gm);
    }
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return best;
}

// Newton iteration on g with derivative dg, kept inside the bracket [lo, hi]
// (g(lo), g(hi) of opposite sign); falls back to bisection whenever the
// Newton step leaves the bracket.
template <class G, class DG>
double safeguarded_newton(const G& g, const DG& dg, double lo, double hi) {
  double glo = g(lo);
  if (glo == 0.0) return lo;
  if (g(hi) == 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if ((gx < 0.0) == (glo < 0.0)) {
      lo = x;
      glo = gx;
    } else {
      hi = x;
    }
    const double d = dg(x);
    double next = (d != 0.0) ? x - gx / d : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(next));
    if (std::abs(next - x) <= tol || hi - lo <= tol) return next;
    x = next;
  }
  return x;
}

}  // namespace tipcrit::detail
