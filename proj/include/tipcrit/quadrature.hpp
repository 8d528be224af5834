#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tipcrit {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The integrand is too peaked to resolve within the refinement budget.
class NearSingularityError : public QuadratureError {
 public:
  using QuadratureError::QuadratureError;
};

struct QuadratureSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_depth = 60;
  std::size_t max_intervals = 20000;
};

struct QuadratureResult {
  double value;
  double error;
  std::size_t intervals;
  bool roundoff_limited = false;  // stopped because splitting no longer reduced the error
};

namespace detail {

struct KronrodPanel {
  double a, b;
  double value;
  double error;
  int depth;

  bool operator<(const KronrodPanel& o) const noexcept { return error < o.error; }
};

// 7-point Gauss / 15-point Kronrod pair with the QUADPACK error heuristic.
template <class F>
KronrodPanel gauss_kronrod_15(const F& f, double a, double b, int depth) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = fc * wg[3];
  double resk = fc * wgk[7];
  double resabs = std::abs(resk);
  double fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    fv1[j] = f(center - dx);
    fv2[j] = f(center + dx);
    const double s = fv1[j] + fv2[j];
    resk += wgk[j] * s;
    resabs += wgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
    if (j % 2 == 1) resg += wg[j / 2] * s;
  }
  const double reskh = 0.5 * resk;
  double resasc = wgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) resasc += wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  const double h = std::abs(half);
  resk *= half;
  resabs *= h;
  resasc *= h;
  double err = std::abs((resk - resg * half));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double noise = 50.0 * eps * resabs;
  // A Kronrod-Gauss gap already at roundoff level is noise; inflating it
  // would keep splitting flat panels forever.
  if (resasc != 0.0 && err > noise) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(noise, err);
  return {a, b, resk, err, depth};
}

}  // namespace detail

// Globally adaptive interval halving: the panel with the largest error
// estimate is split until the summed estimate meets
// min(abs_tol, rel_tol*|I|) (floored at roundoff). Stops early, flagged,
// once repeated splits stop reducing the error. A panel that needs
// splitting past max_depth raises NearSingularityError.
template <class F>
QuadratureResult integrate_adaptive(const F& f, double a, double b, const QuadratureSettings& s = {}) {
  std::vector<detail::KronrodPanel> panels{detail::gauss_kronrod_15(f, a, b, 0)};
  double total = panels.front().value;
  double error = panels.front().error;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  auto target = [&] {
    return std::max(std::min(s.abs_tol, s.rel_tol * std::abs(total)), 64.0 * eps * std::abs(total));
  };
  int stalled_splits = 0;
  bool roundoff = false;
  for (std::size_t iter = 1;; ++iter) {
    // The running sums drift under repeated updates (the first error
    // estimates can be many orders above the target), so confirm with a clean
    // re-sum and also re-sum every so often.
    if (error <= target() || iter % 32 == 0) {
      total = error = 0.0;
      for (const auto& p : panels) {
        total += p.value;
        error += p.error;
      }
      if (error <= target()) break;
    }
    std::pop_heap(panels.begin(), panels.end());
    const detail::KronrodPanel worst = panels.back();
    if (worst.depth >= s.max_depth || panels.size() >= s.max_intervals) {
      throw NearSingularityError("adaptive quadrature exhausted its refinement budget near x = " +
                                 std::to_string(0.5 * (worst.a + worst.b)));
    }
    panels.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    const detail::KronrodPanel left = detail::gauss_kronrod_15(f, worst.a, mid, worst.depth + 1);
    const detail::KronrodPanel right = detail::gauss_kronrod_15(f, mid, worst.b, worst.depth + 1);
    for (const auto& half : {left, right}) {
      panels.push_back(half);
      std::push_heap(panels.begin(), panels.end());
      total += half.value;
      error += half.error;
    }
    total -= worst.value;
    error -= worst.error;
    // Same value, no smaller error: the integrand is noisy at this scale.
    const double v12 = left.value + right.value;
    if (std::abs(v12 - worst.value) <= 1e-5 * std::abs(v12) && left.error + right.error >= 0.99 * worst.error) {
      if (++stalled_splits >= 10) {
        roundoff = true;
        break;
      }
    }
  }
  if (roundoff) {
    total = error = 0.0;
    for (const auto& p : panels) {
      total += p.value;
      error += p.error;
    }
  }
  return {total, error, panels.size(), roundoff};
}

}  // namespace tipcrit
