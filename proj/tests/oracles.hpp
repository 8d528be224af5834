#pragma once

// Reference computations that share no code with the library: closed forms,
// brute-force grids, fixed-step RK4 and composite Simpson.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

namespace oracle {

using Fn = std::function<double(double)>;

// x^2 - 1 under constant push M > 1 from -1 to 1:
// antiderivative (1/sqrt(M-1)) atan(y / sqrt(M-1)).
inline double quadratic_escape_time(double M) {
  const double s = std::sqrt(M - 1.0);
  return 2.0 / s * std::atan(1.0 / s);
}

inline double quadratic_cost(double M) { return M * quadratic_escape_time(M); }

// Bisection on the linear-ramp implicit equation, solved for m.
inline double quadratic_critical_slope(double lambda_inf) {
  double lo = 1.0 + 1e-15, hi = 1e12;
  for (int i = 0; i < 400; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (quadratic_cost(mid) > lambda_inf) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double simpson(const Fn& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Escape time by Simpson on a substitution-free grid; fine for integrands
// without near-singular peaks.
inline double passage_time(const Fn& f, double M, double from, double to, int n = 200000) {
  return std::abs(simpson([&](double y) { return 1.0 / (f(y) + M); }, from, to, n));
}

inline double rk4_final(const std::function<double(double, double)>& rhs, double y, double t0, double t1, int n) {
  const double h = (t1 - t0) / n;
  double t = t0;
  for (int i = 0; i < n; ++i) {
    const double k1 = rhs(t, y);
    const double k2 = rhs(t + h / 2, y + h / 2 * k1);
    const double k3 = rhs(t + h / 2, y + h / 2 * k2);
    const double k4 = rhs(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return y;
}

// First time the fixed-step solution reaches `level` from below, with linear
// interpolation inside the crossing step. Returns NaN if it never does.
inline double rk4_first_hit(const std::function<double(double, double)>& rhs, double y, double t0, double t1,
                            double level, int n) {
  const double h = (t1 - t0) / n;
  double t = t0;
  for (int i = 0; i < n; ++i) {
    const double k1 = rhs(t, y);
    const double k2 = rhs(t + h / 2, y + h / 2 * k1);
    const double k3 = rhs(t + h / 2, y + h / 2 * k2);
    const double k4 = rhs(t + h, y + h * k3);
    const double yn = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (y < level && yn >= level) return t + h * (level - y) / (yn - y);
    y = yn;
    t += h;
  }
  return std::nan("");
}

struct GridExtrema {
  double min, argmin, max, argmax;
};

// Dense grid followed by golden-section polishing around the best node.
inline GridExtrema grid_extrema(const Fn& f, double a, double b, int n = 200000) {
  GridExtrema e{INFINITY, a, -INFINITY, a};
  const double h = (b - a) / n;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    const double v = f(x);
    if (v < e.min) e = {v, x, e.max, e.argmax};
    if (v > e.max) e = {e.min, e.argmin, v, x};
  }
  auto golden = [&](double c, double sgn) {
    double lo = std::max(a, c - h), hi = std::min(b, c + h);
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 200; ++i) {
      const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      if (sgn * f(x1) < sgn * f(x2)) hi = x2; else lo = x1;
    }
    return 0.5 * (lo + hi);
  };
  e.argmin = golden(e.argmin, 1.0);
  e.min = std::min(e.min, f(e.argmin));
  e.argmax = golden(e.argmax, -1.0);
  e.max = std::max(e.max, f(e.argmax));
  return e;
}

// Frozen high-precision values (30-digit arithmetic).
inline constexpr double kCubicMuPlus = 0.631130309440898824;
inline constexpr double kCubicMuMinus = 2.112611790922380306;
inline constexpr double kCubicEscapeUpperM1 = 1.891107335491867;

struct Frozen {
  double L, m_c;
};
inline constexpr Frozen kQuadraticCritical[] = {
    {2.5, 3.482272186015187}, {3.0, 2.162032263403312}, {4.0, 1.516274334511479}, {6.0, 1.211852302690097},
    {10.0, 1.078350539467277}, {20.0, 1.021211662175997}, {50.0, 1.003676194617536}};
inline constexpr Frozen kCubicCritical[] = {{1.05, 8.838374468567288}, {1.5, 1.354828371898836},
                                            {2.0, 0.9517209871292654}, {3.0, 0.7620893344187008},
                                            {5.0, 0.6792765986653895}, {50.0, 0.6317045640939661}};

// Hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::uint64_t u64() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

// A cubic k (x - alpha)(x - a)(x - beta), k > 0, attracting at a.
struct RandomCubic {
  double k, alpha, a, beta;

  std::string text() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g*(x - (%.17g))*(x - (%.17g))*(x - (%.17g))", k, alpha, a, beta);
    return buf;
  }
  double operator()(double x) const { return k * (x - alpha) * (x - a) * (x - beta); }
};

inline RandomCubic random_cubic(Gen& g) {
  const double a = g.uniform(-2.0, 2.0);
  return {g.log_uniform(0.3, 3.0), a - g.uniform(0.5, 3.0), a, a + g.uniform(0.5, 3.0)};
}

}  // namespace oracle
