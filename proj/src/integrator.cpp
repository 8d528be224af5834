#include "tipcrit/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <type_traits>

namespace tipcrit {

double SechSquaredPulse::operator()(double t) const {
  const double c = std::cosh(rate * (t - center));
  return amplitude / (c * c);
}

double DrivePiece::value(double t) const {
  return std::visit(
      [t](const auto& s) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, double>) {
          return s;
        } else {
          return s(t);
        }
      },
      shape);
}

Drive Drive::from_control(const ControlSignal& u) {
  Drive d;
  for (const auto& s : u.segments()) {
    if (s.value != 0.0) d.pieces_.push_back({s.t_start, s.t_end, s.value});
  }
  return d;
}

namespace {

void append_profile_pieces(const ForcingProfile& profile, std::vector<DrivePiece>& out) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PiecewiseLinear>) {
          const auto k = p.knots();
          for (std::size_t i = 1; i < k.size(); ++i) {
            const double slope = (k[i].value - k[i - 1].value) / (k[i].t - k[i - 1].t);
            if (slope != 0.0) out.push_back({k[i - 1].t, k[i].t, slope});
          }
        } else if constexpr (std::is_same_v<T, TanhRamp>) {
          const SechSquaredPulse pulse{p.peak_speed(), 0.5 * p.lambda_inf * p.rate, p.center};
          out.push_back({p.center - p.truncation_time, p.center + p.truncation_time, pulse});
        } else {
          for (const auto& part : p.parts) append_profile_pieces(part, out);
        }
      },
      profile.variant());
}

}  // namespace

Drive Drive::from_profile(const ForcingProfile& profile) {
  Drive d;
  append_profile_pieces(profile, d.pieces_);
  return d;
}

double Drive::value(double t) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double x, const DrivePiece& p) { return x < p.begin; });
  if (it == pieces_.begin()) return 0.0;
  --it;
  return t < it->end ? it->value(t) : 0.0;
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::ReachedEnd: return "reached_t_end";
    case Termination::EventHit: return "event_hit";
    case Termination::Blowup: return "blowup";
    case Termination::StepFailure: return "step_failure";
  }
  return "unknown";
}

SignChangeError::SignChangeError(const std::string& what, double location)
    : QuadratureError(what), location_(location) {}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
  double y;
  double k7;  // f at the new point (first-same-as-last)
  double err;
};

template <class Rhs>
std::optional<StepResult> dopri_step(const Rhs& rhs, double t, double y, double k1, double h) {
  try {
    const double k2 = rhs(t + c2 * h, y + h * a21 * k1);
    const double k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double yn = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double k7 = rhs(t + h, yn);
    const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    if (!std::isfinite(yn) || !std::isfinite(k7) || !std::isfinite(err)) return std::nullopt;
    return StepResult{yn, k7, err};
  } catch (const EvalError&) {
    return std::nullopt;
  }
}

double hermite(double t0, double y0, double f0, double t1, double y1, double f1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * f1;
}

bool crosses(double g0, double g1, Crossing dir) {
  const bool up = g0 < 0.0 && g1 >= 0.0;
  const bool down = g0 > 0.0 && g1 <= 0.0;
  switch (dir) {
    case Crossing::Upward: return up;
    case Crossing::Downward: return down;
    case Crossing::Either: return up || down;
  }
  return false;
}

constexpr double kEventTimeTol = 1e-10;
// Local error target relative to the user tolerance. Global error in event
// times grows with the passage time, so the per-step target is much tighter.
constexpr double kLocalTolFactor = 1e-3;

class Stepper {
 public:
  Stepper(const ScalarField& field, std::span<const ThresholdEvent> events, const IntegrationSettings& s,
          Trajectory& out)
      : field_(field), events_(events), s_(s), out_(out) {}

  // Integrates one smooth interval [t0, t1] with drive u. Returns false once
  // the trajectory has terminated.
  template <class U>
  bool run(const U& u, double t0, double t1, double& y) {
    const auto rhs = [&](double t, double v) { return field_(v) + u(t); };
    double t = t0;
    double k1;
    try {
      k1 = rhs(t, y);
    } catch (const EvalError&) {
      out_.termination = Termination::StepFailure;
      return false;
    }
    double h = initial_step(rhs, t, y, k1, t1 - t0);
    double err_old = 1e-4;
    bool last_rejected = false;
    while (t < t1) {
      if (++steps_ > s_.max_steps) {
        out_.termination = Termination::StepFailure;
        return false;
      }
      const double min_h = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
      bool final_step = false;
      if (t + h >= t1 || t1 - (t + h) < min_h) {
        h = t1 - t;
        final_step = true;
      }
      const auto step = dopri_step(rhs, t, y, k1, h);
      double err = kInfinity;
      if (step) {
        const double sc = kLocalTolFactor * (s_.atol + s_.rtol * std::max(std::abs(y), std::abs(step->y)));
        err = std::abs(step->err) / sc;
      }
      if (!(err <= 1.0)) {
        // Rejected: non-finite stage or tolerance miss.
        const double fac = std::isfinite(err) ? std::min(5.0, std::pow(err, 0.17) / 0.9) : 10.0;
        h /= fac;
        last_rejected = true;
        if (std::abs(h) < min_h) {
          out_.termination = Termination::StepFailure;
          return false;
        }
        continue;
      }
      const double tn = final_step ? t1 : t + h;
      if (!handle_step(rhs, t, y, k1, tn, step->y, step->k7)) return false;
      double fac = std::pow(err, 0.17) / std::pow(err_old, 0.04);
      fac = std::clamp(fac / 0.9, 0.2, 10.0);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      err_old = std::max(err, 1e-4);
      last_rejected = false;
      t = tn;
      y = step->y;
      k1 = step->k7;
      h = std::min(h_new, s_.max_step);
    }
    return true;
  }

 private:
  template <class Rhs>
  double initial_step(const Rhs& rhs, double t, double y, double f0, double span) const {
    const double sc = kLocalTolFactor * (s_.atol + s_.rtol * std::abs(y));
    const double d0 = std::abs(y) / sc, d1 = std::abs(f0) / sc;
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    double d2 = 0.0;
    try {
      const double f1 = rhs(t + h0, y + h0 * f0);
      d2 = std::abs(f1 - f0) / sc / h0;
    } catch (const EvalError&) {
      d2 = kInfinity;
    }
    if (!std::isfinite(d2)) return std::min(h0, s_.max_step) * 1e-3;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span, s_.max_step});
  }

  // Records an accepted step, locating events on the Hermite interpolant.
  template <class Rhs>
  bool handle_step(const Rhs& rhs, double t, double y, double f0, double tn, double yn, double fn) {
    struct Found {
      double t;
      std::size_t index;
    };
    std::vector<Found> found;
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& ev = events_[i];
      if (!crosses(y - ev.level, yn - ev.level, ev.direction)) continue;
      double lo = t, hi = tn;
      const double g_lo = y - ev.level;
      while (hi - lo > kEventTimeTol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double g = hermite(t, y, f0, tn, yn, fn, mid) - ev.level;
        if ((g < 0.0) == (g_lo < 0.0) && g != 0.0) lo = mid; else hi = mid;
      }
      found.push_back({polish(rhs, t, y, f0, tn, hi, ev.level), i});
    }
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
      return a.t < b.t || (a.t == b.t && a.index < b.index);
    });
    for (const auto& f : found) {
      const auto& ev = events_[f.index];
      const Crossing dir = yn > y ? Crossing::Upward : Crossing::Downward;
      out_.hits.push_back({f.t, ev.level, ev.label, dir});
      if (ev.terminal) {
        if (f.t > out_.samples.back().t) out_.samples.push_back({f.t, ev.level});
        out_.termination = Termination::EventHit;
        out_.event_label = ev.label;
        return false;
      }
    }
    out_.samples.push_back({tn, yn});
    if (std::abs(yn) >= s_.y_blowup) {
      out_.termination = Termination::Blowup;
      return false;
    }
    return true;
  }

  // The cubic Hermite root is only O(h^4) accurate; refine with Newton on a
  // genuine single step from the start of the accepted step.
  template <class Rhs>
  double polish(const Rhs& rhs, double t, double y, double f0, double tn, double guess, double level) const {
    double tau = guess;
    for (int it = 0; it < 4; ++it) {
      const double h = tau - t;
      if (h <= 0.0) break;
      const auto st = dopri_step(rhs, t, y, f0, h);
      if (!st || st->k7 == 0.0) break;
      const double next = std::clamp(tau - (st->y - level) / st->k7, t, tn);
      const bool done = std::abs(next - tau) <= kEventTimeTol * 1e-2;
      tau = next;
      if (done) break;
    }
    return tau;
  }

  const ScalarField& field_;
  std::span<const ThresholdEvent> events_;
  const IntegrationSettings& s_;
  Trajectory& out_;
  std::size_t steps_ = 0;
};

}  // namespace

Trajectory integrate_driven(const ScalarField& field, const Drive& drive, double y0, double t0, double t_end,
                            std::span<const ThresholdEvent> events, const IntegrationSettings& settings) {
  if (!std::isfinite(y0)) throw std::invalid_argument("initial value must be finite");
  if (std::isinf(t_end) && t_end > 0) t_end = t0 + settings.t_horizon_autonomous;
  if (!(t0 < t_end)) throw std::invalid_argument("integration requires t0 < t_end");

  Trajectory out;
  out.samples.push_back({t0, y0});
  if (std::abs(y0) >= settings.y_blowup) {
    out.termination = Termination::Blowup;
    return out;
  }
  Stepper stepper(field, events, settings, out);
  const auto zero = [](double) { return 0.0; };
  double t = t0, y = y0;
  for (const auto& piece : drive.pieces()) {
    if (piece.end <= t) continue;
    if (piece.begin >= t_end) break;
    if (piece.begin > t) {
      if (!stepper.run(zero, t, piece.begin, y)) return out;
      t = piece.begin;
    }
    const double stop = std::min(piece.end, t_end);
    if (!stepper.run([&piece](double s) { return piece.value(s); }, t, stop, y)) return out;
    t = stop;
  }
  if (t < t_end && !stepper.run(zero, t, t_end, y)) return out;
  out.termination = Termination::ReachedEnd;
  return out;
}

Trajectory integrate_controlled(const ScalarField& field, const ControlSignal& u, double y0, double t0,
                                double t_end, std::span<const ThresholdEvent> events,
                                const IntegrationSettings& settings) {
  return integrate_driven(field, Drive::from_control(u), y0, t0, t_end, events, settings);
}

Trajectory integrate_autonomous(const ScalarField& field, double y0, double t0, double t_end,
                                std::span<const ThresholdEvent> events, const IntegrationSettings& settings) {
  return integrate_driven(field, Drive{}, y0, t0, t_end, events, settings);
}

double first_passage_time(const ScalarField& field, double M, double y_from, double y_to,
                          const QuadratureSettings& settings) {
  if (!std::isfinite(y_from) || !std::isfinite(y_to)) throw std::invalid_argument("passage endpoints must be finite");
  if (y_from == y_to) return 0.0;
  const bool forward = y_to > y_from;
  const Interval path{std::min(y_from, y_to), std::max(y_from, y_to)};
  const Extrema ex = extrema_on(field, path, 2001);
  if (forward && !(ex.min_value + M > 0.0)) {
    throw SignChangeError("f + M vanishes or changes sign on the path (at y = " + std::to_string(ex.argmin) + ")",
                          ex.argmin);
  }
  if (!forward && !(ex.max_value + M < 0.0)) {
    throw SignChangeError("f + M vanishes or changes sign on the path (at y = " + std::to_string(ex.argmax) + ")",
                          ex.argmax);
  }
  const auto g = [&](double v) { return 1.0 / (field(v) + M); };
  const QuadratureResult r = integrate_adaptive(g, y_from, y_to, settings);
  // Close to mu, f + M is computed with cancellation and the integrand is
  // noisy; accept the roundoff-limited value only while it is still sharp.
  if (r.roundoff_limited && r.error > 1e-6 * std::abs(r.value)) {
    throw NearSingularityError("passage time is roundoff-limited (estimated error " + std::to_string(r.error) +
                               ")");
  }
  return std::abs(r.value);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "t,y\n";
  char buf[64];
  for (const auto& s : trajectory.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t, s.y);
    os << buf;
  }
}

}  // namespace tipcrit
