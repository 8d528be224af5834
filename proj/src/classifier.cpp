#include "tipcrit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace tipcrit {

std::string_view TippingOutcome::name() const noexcept {
  switch (variant.index()) {
    case 0: return "tracks";
    case 1: return "tips";
    case 2: return "critical";
    default: return "undecided";
  }
}

namespace {

struct Resolved {
  double track_tol;
  double exit_margin;
  double horizon;
};

Resolved resolve(const ScalarField& field, const BasinGeometry& g, const ClassificationSettings& s) {
  Resolved r{s.track_tol.value_or(1e-6 * g.R), s.exit_margin.value_or(1e-4 * g.R),
             s.autonomous_horizon.value_or(1e4 / std::abs(field.slope(g.a)))};
  if (!(r.track_tol > 0.0) || !(r.exit_margin > 0.0) || !(r.horizon > 0.0)) {
    throw std::invalid_argument("classification tolerances must be positive");
  }
  return r;
}

double boundary_distance(const BasinGeometry& g, double y) {
  double d = kInfinity;
  if (g.has_boundary(Side::Upper)) d = std::min(d, std::abs(y - g.beta));
  if (g.has_boundary(Side::Lower)) d = std::min(d, std::abs(y - g.alpha));
  return d;
}

double min_distance(const BasinGeometry& g, const Trajectory& tr) {
  double d = kInfinity;
  for (const auto& s : tr.samples) d = std::min(d, boundary_distance(g, s.y));
  for (const auto& h : tr.hits) {
    if (h.label == "upper" || h.label == "lower") d = 0.0;
  }
  return d;
}

void require_ok(const Trajectory& tr) {
  if (tr.termination == Termination::StepFailure) {
    throw IntegrationFailure("step size underflow at t = " + std::to_string(tr.final_time()) +
                             ", y = " + std::to_string(tr.final_value()));
  }
}

}  // namespace

PullbackStart pullback_start(const ScalarField&, const BasinGeometry& geometry, const ForcingProfile& profile,
                             const ClassificationSettings& settings) {
  const double t0 = profile.start_time();
  if (!std::isfinite(t0) || !(std::abs(profile.value(t0)) <= settings.pullback_tol)) {
    throw std::invalid_argument("forcing is not identically zero before a finite time");
  }
  return {t0, geometry.a};
}

TippingOutcome classify(const ScalarField& field, const BasinGeometry& g, const ForcingProfile& profile,
                        const ClassificationSettings& settings) {
  const Resolved r = resolve(field, g, settings);
  const PullbackStart start = pullback_start(field, g, profile, settings);
  const double t_forcing_end = profile.end_time();

  const double upper_exit = g.beta + r.exit_margin;
  const double lower_exit = g.alpha - r.exit_margin;
  std::vector<ThresholdEvent> passive;
  if (g.has_boundary(Side::Upper)) {
    passive.push_back({g.beta, "upper", Crossing::Upward, false});
    passive.push_back({upper_exit, "upper_exit", Crossing::Upward, false});
  }
  if (g.has_boundary(Side::Lower)) {
    passive.push_back({g.alpha, "lower", Crossing::Downward, false});
    passive.push_back({lower_exit, "lower_exit", Crossing::Downward, false});
  }

  TippingOutcome out{Undecided{0.0}, 0.0, kInfinity, 0.0, 0.0};
  const auto exit_time = [](const Trajectory& tr, std::string_view label, double fallback) {
    double t = fallback;
    for (const auto& h : tr.hits) {
      if (h.label == label) t = h.t;
    }
    return t;
  };

  // Forcing phase. Excursions past the exit level are allowed here because the
  // forcing can still pull the state back.
  double y_end = start.y0;
  double t = start.t0;
  Trajectory forced;
  if (t_forcing_end > start.t0) {
    forced = integrate_driven(field, Drive::from_profile(profile), start.y0, start.t0, t_forcing_end, passive,
                              settings.integration);
    require_ok(forced);
    out.min_boundary_distance = min_distance(g, forced);
    y_end = forced.final_value();
    t = forced.final_time();
    if (forced.termination == Termination::Blowup) {
      const Side s = y_end > g.a ? Side::Upper : Side::Lower;
      out.variant = Tips{s, exit_time(forced, s == Side::Upper ? "upper_exit" : "lower_exit", t)};
      out.y_at_forcing_end = y_end;
      out.final_time = t;
      out.final_value = y_end;
      return out;
    }
  }
  out.y_at_forcing_end = y_end;
  out.min_boundary_distance = std::min(out.min_boundary_distance, boundary_distance(g, y_end));

  const auto finish = [&](OutcomeVariant v, double tf, double yf) {
    out.variant = v;
    out.final_time = tf;
    out.final_value = yf;
    return out;
  };
  if (g.has_boundary(Side::Upper) && y_end >= upper_exit) {
    return finish(Tips{Side::Upper, exit_time(forced, "upper_exit", t)}, t, y_end);
  }
  if (g.has_boundary(Side::Lower) && y_end <= lower_exit) {
    return finish(Tips{Side::Lower, exit_time(forced, "lower_exit", t)}, t, y_end);
  }
  if (std::abs(y_end - g.a) <= r.track_tol) return finish(Tracks{std::abs(y_end - g.a)}, t, y_end);

  // Autonomous phase: first event decides.
  std::vector<ThresholdEvent> decide;
  if (g.has_boundary(Side::Upper)) decide.push_back({upper_exit, "upper_exit", Crossing::Upward});
  if (g.has_boundary(Side::Lower)) decide.push_back({lower_exit, "lower_exit", Crossing::Downward});
  decide.push_back({g.a + r.track_tol, "track", Crossing::Downward});
  decide.push_back({g.a - r.track_tol, "track", Crossing::Upward});
  const Trajectory tail = integrate_autonomous(field, y_end, t, t + r.horizon, decide, settings.integration);
  require_ok(tail);
  out.min_boundary_distance = std::min(out.min_boundary_distance, min_distance(g, tail));
  const double tf = tail.final_time(), yf = tail.final_value();
  if (tail.termination == Termination::EventHit) {
    if (tail.event_label == "track") return finish(Tracks{std::abs(yf - g.a)}, tf, yf);
    const bool up = tail.event_label == "upper_exit";
    const double level = up ? upper_exit : lower_exit;
    // Outward flow at the exit level confirms escape rather than a graze.
    if ((up && field(level) > 0.0) || (!up && field(level) < 0.0)) {
      return finish(Tips{up ? Side::Upper : Side::Lower, tf}, tf, yf);
    }
    return finish(Undecided{yf}, tf, yf);
  }
  if (tail.termination == Termination::Blowup) {
    return finish(Tips{yf > g.a ? Side::Upper : Side::Lower, tf}, tf, yf);
  }
  return finish(Undecided{yf}, tf, yf);
}

XFrameOutcome classify_x_frame(const ScalarField& field, const BasinGeometry& geometry,
                               const ForcingProfile& profile, const ClassificationSettings& settings) {
  XFrameOutcome x{classify(field, geometry, profile, settings), std::nullopt};
  auto& o = x.outcome;
  o.y_at_forcing_end -= profile.value(profile.end_time());
  o.final_value -= profile.value(o.final_time);
  const double shift = profile.final_value();
  if (o.tracks()) x.x_limit = geometry.a - shift;
  return x;
}

ThresholdResult threshold_bracket(const ScalarField& field, const BasinGeometry& geometry, const ForcingFamily& family,
                                  Interval range, const ClassificationSettings& settings, double rel_width) {
  if (!(range.lo < range.hi)) throw std::invalid_argument("threshold range must satisfy lo < hi");
  const auto run = [&](double p) { return classify(field, geometry, family(p), settings); };
  const TippingOutcome at_lo = run(range.lo);
  if (!at_lo.tracks()) {
    throw NoThresholdError("no threshold in range: outcome at the lower end is " + std::string(at_lo.name()));
  }
  const TippingOutcome at_hi = run(range.hi);
  if (!at_hi.tips()) {
    throw NoThresholdError("no threshold in range: outcome at the upper end is " + std::string(at_hi.name()));
  }
  double lo = range.lo, hi = range.hi;
  const bool geometric = lo > 0.0;
  while (hi - lo > rel_width * std::abs(hi)) {
    const double mid = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const TippingOutcome o = run(mid);
    if (o.tracks()) {
      lo = mid;
    } else if (o.tips()) {
      hi = mid;
    } else {
      break;  // hovering on the repeller: this is as close as classification resolves
    }
  }
  const double p = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
  TippingOutcome o = run(p);
  o.variant = Critical{std::min(boundary_distance(geometry, o.y_at_forcing_end), o.min_boundary_distance)};
  return {p, hi - lo, lo, hi, o};
}

}  // namespace tipcrit
