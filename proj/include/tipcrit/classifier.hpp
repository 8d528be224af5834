#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>

#include "tipcrit/field.hpp"
#include "tipcrit/forcing.hpp"
#include "tipcrit/integrator.hpp"
#include "tipcrit/side.hpp"

namespace tipcrit {

struct Tracks {
  double final_distance_to_a;
};

struct Tips {
  Side exit_side;
  double exit_time;
};

// Only produced by threshold_bracket; a single simulation cannot sit on the knife edge.
struct Critical {
  double boundary_distance;
};

// Neither converged nor escaped within the autonomous horizon.
struct Undecided {
  double final_value;
};

using OutcomeVariant = std::variant<Tracks, Tips, Critical, Undecided>;

struct TippingOutcome {
  OutcomeVariant variant;
  double y_at_forcing_end;
  double min_boundary_distance;
  double final_time;
  double final_value;

  bool tracks() const noexcept { return std::holds_alternative<Tracks>(variant); }
  bool tips() const noexcept { return std::holds_alternative<Tips>(variant); }
  std::string_view name() const noexcept;
};

struct ClassificationSettings {
  // Defaults are filled from the geometry: track_tol = 1e-6 R,
  // exit_margin = 1e-4 R, autonomous_horizon = 1e4 / |f'(a)|.
  std::optional<double> track_tol;
  std::optional<double> exit_margin;
  double pullback_tol = 1e-10;
  std::optional<double> autonomous_horizon;
  IntegrationSettings integration;
};

class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PullbackStart {
  double t0;
  double y0;
};

// The pullback solution is the constant a until the forcing first moves.
PullbackStart pullback_start(const ScalarField& field, const BasinGeometry& geometry, const ForcingProfile& profile,
                             const ClassificationSettings& settings = {});

TippingOutcome classify(const ScalarField& field, const BasinGeometry& geometry, const ForcingProfile& profile,
                        const ClassificationSettings& settings = {});

struct XFrameOutcome {
  // Same variant as the co-moving classification; value fields are x = y - lambda(t).
  TippingOutcome outcome;
  // a - lambda_inf when tracking; empty otherwise (the x-trajectory leaves D - lambda_inf).
  std::optional<double> x_limit;
};

XFrameOutcome classify_x_frame(const ScalarField& field, const BasinGeometry& geometry,
                               const ForcingProfile& profile, const ClassificationSettings& settings = {});

class NoThresholdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ForcingFamily = std::function<ForcingProfile(double)>;

struct ThresholdResult {
  double param_critical;
  double bracket_width;
  double lo;  // largest parameter seen to track
  double hi;  // smallest parameter seen to tip
  TippingOutcome outcome;  // Critical variant
};

// Bisection on the family parameter (geometric midpoints for positive ranges)
// until (hi - lo) <= rel_width * hi. Requires Tracks at range.lo and Tips at range.hi.
ThresholdResult threshold_bracket(const ScalarField& field, const BasinGeometry& geometry, const ForcingFamily& family,
                                  Interval range, const ClassificationSettings& settings = {},
                                  double rel_width = 1e-6);

}  // namespace tipcrit
