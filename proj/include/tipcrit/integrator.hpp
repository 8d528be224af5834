#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tipcrit/field.hpp"
#include "tipcrit/forcing.hpp"
#include "tipcrit/quadrature.hpp"

namespace tipcrit {

// u(t) = amplitude * sech^2(rate * (t - center)); the derivative of a tanh ramp.
struct SechSquaredPulse {
  double amplitude;
  double rate;
  double center;

  double operator()(double t) const;
};

// One smooth piece of an additive drive, active on [begin, end).
struct DrivePiece {
  double begin;
  double end;
  std::variant<double, SechSquaredPulse> shape;

  double value(double t) const;
};

// Additive drive u(t) for y' = f(y) + u(t): a finite, ordered list of smooth
// pieces, zero elsewhere. Integration restarts at every piece boundary so
// the right-hand side is smooth inside each step.
class Drive {
 public:
  Drive() = default;

  static Drive from_control(const ControlSignal& u);
  // Exact slopes for piecewise-linear parts; tanh parts become an analytic
  // sech^2 piece over their truncated support.
  static Drive from_profile(const ForcingProfile& profile);

  std::span<const DrivePiece> pieces() const noexcept { return pieces_; }
  double value(double t) const;

 private:
  std::vector<DrivePiece> pieces_;
};

struct IntegrationSettings {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = kInfinity;
  double y_blowup = 1e6;
  // Used when the requested end time is infinite.
  double t_horizon_autonomous = 1e4;
  std::size_t max_steps = 5'000'000;
};

enum class Crossing { Upward, Downward, Either };

struct ThresholdEvent {
  double level;
  std::string label;
  Crossing direction = Crossing::Either;
  bool terminal = true;
};

struct EventHit {
  double t;
  double y;
  std::string label;
  Crossing direction;
};

enum class Termination { ReachedEnd, EventHit, Blowup, StepFailure };

std::string_view to_string(Termination t) noexcept;

struct Sample {
  double t;
  double y;
};

struct Trajectory {
  std::vector<Sample> samples;
  Termination termination = Termination::ReachedEnd;
  // Label of the terminal event when termination == EventHit.
  std::string event_label;
  // Every detected crossing, terminal or not, in time order.
  std::vector<EventHit> hits;

  double final_time() const { return samples.back().t; }
  double final_value() const { return samples.back().y; }
};

// Dormand-Prince 5(4) with PI step control and cubic Hermite dense output for
// event location (bisection to 1e-10 in time).
Trajectory integrate_driven(const ScalarField& field, const Drive& drive, double y0, double t0,
                            double t_end, std::span<const ThresholdEvent> events = {},
                            const IntegrationSettings& settings = {});

Trajectory integrate_controlled(const ScalarField& field, const ControlSignal& u, double y0, double t0,
                                double t_end, std::span<const ThresholdEvent> events = {},
                                const IntegrationSettings& settings = {});

Trajectory integrate_autonomous(const ScalarField& field, double y0, double t0, double t_end,
                                std::span<const ThresholdEvent> events = {},
                                const IntegrationSettings& settings = {});

// f(y) + M changes sign (or vanishes) on the path.
class SignChangeError : public QuadratureError {
 public:
  SignChangeError(const std::string& what, double location);
  double location() const noexcept { return location_; }

 private:
  double location_;
};

// Time for y' = f(y) + M to travel from y_from to y_to:
//   T = integral from y_from to y_to of dy / (f(y) + M).
// Requires f + M to keep the sign of (y_to - y_from) on the closed path.
double first_passage_time(const ScalarField& field, double M, double y_from, double y_to,
                          const QuadratureSettings& settings = {});

// CSV with header "t,y" and 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace tipcrit
