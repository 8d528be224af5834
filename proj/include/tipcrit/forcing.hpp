#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "tipcrit/side.hpp"

namespace tipcrit {

struct Knot {
  double t;
  double value;
};

// lambda(t) interpolating linearly between knots; constant outside the span.
// The first knot value is 0 so that lambda(-inf) = 0.
class PiecewiseLinear {
 public:
  // Throws std::invalid_argument unless times strictly increase, all values
  // are finite, and the first value is 0.
  static PiecewiseLinear from_knots(std::vector<Knot> knots);

  std::span<const Knot> knots() const noexcept { return knots_; }

 private:
  explicit PiecewiseLinear(std::vector<Knot> knots) : knots_(std::move(knots)) {}
  std::vector<Knot> knots_;
};

// lambda(t) = (lambda_inf / 2) (1 + tanh(lambda_inf * rate * (t - center) / 2)),
// truncated to exactly 0 before center - truncation_time and exactly lambda_inf
// after center + truncation_time.
struct TanhRamp {
  double lambda_inf;
  double rate;
  double truncation_time;
  double tail_tol;
  double center = 0.0;

  double peak_speed() const noexcept { return 0.25 * lambda_inf * lambda_inf * rate; }
};

class ForcingProfile;

// Sum of profiles whose non-constant parts occupy disjoint, ordered time windows.
struct Composite {
  std::vector<ForcingProfile> parts;
};

class ForcingProfile {
 public:
  using Variant = std::variant<PiecewiseLinear, TanhRamp, Composite>;

  ForcingProfile(PiecewiseLinear p);
  ForcingProfile(TanhRamp p);
  // Throws std::invalid_argument if part windows overlap or are out of order.
  ForcingProfile(Composite c);

  double value(double t) const;
  // lambda is identically 0 before this time.
  double start_time() const;
  // lambda is identically final_value() after this time.
  double end_time() const;
  double final_value() const;

  ForcingProfile shifted(double dt) const;

  const Variant& variant() const noexcept { return v_; }

 private:
  Variant v_;
};

struct ControlSegment {
  double t_start;
  double t_end;
  double value;
};

// Piecewise-constant control u(t); zero outside every segment.
class ControlSignal {
 public:
  ControlSignal() = default;
  // Throws std::invalid_argument unless segments are ordered, non-overlapping,
  // of positive length, and carry finite values.
  static ControlSignal from_segments(std::vector<ControlSegment> segments);

  std::span<const ControlSegment> segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }

  double value_at(double t) const;
  double integral() const;
  double abs_integral() const;
  // Exact for piecewise-constant signals: the largest segment magnitude.
  double ess_sup() const;

  ControlSignal shifted(double dt) const;

 private:
  std::vector<ControlSegment> segments_;
};

struct ArclengthReport {
  double arclength;
  double sup_speed;
  double final_value;
  bool monotone;
};

inline constexpr double kDefaultTailTol = 1e-10;
inline constexpr std::size_t kTanhSamplingSegments = 2048;

ForcingProfile make_piecewise_linear_ramp(double lambda_inf, double slope);

ForcingProfile make_tanh_ramp(double lambda_inf, double rate, double tail_tol = kDefaultTailTol);

ControlSignal make_bang_bang(double height, double onset, double width, Side sign);

// Exact slopes of a piecewise-linear profile as a control signal; tanh parts
// are first sampled onto kTanhSamplingSegments uniform segments.
ControlSignal derivative_signal(const ForcingProfile& profile);

ArclengthReport arclength_report(const ForcingProfile& profile);

// Random piecewise-linear forcing with total arclength exactly L and every
// slope magnitude in [0.2, 1.0] * speed_cap. Deterministic in seed.
ForcingProfile sample_random_forcing(double arclength, double speed_cap, std::size_t n_segments,
                                     std::uint64_t seed);

// Parses the CLI forcing mini-language:
//   pl:LAMBDA_INF:SLOPE | tanh:LAMBDA_INF:R | knots:t0,v0;t1,v1;... |
//   random:L:CAP:N:SEED
ForcingProfile parse_forcing_spec(std::string_view spec);

}  // namespace tipcrit
