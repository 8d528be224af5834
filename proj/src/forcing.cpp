#include "tipcrit/forcing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace tipcrit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double tanh_value(const TanhRamp& r, double t) {
  const double s = t - r.center;
  if (s <= -r.truncation_time) return 0.0;
  if (s >= r.truncation_time) return r.lambda_inf;
  return 0.5 * r.lambda_inf * (1.0 + std::tanh(0.5 * r.lambda_inf * r.rate * s));
}

double pl_value(const PiecewiseLinear& p, double t) {
  const auto k = p.knots();
  if (t <= k.front().t) return k.front().value;
  if (t >= k.back().t) return k.back().value;
  const auto it = std::upper_bound(k.begin(), k.end(), t,
                                   [](double tt, const Knot& kn) { return tt < kn.t; });
  const Knot& hi = *it;
  const Knot& lo = *std::prev(it);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.value + w * (hi.value - lo.value);
}

PiecewiseLinear sample_tanh(const TanhRamp& r) {
  std::vector<Knot> knots(kTanhSamplingSegments + 1);
  const double t0 = r.center - r.truncation_time;
  const double h = 2.0 * r.truncation_time / static_cast<double>(kTanhSamplingSegments);
  for (std::size_t i = 0; i <= kTanhSamplingSegments; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    knots[i] = {t, tanh_value(r, t)};
  }
  // The truncation jumps are absorbed into the end segments.
  knots.front() = {t0, 0.0};
  knots.back() = {r.center + r.truncation_time, r.lambda_inf};
  return PiecewiseLinear::from_knots(std::move(knots));
}

void append_slopes(const PiecewiseLinear& p, std::vector<ControlSegment>& out) {
  const auto k = p.knots();
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const double slope = (k[i + 1].value - k[i].value) / (k[i + 1].t - k[i].t);
    if (slope != 0.0) out.push_back({k[i].t, k[i + 1].t, slope});
  }
}

void append_slopes(const ForcingProfile& profile, std::vector<ControlSegment>& out) {
  std::visit(overloaded{
                 [&](const PiecewiseLinear& p) { append_slopes(p, out); },
                 [&](const TanhRamp& r) { append_slopes(sample_tanh(r), out); },
                 [&](const Composite& c) {
                   for (const auto& part : c.parts) append_slopes(part, out);
                 },
             },
             profile.variant());
}

struct VariationSummary {
  double arclength = 0.0;
  double sup_speed = 0.0;
  double final_value = 0.0;
  bool rises = false;
  bool falls = false;
};

void summarize(const ForcingProfile& profile, VariationSummary& s) {
  std::visit(overloaded{
                 [&](const PiecewiseLinear& p) {
                   const auto k = p.knots();
                   for (std::size_t i = 0; i + 1 < k.size(); ++i) {
                     const double dv = k[i + 1].value - k[i].value;
                     s.arclength += std::abs(dv);
                     s.sup_speed = std::max(s.sup_speed, std::abs(dv) / (k[i + 1].t - k[i].t));
                     s.rises |= dv > 0.0;
                     s.falls |= dv < 0.0;
                   }
                   s.final_value += k.back().value;
                 },
                 [&](const TanhRamp& r) {
                   s.arclength += r.lambda_inf;
                   s.sup_speed = std::max(s.sup_speed, r.peak_speed());
                   s.final_value += r.lambda_inf;
                   s.rises = true;
                 },
                 [&](const Composite& c) {
                   for (const auto& part : c.parts) summarize(part, s);
                 },
             },
             profile.variant());
}

double parse_number(std::string_view text, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("forcing spec: bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("forcing spec: bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PiecewiseLinear PiecewiseLinear::from_knots(std::vector<Knot> knots) {
  if (knots.empty()) throw std::invalid_argument("piecewise-linear profile needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].t) || !std::isfinite(knots[i].value)) {
      throw std::invalid_argument("piecewise-linear knots must be finite");
    }
    if (i > 0 && !(knots[i].t > knots[i - 1].t)) {
      throw std::invalid_argument("piecewise-linear knot times must strictly increase");
    }
  }
  if (knots.front().value != 0.0) {
    throw std::invalid_argument("piecewise-linear profile must start at 0");
  }
  return PiecewiseLinear(std::move(knots));
}

ForcingProfile::ForcingProfile(PiecewiseLinear p) : v_(std::move(p)) {}

ForcingProfile::ForcingProfile(TanhRamp p) : v_(p) {}

namespace {

Composite validated(Composite c) {
  if (c.parts.empty()) throw std::invalid_argument("composite profile needs at least one part");
  for (std::size_t i = 0; i + 1 < c.parts.size(); ++i) {
    if (c.parts[i].end_time() > c.parts[i + 1].start_time()) {
      throw std::invalid_argument("composite parts must occupy disjoint, ordered time windows");
    }
  }
  return c;
}

}  // namespace

ForcingProfile::ForcingProfile(Composite c) : v_(validated(std::move(c))) {}

double ForcingProfile::value(double t) const {
  return std::visit(overloaded{
                        [&](const PiecewiseLinear& p) { return pl_value(p, t); },
                        [&](const TanhRamp& r) { return tanh_value(r, t); },
                        [&](const Composite& c) {
                          double sum = 0.0;
                          for (const auto& part : c.parts) sum += part.value(t);
                          return sum;
                        },
                    },
                    v_);
}

double ForcingProfile::start_time() const {
  return std::visit(overloaded{
                        [](const PiecewiseLinear& p) { return p.knots().front().t; },
                        [](const TanhRamp& r) { return r.center - r.truncation_time; },
                        [](const Composite& c) { return c.parts.front().start_time(); },
                    },
                    v_);
}

double ForcingProfile::end_time() const {
  return std::visit(overloaded{
                        [](const PiecewiseLinear& p) { return p.knots().back().t; },
                        [](const TanhRamp& r) { return r.center + r.truncation_time; },
                        [](const Composite& c) { return c.parts.back().end_time(); },
                    },
                    v_);
}

double ForcingProfile::final_value() const {
  return std::visit(overloaded{
                        [](const PiecewiseLinear& p) { return p.knots().back().value; },
                        [](const TanhRamp& r) { return r.lambda_inf; },
                        [](const Composite& c) {
                          double sum = 0.0;
                          for (const auto& part : c.parts) sum += part.final_value();
                          return sum;
                        },
                    },
                    v_);
}

ForcingProfile ForcingProfile::shifted(double dt) const {
  return std::visit(overloaded{
                        [&](const PiecewiseLinear& p) -> ForcingProfile {
                          std::vector<Knot> k(p.knots().begin(), p.knots().end());
                          for (auto& kn : k) kn.t += dt;
                          return PiecewiseLinear::from_knots(std::move(k));
                        },
                        [&](const TanhRamp& r) -> ForcingProfile {
                          TanhRamp s = r;
                          s.center += dt;
                          return s;
                        },
                        [&](const Composite& c) -> ForcingProfile {
                          Composite s;
                          for (const auto& part : c.parts) s.parts.push_back(part.shifted(dt));
                          return s;
                        },
                    },
                    v_);
}

// ---------------------------------------------------------------------------

ControlSignal ControlSignal::from_segments(std::vector<ControlSegment> segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || !std::isfinite(s.value)) {
      throw std::invalid_argument("control segments must be finite");
    }
    if (!(s.t_end > s.t_start)) throw std::invalid_argument("control segment has non-positive length");
    if (i > 0 && s.t_start < segments[i - 1].t_end) {
      throw std::invalid_argument("control segments must be ordered and disjoint");
    }
  }
  ControlSignal u;
  u.segments_ = std::move(segments);
  return u;
}

double ControlSignal::value_at(double t) const {
  // Half-open segments [t_start, t_end).
  for (const auto& s : segments_) {
    if (t < s.t_start) break;
    if (t < s.t_end) return s.value;
  }
  return 0.0;
}

double ControlSignal::integral() const {
  double sum = 0.0;
  for (const auto& s : segments_) sum += s.value * (s.t_end - s.t_start);
  return sum;
}

double ControlSignal::abs_integral() const {
  double sum = 0.0;
  for (const auto& s : segments_) sum += std::abs(s.value) * (s.t_end - s.t_start);
  return sum;
}

double ControlSignal::ess_sup() const {
  double m = 0.0;
  for (const auto& s : segments_) m = std::max(m, std::abs(s.value));
  return m;
}

ControlSignal ControlSignal::shifted(double dt) const {
  ControlSignal u = *this;
  for (auto& s : u.segments_) {
    s.t_start += dt;
    s.t_end += dt;
  }
  return u;
}

// ---------------------------------------------------------------------------

ForcingProfile make_piecewise_linear_ramp(double lambda_inf, double slope) {
  if (!(lambda_inf > 0.0) || !(slope > 0.0) || !std::isfinite(lambda_inf) || !std::isfinite(slope)) {
    throw std::invalid_argument("ramp amplitude and slope must be positive and finite");
  }
  return PiecewiseLinear::from_knots({{0.0, 0.0}, {lambda_inf / slope, lambda_inf}});
}

ForcingProfile make_tanh_ramp(double lambda_inf, double rate, double tail_tol) {
  if (!(lambda_inf > 0.0) || !(rate > 0.0) || !std::isfinite(lambda_inf) || !std::isfinite(rate)) {
    throw std::invalid_argument("tanh ramp amplitude and rate must be positive and finite");
  }
  if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) {
    throw std::invalid_argument("tanh ramp tail tolerance must lie in (0, 1e-6]");
  }
  // lambda(-T)/lambda_inf = 1/(1 + exp(lambda_inf * rate * T)) = tail_tol.
  const double truncation = std::log(1.0 / tail_tol - 1.0) / (lambda_inf * rate);
  return TanhRamp{lambda_inf, rate, truncation, tail_tol};
}

ControlSignal make_bang_bang(double height, double onset, double width, Side sign) {
  if (!(height > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("bang-bang height and width must be positive");
  }
  return ControlSignal::from_segments({{onset, onset + width, tipcrit::sign(sign) * height}});
}

ControlSignal derivative_signal(const ForcingProfile& profile) {
  std::vector<ControlSegment> segments;
  append_slopes(profile, segments);
  return ControlSignal::from_segments(std::move(segments));
}

ArclengthReport arclength_report(const ForcingProfile& profile) {
  VariationSummary s;
  summarize(profile, s);
  return {s.arclength, s.sup_speed, s.final_value, !(s.rises && s.falls)};
}

ForcingProfile sample_random_forcing(double arclength, double speed_cap, std::size_t n_segments,
                                     std::uint64_t seed) {
  if (!(arclength > 0.0) || !(speed_cap > 0.0) || n_segments == 0) {
    throw std::invalid_argument("random forcing needs L > 0, cap > 0, n >= 1");
  }
  std::mt19937_64 gen(seed);
  // Portable [0, 1) draw; std::uniform_real_distribution is not reproducible
  // across standard libraries.
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };

  std::vector<double> weights(n_segments);
  double total = 0.0;
  for (auto& w : weights) {
    w = -std::log1p(-uniform());
    total += w;
  }
  std::vector<Knot> knots{{0.0, 0.0}};
  knots.reserve(n_segments + 1);
  double used = 0.0;
  for (std::size_t i = 0; i < n_segments; ++i) {
    const double magnitude = (i + 1 == n_segments) ? arclength - used : arclength * weights[i] / total;
    used += magnitude;
    const double sgn = (gen() & 1u) ? 1.0 : -1.0;
    const double speed = (0.2 + 0.8 * uniform()) * speed_cap;
    const Knot& last = knots.back();
    knots.push_back({last.t + magnitude / speed, last.value + sgn * magnitude});
  }
  return PiecewiseLinear::from_knots(std::move(knots));
}

ForcingProfile parse_forcing_spec(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("forcing spec must look like kind:args, got '" + std::string(spec) + "'");
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view rest = spec.substr(colon + 1);
  const auto fields = split(rest, ':');
  auto need = [&](std::size_t n) {
    if (fields.size() != n) {
      throw std::invalid_argument("forcing spec '" + std::string(kind) + "' takes " + std::to_string(n) +
                                  " arguments");
    }
  };
  if (kind == "pl") {
    need(2);
    return make_piecewise_linear_ramp(parse_number(fields[0], "amplitude"), parse_number(fields[1], "slope"));
  }
  if (kind == "tanh") {
    need(2);
    return make_tanh_ramp(parse_number(fields[0], "amplitude"), parse_number(fields[1], "rate"));
  }
  if (kind == "knots") {
    std::vector<Knot> knots;
    for (std::string_view pair : split(rest, ';')) {
      if (pair.empty()) continue;
      const auto tv = split(pair, ',');
      if (tv.size() != 2) throw std::invalid_argument("knot must be 't,v', got '" + std::string(pair) + "'");
      knots.push_back({parse_number(tv[0], "knot time"), parse_number(tv[1], "knot value")});
    }
    return PiecewiseLinear::from_knots(std::move(knots));
  }
  if (kind == "random") {
    need(4);
    const std::uint64_t n = parse_unsigned(fields[2], "segment count");
    const std::uint64_t seed = parse_unsigned(fields[3], "seed");
    return sample_random_forcing(parse_number(fields[0], "arclength"), parse_number(fields[1], "cap"),
                                 static_cast<std::size_t>(n), seed);
  }
  throw std::invalid_argument("unknown forcing kind '" + std::string(kind) + "'");
}

}  // namespace tipcrit
