#include "tipcrit/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

namespace tipcrit {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(root) ^ index);
}

unsigned worker_count() {
  if (const char* env = std::getenv("TIPCRIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

ForcingProfile verification_forcing(double arclength, double speed_cap, std::uint64_t sample_seed) {
  return sample_random_forcing(arclength, speed_cap, 1 + sample_seed % 8, sample_seed);
}

ForcingProfile escape_ramp(double arclength, double slope, Side side) {
  return PiecewiseLinear::from_knots({{0.0, 0.0}, {arclength / slope, sign(side) * arclength}});
}

TightnessCheck check_tightness(const ScalarField& field, const BasinGeometry& geometry, const CriticalRate& cr,
                               const ClassificationSettings& settings) {
  TightnessCheck t{};
  t.slope_above = 1.001 * cr.m_c;
  t.slope_below = 0.999 * cr.m_c;
  t.above_tips = classify(field, geometry, escape_ramp(cr.L, t.slope_above, cr.side), settings).tips();
  t.below_tracks = classify(field, geometry, escape_ramp(cr.L, t.slope_below, cr.side), settings).tracks();
  const auto family = [&](double m) { return escape_ramp(cr.L, m, cr.side); };
  try {
    const ThresholdResult th =
        threshold_bracket(field, geometry, family, {0.5 * cr.m_c, 2.0 * cr.m_c}, settings);
    t.m_star = th.param_critical;
    t.m_star_width = th.bracket_width;
  } catch (const NoThresholdError&) {
    t.m_star = std::nan("");
    t.m_star_width = std::nan("");
  }
  t.passed = t.above_tips && t.below_tracks && std::abs(t.m_star - cr.m_c) <= 1e-3;
  return t;
}

VerificationReport verify_necessity(const ScalarField& field, const BasinGeometry& geometry, double L,
                                    std::size_t n_samples, std::uint64_t seed, double margin, bool with_tightness,
                                    const ClassificationSettings& settings) {
  if (!(margin > 0.0 && margin < 1.0)) throw std::invalid_argument("margin must lie in (0, 1)");
  const auto started = std::chrono::steady_clock::now();
  const CriticalRate cr = critical_rate(geometry, field, L);
  VerificationReport rep{};
  rep.field = field.to_string();
  rep.attractor = geometry.a;
  rep.L = L;
  rep.m_c = cr.m_c;
  rep.side = cr.side;
  rep.margin = margin;
  rep.speed_cap = margin * cr.m_c;
  rep.n_samples = n_samples;
  rep.seed = seed;

  std::vector<int> verdict(n_samples);  // 0 tracks, 1 tips, 2 undecided
  parallel_for(n_samples, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    const TippingOutcome o = classify(field, geometry, verification_forcing(L, rep.speed_cap, s), settings);
    verdict[i] = o.tracks() ? 0 : o.tips() ? 1 : 2;
  });
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (verdict[i] == 0) ++rep.n_tracks;
    if (verdict[i] == 1) ++rep.n_tips;
    if (verdict[i] == 2) ++rep.n_undecided;
    if (verdict[i] != 0) rep.violating_seeds.push_back(derive_seed(seed, i));
  }
  if (with_tightness) rep.tightness = check_tightness(field, geometry, cr, settings);
  rep.passed = rep.violating_seeds.empty() && (!rep.tightness || rep.tightness->passed);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log spacing needs 0 < lo <= hi");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

std::vector<SweepRow> sweep_critical_rate(const ScalarField& field, const BasinGeometry& geometry, double L_min,
                                          double L_max, std::size_t steps) {
  const std::vector<double> Ls = log_spaced(L_min, L_max, steps);
  std::vector<SweepRow> rows(Ls.size());
  parallel_for(Ls.size(), [&](std::size_t i) {
    const CriticalRate cr = critical_rate(geometry, field, Ls[i]);
    rows[i] = {Ls[i], cr.m_c, cr.side, cr.residual};
  });
  return rows;
}

namespace {

std::string g17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "L,m_c,side,J_residual\n";
  for (const auto& r : rows) os << g17(r.L) << ',' << g17(r.m_c) << ',' << sign(r.side) << ',' << g17(r.residual) << '\n';
}

std::vector<double> prototype_lambdas() { return {2.5, 3.0, 4.0, 6.0, 10.0, std::numbers::pi}; }

PrototypeRow prototype_row(double lambda_inf) {
  static const ScalarField quad = ScalarField::parse("x^2 - 1");
  const BasinGeometry g = analyze_basin(quad, -1.0);
  PrototypeRow row{};
  row.lambda_inf = lambda_inf;
  row.r_c = prototype_critical_rate_smooth(lambda_inf);
  row.m_c = prototype_critical_slope(lambda_inf);
  row.m_c_general = critical_rate(g, quad, lambda_inf).m_c;
  row.r_star = threshold_bracket(quad, g, [&](double r) { return make_tanh_ramp(lambda_inf, r); }, {1e-2, 1e2})
                   .param_critical;
  row.m_star =
      threshold_bracket(quad, g, [&](double m) { return make_piecewise_linear_ramp(lambda_inf, m); }, {0.5, 1e3})
          .param_critical;
  row.passed = std::abs(row.r_c - row.r_star) <= 1e-3 * row.r_c && std::abs(row.m_c - row.m_star) <= 1e-3 * row.m_c &&
               std::abs(row.m_c - row.m_c_general) <= 1e-6;
  return row;
}

std::vector<PrototypeRow> prototype_table() {
  const std::vector<double> lambdas = prototype_lambdas();
  std::vector<PrototypeRow> rows(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) { rows[i] = prototype_row(lambdas[i]); });
  return rows;
}

void write_prototype_csv(std::ostream& os, const std::vector<PrototypeRow>& rows) {
  os << "lambda_inf,r_c,r_star,m_c,m_star,m_c_general,passed\n";
  for (const auto& r : rows) {
    os << g17(r.lambda_inf) << ',' << g17(r.r_c) << ',' << g17(r.r_star) << ',' << g17(r.m_c) << ','
       << g17(r.m_star) << ',' << g17(r.m_c_general) << ',' << (r.passed ? "true" : "false") << '\n';
  }
}

}  // namespace tipcrit
