#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tipcrit/classifier.hpp"
#include "tipcrit/field.hpp"
#include "tipcrit/optimal_control.hpp"

namespace tipcrit {

// Per-sample seed from the root seed and the sample index (splitmix64 of the
// pair), so a sample's forcing does not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

// TIPCRIT_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to `workers` threads. The first
// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = worker_count());

// The random forcing used for sample i of a verification campaign.
ForcingProfile verification_forcing(double arclength, double speed_cap, std::uint64_t sample_seed);

struct TightnessCheck {
  double slope_above;  // 1.001 m_c
  double slope_below;  // 0.999 m_c
  bool above_tips;
  bool below_tracks;
  double m_star;
  double m_star_width;
  bool passed;
};

// Linear ramp of total displacement sign*L at the given slope magnitude.
ForcingProfile escape_ramp(double arclength, double slope, Side side);

TightnessCheck check_tightness(const ScalarField& field, const BasinGeometry& geometry, const CriticalRate& cr,
                               const ClassificationSettings& settings = {});

struct VerificationReport {
  std::string field;
  double attractor;
  double L;
  double m_c;
  Side side;
  double margin;
  double speed_cap;
  std::size_t n_samples;
  std::size_t n_tracks;
  std::size_t n_tips;
  std::size_t n_undecided;
  std::uint64_t seed;
  std::vector<std::uint64_t> violating_seeds;  // sample seeds that did not track
  std::optional<TightnessCheck> tightness;
  bool passed;
  double wall_time_s;
};

VerificationReport verify_necessity(const ScalarField& field, const BasinGeometry& geometry, double L,
                                    std::size_t n_samples, std::uint64_t seed, double margin,
                                    bool with_tightness = true, const ClassificationSettings& settings = {});

struct SweepRow {
  double L;
  double m_c;
  Side side;
  double residual;
};

// steps log-spaced budgets from L_min to L_max inclusive (one row at L_min when steps == 1).
std::vector<SweepRow> sweep_critical_rate(const ScalarField& field, const BasinGeometry& geometry, double L_min,
                                          double L_max, std::size_t steps);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

std::vector<double> log_spaced(double lo, double hi, std::size_t n);

struct PrototypeRow {
  double lambda_inf;
  double r_c;          // closed form
  double r_star;       // tanh-family threshold by simulation
  double m_c;          // implicit equation
  double m_star;       // linear-ramp threshold by simulation
  double m_c_general;  // critical_rate on x^2 - 1 with L = lambda_inf
  bool passed;
};

std::vector<double> prototype_lambdas();

PrototypeRow prototype_row(double lambda_inf);

std::vector<PrototypeRow> prototype_table();

void write_prototype_csv(std::ostream& os, const std::vector<PrototypeRow>& rows);

}  // namespace tipcrit
