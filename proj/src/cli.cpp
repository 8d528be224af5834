#include "tipcrit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "tipcrit/classifier.hpp"
#include "tipcrit/field.hpp"
#include "tipcrit/forcing.hpp"
#include "tipcrit/harness.hpp"
#include "tipcrit/optimal_control.hpp"

namespace tipcrit {

namespace {

using Json = nlohmann::ordered_json;

// JSON has no infinity; write it as a string.
Json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string g17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json geometry_json(const ScalarField& field, const BasinGeometry& g) {
  return Json{{"field", field.to_string()}, {"a", num(g.a)},          {"alpha", num(g.alpha)},
              {"beta", num(g.beta)},        {"R", num(g.R)},          {"mu_minus", num(g.mu_minus)},
              {"mu_plus", num(g.mu_plus)},  {"mu", num(g.mu)}};
}

Json outcome_json(const TippingOutcome& o) {
  Json j{{"variant", std::string(o.name())}};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Tracks>) {
          j["final_distance_to_a"] = num(v.final_distance_to_a);
        } else if constexpr (std::is_same_v<T, Tips>) {
          j["exit_side"] = sign(v.exit_side);
          j["exit_time"] = num(v.exit_time);
        } else if constexpr (std::is_same_v<T, Critical>) {
          j["boundary_distance"] = num(v.boundary_distance);
        } else {
          j["final_value"] = num(v.final_value);
        }
      },
      o.variant);
  j["y_at_forcing_end"] = num(o.y_at_forcing_end);
  j["min_boundary_distance"] = num(o.min_boundary_distance);
  return j;
}

Json report_json(const VerificationReport& r, bool timing) {
  Json j{{"field", r.field},
         {"attractor", num(r.attractor)},
         {"L", num(r.L)},
         {"m_c", num(r.m_c)},
         {"side", sign(r.side)},
         {"margin", num(r.margin)},
         {"speed_cap", num(r.speed_cap)},
         {"seed", r.seed},
         {"n_samples", r.n_samples},
         {"n_tracks", r.n_tracks},
         {"n_tips", r.n_tips},
         {"n_undecided", r.n_undecided},
         {"violating_seeds", r.violating_seeds}};
  if (r.tightness) {
    const auto& t = *r.tightness;
    j["tightness"] = Json{{"slope_above", num(t.slope_above)}, {"above_tips", t.above_tips},
                          {"slope_below", num(t.slope_below)}, {"below_tracks", t.below_tracks},
                          {"m_star", num(t.m_star)},           {"m_star_width", num(t.m_star_width)},
                          {"passed", t.passed}};
  }
  j["passed"] = r.passed;
  if (timing) j["wall_time_s"] = r.wall_time_s;
  return j;
}

// Flat objects render as a two-line CSV; nested values are dumped as JSON text.
std::string json_to_csv(const Json& j) {
  std::string header, row;
  for (const auto& [key, value] : j.items()) {
    if (!header.empty()) {
      header += ',';
      row += ',';
    }
    header += key;
    if (value.is_number_float()) {
      row += g17(value.get<double>());
    } else if (value.is_string()) {
      row += value.get<std::string>();
    } else {
      std::string s = value.dump();
      if (s.find(',') != std::string::npos) s = '"' + s + '"';
      row += s;
    }
  }
  return header + '\n' + row + '\n';
}

struct Common {
  std::string field = "x^2-1";
  double attractor = 0.0;
  std::string out_path;
  bool json = false;
  bool csv = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--field", c.field, "Right-hand side f(x), e.g. \"x^2-1\"")->required();
  sub->add_option("--attractor", c.attractor, "Attracting equilibrium a (nearest root is used)")->required();
  sub->add_option("--out", c.out_path, "Write output to this file instead of stdout");
  auto* j = sub->add_flag("--json", c.json, "JSON output");
  auto* v = sub->add_flag("--csv", c.csv, "CSV output");
  j->excludes(v);
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void emit(const Common& c, const Json& j, std::ostream& out, bool csv_default = false) {
  Output o(c.out_path, out);
  if (c.csv || (csv_default && !c.json)) {
    o.stream() << json_to_csv(j);
  } else {
    o.stream() << j.dump(2) << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Critical forcing speeds for rate-induced tipping in x' = f(x + lambda(t))", "tipcrit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tipcrit 0.1.0");

  Common common;
  std::function<int()> action;

  auto* analyze = app.add_subcommand("analyze", "Basin geometry around an attractor");
  add_common(analyze, common);
  analyze->callback([&] {
    action = [&] {
      const ScalarField f = ScalarField::parse(common.field);
      emit(common, geometry_json(f, analyze_basin(f, common.attractor)), out);
      return int{kExitOk};
    };
  });

  double L = 0.0;
  auto* crit = app.add_subcommand("critical-rate", "Critical speed m_c for an arclength budget");
  add_common(crit, common);
  crit->add_option("-L,--arclength", L, "Arclength budget L (> basin radius R)")->required();
  crit->callback([&] {
    action = [&] {
      const ScalarField f = ScalarField::parse(common.field);
      const BasinGeometry g = analyze_basin(f, common.attractor);
      const CriticalRate cr = critical_rate(g, f, L);
      const double width = escape_time(g, f, cr.side, cr.m_c);
      Json j{{"field", f.to_string()},
             {"L", num(L)},
             {"m_c", num(cr.m_c)},
             {"side", sign(cr.side)},
             {"bracket", Json::array({num(cr.bracket_lo), num(cr.bracket_hi)})},
             {"residual", num(cr.residual)},
             {"pulse_width", num(width)},
             {"R", num(g.R)},
             {"mu", num(g.mu)}};
      emit(common, j, out);
      return int{kExitOk};
    };
  });

  std::string forcing;
  bool x_frame = false;
  auto* cls = app.add_subcommand("classify", "Simulate the pullback solution under a forcing");
  add_common(cls, common);
  cls->add_option("--forcing", forcing,
                  "pl:LAMBDA_INF:SLOPE | tanh:LAMBDA_INF:R | knots:t,v;t,v;... | random:L:CAP:N:SEED")
      ->required();
  cls->add_flag("--x-frame", x_frame, "Report values in the original frame x = y - lambda");
  cls->callback([&] {
    action = [&] {
      const ScalarField f = ScalarField::parse(common.field);
      const BasinGeometry g = analyze_basin(f, common.attractor);
      const ForcingProfile p = parse_forcing_spec(forcing);
      Json j;
      if (x_frame) {
        const XFrameOutcome x = classify_x_frame(f, g, p);
        j = outcome_json(x.outcome);
        j["frame"] = "x";
        j["x_limit"] = x.x_limit ? num(*x.x_limit) : Json(nullptr);
      } else {
        j = outcome_json(classify(f, g, p));
      }
      emit(common, j, out);
      return int{kExitOk};
    };
  });

  double L_min = 0.0, L_max = 0.0, M_min = 0.0, M_max = 0.0;
  std::size_t steps = 50;
  std::string table = "rate";
  auto* sweep = app.add_subcommand("sweep", "Table of m_c(L) or of the cost curve J(M)");
  add_common(sweep, common);
  sweep->add_option("--table", table, "rate: L,m_c,side,J_residual; cost: M,J_plus,J_minus,J")
      ->check(CLI::IsMember({"rate", "cost"}));
  sweep->add_option("--L-min", L_min, "Smallest budget (rate table)");
  sweep->add_option("--L-max", L_max, "Largest budget (rate table)");
  sweep->add_option("--M-min", M_min, "Smallest speed (cost table; default 1.001 mu)");
  sweep->add_option("--M-max", M_max, "Largest speed (cost table; default 1000)");
  sweep->add_option("--steps", steps, "Number of log-spaced rows")->check(CLI::PositiveNumber);
  sweep->callback([&] {
    action = [&] {
      const ScalarField f = ScalarField::parse(common.field);
      const BasinGeometry g = analyze_basin(f, common.attractor);
      Output o(common.out_path, out);
      if (table == "rate") {
        if (!(L_min > 0.0) || !(L_max >= L_min)) throw CLI::ValidationError("--L-min/--L-max", "need 0 < L-min <= L-max");
        write_sweep_csv(o.stream(), sweep_critical_rate(f, g, L_min, L_max, steps));
      } else {
        const double lo = M_min > 0.0 ? M_min : 1.001 * g.mu;
        const double hi = M_max > 0.0 ? M_max : 1e3;
        const std::vector<double> Ms = log_spaced(lo, hi, steps);
        write_cost_curve_csv(o.stream(), cost_curve(g, f, Ms));
      }
      return int{kExitOk};
    };
  });

  std::size_t n_samples = 200;
  std::uint64_t seed = 42;
  double margin = 0.95;
  bool no_tightness = false, timing = false;
  auto* verify = app.add_subcommand("verify", "Seeded random forcings below the speed cap must all track");
  add_common(verify, common);
  verify->add_option("-L,--arclength", L, "Arclength budget")->required();
  verify->add_option("-n,--samples", n_samples, "Number of random forcings");
  verify->add_option("--seed", seed, "Root seed");
  verify->add_option("--margin", margin, "Speed cap as a fraction of m_c")->check(CLI::Range(0.0, 1.0));
  verify->add_flag("--no-tightness", no_tightness, "Skip the ramp pair at 1.001 and 0.999 m_c");
  verify->add_flag("--timing", timing, "Include wall time (makes output nondeterministic)");
  verify->callback([&] {
    action = [&] {
      const ScalarField f = ScalarField::parse(common.field);
      const BasinGeometry g = analyze_basin(f, common.attractor);
      const VerificationReport r = verify_necessity(f, g, L, n_samples, seed, margin, !no_tightness);
      emit(common, report_json(r, timing), out);
      return int{r.passed ? kExitOk : kExitVerificationFailed};
    };
  });

  std::string proto_out;
  auto* proto = app.add_subcommand("prototype", "Closed-form prototype thresholds against simulation");
  proto->add_option("--out", proto_out, "Write CSV to this file instead of stdout");
  proto->callback([&] {
    action = [&] {
      const auto rows = prototype_table();
      Output o(proto_out, out);
      write_prototype_csv(o.stream(), rows);
      bool ok = true;
      for (const auto& r : rows) ok = ok && r.passed;
      return int{ok ? kExitOk : kExitVerificationFailed};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    return action ? action() : int{kExitError};
  } catch (const FieldAnalysisError& e) {
    err << "field analysis error: " << e.what() << '\n';
    return kExitFieldFault;
  } catch (const ParseError& e) {
    err << "field parse error at offset " << e.offset() << ": " << e.what() << '\n';
    return kExitFieldFault;
  } catch (const InfeasibleBudgetError& e) {
    err << "infeasible budget: " << e.what() << '\n';
    return kExitInfeasibleBudget;
  } catch (const CLI::ValidationError& e) {
    err << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace tipcrit
