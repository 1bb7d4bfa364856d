// Copyright 2026 The prqkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// prqkd command-line tool. Exit codes: 0 ok, 1 insecure audit verdict,
// 2 input error (a JSON error object is printed on stderr).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prqkd/analysis.hpp"
#include "prqkd/detectors.hpp"
#include "prqkd/io.hpp"
#include "prqkd/qmath.hpp"
#include "prqkd/random.hpp"
#include "prqkd/simengine.hpp"

namespace {

using prqkd::io::ConfigError;
using prqkd::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInsecure = 1;
constexpr int kExitInput = 2;

struct Common {
  std::string config;
  std::string out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> rounds;
  std::optional<unsigned> workers;
  bool fixed_u = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* cfg = cmd->add_option("--config", c.config, "scenario JSON file");
  if (needs_config) cfg->required();
  cmd->add_option("--out", c.out, "output file (default: stdout)");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--rounds", c.rounds, "override the round count")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--fixed-u", c.fixed_u, "hold Bob's randomizer fixed at the reference setting");
}

prqkd::sim::Scenario load(const Common& c) {
  auto s = prqkd::io::load_scenario(c.config);
  if (c.seed) s.seed = *c.seed;
  if (c.rounds) s.rounds = *c.rounds;
  if (c.workers) s.workers = *c.workers;
  if (c.fixed_u) s.fixed_u = prqkd::qmath::reference_randomizer();
  return s;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw ConfigError("--out", "cannot write " + c.out);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void print_error(const std::string& field, const std::string& message, const json& extra = json::object()) {
  json err = {{"schema_version", prqkd::io::kSchemaVersion}, {"type", "error"}, {"field", field}, {"message", message}};
  err.update(extra);
  std::cerr << err.dump() << "\n";
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  // Either a comma list or start:stop:step (inclusive).
  std::vector<double> out;
  auto num = [&](const std::string& s) {
    auto v = prqkd::io::detail::parse_number(prqkd::io::detail::trim(s));
    if (!v) throw ConfigError(flag, "not a number: '" + s + "'");
    return *v;
  };
  if (text.find(':') != std::string::npos) {
    const auto parts = prqkd::io::detail::split(text, ':');
    if (parts.size() != 3) throw ConfigError(flag, "range must be start:stop:step");
    const double a = num(parts[0]), b = num(parts[1]), h = num(parts[2]);
    if (!(h > 0.0) || b < a) throw ConfigError(flag, "range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * h);
    return out;
  }
  for (const auto& part : prqkd::io::detail::split(text)) out.push_back(num(part));
  if (out.empty()) throw ConfigError(flag, "empty list");
  return out;
}

int cmd_simulate(const Common& c) {
  const auto s = load(c);
  const auto result = prqkd::sim::run(s);
  if (c.format == "csv") {
    emit(c, "# schema_version=" + std::to_string(prqkd::io::kSchemaVersion) + "\n" + prqkd::io::sweep_csv_header() +
                "\n" + prqkd::io::sweep_csv_row("none", 0.0, result) + "\n");
  } else {
    emit(c, dump(prqkd::io::to_json(result, prqkd::sim::analytic_report(s))));
  }
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values) {
  const auto s = load(c);
  const auto grid = parse_list(values, "--values");
  std::vector<prqkd::sim::SweepPoint> table;
  try {
    table = prqkd::sim::sweep(s, param, grid);
  } catch (const prqkd::sim::UnknownParameterError& e) {
    throw ConfigError("--param", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--values", e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError("--values", e.what());
  }
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& p : table) {
      auto r = prqkd::io::to_json(p.result);
      r["value"] = prqkd::io::sig9(p.value);
      rows.push_back(r);
    }
    emit(c, dump({{"schema_version", prqkd::io::kSchemaVersion}, {"type", "sweep"}, {"parameter", param}, {"points", rows}}));
  } else {
    emit(c, prqkd::io::sweep_csv(param, table));
  }
  return kExitOk;
}

int cmd_rates(const Common& c, const std::string& attack) {
  auto s = load(c);
  if (!attack.empty()) {
    const auto kind = prqkd::adversary::parse_attack_kind(attack);
    if (!kind) throw ConfigError("--attack", "unknown attack kind '" + attack + "'");
    s.mode = prqkd::sim::Mode::attack;
    s.attack.kind = *kind;
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("--attack", e.what());
    }
  }
  const auto report = prqkd::sim::analytic_report(s);
  emit(c, c.format == "csv" ? prqkd::io::rates_csv({report}) : dump(prqkd::io::to_json(report)));
  return kExitOk;
}

struct AuditArgs {
  std::vector<std::string> alert;
  std::vector<std::string> secure;
  std::string grid;
  bool gate = false;
  bool no_gate = false;
  bool clamp = false;
};

int cmd_audit(const Common& c, const AuditArgs& a) {
  std::vector<prqkd::detectors::DetectorModel> alert, secure;
  for (const auto& p : a.alert) alert.push_back(prqkd::io::load_threshold_csv(p));
  for (const auto& p : a.secure) secure.push_back(prqkd::io::load_threshold_csv(p));
  const auto grid = a.grid.empty() ? prqkd::detectors::reference_blinding_grid() : parse_list(a.grid, "--grid");
  prqkd::detectors::AuditOptions opt;
  if (a.gate && a.no_gate) throw ConfigError("--gate", "--gate and --no-gate are exclusive");
  if (a.gate) opt.variants = {prqkd::detectors::GateVariant::gated};
  if (a.no_gate) opt.variants = {prqkd::detectors::GateVariant::ungated};
  if (a.clamp) opt.policy = prqkd::detectors::Extrapolation::clamp;
  for (auto v : opt.variants) {
    for (const auto* set : {&alert, &secure}) {
      for (const auto& m : *set) {
        if (!m.has(v)) throw ConfigError(m.name, std::string("no ") + prqkd::detectors::to_string(v) + " rows");
      }
    }
  }
  const auto verdict = prqkd::detectors::audit_assignment(alert, secure, grid, opt);
  emit(c, c.format == "csv" ? prqkd::io::audit_csv(verdict) : dump(prqkd::io::to_json(verdict)));
  return verdict.secure ? kExitOk : kExitInsecure;
}

struct PmaxArgs {
  std::string purities = "1,0.78,0.63,0.53,0.5";
  std::size_t draws = 0;
  std::uint64_t seed = 1;
};

json overlap_row(double purity, const PmaxArgs& a, std::uint64_t stream) {
  const auto b = prqkd::qmath::overlap_bounds(purity);
  json row = {{"purity", prqkd::io::sig9(purity)},
              {"theta1_deg", prqkd::io::sig9(prqkd::adversary::theta1_for_purity(purity) * 180.0 / std::numbers::pi)},
              {"p_max", prqkd::io::sig9(b.max)},
              {"p_min", prqkd::io::sig9(b.min)}};
  if (a.draws > 0) {
    prqkd::RandomStream rng(a.seed, stream);
    const auto s = prqkd::qmath::sampled_overlap_extremes(prqkd::qmath::state_with_purity(purity), a.draws, rng);
    row["sampled_max"] = prqkd::io::sig9(s.max);
    row["sampled_min"] = prqkd::io::sig9(s.min);
    row["draws"] = a.draws;
  }
  return row;
}

int emit_overlap_table(const Common& c, const PmaxArgs& a, const std::vector<double>& purities, const char* type) {
  json rows = json::array();
  for (std::size_t k = 0; k < purities.size(); ++k) {
    if (!(purities[k] >= 0.5 && purities[k] <= 1.0)) throw ConfigError("--purity", "purity must lie in [1/2, 1]");
    rows.push_back(overlap_row(purities[k], a, k));
  }
  if (c.format == "csv") {
    std::string out = "# schema_version=" + std::to_string(prqkd::io::kSchemaVersion) +
                      "\npurity,theta1_deg,p_max,p_min" + (a.draws ? ",sampled_max,sampled_min" : "") + "\n";
    for (const auto& r : rows) {
      out += prqkd::io::fmt9(r["purity"]) + "," + prqkd::io::fmt9(r["theta1_deg"]) + "," + prqkd::io::fmt9(r["p_max"]) +
             "," + prqkd::io::fmt9(r["p_min"]);
      if (a.draws) out += "," + prqkd::io::fmt9(r["sampled_max"]) + "," + prqkd::io::fmt9(r["sampled_min"]);
      out += "\n";
    }
    emit(c, out);
  } else {
    emit(c, dump({{"schema_version", prqkd::io::kSchemaVersion}, {"type", type}, {"rows", rows}}));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prqkd: passive-randomizer QKD attack and audit toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  Common common;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of a scenario");
  add_common(simulate, common, true);
  add_run_flags(simulate, common);

  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep of one scenario parameter");
  add_common(sweep, common, true);
  add_run_flags(sweep, common);
  sweep->add_option("--param", param, "parameter name")->required();
  sweep->add_option("--values", values, "comma list or start:stop:step")->required();

  std::string attack;
  auto* rates = app.add_subcommand("rates", "analytic rates of a scenario");
  add_common(rates, common, true);
  rates->add_flag("--fixed-u", common.fixed_u, "hold Bob's randomizer fixed at the reference setting");
  rates->add_option("--attack", attack, "override the attack family");

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "check a detector assignment against blinding");
  add_common(audit, common, false);
  audit->add_option("--alert", audit_args.alert, "threshold CSV of an alert detector (repeatable)")->required();
  audit->add_option("--secure", audit_args.secure, "threshold CSV of a secure detector (repeatable)")->required();
  audit->add_option("--grid", audit_args.grid, "blinding powers I_B in mW (comma list or start:stop:step)");
  audit->add_flag("--gate", audit_args.gate, "gated thresholds only");
  audit->add_flag("--no-gate", audit_args.no_gate, "ungated thresholds only");
  audit->add_flag("--clamp", audit_args.clamp, "clamp curves outside their measured range");

  PmaxArgs pmax_args;
  auto* pmax = app.add_subcommand("pmax", "largest alert-path share of a trigger pulse of given purity");
  add_common(pmax, common, false);
  pmax->add_option("--purity", pmax_args.purities, "purities (comma list or start:stop:step)");
  pmax->add_option("--draws", pmax_args.draws, "Haar draws for a brute-force check");
  pmax->add_option("--seed", pmax_args.seed, "seed for the brute-force check");

  PmaxArgs bounds_args;
  std::size_t bounds_points = 51;
  auto* bounds = app.add_subcommand("bounds", "overlap bounds on an evenly spaced purity grid");
  add_common(bounds, common, false);
  bounds->add_option("--points", bounds_points, "grid size over [1/2, 1]")->check(CLI::Range(2, 100000));
  bounds->add_option("--draws", bounds_args.draws, "Haar draws per purity for a brute-force check");
  bounds->add_option("--seed", bounds_args.seed, "seed for the brute-force check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("arguments", e.what());
    return kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(common);
    if (*sweep) return cmd_sweep(common, param, values);
    if (*rates) return cmd_rates(common, attack);
    if (*audit) return cmd_audit(common, audit_args);
    if (*pmax) return emit_overlap_table(common, pmax_args, parse_list(pmax_args.purities, "--purity"), "pmax");
    if (*bounds) {
      std::vector<double> grid;
      for (std::size_t k = 0; k < bounds_points; ++k) {
        grid.push_back(0.5 + 0.5 * static_cast<double>(k) / static_cast<double>(bounds_points - 1));
      }
      return emit_overlap_table(common, bounds_args, grid, "bounds");
    }
  } catch (const ConfigError& e) {
    print_error(e.field(), e.message(), {{"rows", e.rows()}});
    return kExitInput;
  } catch (const prqkd::detectors::CoverageError& e) {
    print_error("--grid", e.what(), {{"offending_powers_mw", e.offending_powers()}});
    return kExitInput;
  } catch (const prqkd::detectors::CurveDomainError& e) {
    print_error("thresholds", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    print_error("", e.what());
    return kExitInput;
  } catch (const std::domain_error& e) {
    print_error("", e.what());
    return kExitInput;
  }
  return kExitInput;
}
