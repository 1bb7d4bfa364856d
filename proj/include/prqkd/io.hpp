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

// File formats: scenario configs (JSON), threshold curves (CSV), and the
// emitted SimResult / RatesReport / AuditVerdict documents (JSON and CSV).
// Every emitted document carries schema_version; numbers are written with
// 9 significant digits.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prqkd/adversary.hpp"
#include "prqkd/analysis.hpp"
#include "prqkd/detectors.hpp"
#include "prqkd/protocol.hpp"
#include "prqkd/simengine.hpp"

namespace prqkd::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Invalid input. `field` is a dotted JSON path or a file name; `rows` lists
/// offending CSV line numbers (1-based, header is line 1).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, std::vector<std::size_t> rows = {})
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)),
        message_(message),
        rows_(std::move(rows)) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::string field_;
  std::string message_;
  std::vector<std::size_t> rows_;
};

/// Rounds to 9 significant digits so that serialized output is stable.
inline double sig9(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Threshold CSV.

inline constexpr std::string_view kThresholdHeader = "I_mW,E_never_pJ,E_always_pJ,gated";

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses one detector's threshold table. Rows are grouped by the gated
/// flag; within each group powers must increase strictly and both energies
/// must be non-decreasing, with E_always >= E_never on every row.
inline detectors::DetectorModel parse_threshold_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line) != kThresholdHeader) {
    throw ConfigError(source, "expected header '" + std::string(kThresholdHeader) + "'", {lineno});
  }

  struct Row {
    double i, never, always;
    std::size_t line;
  };
  std::vector<Row> groups[2];
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != 4) {
      throw ConfigError(source, "row has " + std::to_string(cells.size()) + " fields, expected 4", {lineno});
    }
    std::optional<double> v[3];
    for (int c = 0; c < 3; ++c) {
      v[c] = detail::parse_number(cells[static_cast<std::size_t>(c)]);
      if (!v[c]) throw ConfigError(source, "non-numeric field '" + cells[static_cast<std::size_t>(c)] + "'", {lineno});
    }
    int gated;
    if (cells[3] == "1" || cells[3] == "true") gated = 1;
    else if (cells[3] == "0" || cells[3] == "false") gated = 0;
    else throw ConfigError(source, "gated flag must be 0/1/true/false, got '" + cells[3] + "'", {lineno});
    if (*v[0] < 0.0 || *v[1] < 0.0 || *v[2] < 0.0) throw ConfigError(source, "negative value", {lineno});
    if (*v[2] < *v[1]) throw ConfigError(source, "E_always_pJ below E_never_pJ", {lineno});
    groups[gated].push_back({*v[0], *v[1], *v[2], lineno});
  }
  if (groups[0].empty() && groups[1].empty()) throw ConfigError(source, "no data rows", {lineno});

  detectors::DetectorModel model;
  model.name = std::filesystem::path(source).stem().string();
  for (int g = 0; g < 2; ++g) {
    auto& rows = groups[g];
    if (rows.empty()) continue;
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.i < b.i; });
    std::vector<std::size_t> bad;
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (!(rows[k].i > rows[k - 1].i) || rows[k].never < rows[k - 1].never || rows[k].always < rows[k - 1].always) {
        bad.push_back(rows[k - 1].line);
        bad.push_back(rows[k].line);
      }
    }
    if (!bad.empty()) {
      std::sort(bad.begin(), bad.end());
      bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
      throw ConfigError(source, "threshold curve is not monotone (duplicate power or decreasing energy)", bad);
    }
    std::vector<detectors::ThresholdCurve::Point> never, always;
    for (const auto& r : rows) {
      never.emplace_back(r.i, r.never);
      always.emplace_back(r.i, r.always);
    }
    detectors::BlindedThresholds t{detectors::ThresholdCurve(std::move(never)),
                                   detectors::ThresholdCurve(std::move(always))};
    (g == 1 ? model.gated : model.ungated) = std::move(t);
  }
  return model;
}

inline detectors::DetectorModel load_threshold_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  return parse_threshold_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Scenario config.

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) const {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "expected a finite number");
    return d;
  }
  double probability(const std::string& key, double fallback) const {
    const double d = number(key, fallback);
    if (d < 0.0 || d > 1.0) throw ConfigError(at(key), "must lie in [0, 1], got " + fmt9(d));
    return d;
  }
  double nonnegative(const std::string& key, double fallback) const {
    const double d = number(key, fallback);
    if (d < 0.0) throw ConfigError(at(key), "must be non-negative, got " + fmt9(d));
    return d;
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  Reader object(const std::string& key) const { return Reader(raw(key), at(key)); }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(at(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

template <typename E, std::size_t N>
E choice(const Reader& r, const std::string& key, const std::array<std::string_view, N>& names, E fallback) {
  if (!r.has(key)) return fallback;
  const std::string v = r.string(key, "");
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == v) return static_cast<E>(i);
  }
  std::string allowed;
  for (auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw ConfigError(r.at(key), "unknown value '" + v + "' (allowed: " + allowed + ")");
}

inline detectors::GeigerParams read_geiger(const Reader& r, detectors::GeigerParams base) {
  base.efficiency = r.probability("efficiency", base.efficiency);
  base.background = r.probability("background", base.background);
  if (base.background >= 1.0) throw ConfigError(r.at("background"), "must be below 1");
  r.finish();
  return base;
}

inline detectors::DetectorModel read_threshold_model(const Reader& r, const std::filesystem::path& base_dir,
                                                     const std::string& name) {
  detectors::DetectorModel m;
  if (r.has("csv")) {
    auto path = std::filesystem::path(r.string("csv", ""));
    if (path.is_relative()) path = base_dir / path;
    m = load_threshold_csv(path);
  } else {
    const double never = r.nonnegative("e_never_pj", 0.0);
    const double always = r.nonnegative("e_always_pj", never);
    if (!r.has("e_never_pj")) throw ConfigError(r.at("e_never_pj"), "required unless 'csv' is given");
    if (always < never) throw ConfigError(r.at("e_always_pj"), "must not be below e_never_pj");
    detectors::BlindedThresholds t{detectors::ThresholdCurve::constant(never),
                                   detectors::ThresholdCurve::constant(always)};
    m.gated = t;
    m.ungated = t;
  }
  r.finish();
  m.name = name;
  return m;
}

inline constexpr std::array<std::string_view, 2> kModeNames{"honest", "attack"};
inline constexpr std::array<std::string_view, 2> kStatisticsNames{"poisson", "single_photon"};
inline constexpr std::array<std::string_view, 3> kSecureBasisNames{"passive", "da", "rl"};
inline constexpr std::array<std::string_view, 2> kEveModelNames{"poisson", "ideal_bb84"};
inline constexpr std::array<std::string_view, 2> kGateNames{"gated", "ungated"};
inline constexpr std::array<std::string_view, 2> kExtrapolationNames{"forbid", "clamp"};

}  // namespace detail

/// Reads a scenario document. Relative threshold CSV paths resolve against
/// `base_dir`.
inline sim::Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir = ".") {
  using detail::Reader;
  const Reader root(doc, "");
  sim::Scenario s;
  const auto version = root.count("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  s.mode = detail::choice(root, "mode", detail::kModeNames, sim::Mode::honest);
  s.rounds = root.count("rounds", s.rounds);
  if (s.rounds < 1) throw ConfigError("rounds", "must be at least 1");
  s.seed = root.count("seed", s.seed);
  s.workers = static_cast<unsigned>(root.count("workers", s.workers));
  if (s.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (root.boolean("fixed_u", false)) s.fixed_u = qmath::reference_randomizer();

  if (root.has("system")) {
    const Reader sys = root.object("system");
    auto& p = s.system;
    p.mu = sys.nonnegative("mu", p.mu);
    p.transmittance = sys.probability("transmittance", p.transmittance);
    p.mu_e = sys.nonnegative("mu_e", p.mu_e);
    p.switch_rate = sys.probability("switch_rate", p.switch_rate);
    p.receiver.fidelity = sys.probability("bob_fidelity", p.receiver.fidelity);
    if (p.receiver.fidelity < 0.5) throw ConfigError(sys.at("bob_fidelity"), "must lie in [1/2, 1]");
    p.receiver.statistics = detail::choice(sys, "photon_statistics", detail::kStatisticsNames, p.receiver.statistics);
    p.receiver.secure_basis = detail::choice(sys, "secure_basis", detail::kSecureBasisNames, p.receiver.secure_basis);
    if (sys.has("detectors")) {
      const Reader dets = sys.object("detectors");
      detectors::GeigerParams base;
      if (dets.has("default")) base = detail::read_geiger(dets.object("default"), base);
      for (auto& d : p.receiver.detectors) d = base;
      for (std::size_t i = 0; i < protocol::kDetectorCount; ++i) {
        const std::string name = protocol::kDetectorNames[i];
        if (dets.has(name)) p.receiver.detectors[i] = detail::read_geiger(dets.object(name), base);
      }
      dets.finish();
    }
    if (sys.has("eve")) {
      const Reader e = sys.object("eve");
      p.eve.mu = e.nonnegative("mu", p.eve.mu);
      p.eve.fidelity = e.probability("fidelity", p.eve.fidelity);
      if (p.eve.fidelity < 0.5) throw ConfigError(e.at("fidelity"), "must lie in [1/2, 1]");
      p.eve.efficiency = e.probability("efficiency", p.eve.efficiency);
      p.eve.model = detail::choice(e, "model", detail::kEveModelNames, p.eve.model);
      e.finish();
    }
    sys.finish();
  }

  if (root.has("attack")) {
    const Reader a = root.object("attack");
    auto& at = s.attack;
    if (a.has("kind")) {
      const auto name = a.string("kind", "");
      const auto kind = adversary::parse_attack_kind(name);
      if (!kind) throw ConfigError(a.at("kind"), "unknown attack kind '" + name + "'");
      at.kind = *kind;
    }
    if (a.has("source")) {
      const Reader src = a.object("source");
      if (src.has("purity") && src.has("theta1_deg")) {
        throw ConfigError(src.at("purity"), "give either purity or theta1_deg, not both");
      }
      at.source.theta1 = qmath::degrees(src.number("theta1_deg", 0.0));
      if (src.has("purity")) {
        const double pur = src.number("purity", 1.0);
        if (pur < 0.5 || pur > 1.0) throw ConfigError(src.at("purity"), "must lie in [1/2, 1]");
        at.source.theta1 = adversary::theta1_for_purity(pur);
      }
      at.source.theta2 = qmath::degrees(src.number("theta2_deg", 0.0));
      at.source.qwp_angle = qmath::degrees(src.number("qwp_deg", -45.0));
      at.source.pulse_energy_pj = src.nonnegative("trigger_energy_pj", at.source.pulse_energy_pj);
      const auto phase = src.count("phase_index", 0);
      if (phase > 3) throw ConfigError(src.at("phase_index"), "must be 0, 1, 2 or 3");
      at.source.phase = protocol::Phase(static_cast<int>(phase));
      src.finish();
    }
    at.blinding_power_mw = a.nonnegative("blinding_power_mw", at.blinding_power_mw);
    if (a.has("blinding_bloch")) {
      const auto& v = a.raw("blinding_bloch");
      if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
        throw ConfigError(a.at("blinding_bloch"), "expected three numbers");
      }
      at.blinding_bloch = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
      const auto& b = at.blinding_bloch;
      if (b[0] * b[0] + b[1] * b[1] + b[2] * b[2] > 1.0 + 1e-12) {
        throw ConfigError(a.at("blinding_bloch"), "Bloch vector longer than 1");
      }
    }
    if (a.has("weights")) {
      const Reader w = a.object("weights");
      at.weights.quantum = w.probability("quantum", 0.0);
      at.weights.blinding = w.probability("blinding", 0.0);
      at.weights.wavelength = w.probability("wavelength", 0.0);
      w.finish();
      try {
        at.weights.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(a.at("weights"), e.what());
      }
    }
    at.perfect_control = a.boolean("perfect_control", at.perfect_control);
    at.gate = detail::choice(a, "gate", detail::kGateNames, at.gate);
    at.extrapolation = detail::choice(a, "extrapolation", detail::kExtrapolationNames, at.extrapolation);
    a.finish();
  }

  if (root.has("thresholds")) {
    const Reader t = root.object("thresholds");
    std::array<std::optional<detectors::DetectorModel>, protocol::kDetectorCount> models;
    if (t.has("alert")) {
      auto m = detail::read_threshold_model(t.object("alert"), base_dir, "alert");
      models[0] = models[1] = m;
    }
    if (t.has("secure")) {
      auto m = detail::read_threshold_model(t.object("secure"), base_dir, "secure");
      for (std::size_t d = 2; d < protocol::kDetectorCount; ++d) models[d] = m;
    }
    for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) {
      const std::string name = protocol::kDetectorNames[d];
      if (t.has(name)) models[d] = detail::read_threshold_model(t.object(name), base_dir, name);
    }
    t.finish();
    for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) {
      if (!models[d]) throw ConfigError(t.at(protocol::kDetectorNames[d]), "no threshold model for this detector");
      models[d]->name = protocol::kDetectorNames[d];
      models[d]->label = protocol::is_alert_detector(d) ? detectors::PathLabel::alert : detectors::PathLabel::secure;
      s.detector_models.push_back(*models[d]);
    }
  }
  root.finish();

  if (s.uses_blinding() && s.detector_models.empty()) {
    throw ConfigError("thresholds", "blinding attacks need threshold models for all six detectors");
  }
  if (s.uses_blinding()) {
    try {
      analysis::split_thresholds(s.detector_models, s.attack);
    } catch (const std::exception& e) {
      throw ConfigError("thresholds", e.what());
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  return s;
}

inline sim::Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Emitted documents.

inline json detectors_json(const std::array<double, protocol::kDetectorCount>& v) {
  json j = json::object();
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) j[protocol::kDetectorNames[d]] = sig9(v[d]);
  return j;
}

inline std::array<double, protocol::kDetectorCount> detectors_from_json(const json& j) {
  std::array<double, protocol::kDetectorCount> v{};
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) v[d] = j.at(protocol::kDetectorNames[d]).get<double>();
  return v;
}

inline json to_json(const analysis::RatesReport& r) {
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = sig9(v);
  return {{"schema_version", kSchemaVersion},
          {"type", "rates_report"},
          {"kind", r.kind},
          {"provenance", analysis::to_string(r.provenance)},
          {"alert_rate", sig9(r.alert_rate)},
          {"sifted_rate", sig9(r.sifted_rate)},
          {"qber", sig9(r.qber)},
          {"detector_click_rates", detectors_json(r.detector_click_rates)},
          {"diagnostics", diag},
          {"warnings", r.warnings}};
}

inline analysis::RatesReport rates_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion || j.at("type") != "rates_report") {
    throw ConfigError("schema_version", "not a version-1 rates_report document");
  }
  analysis::RatesReport r;
  r.kind = j.at("kind").get<std::string>();
  r.provenance = j.at("provenance") == "analytic" ? analysis::Provenance::analytic : analysis::Provenance::monte_carlo;
  r.alert_rate = j.at("alert_rate").get<double>();
  r.sifted_rate = j.at("sifted_rate").get<double>();
  r.qber = j.at("qber").get<double>();
  r.detector_click_rates = detectors_from_json(j.at("detector_click_rates"));
  for (const auto& [k, v] : j.at("diagnostics").items()) r.diagnostics[k] = v.get<double>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline json to_json(const sim::SimResult& r, const std::optional<analysis::RatesReport>& analytic = std::nullopt) {
  json counts = json::object();
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) counts[protocol::kDetectorNames[d]] = r.detector_clicks[d];
  json j = {{"schema_version", kSchemaVersion},
            {"type", "sim_result"},
            {"mode", r.mode},
            {"kind", r.kind},
            {"rounds", r.rounds},
            {"seed", r.seed},
            {"workers", r.workers},
            {"fixed_u", r.fixed_u},
            {"alert_rate", sig9(r.rates.alert_rate)},
            {"alert_se", sig9(r.alert_se)},
            {"sifted_rate", sig9(r.rates.sifted_rate)},
            {"sifted_se", sig9(r.sifted_se)},
            {"qber", sig9(r.rates.qber)},
            {"qber_se", sig9(r.qber_se)},
            {"sifted", r.sifted},
            {"errors", r.errors},
            {"alert_clicks", r.alert_clicks},
            {"alert_rounds", r.alert_rounds},
            {"discarded", r.discarded},
            {"detector_clicks", counts},
            {"detector_click_rates", detectors_json(r.rates.detector_click_rates)},
            {"mean_alert_arrival", sig9(r.mean_alert_arrival)},
            {"mean_alert_arrival_se", sig9(r.mean_alert_arrival_se)},
            {"mean_secure_arrival", sig9(r.mean_secure_arrival)},
            {"energy_fractions", detectors_json(r.energy_fractions)},
            {"wall_time_s", sig9(r.wall_time_s)}};
  if (analytic) j["analytic"] = to_json(*analytic);
  return j;
}

inline sim::SimResult sim_result_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion || j.at("type") != "sim_result") {
    throw ConfigError("schema_version", "not a version-1 sim_result document");
  }
  sim::SimResult r;
  r.mode = j.at("mode").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.rounds = j.at("rounds").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.workers = j.at("workers").get<unsigned>();
  r.fixed_u = j.at("fixed_u").get<bool>();
  r.rates.kind = r.kind;
  r.rates.provenance = analysis::Provenance::monte_carlo;
  r.rates.alert_rate = j.at("alert_rate").get<double>();
  r.alert_se = j.at("alert_se").get<double>();
  r.rates.sifted_rate = j.at("sifted_rate").get<double>();
  r.sifted_se = j.at("sifted_se").get<double>();
  r.rates.qber = j.at("qber").get<double>();
  r.qber_se = j.at("qber_se").get<double>();
  r.sifted = j.at("sifted").get<std::uint64_t>();
  r.errors = j.at("errors").get<std::uint64_t>();
  r.alert_clicks = j.at("alert_clicks").get<std::uint64_t>();
  r.alert_rounds = j.at("alert_rounds").get<std::uint64_t>();
  r.discarded = j.at("discarded").get<std::uint64_t>();
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) {
    r.detector_clicks[d] = j.at("detector_clicks").at(protocol::kDetectorNames[d]).get<std::uint64_t>();
  }
  r.rates.detector_click_rates = detectors_from_json(j.at("detector_click_rates"));
  r.mean_alert_arrival = j.at("mean_alert_arrival").get<double>();
  r.mean_alert_arrival_se = j.at("mean_alert_arrival_se").get<double>();
  r.mean_secure_arrival = j.at("mean_secure_arrival").get<double>();
  r.energy_fractions = detectors_from_json(j.at("energy_fractions"));
  r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

inline json to_json(const detectors::AuditVerdict& v) {
  json points = json::array();
  json violations = json::array();
  for (const auto& p : v.points) {
    json row = {{"alert_index", p.alert_index},
                {"secure_index", p.secure_index},
                {"blinding_power_mw", sig9(p.blinding_power)},
                {"gate", detectors::to_string(p.variant)},
                {"e_never_alert_pj", sig9(p.e_alert)},
                {"e_never_secure_pj", sig9(p.e_secure)},
                {"ratio", sig9(p.ratio)},
                {"violating", p.violating},
                // Camouflage rectangle: alert energy below e_alert, secure above e_secure.
                {"camouflage", {{"alert_max_pj", sig9(p.e_alert)}, {"secure_min_pj", sig9(p.e_secure)}}}};
    if (auto seg = p.line_overlap()) {
      row["line_overlap_alert_pj"] = {sig9(seg->first), sig9(seg->second)};
      violations.push_back(row);
    } else {
      row["line_overlap_alert_pj"] = nullptr;
    }
    points.push_back(row);
  }
  json variants = json::array();
  for (auto g : v.variants) variants.push_back(detectors::to_string(g));
  return {{"schema_version", kSchemaVersion},
          {"type", "audit_verdict"},
          {"secure", v.secure},
          {"secure_gated", v.secure_gated},
          {"secure_ungated", v.secure_ungated},
          {"variants", variants},
          {"violation_count", violations.size()},
          {"violations", violations},
          {"points", points}};
}

inline detectors::AuditVerdict audit_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion || j.at("type") != "audit_verdict") {
    throw ConfigError("schema_version", "not a version-1 audit_verdict document");
  }
  detectors::AuditVerdict v;
  v.secure = j.at("secure").get<bool>();
  v.secure_gated = j.at("secure_gated").get<bool>();
  v.secure_ungated = j.at("secure_ungated").get<bool>();
  auto gate = [](const json& s) {
    return s == "gated" ? detectors::GateVariant::gated : detectors::GateVariant::ungated;
  };
  for (const auto& g : j.at("variants")) v.variants.push_back(gate(g));
  for (const auto& p : j.at("points")) {
    v.points.push_back({p.at("alert_index").get<std::size_t>(), p.at("secure_index").get<std::size_t>(),
                        p.at("blinding_power_mw").get<double>(), gate(p.at("gate")),
                        p.at("e_never_alert_pj").get<double>(), p.at("e_never_secure_pj").get<double>(),
                        p.at("ratio").get<double>(), p.at("violating").get<bool>()});
  }
  return v;
}

// ---------------------------------------------------------------------------
// CSV writers. Each starts with a comment line carrying the schema version.

inline std::string sweep_csv_header() {
  std::string h = "parameter,value,alert_rate,alert_se,sifted_rate,sifted_se,qber,qber_se";
  for (auto n : protocol::kDetectorNames) h += std::string(",clicks_") + n;
  h += ",rounds,mean_alert_arrival,mean_alert_arrival_se,mean_secure_arrival";
  for (auto n : protocol::kDetectorNames) h += std::string(",energy_") + n;
  return h;
}

inline std::string sweep_csv_row(std::string_view parameter, double value, const sim::SimResult& r) {
  std::string row = std::string(parameter) + "," + fmt9(value) + "," + fmt9(r.rates.alert_rate) + "," +
                    fmt9(r.alert_se) + "," + fmt9(r.rates.sifted_rate) + "," + fmt9(r.sifted_se) + "," +
                    fmt9(r.rates.qber) + "," + fmt9(r.qber_se);
  for (auto c : r.detector_clicks) row += "," + std::to_string(c);
  row += "," + std::to_string(r.rounds) + "," + fmt9(r.mean_alert_arrival) + "," + fmt9(r.mean_alert_arrival_se) +
         "," + fmt9(r.mean_secure_arrival);
  for (double e : r.energy_fractions) row += "," + fmt9(e);
  return row;
}

inline std::string sweep_csv(std::string_view parameter, const std::vector<sim::SweepPoint>& table) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\n" + sweep_csv_header() + "\n";
  for (const auto& p : table) out += sweep_csv_row(parameter, p.value, p.result) + "\n";
  return out;
}

inline std::string rates_csv(const std::vector<analysis::RatesReport>& reports) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + "\nkind,provenance,alert_rate,sifted_rate,qber";
  for (auto n : protocol::kDetectorNames) out += std::string(",click_rate_") + n;
  out += "\n";
  for (const auto& r : reports) {
    out += r.kind + "," + analysis::to_string(r.provenance) + "," + fmt9(r.alert_rate) + "," + fmt9(r.sifted_rate) +
           "," + fmt9(r.qber);
    for (double c : r.detector_click_rates) out += "," + fmt9(c);
    out += "\n";
  }
  return out;
}

inline std::string audit_csv(const detectors::AuditVerdict& v) {
  std::string out = "# schema_version=" + std::to_string(kSchemaVersion) +
                    "\nalert_index,secure_index,blinding_power_mw,gate,e_never_alert_pj,e_never_secure_pj,ratio,"
                    "violating,overlap_lo_pj,overlap_hi_pj\n";
  for (const auto& p : v.points) {
    const auto seg = p.line_overlap();
    out += std::to_string(p.alert_index) + "," + std::to_string(p.secure_index) + "," + fmt9(p.blinding_power) + "," +
           detectors::to_string(p.variant) + "," + fmt9(p.e_alert) + "," + fmt9(p.e_secure) + "," + fmt9(p.ratio) +
           "," + (p.violating ? "1" : "0") + "," + (seg ? fmt9(seg->first) : "") + "," + (seg ? fmt9(seg->second) : "") +
           "\n";
  }
  return out;
}

}  // namespace prqkd::io
