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

// Single-photon detector models and the detector-assignment auditor.
//
// Geiger mode: a detector with efficiency eta and per-gate background c
// clicks on a pulse of mean photon number mu with probability
// c + 1 - exp(-eta mu), clamped to [0, 1].
//
// Blinded (linear) mode: thresholds E_never(I) <= E_always(I) depend on the
// blinding power I reaching the detector. Below E_never the detector never
// clicks, above E_always it always clicks, and the click probability ramps
// linearly in between.
//
// Blinding split: with unpolarized blinding of total power I_B, every alert
// detector sees I_B/4 and every secure detector I_B/8.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prqkd/qmath.hpp"

namespace prqkd::detectors {

struct GeigerParams {
  double efficiency = 1.0;
  double background = 0.0;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
    if (!(background >= 0.0 && background < 1.0)) throw std::invalid_argument("background must lie in [0, 1)");
  }
};

inline double geiger_click_probability(const GeigerParams& params, double mean_photons) {
  if (!(mean_photons >= 0.0)) throw std::domain_error("mean photon number must be non-negative");
  const double p = params.background + 1.0 - std::exp(-params.efficiency * mean_photons);
  return std::clamp(p, 0.0, 1.0);
}

/// Linear ramp between the two thresholds.
inline double ramp_click_probability(double energy, double e_never, double e_always) {
  if (energy < e_never) return 0.0;
  if (energy >= e_always) return 1.0;
  return (energy - e_never) / (e_always - e_never);
}

enum class Extrapolation { forbid, clamp };

class CurveDomainError : public std::out_of_range {
 public:
  CurveDomainError(double power, double lo, double hi)
      : std::out_of_range("blinding power " + std::to_string(power) + " mW outside tabulated range [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        power_(power) {}
  double power() const { return power_; }

 private:
  double power_;
};

/// Threshold energy (pJ) versus blinding power (mW), piecewise linear.
class ThresholdCurve {
 public:
  using Point = std::pair<double, double>;

  ThresholdCurve() = default;

  /// Requires at least one point, strictly increasing powers and
  /// non-decreasing energies.
  explicit ThresholdCurve(std::vector<Point> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("threshold curve needs at least one point");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto [power, energy] = points_[i];
      if (!std::isfinite(power) || !std::isfinite(energy) || energy < 0.0) {
        throw std::invalid_argument("threshold curve point " + std::to_string(i) + " is not a finite non-negative value");
      }
      if (i > 0 && !(power > points_[i - 1].first)) {
        throw std::invalid_argument("threshold curve powers must be strictly increasing at point " + std::to_string(i));
      }
      if (i > 0 && energy < points_[i - 1].second) {
        throw std::invalid_argument("threshold curve energies must be non-decreasing at point " + std::to_string(i));
      }
    }
  }

  /// A curve that is the same energy at every power.
  static ThresholdCurve constant(double energy) { return ThresholdCurve({{0.0, energy}, {1e9, energy}}); }

  const std::vector<Point>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  double min_power() const { return points_.front().first; }
  double max_power() const { return points_.back().first; }
  bool covers(double power) const { return !empty() && power >= min_power() && power <= max_power(); }

  double at(double power, Extrapolation policy = Extrapolation::forbid) const {
    if (empty()) throw std::logic_error("threshold curve is empty");
    if (!covers(power)) {
      if (policy == Extrapolation::forbid) throw CurveDomainError(power, min_power(), max_power());
      power = std::clamp(power, min_power(), max_power());
    }
    auto hi = std::lower_bound(points_.begin(), points_.end(), power,
                               [](const Point& p, double x) { return p.first < x; });
    if (hi->first == power || hi == points_.begin()) return hi->second;
    auto lo = std::prev(hi);
    const double t = (power - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  }

  /// True when secant slopes never increase (concave, "compressive" growth).
  bool is_compressive(double tolerance = 1e-12) const {
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double slope =
          (points_[i].second - points_[i - 1].second) / (points_[i].first - points_[i - 1].first);
      if (slope > previous + tolerance) return false;
      previous = slope;
    }
    return true;
  }

 private:
  std::vector<Point> points_;
};

struct BlindedThresholds {
  ThresholdCurve e_never;
  ThresholdCurve e_always;

  /// Both curves at one power; throws if E_always < E_never there.
  std::pair<double, double> at(double power, Extrapolation policy = Extrapolation::forbid) const {
    const double never = e_never.at(power, policy);
    const double always = e_always.at(power, policy);
    if (always < never) {
      throw std::invalid_argument("E_always below E_never at " + std::to_string(power) + " mW");
    }
    return {never, always};
  }
};

enum class GateVariant { gated, ungated };

inline const char* to_string(GateVariant v) { return v == GateVariant::gated ? "gated" : "ungated"; }

enum class PathLabel { alert, secure };

struct DetectorModel {
  std::string name;
  GeigerParams geiger;
  std::optional<BlindedThresholds> gated;
  std::optional<BlindedThresholds> ungated;
  PathLabel label = PathLabel::secure;

  const BlindedThresholds& thresholds(GateVariant variant) const {
    const auto& t = variant == GateVariant::gated ? gated : ungated;
    if (!t) throw std::invalid_argument("detector '" + name + "' has no " + to_string(variant) + " thresholds");
    return *t;
  }

  bool has(GateVariant variant) const { return variant == GateVariant::gated ? gated.has_value() : ungated.has_value(); }
};

inline double blinded_click_probability(const DetectorModel& model, double pulse_energy, double blinding_power,
                                        GateVariant variant = GateVariant::gated,
                                        Extrapolation policy = Extrapolation::forbid) {
  if (!(pulse_energy >= 0.0)) throw std::domain_error("pulse energy must be non-negative");
  const auto [never, always] = model.thresholds(variant).at(blinding_power, policy);
  return ramp_click_probability(pulse_energy, never, always);
}

inline constexpr double kAlertBlindingShare = 0.25;
inline constexpr double kSecureBlindingShare = 0.125;

/// Largest fraction of a trigger pulse's polarization that can be steered
/// into either path, over all randomizer settings.
inline double p_max_trigger(double purity_t) { return qmath::overlap_bounds(purity_t).max; }

struct ConditionsAB {
  bool a_holds;
  bool b_holds;
  bool both() const { return a_holds && b_holds; }
};

namespace detail {
inline double min_never(std::span<const DetectorModel> models, double power, GateVariant variant,
                        Extrapolation policy) {
  if (models.empty()) throw std::invalid_argument("detector set is empty");
  double m = std::numeric_limits<double>::infinity();
  for (const auto& d : models) m = std::min(m, d.thresholds(variant).e_never.at(power, policy));
  return m;
}
}  // namespace detail

/// (A): the largest trigger share an alert detector can see stays below its
/// smallest E_never. (B): the largest share a secure detector can see exceeds
/// the smallest secure E_never.
inline ConditionsAB check_conditions_ab(std::span<const DetectorModel> alert, std::span<const DetectorModel> secure,
                                        double trigger_energy, double purity_t, double blinding_power,
                                        GateVariant variant = GateVariant::gated,
                                        Extrapolation policy = Extrapolation::forbid) {
  if (!(trigger_energy >= 0.0)) throw std::domain_error("trigger energy must be non-negative");
  const double p_max = p_max_trigger(purity_t);
  const double alert_floor = detail::min_never(alert, kAlertBlindingShare * blinding_power, variant, policy);
  const double secure_floor = detail::min_never(secure, kSecureBlindingShare * blinding_power, variant, policy);
  return {0.5 * p_max * trigger_energy < alert_floor, 0.25 * p_max * trigger_energy > secure_floor};
}

/// One (alert detector, secure detector, blinding power, gate) combination.
/// The camouflage region is {E_alert < e_alert, E_secure > e_secure}; Bob's
/// optics pin E_secure = E_alert / 2, so the region reaches that line exactly
/// when ratio = e_secure / e_alert < 1/2. A ratio of exactly 1/2 counts as
/// violating.
struct IntersectionPoint {
  std::size_t alert_index;
  std::size_t secure_index;
  double blinding_power;
  GateVariant variant;
  double e_alert;
  double e_secure;
  double ratio;
  bool violating;

  /// Segment of the operational line inside the camouflage region, as
  /// alert-energy bounds (2 e_secure, e_alert); empty when not violating.
  std::optional<std::pair<double, double>> line_overlap() const {
    if (!violating) return std::nullopt;
    return std::make_pair(2.0 * e_secure, e_alert);
  }
};

struct AuditVerdict {
  std::vector<IntersectionPoint> points;
  std::vector<GateVariant> variants;
  bool secure = true;
  bool secure_gated = true;
  bool secure_ungated = true;

  std::vector<IntersectionPoint> violations() const {
    std::vector<IntersectionPoint> v;
    for (const auto& p : points) {
      if (p.violating) v.push_back(p);
    }
    return v;
  }
};

class CoverageError : public std::runtime_error {
 public:
  explicit CoverageError(std::vector<double> powers)
      : std::runtime_error(describe(powers)), powers_(std::move(powers)) {}
  const std::vector<double>& offending_powers() const { return powers_; }

 private:
  static std::string describe(const std::vector<double>& powers) {
    std::string s = "threshold curves do not cover blinding powers I_B =";
    for (double p : powers) s += " " + std::to_string(p);
    return s + " mW";
  }
  std::vector<double> powers_;
};

struct AuditOptions {
  std::vector<GateVariant> variants{GateVariant::gated, GateVariant::ungated};
  Extrapolation policy = Extrapolation::forbid;
};

/// Checks every (alert i, secure j, I_B, variant) intersection point. The
/// verdict is secure only when no point violates, across all requested
/// variants.
inline AuditVerdict audit_assignment(std::span<const DetectorModel> alert, std::span<const DetectorModel> secure,
                                     std::span<const double> blinding_powers, const AuditOptions& options = {}) {
  if (alert.empty() || secure.empty()) throw std::invalid_argument("audit needs at least one alert and one secure detector");
  if (options.variants.empty()) throw std::invalid_argument("audit needs at least one gate variant");

  std::vector<double> uncovered;
  for (double ib : blinding_powers) {
    bool ok = true;
    for (auto variant : options.variants) {
      for (const auto& d : alert) ok = ok && d.has(variant) && (options.policy == Extrapolation::clamp ||
                                                              d.thresholds(variant).e_never.covers(kAlertBlindingShare * ib));
      for (const auto& d : secure) ok = ok && d.has(variant) && (options.policy == Extrapolation::clamp ||
                                                               d.thresholds(variant).e_never.covers(kSecureBlindingShare * ib));
    }
    if (!ok) uncovered.push_back(ib);
  }
  if (!uncovered.empty()) throw CoverageError(std::move(uncovered));

  AuditVerdict verdict;
  verdict.variants = options.variants;
  for (auto variant : options.variants) {
    for (double ib : blinding_powers) {
      for (std::size_t i = 0; i < alert.size(); ++i) {
        const double ea = alert[i].thresholds(variant).e_never.at(kAlertBlindingShare * ib, options.policy);
        for (std::size_t j = 0; j < secure.size(); ++j) {
          const double eb = secure[j].thresholds(variant).e_never.at(kSecureBlindingShare * ib, options.policy);
          const double ratio = ea > 0.0 ? eb / ea : std::numeric_limits<double>::infinity();
          const bool violating = !(ratio > 0.5);
          verdict.points.push_back({i, j, ib, variant, ea, eb, ratio, violating});
          if (violating) {
            verdict.secure = false;
            (variant == GateVariant::gated ? verdict.secure_gated : verdict.secure_ungated) = false;
          }
        }
      }
    }
  }
  return verdict;
}

/// Blinding powers used for the reference threshold comparison, mW.
inline std::vector<double> reference_blinding_grid() {
  return {0.72, 0.78, 0.86, 1.02, 1.09, 1.27, 1.51, 1.78, 2.02, 2.26, 2.5};
}

}  // namespace prqkd::detectors
