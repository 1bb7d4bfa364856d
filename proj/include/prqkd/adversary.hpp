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

// Eve: her faked-state source, her measurement of Alice's pulse, and the
// per-round behaviour of each attack family.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "prqkd/detectors.hpp"
#include "prqkd/protocol.hpp"
#include "prqkd/qmath.hpp"

namespace prqkd::adversary {

using protocol::Phase;
using qmath::JonesUnitary;
using qmath::PolarizationState;

/// A laser polarized along V passes HWP1 (theta1) into a depolarizing
/// splitter, leaving an incoherent mixture of V and H with weights
/// cos^2(2 theta1) and sin^2(2 theta1). HWP2 (theta2) then a QWP (qwp_angle)
/// rotate it. All angles are radians from the vertical axis.
struct EveSourceConfig {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double qwp_angle = -std::numbers::pi / 4;
  Phase phase;
  double pulse_energy_pj = 0.0;
};

struct EveSource {
  PolarizationState polarization;
  protocol::TimeBinState time_bin;
};

inline double source_purity(double theta1) {
  const double s = std::sin(4.0 * theta1);
  return 1.0 - 0.5 * s * s;
}

/// HWP1 angle in [0, pi/8] giving the requested purity.
inline double theta1_for_purity(double purity) {
  if (!(purity >= 0.5 && purity <= 1.0)) throw std::domain_error("purity must lie in [1/2, 1]");
  return std::asin(std::sqrt(std::clamp(2.0 * (1.0 - purity), 0.0, 1.0))) / 4.0;
}

inline JonesUnitary source_rotation(const EveSourceConfig& config) {
  using qmath::WaveplateKind;
  return qmath::waveplate(WaveplateKind::quarter, config.qwp_angle) *
         qmath::waveplate(WaveplateKind::half, config.theta2);
}

inline EveSource eve_source_state(const EveSourceConfig& config) {
  const double c = std::cos(2.0 * config.theta1);
  const auto mixed = PolarizationState::mixture(c * c, qmath::basis::vertical(), qmath::basis::horizontal());
  return {qmath::conjugate_state(source_rotation(config), mixed), protocol::TimeBinState::encoded(config.phase)};
}

enum class EveModel { poisson, ideal_bb84 };

struct EveMeasurementParams {
  double mu = 0.1;
  double fidelity = 1.0;
  double efficiency = 1.0;
  EveModel model = EveModel::poisson;

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be a finite non-negative number");
    if (!(fidelity >= 0.5 && fidelity <= 1.0)) throw std::invalid_argument("fidelity must lie in [1/2, 1]");
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
  }
};

/// Single-click outcome probabilities. `incompatible` is per incompatible
/// phase; there are two of them.
struct EveOutcomeProbabilities {
  double correct = 0.0;
  double wrong = 0.0;
  double incompatible = 0.0;

  double send() const { return correct + wrong + 2.0 * incompatible; }
  double none() const { return 1.0 - send(); }
  double compatible() const { return correct + wrong; }
  /// Error fraction of compatible-basis resends.
  double resend_qber() const { return compatible() > 0.0 ? wrong / compatible() : 0.0; }
};

inline EveOutcomeProbabilities eve_outcome_probabilities(const EveMeasurementParams& p) {
  if (p.model == EveModel::ideal_bb84) return {0.5, 0.0, 0.25};
  const double x = p.mu * p.efficiency;
  return {0.5 * std::exp(-x * (1.0 - p.fidelity)) * (1.0 - std::exp(-x * p.fidelity)),
          0.5 * std::exp(-x * p.fidelity) * (1.0 - std::exp(-x * (1.0 - p.fidelity))),
          0.5 * std::exp(-x / 2.0) * (1.0 - std::exp(-x / 2.0))};
}

enum class EveOutcomeKind { correct, wrong, incompatible, none };

struct EveOutcome {
  EveOutcomeKind kind = EveOutcomeKind::none;
  Phase phase;
  bool clicked() const { return kind != EveOutcomeKind::none; }
};

template <typename Rng>
EveOutcome sample_eve_outcome(const EveOutcomeProbabilities& probs, Phase alice, Rng& rng) {
  double u = rng.uniform();
  if ((u -= probs.correct) < 0.0) return {EveOutcomeKind::correct, alice};
  if ((u -= probs.wrong) < 0.0) return {EveOutcomeKind::wrong, alice.shifted(2)};
  if ((u -= probs.incompatible) < 0.0) return {EveOutcomeKind::incompatible, alice.shifted(1)};
  if ((u -= probs.incompatible) < 0.0) return {EveOutcomeKind::incompatible, alice.shifted(3)};
  return {EveOutcomeKind::none, alice};
}

template <typename Rng>
EveOutcome eve_measurement_outcome(const EveMeasurementParams& params, Phase alice, Rng& rng) {
  return sample_eve_outcome(eve_outcome_probabilities(params), alice, rng);
}

enum class AttackKind { intercept_resend, quantum, blinding, wavelength_blinding, integrated };

inline constexpr std::array<std::string_view, 5> kAttackKindNames{"intercept_resend", "quantum", "blinding",
                                                                  "wavelength_blinding", "integrated"};

inline std::string_view to_string(AttackKind k) { return kAttackKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  for (std::size_t i = 0; i < kAttackKindNames.size(); ++i) {
    if (kAttackKindNames[i] == name) return static_cast<AttackKind>(i);
  }
  return std::nullopt;
}

struct AttackWeights {
  double quantum = 1.0;
  double blinding = 0.0;
  double wavelength = 0.0;

  void validate() const {
    for (double w : {quantum, blinding, wavelength}) {
      if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("attack weights must lie in [0, 1]");
    }
    if (std::abs(quantum + blinding + wavelength - 1.0) > 1e-9) {
      throw std::invalid_argument("attack weights must sum to 1");
    }
  }
};

struct AttackConfig {
  AttackKind kind = AttackKind::quantum;
  EveSourceConfig source;
  /// Total blinding power at Bob's entrance, mW.
  double blinding_power_mw = 1.0;
  /// Bloch vector of the blinding light; zero means unpolarized.
  std::array<double, 3> blinding_bloch{0.0, 0.0, 0.0};
  AttackWeights weights;
  /// Eve forces matched-basis secure clicks directly instead of through the
  /// threshold ramp.
  bool perfect_control = false;
  detectors::GateVariant gate = detectors::GateVariant::gated;
  detectors::Extrapolation extrapolation = detectors::Extrapolation::forbid;

  double trigger_energy_pj() const { return source.pulse_energy_pj; }
  bool polarized_blinding() const {
    return blinding_bloch[0] != 0.0 || blinding_bloch[1] != 0.0 || blinding_bloch[2] != 0.0;
  }

  void validate() const {
    if (kind == AttackKind::integrated) weights.validate();
    if (!(blinding_power_mw >= 0.0) || !std::isfinite(blinding_power_mw)) {
      throw std::invalid_argument("blinding_power_mw must be finite and non-negative");
    }
    if (!(source.pulse_energy_pj >= 0.0) || !std::isfinite(source.pulse_energy_pj)) {
      throw std::invalid_argument("trigger energy must be finite and non-negative");
    }
    PolarizationState::from_bloch(blinding_bloch[0], blinding_bloch[1], blinding_bloch[2]);
  }
};

/// What reaches Bob after a quantum attack round.
struct ForwardedPulse {
  bool sent = false;
  Phase phase;
  double mean_photons = 0.0;
};

/// Eve resends only after a single click, encoding the phase she observed.
inline ForwardedPulse run_quantum_attack(const EveOutcome& outcome, double mu_e) {
  if (!outcome.clicked()) return {};
  return {true, outcome.phase, mu_e};
}

using ThresholdSet = std::array<std::pair<double, double>, protocol::kDetectorCount>;

/// (E_never, E_always) of every blinded detector for this round's blinding
/// light. Alert detectors receive r_a I_B / 2 and secure detectors
/// (1 - r_a) I_B / 4, where r_a is the alert-path share of the blinding light;
/// unpolarized light gives r_a = 1/2, i.e. I_B/4 and I_B/8.
inline ThresholdSet blinded_thresholds(std::span<const detectors::DetectorModel> models, double blinding_power,
                                       double alert_share, detectors::GateVariant variant,
                                       detectors::Extrapolation policy) {
  if (models.size() != protocol::kDetectorCount) throw std::invalid_argument("blinding needs six detector models");
  ThresholdSet t{};
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) {
    const double power = protocol::is_alert_detector(d) ? 0.5 * alert_share * blinding_power
                                                        : 0.25 * (1.0 - alert_share) * blinding_power;
    t[d] = models[d].thresholds(variant).at(power, policy);
  }
  return t;
}

struct BlindingRound {
  EveOutcome outcome;
  /// Routing of the trigger pulse through Bob's randomizer.
  protocol::RoutingOutcome trigger_routing;
  double trigger_energy_pj = 0.0;
  ThresholdSet thresholds{};
  bool switched = false;
  bool perfect_control = false;
};

/// Trigger energies follow the same splits as single photons but with unit
/// visibility: matched alert detector p_a E_T/2, unmatched alert detectors
/// p_a E_T/4, matched secure detector (1 - p_a) E_T/4, other-basis secure
/// detectors (1 - p_a) E_T/8. Blinded detectors have no dark counts.
template <typename Rng>
protocol::ClickRecord run_blinding_attack(const BlindingRound& round, Rng& rng) {
  protocol::ClickRecord rec;
  rec.switched = round.switched;
  rec.alert_basis = static_cast<protocol::Basis>(rng.below(2));
  if (!round.outcome.clicked()) return rec;

  const auto f = protocol::detector_fractions(round.trigger_routing, round.outcome.phase, rec.alert_basis, 1.0);
  const std::size_t target = protocol::secure_detector(round.outcome.phase.basis(), round.outcome.phase.bit());
  for (std::size_t d = 0; d < protocol::kDetectorCount; ++d) {
    if (round.perfect_control && !protocol::is_alert_detector(d)) {
      rec.clicks[d] = d == target;
      continue;
    }
    const auto [never, always] = round.thresholds[d];
    rec.clicks[d] = rng.bernoulli(detectors::ramp_click_probability(f[d] * round.trigger_energy_pj, never, always));
  }
  return rec;
}

/// Eve keeps the alert detectors silent and controls the secure detectors
/// perfectly. Bob's path switch still turns every switched round into an
/// alert, counted on the detector Eve's light addresses (or on Alice's phase
/// detector when Eve sent nothing), and leaves no key bit in such rounds.
template <typename Rng>
protocol::ClickRecord run_wavelength_blinding_attack(const EveOutcome& outcome, Phase alice, bool switched, Rng& rng) {
  protocol::ClickRecord rec;
  rec.switched = switched;
  rec.alert_basis = static_cast<protocol::Basis>(rng.below(2));
  const Phase target = outcome.clicked() ? outcome.phase : alice;
  if (switched || outcome.clicked()) rec.clicks[protocol::secure_detector(target.basis(), target.bit())] = true;
  return rec;
}

}  // namespace prqkd::adversary
