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

#include "prqkd/adversary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "prqkd/analysis.hpp"
#include "prqkd/random.hpp"
#include "test_support.hpp"

namespace prqkd::adversary {
namespace {

using prqkd::testing::binomial_z;
using qmath::degrees;

TEST(EveSource, PurityFromHalfWavePlateAngle) {
  const double angles[] = {0.0, 10.4, 15.0, 18.9, 22.5};
  const double printed[] = {1.0, 0.78, 0.63, 0.53, 0.5};
  for (int i = 0; i < 5; ++i) {
    EveSourceConfig c;
    c.theta1 = degrees(angles[i]);
    const double p = eve_source_state(c).polarization.purity();
    // Printed to two decimals; 15 deg gives 0.625 exactly, on the rounding edge.
    EXPECT_LE(std::abs(p - printed[i]), 0.005 + 1e-12) << angles[i];
    EXPECT_NEAR(p, source_purity(c.theta1), 1e-12);
  }
  EveSourceConfig c;
  c.theta1 = degrees(10.4);
  EXPECT_NEAR(eve_source_state(c).polarization.purity(), 0.77960, 1e-5);
}

TEST(EveSource, PurityIgnoresTheRotatingPlates) {
  RandomStream rng(1, 0);
  for (int i = 0; i < 2000; ++i) {
    EveSourceConfig c;
    c.theta1 = degrees(45.0 * rng.uniform());
    c.theta2 = degrees(360.0 * rng.uniform());
    c.qwp_angle = degrees(360.0 * rng.uniform());
    EXPECT_NEAR(eve_source_state(c).polarization.purity(), 1.0 - 0.5 * std::pow(std::sin(4 * c.theta1), 2), 1e-12);
  }
}

TEST(EveSource, TimeBinCarriesEncodedPhase) {
  EveSourceConfig c;
  c.phase = protocol::Phase(3);
  const auto s = eve_source_state(c);
  EXPECT_TRUE(s.time_bin.coherent);
  EXPECT_NEAR(std::remainder(s.time_bin.relative_phase() - 1.5 * std::numbers::pi, 2 * std::numbers::pi), 0.0, 1e-12);
}

TEST(EveSource, AngleForPurityInvertsThePurityLaw) {
  for (int k = 0; k <= 100; ++k) {
    const double p = 0.5 + 0.005 * k;
    EXPECT_NEAR(source_purity(theta1_for_purity(p)), p, 1e-12);
  }
  EXPECT_THROW(theta1_for_purity(0.3), std::domain_error);
}

// Fixed randomizer, QWP at -45 deg, HWP2 swept: the alert-path share is a
// sinusoid whose visibility is the Bloch radius sqrt(2P - 1).
TEST(EveSource, HalfWavePlateSweepVisibilityFollowsPurity) {
  const auto u = qmath::reference_randomizer();
  for (double purity : {1.0, 0.78, 0.63, 0.53, 0.5}) {
    std::vector<double> x, y;
    for (int k = 0; k <= 180; ++k) {
      EveSourceConfig c;
      c.theta1 = theta1_for_purity(purity);
      c.theta2 = degrees(k);
      x.push_back(k);
      y.push_back(protocol::faked_state_routing(eve_source_state(c).polarization, protocol::Phase(0), u).p_alert);
    }
    const auto fit = analysis::fit_sinusoid(x, y);
    EXPECT_NEAR(fit.visibility, std::sqrt(2 * purity - 1), 1e-9) << purity;
  }
}

TEST(EveOutcomeProbabilities, VacuumNeverClicks) {
  const auto p = eve_outcome_probabilities({0.0, 0.9, 0.5});
  EXPECT_EQ(p.send(), 0.0);
  EXPECT_EQ(p.none(), 1.0);
}

TEST(EveOutcomeProbabilities, WeakPulseExample) {
  const auto p = eve_outcome_probabilities({0.1, 0.99, 0.2});
  EXPECT_NEAR(p.correct, 0.00980067335, 1e-11);
  EXPECT_NEAR(p.wrong, 9.80296700e-5, 1e-12);
  EXPECT_NEAR(p.correct, 0.009800, 1e-6);
  EXPECT_NEAR(p.wrong, 9.8e-5, 1e-7);
}

TEST(EveOutcomeProbabilities, PerfectFidelityHasNoWrongClicks) {
  for (double mu : {0.01, 0.5, 3.0}) EXPECT_EQ(eve_outcome_probabilities({mu, 1.0, 0.7}).wrong, 0.0);
}

TEST(EveOutcomeProbabilities, IdealBb84Preset) {
  EveMeasurementParams m;
  m.model = EveModel::ideal_bb84;
  const auto p = eve_outcome_probabilities(m);
  EXPECT_EQ(p.correct, 0.5);
  EXPECT_EQ(p.wrong, 0.0);
  EXPECT_EQ(p.incompatible, 0.25);
  EXPECT_EQ(p.none(), 0.0);
}

TEST(EveOutcomeProbabilities, SumAtMostOneOverRandomParameters) {
  RandomStream rng(2, 0);
  for (int i = 0; i < 10000; ++i) {
    const EveMeasurementParams m{20.0 * rng.uniform(), 0.5 + 0.5 * rng.uniform(), rng.uniform()};
    const auto p = eve_outcome_probabilities(m);
    EXPECT_GE(p.correct, 0.0);
    EXPECT_GE(p.wrong, 0.0);
    EXPECT_GE(p.incompatible, 0.0);
    EXPECT_LE(p.send(), 1.0 + 1e-15);
    EXPECT_LE(p.resend_qber(), 0.5 + 1e-15);
  }
}

TEST(EveMeasurementOutcome, SampledFrequenciesMatchClosedForms) {
  RandomStream rng(3, 0);
  const EveMeasurementParams m{2.0, 0.9, 0.6};
  const auto p = eve_outcome_probabilities(m);
  const int n = 1000000;
  int counts[4] = {};
  int wrong_phase_ok = 0, incompatible_basis_ok = 0;
  for (int i = 0; i < n; ++i) {
    const protocol::Phase alice(i % 4);
    const auto o = eve_measurement_outcome(m, alice, rng);
    ++counts[static_cast<int>(o.kind)];
    if (o.kind == EveOutcomeKind::wrong) wrong_phase_ok += o.phase == alice.shifted(2);
    if (o.kind == EveOutcomeKind::incompatible) incompatible_basis_ok += o.phase.basis() != alice.basis();
  }
  EXPECT_LT(binomial_z(counts[0] / double(n), p.correct, n), 4.0);
  EXPECT_LT(binomial_z(counts[1] / double(n), p.wrong, n), 4.0);
  EXPECT_LT(binomial_z(counts[2] / double(n), 2 * p.incompatible, n), 4.0);
  EXPECT_LT(binomial_z(counts[3] / double(n), p.none(), n), 4.0);
  EXPECT_EQ(wrong_phase_ok, counts[1]);
  EXPECT_EQ(incompatible_basis_ok, counts[2]);
}

TEST(EveMeasurementParams, Validation) {
  EXPECT_THROW((EveMeasurementParams{-1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((EveMeasurementParams{0.1, 0.4}.validate()), std::invalid_argument);
  EXPECT_THROW((EveMeasurementParams{0.1, 0.9, 1.2}.validate()), std::invalid_argument);
}

TEST(QuantumAttack, ForwardsObservedPhaseOnlyAfterAClick) {
  const auto f = run_quantum_attack({EveOutcomeKind::correct, protocol::Phase(0)}, 1.0);
  EXPECT_TRUE(f.sent);
  EXPECT_EQ(f.phase, protocol::Phase(0));
  EXPECT_EQ(f.mean_photons, 1.0);
  EXPECT_FALSE(run_quantum_attack({EveOutcomeKind::none, protocol::Phase(1)}, 1.0).sent);
}

std::vector<detectors::DetectorModel> constant_models(double an, double aa, double sn, double sa) {
  std::vector<detectors::DetectorModel> m(protocol::kDetectorCount);
  for (std::size_t d = 0; d < m.size(); ++d) {
    const bool alert = protocol::is_alert_detector(d);
    m[d].gated = detectors::BlindedThresholds{detectors::ThresholdCurve::constant(alert ? an : sn),
                                              detectors::ThresholdCurve::constant(alert ? aa : sa)};
  }
  return m;
}

BlindingRound blinding_round(double p_a, double energy, const std::vector<detectors::DetectorModel>& models,
                             bool perfect = false) {
  BlindingRound r;
  r.outcome = {EveOutcomeKind::correct, protocol::Phase(1)};
  r.trigger_routing = {p_a, 1.0 - p_a};
  r.trigger_energy_pj = energy;
  r.thresholds = blinded_thresholds(models, 1.0, 0.5, detectors::GateVariant::gated, detectors::Extrapolation::forbid);
  r.perfect_control = perfect;
  return r;
}

TEST(BlindingAttack, WeakTriggerProducesNoClicks) {
  const auto models = constant_models(1.5, 1.9, 1.0, 1.3);
  RandomStream rng(4, 0);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_FALSE(run_blinding_attack(blinding_round(rng.uniform(), 0.9, models), rng).any_click());
  }
}

TEST(BlindingAttack, HugeTriggerIntoAlertPathAlwaysAlerts) {
  const auto models = constant_models(1.5, 1.9, 1.0, 1.3);
  RandomStream rng(5, 0);
  int matched = 0, n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto rec = run_blinding_attack(blinding_round(1.0, 1e4, models), rng);
    EXPECT_TRUE(rec.clicks[0] || rec.clicks[1]);
    if (rec.alert_basis == protocol::Basis::rl) matched += rec.clicks[protocol::alert_detector(0)];
  }
  EXPECT_GT(matched, 0);
}

TEST(BlindingAttack, PerfectControlClicksOnlyTheTargetSecureDetector) {
  const auto models = constant_models(1.5, 1.9, 1.0, 1.3);
  RandomStream rng(6, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto rec = run_blinding_attack(blinding_round(0.0, 0.1, models, true), rng);
    for (std::size_t d = 2; d < protocol::kDetectorCount; ++d) {
      EXPECT_EQ(rec.clicks[d], d == protocol::secure_detector(protocol::Basis::rl, 0));
    }
  }
}

TEST(BlindingAttack, NoTriggerWithoutAnEveClick) {
  auto r = blinding_round(0.5, 100.0, constant_models(1.5, 1.9, 1.0, 1.3));
  r.outcome = {};
  RandomStream rng(7, 0);
  EXPECT_FALSE(run_blinding_attack(r, rng).any_click());
}

TEST(BlindedThresholds, PolarizedBlindingShiftsThePowerSplit) {
  std::vector<detectors::DetectorModel> m(protocol::kDetectorCount);
  for (auto& d : m) {
    d.gated = detectors::BlindedThresholds{detectors::ThresholdCurve({{0.0, 0.0}, {10.0, 10.0}}),
                                           detectors::ThresholdCurve({{0.0, 0.0}, {10.0, 20.0}})};
  }
  const auto unpol = blinded_thresholds(m, 2.0, 0.5, detectors::GateVariant::gated, detectors::Extrapolation::forbid);
  EXPECT_DOUBLE_EQ(unpol[0].first, 0.5);
  EXPECT_DOUBLE_EQ(unpol[2].first, 0.25);
  const auto pol = blinded_thresholds(m, 2.0, 1.0, detectors::GateVariant::gated, detectors::Extrapolation::forbid);
  EXPECT_DOUBLE_EQ(pol[0].first, 1.0);
  EXPECT_DOUBLE_EQ(pol[0].second, 2.0);
  EXPECT_DOUBLE_EQ(pol[3].first, 0.0);
  EXPECT_THROW(blinded_thresholds(std::span(m).first(5), 1.0, 0.5, detectors::GateVariant::gated,
                                  detectors::Extrapolation::forbid),
               std::invalid_argument);
}

TEST(WavelengthAttack, AlertExactlyInSwitchedRounds) {
  RandomStream rng(8, 0);
  for (int i = 0; i < 4000; ++i) {
    const bool switched = i % 3 == 0;
    const protocol::Phase alice(i % 4);
    const EveOutcome eve = i % 5 == 0 ? EveOutcome{} : EveOutcome{EveOutcomeKind::correct, alice};
    auto rec = run_wavelength_blinding_attack(eve, alice, switched, rng);
    protocol::squash(rec, rng);
    EXPECT_EQ(rec.alert, switched);
    EXPECT_FALSE(rec.clicks[0] || rec.clicks[1]);
    if (!switched && eve.clicked()) {
      EXPECT_EQ(rec.sifted_bit, alice.bit());
    }
    if (!switched && !eve.clicked()) {
      EXPECT_FALSE(rec.any_click());
    }
  }
}

TEST(AttackKind, NamesRoundTrip) {
  for (std::size_t i = 0; i < kAttackKindNames.size(); ++i) {
    EXPECT_EQ(parse_attack_kind(kAttackKindNames[i]), static_cast<AttackKind>(i));
    EXPECT_EQ(to_string(static_cast<AttackKind>(i)), kAttackKindNames[i]);
  }
  EXPECT_FALSE(parse_attack_kind("trojan").has_value());
}

TEST(AttackWeights, MustSumToOne) {
  EXPECT_NO_THROW((AttackWeights{0.2, 0.3, 0.5}.validate()));
  EXPECT_THROW((AttackWeights{0.2, 0.3, 0.4}.validate()), std::invalid_argument);
  EXPECT_THROW((AttackWeights{-0.1, 0.6, 0.5}.validate()), std::invalid_argument);
  AttackConfig c;
  c.kind = AttackKind::integrated;
  c.weights = {0.5, 0.5, 0.5};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace prqkd::adversary
