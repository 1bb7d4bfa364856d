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

#include "prqkd/protocol.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "prqkd/qmath.hpp"
#include "prqkd/random.hpp"
#include "test_support.hpp"

namespace prqkd::protocol {
namespace {

using prqkd::testing::binomial_z;
using qmath::JonesUnitary;
using qmath::PolarizationState;

Receiver ideal_receiver() {
  Receiver rx;
  for (auto& d : rx.detectors) d = {1.0, 0.0};
  return rx;
}

// Random mixed state of random purity.
PolarizationState random_state(RandomStream& rng) {
  const double r = rng.uniform();
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double s = std::sqrt(1.0 - z * z);
  return PolarizationState::from_bloch(r * s * std::cos(phi), r * s * std::sin(phi), r * z);
}

TEST(GenuineRoundtrip, ImmuneToEveryHaarRandomizer) {
  RandomStream rng(1, 0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto u = qmath::haar_random_unitary(rng);
    for (auto phase : kAllPhases) worst = std::max(worst, genuine_roundtrip({phase, u}).routing.p_alert);
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(GenuineRoundtrip, ZeroPhaseLeavesDiagonalPolarization) {
  RandomStream rng(2, 0);
  for (int i = 0; i < 100; ++i) {
    const auto r = genuine_roundtrip({Phase(0), qmath::haar_random_unitary(rng)});
    EXPECT_LT(r.routing.p_alert, 1e-12);
    EXPECT_NEAR(std::norm(qmath::inner(qmath::basis::diagonal(), r.output_polarization)), 1.0, 1e-12);
  }
}

TEST(GenuineRoundtrip, PhasePiWithIdentityGivesAntidiagonal) {
  const auto r = genuine_roundtrip({Phase(2)});
  EXPECT_EQ(r.routing.p_alert, 0.0);
  EXPECT_NEAR(std::norm(qmath::inner(qmath::basis::antidiagonal(), r.output_polarization)), 1.0, 1e-12);
}

TEST(GenuineRoundtrip, ReturnedPolarizationIsVertical) {
  RandomStream rng(3, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto r = genuine_roundtrip({Phase(1), qmath::haar_random_unitary(rng)});
    EXPECT_NEAR(std::norm(r.returned_polarization.v), 1.0, 1e-12);
    EXPECT_NEAR(r.routing.p_alert + r.routing.p_secure, 1.0, 1e-12);
  }
}

TEST(FakedStateRouting, EveWhoKnowsTheRandomizerAvoidsTheAlertPath) {
  RandomStream rng(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto u = qmath::haar_random_unitary(rng);
    const auto rho = PolarizationState::pure(u.adjoint() * qmath::basis::vertical());
    EXPECT_NEAR(faked_state_routing(rho, Phase(0), u).p_alert, 0.0, 1e-12);
  }
}

TEST(FakedStateRouting, MaximallyMixedSplitsEvenly) {
  RandomStream rng(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto r = faked_state_routing(PolarizationState::maximally_mixed(), Phase(i % 4), qmath::haar_random_unitary(rng));
    EXPECT_NEAR(r.p_alert, 0.5, 1e-12);
    EXPECT_EQ(r.window_fraction, 0.5);
  }
}

TEST(FakedStateRouting, HaarAverageOfGatedAlertShareIsOneQuarter) {
  RandomStream rng(6, 0);
  const auto rho = PolarizationState::pure(qmath::basis::right());
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += faked_state_routing(rho, Phase(0), qmath::haar_random_unitary(rng)).alert_arrival();
  EXPECT_NEAR(sum / n, 0.25, 0.003);
}

TEST(FakedStateRouting, AlertShareStaysWithinOverlapBounds) {
  RandomStream rng(7, 0);
  for (int i = 0; i < 1000000; ++i) {
    const auto rho = random_state(rng);
    const auto b = qmath::overlap_bounds(std::clamp(rho.purity(), 0.5, 1.0));
    const auto r = faked_state_routing(rho, Phase(0), qmath::haar_random_unitary(rng));
    ASSERT_NEAR(r.p_alert + r.p_secure, 1.0, 1e-12);
    ASSERT_LE(r.p_alert, b.max + 1e-9);
    ASSERT_GE(r.p_alert, b.min - 1e-9);
  }
}

TEST(EvePathOperator, DiagonalMatchesRoutingAndCoherenceScalesWithCosPhi) {
  RandomStream rng(8, 0);
  for (int i = 0; i < 500; ++i) {
    const auto rho = random_state(rng);
    const auto u = qmath::haar_random_unitary(rng);
    const Phase phase(i % 4);
    const auto path = eve_path_operator(rho, phase, u);
    const auto sigma = qmath::conjugate_state(u, rho).matrix();
    const auto r = faked_state_routing(rho, phase, u);
    EXPECT_NEAR(path(0, 0).real(), r.p_alert, 1e-12);
    EXPECT_NEAR(path(1, 1).real(), r.p_secure, 1e-12);
    EXPECT_NEAR(std::abs(path(0, 1) - std::cos(phase.radians()) * sigma(0, 1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(path.trace() - 1.0), 0.0, 1e-12);
  }
}

TEST(DetectorFractions, AddUpToTheGatedArrival) {
  RandomStream rng(9, 0);
  for (int i = 0; i < 5000; ++i) {
    const double pa = rng.uniform();
    const RoutingOutcome routing{pa, 1.0 - pa};
    const double f = 0.5 + 0.5 * rng.uniform();
    const auto mode = static_cast<SecureBasisMode>(rng.below(3));
    const auto fr = detector_fractions(routing, Phase(static_cast<int>(rng.below(4))), static_cast<Basis>(rng.below(2)), f, mode);
    double alert = fr[0] + fr[1], secure = 0.0;
    for (std::size_t d = 2; d < kDetectorCount; ++d) secure += fr[d];
    EXPECT_NEAR(alert, routing.alert_arrival(), 1e-12);
    EXPECT_NEAR(secure, routing.secure_arrival(), 1e-12);
  }
}

TEST(BobMeasurement, VacuumWithoutBackgroundNeverClicks) {
  RandomStream rng(10, 0);
  const auto rx = ideal_receiver();
  for (int i = 0; i < 10000; ++i) {
    EXPECT_FALSE(bob_measurement(RoutingOutcome{0.3, 0.7}, Phase(i % 4), 0.0, rx, rng).any_click());
  }
}

TEST(BobMeasurement, GenuinePhotonInForcedDiagonalBasis) {
  RandomStream rng(11, 0);
  auto rx = ideal_receiver();
  rx.secure_basis = SecureBasisMode::da;
  const int n = 200000;
  int b1 = 0;
  for (int i = 0; i < n; ++i) b1 += bob_measurement(RoutingOutcome{0.0, 1.0}, Phase(0), 1.0, rx, rng).clicks[2];
  const double p = 1.0 - std::exp(-0.5);
  EXPECT_NEAR(p, 0.3935, 1e-4);
  EXPECT_LT(binomial_z(static_cast<double>(b1) / n, p, n), 4.0);
}

TEST(BobMeasurement, BrightAlertPathLightAlwaysRaisesAnAlert) {
  RandomStream rng(12, 0);
  const auto rx = ideal_receiver();
  for (int i = 0; i < 10000; ++i) {
    auto rec = bob_measurement(RoutingOutcome{1.0, 0.0}, Phase(i % 4), 1000.0, rx, rng);
    squash(rec, rng);
    EXPECT_TRUE(rec.alert);
  }
}

TEST(BobMeasurement, NegativeMeanIsDomainError) {
  RandomStream rng(13, 0);
  EXPECT_THROW(bob_measurement(RoutingOutcome{}, Phase(0), -1.0, ideal_receiver(), rng), std::domain_error);
}

TEST(BobMeasurement, SinglePhotonLightClicksAtMostOnceWithoutBackground) {
  RandomStream rng(14, 0);
  auto rx = ideal_receiver();
  rx.statistics = PhotonStatistics::single_photon;
  for (int i = 0; i < 20000; ++i) {
    const double pa = rng.uniform();
    const auto rec = bob_measurement(RoutingOutcome{pa, 1.0 - pa}, Phase(i % 4), 1.0, rx, rng);
    int n = 0;
    for (bool c : rec.clicks) n += c;
    EXPECT_LE(n, 1);
  }
}

ClickRecord record(std::initializer_list<std::size_t> detectors, bool switched = false, Basis alert_basis = Basis::da) {
  ClickRecord r;
  for (auto d : detectors) r.clicks[d] = true;
  r.switched = switched;
  r.alert_basis = alert_basis;
  return r;
}

TEST(Squash, SingleMatchingClickGivesOneCorrectBit) {
  RandomStream rng(15, 0);
  std::vector<ClickRecord> recs{record({secure_detector(Basis::rl, 1)})};
  const std::vector<Phase> sender{Phase::from(Basis::rl, 1)};
  const auto t = sift_and_squash(recs, sender, rng);
  EXPECT_EQ(t.sifted, 1u);
  EXPECT_EQ(t.errors, 0u);
  EXPECT_EQ(t.alert_clicks, 0u);
  EXPECT_EQ(recs[0].sifted_bit, 1);
  EXPECT_EQ(recs[0].basis_bob, Basis::rl);
}

TEST(Squash, SameBasisDoubleClickIsAFairCoin) {
  RandomStream rng(16, 0);
  const int n = 100000;
  std::vector<ClickRecord> recs(n, record({2, 3}));
  const std::vector<Phase> sender(n, Phase(0));
  const auto t = sift_and_squash(recs, sender, rng);
  EXPECT_EQ(t.sifted, static_cast<std::uint64_t>(n));
  EXPECT_LT(binomial_z(t.qber(), 0.5, n), 4.0);
}

TEST(Squash, CrossBasisDoubleClickIsDiscarded) {
  RandomStream rng(17, 0);
  std::vector<ClickRecord> recs{record({2, 4}), record({3, 5, 0})};
  const std::vector<Phase> sender{Phase(0), Phase(1)};
  const auto t = sift_and_squash(recs, sender, rng);
  EXPECT_EQ(t.sifted, 0u);
  EXPECT_EQ(t.discarded, 2u);
  EXPECT_EQ(t.alert_clicks, 1u);
  EXPECT_TRUE(recs[1].alert);
  EXPECT_FALSE(recs[0].alert);
}

TEST(Squash, AlertClicksAreCountedRaw) {
  RandomStream rng(18, 0);
  auto rec = record({0, 1, 2});
  const auto s = squash(rec, rng);
  EXPECT_EQ(s.alert_clicks, 2);
  EXPECT_EQ(s.bit, 0);
}

TEST(Squash, SwitchedRoundExchangesRoles) {
  RandomStream rng(19, 0);
  auto rec = record({1, 4}, true, Basis::rl);
  const auto s = squash(rec, rng);
  EXPECT_EQ(s.basis, Basis::rl);
  EXPECT_EQ(s.bit, 1);
  EXPECT_EQ(s.alert_clicks, 1);
  EXPECT_TRUE(rec.alert);
}

TEST(SiftAndSquash, LengthMismatchThrows) {
  RandomStream rng(20, 0);
  std::vector<ClickRecord> recs(2);
  const std::vector<Phase> sender(3);
  EXPECT_THROW(sift_and_squash(recs, sender, rng), std::invalid_argument);
}

// Genuine single photons: sifted errors are the (1 - F) share of compatible
// bits, and alert detectors never fire.
TEST(SiftAndSquash, GenuineQberMatchesFidelity) {
  for (double f : {1.0, 0.98, 0.9, 0.75}) {
    RandomStream rng(21, static_cast<std::uint64_t>(f * 1000));
    auto rx = ideal_receiver();
    rx.fidelity = f;
    rx.statistics = PhotonStatistics::single_photon;
    const int n = 200000;
    std::vector<ClickRecord> recs;
    std::vector<Phase> sender;
    for (int i = 0; i < n; ++i) {
      const Phase alice(static_cast<int>(rng.below(4)));
      recs.push_back(bob_measurement(genuine_roundtrip({alice}).routing, alice, 1.0, rx, rng));
      sender.push_back(alice);
    }
    const auto t = sift_and_squash(recs, sender, rng);
    EXPECT_EQ(t.alert_clicks, 0u);
    EXPECT_LT(binomial_z(t.qber(), 1.0 - f, static_cast<double>(t.sifted)), 4.0) << "F=" << f;
    EXPECT_LT(binomial_z(static_cast<double>(t.sifted) / n, 0.25, n), 4.0);
  }
}

TEST(TimeBinState, EncodedStateCarriesThePhase) {
  for (auto phase : kAllPhases) {
    const auto tb = TimeBinState::encoded(phase);
    EXPECT_NO_THROW(tb.validate());
    EXPECT_NEAR(std::remainder(tb.relative_phase() - phase.radians(), 2 * std::numbers::pi), 0.0, 1e-12);
  }
  EXPECT_THROW((TimeBinState{1.0, 1.0, true}.validate()), std::invalid_argument);
}

TEST(Phase, BasisBitAndDetectorIndexing) {
  EXPECT_EQ(Phase(0).basis(), Basis::da);
  EXPECT_EQ(Phase(1).basis(), Basis::rl);
  EXPECT_EQ(Phase(2).bit(), 1);
  EXPECT_EQ(Phase(3).shifted(1), Phase(0));
  EXPECT_EQ(secure_detector(Basis::da, 0), 2u);
  EXPECT_EQ(secure_detector(Basis::rl, 1), 5u);
  for (auto p : kAllPhases) EXPECT_EQ(Phase::from(p.basis(), p.bit()), p);
}

}  // namespace
}  // namespace prqkd::protocol
