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

// Bob's transceiver: the genuine roundtrip, routing of injected light, the
// six-detector receiver and BB84 sifting with squashing.
//
// Phase index q in {0, 1, 2, 3} stands for phi = q * pi / 2. After the PMZI
// swaps time-bin back to polarization the key state is (H + e^{i phi} V)/sqrt2,
// so q = 0, 1, 2, 3 are D, R, A, L. Basis is q % 2 (0 = D/A, 1 = R/L), bit is
// q / 2.
//
// Detector indices: 0 = a1, 1 = a2 (alert path), 2 = b1 (D), 3 = b2 (A),
// 4 = b3 (R), 5 = b4 (L). The alert path has an active basis switch; within
// the chosen basis a1 is bit 0 and a2 is bit 1.
//
// A one-way PMZI passage spreads pulse energy over three time windows in
// proportion 1/4 : 1/2 : 1/4 and Bob gates on the middle one, so only half of
// any pulse can be detected.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "prqkd/detectors.hpp"
#include "prqkd/qmath.hpp"
#include "prqkd/random.hpp"

namespace prqkd::protocol {

using qmath::Complex;
using qmath::ComplexMatrix2;
using qmath::JonesUnitary;
using qmath::JonesVector;
using qmath::PolarizationState;

enum class Basis : std::uint8_t { da = 0, rl = 1 };

inline const char* to_string(Basis b) { return b == Basis::da ? "DA" : "RL"; }

class Phase {
 public:
  constexpr Phase() = default;
  constexpr explicit Phase(int index) : index_(static_cast<std::uint8_t>(((index % 4) + 4) % 4)) {}
  static constexpr Phase from(Basis basis, int bit) { return Phase(static_cast<int>(basis) + 2 * bit); }

  constexpr int index() const { return index_; }
  constexpr Basis basis() const { return static_cast<Basis>(index_ % 2); }
  constexpr int bit() const { return index_ / 2; }
  double radians() const { return index_ * std::numbers::pi / 2; }
  constexpr Phase shifted(int quarter_turns) const { return Phase(index_ + quarter_turns); }

  friend constexpr bool operator==(Phase, Phase) = default;

 private:
  std::uint8_t index_ = 0;
};

inline constexpr std::array<Phase, 4> kAllPhases{Phase(0), Phase(1), Phase(2), Phase(3)};

inline constexpr std::size_t kDetectorCount = 6;
inline constexpr std::array<const char*, kDetectorCount> kDetectorNames{"a1", "a2", "b1", "b2", "b3", "b4"};

constexpr std::size_t alert_detector(int bit) { return static_cast<std::size_t>(bit); }
constexpr std::size_t secure_detector(Basis basis, int bit) {
  return 2 + 2 * static_cast<std::size_t>(basis) + static_cast<std::size_t>(bit);
}
constexpr bool is_alert_detector(std::size_t d) { return d < 2; }

inline constexpr double kGateWindowFraction = 0.5;

struct TimeBinState {
  Complex late{std::numbers::sqrt2 / 2};
  Complex early{std::numbers::sqrt2 / 2};
  bool coherent = true;

  /// (|t_l> + e^{i phi}|t_s>)/sqrt2.
  static TimeBinState encoded(Phase phase) {
    return {Complex(std::numbers::sqrt2 / 2), std::polar(std::numbers::sqrt2 / 2, phase.radians()), true};
  }

  void validate() const {
    if (coherent && std::abs(std::norm(late) + std::norm(early) - 1.0) > qmath::kAlgebraTolerance) {
      throw std::invalid_argument("coherent time-bin state is not normalized");
    }
  }

  /// Relative phase of the early bin with respect to the late bin.
  double relative_phase() const { return std::arg(early / late); }
};

struct PhotonRound {
  Phase alice_phase;
  JonesUnitary randomizer = JonesUnitary::from_matrix(ComplexMatrix2::identity());
  bool switch_applied = false;
  double mean_photon_number = 1.0;
};

struct RoutingOutcome {
  double p_alert = 0.0;
  double p_secure = 1.0;
  double window_fraction = kGateWindowFraction;

  double alert_arrival() const { return p_alert * window_fraction; }
  double secure_arrival() const { return p_secure * window_fraction; }

  /// The same light with the physical paths exchanged.
  RoutingOutcome swapped() const { return {p_secure, p_alert, window_fraction}; }
};

struct GenuineRoundtrip {
  RoutingOutcome routing;
  /// Polarization returned towards the PMZI: U^T J U |H>, proportional to |V>.
  JonesVector returned_polarization;
  /// Key polarization in path b after the PMZI swap.
  JonesVector output_polarization;
};

/// Bob's photon leaves the PMZI as (|t_l> + |t_s>)|H>/sqrt2, crosses U, picks
/// up Alice's phase on t_s, is flipped by the Faraday mirror and crosses U in
/// reverse (U^T). U^T J U = det(U) J, so the returned polarization is V up to a
/// phase for every U and the whole photon is routed to path b.
inline GenuineRoundtrip genuine_roundtrip(const PhotonRound& round) {
  const ComplexMatrix2& u = round.randomizer.matrix();
  const ComplexMatrix2 back = u.transpose() * qmath::faraday_mirror() * u;
  const JonesVector returned = back * qmath::basis::horizontal();
  const double norm = returned.norm_squared();
  const double p_alert = std::norm(returned.h) / norm;
  RoutingOutcome routing{p_alert, 1.0 - p_alert, kGateWindowFraction};

  const auto tb = TimeBinState::encoded(round.alice_phase);
  // PMZI maps t_l -> H and t_s -> V with the relative phase preserved.
  const Complex scale = tb.late;
  JonesVector out{tb.late / scale * Complex(std::numbers::sqrt2 / 2), tb.early / scale * Complex(std::numbers::sqrt2 / 2)};
  return {routing, returned, out};
}

/// Path-space density operator, basis (a, b), of injected light inside the
/// gated window: entries sigma_HH, cos(phi) sigma_HV, cos(phi) sigma_VH,
/// sigma_VV with sigma = U rho U^dagger. Built from the two polarization
/// projections of the PMZI output including the controller's NOT operator.
inline ComplexMatrix2 eve_path_operator(const PolarizationState& pol, Phase phase, const JonesUnitary& randomizer) {
  const ComplexMatrix2 sigma = qmath::conjugate_state(randomizer, pol).matrix();
  const ComplexMatrix2 x = qmath::pauli_x();
  const Complex e = std::polar(1.0, phase.radians());
  const ComplexMatrix2 ph = qmath::outer(qmath::basis::horizontal(), qmath::basis::horizontal());
  const ComplexMatrix2 pv = qmath::outer(qmath::basis::vertical(), qmath::basis::vertical());

  // Branch through |H><H|: path b carries X, path a carries e^{i phi}.
  // Branch through |V><V|: path a carries X, path b carries e^{i phi}.
  struct Branch {
    ComplexMatrix2 a;
    ComplexMatrix2 b;
  };
  const std::array<Branch, 2> branches{Branch{e * ph, ph * x}, Branch{pv * x, e * pv}};

  ComplexMatrix2 path = ComplexMatrix2::zero();
  for (const auto& br : branches) {
    const std::array<const ComplexMatrix2*, 2> k{&br.a, &br.b};
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        path.m[static_cast<std::size_t>(2 * r + c)] += 0.5 * ((*k[r]) * sigma * k[c]->adjoint()).trace();
      }
    }
  }
  return path;
}

/// p_alert = <H|U rho U^dagger|H>, p_secure = <V|U rho U^dagger|V>.
inline RoutingOutcome faked_state_routing(const PolarizationState& pol, Phase /*phase*/, const JonesUnitary& randomizer) {
  const ComplexMatrix2 sigma = qmath::conjugate_state(randomizer, pol).matrix();
  const double p_alert = std::clamp(sigma(0, 0).real(), 0.0, 1.0);
  return {p_alert, 1.0 - p_alert, kGateWindowFraction};
}

enum class PhotonStatistics { poisson, single_photon };
enum class SecureBasisMode { passive, da, rl };

inline const char* to_string(PhotonStatistics s) { return s == PhotonStatistics::poisson ? "poisson" : "single_photon"; }
inline const char* to_string(SecureBasisMode m) {
  switch (m) {
    case SecureBasisMode::passive: return "passive";
    case SecureBasisMode::da: return "da";
    case SecureBasisMode::rl: return "rl";
  }
  return "passive";
}

struct Receiver {
  std::array<detectors::GeigerParams, kDetectorCount> detectors{};
  double fidelity = 1.0;
  PhotonStatistics statistics = PhotonStatistics::poisson;
  SecureBasisMode secure_basis = SecureBasisMode::passive;

  void validate() const {
    for (std::size_t i = 0; i < kDetectorCount; ++i) {
      try {
        detectors[i].validate();
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("detector ") + kDetectorNames[i] + ": " + e.what());
      }
    }
    if (!(fidelity >= 0.5 && fidelity <= 1.0)) throw std::invalid_argument("fidelity must lie in [1/2, 1]");
  }
};

/// Share of the incoming pulse that reaches each detector, for light carrying
/// phase `phase`. `alert_basis` is the active alert-path basis setting.
inline std::array<double, kDetectorCount> detector_fractions(const RoutingOutcome& routing, Phase phase,
                                                             Basis alert_basis, double fidelity,
                                                             SecureBasisMode secure_basis = SecureBasisMode::passive) {
  std::array<double, kDetectorCount> f{};
  const double a = routing.alert_arrival();
  const double b = routing.secure_arrival();
  const int bit = phase.bit();

  if (alert_basis == phase.basis()) {
    f[alert_detector(bit)] = a * fidelity;
    f[alert_detector(1 - bit)] = a * (1.0 - fidelity);
  } else {
    f[0] = f[1] = 0.5 * a;
  }

  auto fill_basis = [&](Basis basis, double share) {
    if (basis == phase.basis()) {
      f[secure_detector(basis, bit)] = share * fidelity;
      f[secure_detector(basis, 1 - bit)] = share * (1.0 - fidelity);
    } else {
      f[secure_detector(basis, 0)] = f[secure_detector(basis, 1)] = 0.5 * share;
    }
  };
  switch (secure_basis) {
    case SecureBasisMode::passive:
      fill_basis(Basis::da, 0.5 * b);
      fill_basis(Basis::rl, 0.5 * b);
      break;
    case SecureBasisMode::da:
      fill_basis(Basis::da, b);
      break;
    case SecureBasisMode::rl:
      fill_basis(Basis::rl, b);
      break;
  }
  return f;
}

struct ClickRecord {
  std::array<bool, kDetectorCount> clicks{};
  /// Active alert-path basis in this round.
  Basis alert_basis = Basis::da;
  /// Paths exchanged: a-detectors carry the key, b-detectors raise alerts.
  bool switched = false;

  /// Filled in by squash().
  std::optional<Basis> basis_bob;
  std::optional<int> sifted_bit;
  bool alert = false;

  bool any_click() const {
    for (bool c : clicks) {
      if (c) return true;
    }
    return false;
  }
};

/// Samples the six detectors for one incoming pulse.
///
/// Poisson light: detector d clicks independently with probability
/// c_d + 1 - exp(-eta_d mu f_d). Single-photon light: the photon reaches at
/// most one detector (chosen by the fractions f_d, arrival probability
/// min(mu, 1)), clicks with eta_d, and background clicks are OR-ed in.
template <typename Rng>
ClickRecord bob_measurement(const RoutingOutcome& routing, Phase phase, double mean_photons, const Receiver& receiver,
                            Rng& rng, bool switched = false, std::optional<Basis> alert_basis = std::nullopt) {
  if (!(mean_photons >= 0.0)) throw std::domain_error("mean photon number must be non-negative");
  ClickRecord rec;
  rec.switched = switched;
  rec.alert_basis = alert_basis ? *alert_basis : static_cast<Basis>(rng.below(2));
  const auto f = detector_fractions(routing, phase, rec.alert_basis, receiver.fidelity, receiver.secure_basis);

  if (receiver.statistics == PhotonStatistics::poisson) {
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      rec.clicks[d] = rng.bernoulli(detectors::geiger_click_probability(receiver.detectors[d], mean_photons * f[d]));
    }
    return rec;
  }

  const double arrive = std::min(mean_photons, 1.0);
  double u = rng.uniform();
  std::optional<std::size_t> hit;
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    const double p = arrive * f[d];
    if (u < p) {
      hit = d;
      break;
    }
    u -= p;
  }
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    const bool signal = hit == d && rng.bernoulli(receiver.detectors[d].efficiency);
    const bool dark = rng.bernoulli(receiver.detectors[d].background);
    rec.clicks[d] = signal || dark;
  }
  return rec;
}

struct SquashResult {
  std::optional<Basis> basis;
  std::optional<int> bit;
  int alert_clicks = 0;
  bool discarded = false;
};

/// Squashing on the key detectors, raw counting on the alert detectors.
/// Clicks in both key bases are discarded; a double click within one basis
/// becomes a fair-coin bit.
template <typename Rng>
SquashResult squash(ClickRecord& rec, Rng& rng) {
  SquashResult out;
  const auto& c = rec.clicks;
  if (!rec.switched) {
    out.alert_clicks = int{c[0]} + int{c[1]};
    const bool da = c[2] || c[3];
    const bool rl = c[4] || c[5];
    if (da && rl) {
      out.discarded = true;
    } else if (da || rl) {
      const Basis b = da ? Basis::da : Basis::rl;
      const bool zero = c[secure_detector(b, 0)];
      const bool one = c[secure_detector(b, 1)];
      out.basis = b;
      out.bit = (zero && one) ? static_cast<int>(rng.below(2)) : (one ? 1 : 0);
    }
  } else {
    out.alert_clicks = int{c[2]} + int{c[3]} + int{c[4]} + int{c[5]};
    if (c[0] || c[1]) {
      out.basis = rec.alert_basis;
      out.bit = (c[0] && c[1]) ? static_cast<int>(rng.below(2)) : (c[1] ? 1 : 0);
    }
  }
  rec.basis_bob = out.basis;
  rec.sifted_bit = out.bit;
  rec.alert = out.alert_clicks > 0;
  return out;
}

struct SiftTally {
  std::uint64_t rounds = 0;
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;
  std::uint64_t alert_clicks = 0;
  std::uint64_t alert_rounds = 0;
  std::uint64_t discarded = 0;

  void add(const SquashResult& s, Phase sender) {
    ++rounds;
    alert_clicks += static_cast<std::uint64_t>(s.alert_clicks);
    alert_rounds += s.alert_clicks > 0 ? 1u : 0u;
    discarded += s.discarded ? 1u : 0u;
    if (s.basis && *s.basis == sender.basis()) {
      ++sifted;
      errors += (*s.bit != sender.bit()) ? 1u : 0u;
    }
  }

  SiftTally& operator+=(const SiftTally& o) {
    rounds += o.rounds;
    sifted += o.sifted;
    errors += o.errors;
    alert_clicks += o.alert_clicks;
    alert_rounds += o.alert_rounds;
    discarded += o.discarded;
    return *this;
  }

  double qber() const { return sifted ? static_cast<double>(errors) / static_cast<double>(sifted) : 0.0; }
};

/// Squashes each record and keeps the bits whose basis matches the sender's.
template <typename Rng>
SiftTally sift_and_squash(std::span<ClickRecord> records, std::span<const Phase> sender, Rng& rng) {
  if (records.size() != sender.size()) throw std::invalid_argument("records and sender phases differ in length");
  SiftTally tally;
  for (std::size_t i = 0; i < records.size(); ++i) tally.add(squash(records[i], rng), sender[i]);
  return tally;
}

}  // namespace prqkd::protocol
