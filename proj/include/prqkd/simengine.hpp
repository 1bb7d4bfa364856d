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

// Seeded Monte Carlo over protocol rounds.
//
// Stream discipline: round i draws exclusively from the Philox stream
// (key = seed, stream = i), so every round is reproducible on its own and the
// number of draws a round consumes does not affect any other round. Rounds
// are tallied in fixed blocks of kBlockRounds and the block tallies are
// summed in block order. The result is bit-identical for a given seed no
// matter how many workers run it.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "prqkd/adversary.hpp"
#include "prqkd/analysis.hpp"
#include "prqkd/detectors.hpp"
#include "prqkd/protocol.hpp"
#include "prqkd/qmath.hpp"
#include "prqkd/random.hpp"

namespace prqkd::sim {

using protocol::kDetectorCount;
using protocol::Phase;

inline constexpr std::uint64_t kBlockRounds = 16384;

enum class Mode { honest, attack };

struct Scenario {
  Mode mode = Mode::honest;
  analysis::SystemParams system;
  adversary::AttackConfig attack;
  /// Blinded-mode models of a1, a2, b1..b4; required by blinding attacks.
  std::vector<detectors::DetectorModel> detector_models;
  std::uint64_t rounds = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// Hold the randomizer at this setting instead of a fresh Haar draw per round.
  std::optional<qmath::JonesUnitary> fixed_u;

  bool uses_blinding() const {
    return mode == Mode::attack && (attack.kind == adversary::AttackKind::blinding ||
                                    (attack.kind == adversary::AttackKind::integrated && attack.weights.blinding > 0.0));
  }

  void validate() const {
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    system.validate();
    if (mode == Mode::attack) attack.validate();
    if (uses_blinding() && detector_models.size() != kDetectorCount) {
      throw std::invalid_argument("blinding scenarios need six detector threshold models");
    }
  }
};

struct SimResult {
  std::string mode;
  std::string kind;
  std::uint64_t rounds = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool fixed_u = false;

  analysis::RatesReport rates;
  double alert_se = 0.0;
  double sifted_se = 0.0;
  double qber_se = 0.0;

  std::array<std::uint64_t, kDetectorCount> detector_clicks{};
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;
  std::uint64_t alert_clicks = 0;
  std::uint64_t alert_rounds = 0;
  std::uint64_t discarded = 0;

  /// Per-round mean share of the incoming pulse that reaches the alert path
  /// inside the gate window, and its standard error.
  double mean_alert_arrival = 0.0;
  double mean_alert_arrival_se = 0.0;
  double mean_secure_arrival = 0.0;
  /// Per-round mean share of the incoming pulse at each detector.
  std::array<double, kDetectorCount> energy_fractions{};

  double wall_time_s = 0.0;
};

namespace detail {

struct BlockTally {
  protocol::SiftTally sift;
  double alert_sq = 0.0;
  std::array<std::uint64_t, kDetectorCount> clicks{};
  double alert_arrival = 0.0;
  double alert_arrival_sq = 0.0;
  double secure_arrival = 0.0;
  std::array<double, kDetectorCount> energy{};

  void merge(const BlockTally& o) {
    sift += o.sift;
    alert_sq += o.alert_sq;
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      clicks[d] += o.clicks[d];
      energy[d] += o.energy[d];
    }
    alert_arrival += o.alert_arrival;
    alert_arrival_sq += o.alert_arrival_sq;
    secure_arrival += o.secure_arrival;
  }
};

/// Everything a round needs that does not change between rounds.
struct Prepared {
  const Scenario* scenario;
  analysis::SystemParams system;
  adversary::EveOutcomeProbabilities eve;
  qmath::PolarizationState rho_t;
  std::optional<qmath::PolarizationState> rho_b;
  adversary::ThresholdSet split_thresholds{};
};

inline Prepared prepare(const Scenario& s) {
  Prepared p{&s, s.system, {}, {}, std::nullopt, {}};
  if (s.mode == Mode::attack && s.attack.kind == adversary::AttackKind::intercept_resend) {
    p.system.eve.model = adversary::EveModel::ideal_bb84;
    p.system.receiver.statistics = protocol::PhotonStatistics::single_photon;
  }
  p.eve = adversary::eve_outcome_probabilities(p.system.eve);
  p.rho_t = adversary::eve_source_state(s.attack.source).polarization;
  if (s.uses_blinding()) {
    if (s.attack.polarized_blinding()) {
      const auto& b = s.attack.blinding_bloch;
      p.rho_b = qmath::PolarizationState::from_bloch(b[0], b[1], b[2]);
    } else {
      p.split_thresholds = adversary::blinded_thresholds(s.detector_models, s.attack.blinding_power_mw, 0.5,
                                                         s.attack.gate, s.attack.extrapolation);
    }
  }
  return p;
}

enum class Family { honest, quantum, blinding, wavelength };

inline void run_round(const Prepared& prep, std::uint64_t index, BlockTally& tally) {
  const Scenario& s = *prep.scenario;
  RandomStream rng(s.seed, index);
  const Phase alice(static_cast<int>(rng.below(4)));
  const bool switched = rng.bernoulli(prep.system.switch_rate);
  const qmath::JonesUnitary u = s.fixed_u ? *s.fixed_u : qmath::haar_random_unitary(rng);

  Family family = Family::honest;
  if (s.mode == Mode::attack) {
    switch (s.attack.kind) {
      case adversary::AttackKind::intercept_resend:
      case adversary::AttackKind::quantum:
        family = Family::quantum;
        break;
      case adversary::AttackKind::blinding:
        family = Family::blinding;
        break;
      case adversary::AttackKind::wavelength_blinding:
        family = Family::wavelength;
        break;
      case adversary::AttackKind::integrated: {
        const double x = rng.uniform();
        const auto& w = s.attack.weights;
        family = x < w.quantum ? Family::quantum : (x < w.quantum + w.blinding ? Family::blinding : Family::wavelength);
        break;
      }
    }
  }

  protocol::ClickRecord rec;
  std::optional<protocol::RoutingOutcome> routing;
  Phase light_phase = alice;
  double fidelity = prep.system.receiver.fidelity;

  switch (family) {
    case Family::honest: {
      const auto rt = protocol::genuine_roundtrip({alice, u, switched, prep.system.honest_mean_photons()});
      routing = switched ? rt.routing.swapped() : rt.routing;
      rec = protocol::bob_measurement(*routing, alice, prep.system.honest_mean_photons(), prep.system.receiver, rng,
                                      switched);
      break;
    }
    case Family::quantum: {
      const auto outcome = adversary::sample_eve_outcome(prep.eve, alice, rng);
      const auto fwd = adversary::run_quantum_attack(outcome, prep.system.mu_e);
      if (fwd.sent) {
        routing = protocol::faked_state_routing(prep.rho_t, fwd.phase, u);
        light_phase = fwd.phase;
        rec = protocol::bob_measurement(*routing, fwd.phase, fwd.mean_photons, prep.system.receiver, rng, switched);
      } else {
        rec = protocol::bob_measurement({0.0, 0.0, protocol::kGateWindowFraction}, alice, 0.0, prep.system.receiver,
                                        rng, switched);
      }
      break;
    }
    case Family::blinding: {
      adversary::BlindingRound br;
      br.outcome = adversary::sample_eve_outcome(prep.eve, alice, rng);
      br.trigger_routing = protocol::faked_state_routing(prep.rho_t, br.outcome.phase, u);
      br.trigger_energy_pj = s.attack.trigger_energy_pj();
      br.switched = switched;
      br.perfect_control = s.attack.perfect_control;
      if (prep.rho_b) {
        const double share = protocol::faked_state_routing(*prep.rho_b, Phase(0), u).p_alert;
        br.thresholds = adversary::blinded_thresholds(s.detector_models, s.attack.blinding_power_mw, share,
                                                      s.attack.gate, s.attack.extrapolation);
      } else {
        br.thresholds = prep.split_thresholds;
      }
      rec = adversary::run_blinding_attack(br, rng);
      if (br.outcome.clicked()) {
        routing = br.trigger_routing;
        light_phase = br.outcome.phase;
        fidelity = 1.0;
      }
      break;
    }
    case Family::wavelength: {
      const auto outcome = adversary::sample_eve_outcome(prep.eve, alice, rng);
      rec = adversary::run_wavelength_blinding_attack(outcome, alice, switched, rng);
      break;
    }
  }

  const auto sq = protocol::squash(rec, rng);
  tally.sift.add(sq, alice);
  tally.alert_sq += static_cast<double>(sq.alert_clicks) * sq.alert_clicks;
  for (std::size_t d = 0; d < kDetectorCount; ++d) tally.clicks[d] += rec.clicks[d] ? 1u : 0u;
  if (routing) {
    const double a = routing->alert_arrival();
    tally.alert_arrival += a;
    tally.alert_arrival_sq += a * a;
    tally.secure_arrival += routing->secure_arrival();
    const auto f = protocol::detector_fractions(*routing, light_phase, rec.alert_basis, fidelity,
                                                prep.system.receiver.secure_basis);
    for (std::size_t d = 0; d < kDetectorCount; ++d) tally.energy[d] += f[d];
  }
}

inline double mean_se(double sum, double sum_sq, double n) {
  if (n < 2) return 0.0;
  const double mean = sum / n;
  const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
  return std::sqrt(var / n);
}

}  // namespace detail

inline std::string mode_name(const Scenario& s) { return s.mode == Mode::honest ? "honest" : "attack"; }

inline std::string kind_name(const Scenario& s) {
  return s.mode == Mode::honest ? "honest" : std::string(adversary::to_string(s.attack.kind));
}

inline SimResult run(const Scenario& scenario) {
  scenario.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto prep = detail::prepare(scenario);

  const std::uint64_t blocks = (scenario.rounds + kBlockRounds - 1) / kBlockRounds;
  std::vector<detail::BlockTally> tallies(blocks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
      const std::uint64_t lo = b * kBlockRounds;
      const std::uint64_t hi = std::min(lo + kBlockRounds, scenario.rounds);
      for (std::uint64_t i = lo; i < hi; ++i) detail::run_round(prep, i, tallies[b]);
    }
  };
  const unsigned nthreads = static_cast<unsigned>(std::min<std::uint64_t>(scenario.workers, blocks));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work);
  }

  detail::BlockTally total;
  for (const auto& t : tallies) total.merge(t);

  SimResult r;
  r.mode = mode_name(scenario);
  r.kind = kind_name(scenario);
  r.rounds = scenario.rounds;
  r.seed = scenario.seed;
  r.workers = scenario.workers;
  r.fixed_u = scenario.fixed_u.has_value();

  const double n = static_cast<double>(scenario.rounds);
  const auto& st = total.sift;
  r.sifted = st.sifted;
  r.errors = st.errors;
  r.alert_clicks = st.alert_clicks;
  r.alert_rounds = st.alert_rounds;
  r.discarded = st.discarded;
  r.detector_clicks = total.clicks;

  r.rates.kind = r.kind;
  r.rates.provenance = analysis::Provenance::monte_carlo;
  r.rates.alert_rate = static_cast<double>(st.alert_clicks) / n;
  r.rates.sifted_rate = static_cast<double>(st.sifted) / n;
  r.rates.qber = st.qber();
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    r.rates.detector_click_rates[d] = static_cast<double>(total.clicks[d]) / n;
    r.energy_fractions[d] = total.energy[d] / n;
  }
  r.alert_se = detail::mean_se(static_cast<double>(st.alert_clicks), total.alert_sq, n);
  r.sifted_se = std::sqrt(r.rates.sifted_rate * (1.0 - r.rates.sifted_rate) / n);
  r.qber_se = st.sifted ? std::sqrt(r.rates.qber * (1.0 - r.rates.qber) / static_cast<double>(st.sifted)) : 0.0;
  r.mean_alert_arrival = total.alert_arrival / n;
  r.mean_alert_arrival_se = detail::mean_se(total.alert_arrival, total.alert_arrival_sq, n);
  r.mean_secure_arrival = total.secure_arrival / n;

  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// The closed-form counterpart of a scenario.
inline analysis::RatesReport analytic_report(const Scenario& s) {
  if (s.mode == Mode::honest) return analysis::honest_rates(s.system);
  return analysis::attack_rates(s.system, s.attack, s.detector_models, s.fixed_u);
}

inline constexpr std::array<std::string_view, 11> kSweepParameters{
    "theta1_deg", "theta2_deg", "qwp_deg", "purity",  "trigger_energy_pj", "blinding_power_mw",
    "switch_rate", "mu",        "mu_e",    "eve_fidelity", "bob_fidelity"};

class UnknownParameterError : public std::invalid_argument {
 public:
  explicit UnknownParameterError(const std::string& name)
      : std::invalid_argument("unknown sweep parameter '" + name + "'") {}
};

/// Sets one named parameter. `mu` sets both Bob's honest pulse and the pulse
/// Eve measures.
inline void apply_parameter(Scenario& s, std::string_view name, double value) {
  if (name == "theta1_deg") s.attack.source.theta1 = qmath::degrees(value);
  else if (name == "theta2_deg") s.attack.source.theta2 = qmath::degrees(value);
  else if (name == "qwp_deg") s.attack.source.qwp_angle = qmath::degrees(value);
  else if (name == "purity") s.attack.source.theta1 = adversary::theta1_for_purity(value);
  else if (name == "trigger_energy_pj") s.attack.source.pulse_energy_pj = value;
  else if (name == "blinding_power_mw") s.attack.blinding_power_mw = value;
  else if (name == "switch_rate") s.system.switch_rate = value;
  else if (name == "mu") s.system.mu = s.system.eve.mu = value;
  else if (name == "mu_e") s.system.mu_e = value;
  else if (name == "eve_fidelity") s.system.eve.fidelity = value;
  else if (name == "bob_fidelity") s.system.receiver.fidelity = value;
  else throw UnknownParameterError(std::string(name));
}

struct SweepPoint {
  double value;
  SimResult result;
};

/// One simulation per grid value, all with the template's seed.
inline std::vector<SweepPoint> sweep(const Scenario& base, std::string_view parameter, const std::vector<double>& grid) {
  Scenario probe = base;
  apply_parameter(probe, parameter, base.system.mu);  // rejects unknown names even for an empty grid
  std::vector<SweepPoint> table;
  table.reserve(grid.size());
  for (double v : grid) {
    Scenario s = base;
    apply_parameter(s, parameter, v);
    table.push_back({v, run(s)});
  }
  return table;
}

}  // namespace prqkd::sim
