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

// Closed-form alert rate, sifted key rate and QBER for the honest run and for
// every attack family. All rates are per round (per Alice pulse).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prqkd/adversary.hpp"
#include "prqkd/detectors.hpp"
#include "prqkd/protocol.hpp"
#include "prqkd/qmath.hpp"

namespace prqkd::analysis {

using protocol::kDetectorCount;
using protocol::Phase;

struct SystemParams {
  protocol::Receiver receiver;
  /// Mean photon number of Bob's own pulse back at his receiver before the
  /// one-way transmittance is applied.
  double mu = 0.1;
  double transmittance = 1.0;
  adversary::EveMeasurementParams eve;
  /// Mean photon number of Eve's resent pulse at Bob, her losses included.
  double mu_e = 1.0;
  double switch_rate = 0.0;

  double honest_mean_photons() const { return mu * transmittance; }

  void validate() const {
    receiver.validate();
    eve.validate();
    auto finite_nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be finite and non-negative");
    };
    finite_nonneg(mu, "mu");
    finite_nonneg(mu_e, "mu_e");
    if (!(transmittance >= 0.0 && transmittance <= 1.0)) throw std::invalid_argument("transmittance must lie in [0, 1]");
    if (!(switch_rate >= 0.0 && switch_rate <= 1.0)) throw std::invalid_argument("switch_rate must lie in [0, 1]");
  }
};

enum class Provenance { analytic, monte_carlo };

inline const char* to_string(Provenance p) { return p == Provenance::analytic ? "analytic" : "monte_carlo"; }

struct RatesReport {
  std::string kind;
  Provenance provenance = Provenance::analytic;
  double alert_rate = 0.0;
  double sifted_rate = 0.0;
  double qber = 0.0;
  std::array<double, kDetectorCount> detector_click_rates{};
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Quadrature and fitting.

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be positive");
  GaussLegendre g;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[static_cast<std::size_t>(i)] = -x;
    g.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    g.weights[static_cast<std::size_t>(i)] = g.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return g;
}

inline constexpr int kQuadratureOrder = 48;

/// Mean of f over the uniform distribution on [lo, hi] (a point when lo == hi).
template <typename F>
auto uniform_average(double lo, double hi, F&& f) {
  using R = decltype(f(lo));
  if (hi <= lo) return f(lo);
  static const GaussLegendre g = gauss_legendre(kQuadratureOrder);
  R acc{};
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) acc = acc + (0.5 * g.weights[i]) * f(mid + half * g.nodes[i]);
  return acc;
}

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double visibility = 0.0;
  double r_squared = 0.0;
};

/// Least-squares y = offset + amplitude cos(2 pi x / period - phase), period
/// fixed (90 deg for a half-wave-plate sweep).
inline SinusoidFit fit_sinusoid(std::span<const double> x_deg, std::span<const double> y, double period_deg = 90.0) {
  if (x_deg.size() != y.size()) throw std::invalid_argument("fit inputs differ in length");
  if (x_deg.size() < 3) throw std::invalid_argument("sinusoid fit needs at least three points");
  double a[3][3] = {};
  double b[3] = {};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * x_deg[i] / period_deg;
    const double basis[3] = {1.0, std::cos(t), std::sin(t)};
    for (int r = 0; r < 3; ++r) {
      b[r] += basis[r] * y[i];
      for (int c = 0; c < 3; ++c) a[r][c] += basis[r] * basis[c];
    }
  }
  // Gaussian elimination with partial pivoting.
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    std::swap(perm[col], perm[piv]);
    if (std::abs(a[col][col]) < 1e-300) throw std::runtime_error("degenerate sinusoid fit (sample points alias)");
    for (int r = col + 1; r < 3; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= m * a[col][c];
      b[r] -= m * b[col];
    }
  }
  double coef[3];
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * coef[c];
    coef[r] = s / a[r][r];
  }

  SinusoidFit fit;
  fit.offset = coef[0];
  fit.amplitude = std::hypot(coef[1], coef[2]);
  fit.phase = std::atan2(coef[2], coef[1]);
  fit.visibility = fit.offset != 0.0 ? fit.amplitude / fit.offset : 0.0;

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * x_deg[i] / period_deg;
    const double model = coef[0] + coef[1] * std::cos(t) + coef[2] * std::sin(t);
    ss_res += (y[i] - model) * (y[i] - model);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Raw and squashed click probabilities of the quantum-attack model.

/// Click probabilities of (a1, a2, b1, b2, b3, b4) for a pulse of mean mu_e
/// photons with phase index k, a fraction p_b of which is routed to the
/// secure path. Secure detectors: matched basis F/4 and (1-F)/4 of the
/// pulse, other basis 1/8 each. Alert detectors are averaged over the active
/// alert basis: matched F p_a/2 and (1-F) p_a/2, unmatched p_a/4 each.
inline std::array<double, kDetectorCount> raw_click_probs(const protocol::Receiver& rx, double mu_e, double p_b,
                                                          Phase k) {
  const double p_a = 1.0 - p_b;
  const double f = rx.fidelity;
  auto click = [&](std::size_t d, double photons) {
    const auto& g = rx.detectors[d];
    return std::clamp(g.background + 1.0 - std::exp(-mu_e * photons * g.efficiency), 0.0, 1.0);
  };
  std::array<double, kDetectorCount> p{};
  for (int bit = 0; bit < 2; ++bit) {
    const std::size_t d = protocol::alert_detector(bit);
    const double share = bit == k.bit() ? f : 1.0 - f;
    const auto& g = rx.detectors[d];
    p[d] = std::clamp(g.background + 1.0 - 0.5 * std::exp(-mu_e * p_a * share * g.efficiency / 2.0) -
                          0.5 * std::exp(-mu_e * p_a * g.efficiency / 4.0),
                      0.0, 1.0);
  }
  for (int basis = 0; basis < 2; ++basis) {
    for (int bit = 0; bit < 2; ++bit) {
      const auto b = static_cast<protocol::Basis>(basis);
      const std::size_t d = protocol::secure_detector(b, bit);
      double photons;
      if (b == k.basis()) {
        photons = p_b * (bit == k.bit() ? f : 1.0 - f) / 4.0;
      } else {
        photons = p_b / 8.0;
      }
      p[d] = click(d, photons);
    }
  }
  return p;
}

/// Squashed single-outcome probabilities P_b1..P_b4 (index 0..3 = b1..b4):
/// a detector's own click, its basis partner counted with weight 1/2, and
/// silence in the other basis.
inline std::array<double, 4> squashed_probs(const std::array<double, kDetectorCount>& raw) {
  std::array<double, 4> out{};
  for (int j = 0; j < 4; ++j) {
    const int partner = j ^ 1;
    const int o0 = j < 2 ? 2 : 0;
    out[static_cast<std::size_t>(j)] = raw[2 + j] * (1.0 - 0.5 * raw[2 + partner]) * (1.0 - raw[2 + o0]) *
                                       (1.0 - raw[2 + o0 + 1]);
  }
  return out;
}

struct SiftedAndError {
  double sifted = 0.0;
  double error = 0.0;
};

/// Sifted rate and error rate for Alice's phase k when Eve's outcome
/// distribution is `eve`, her resend carries mu_e photons and a fraction p_b
/// of it reaches the secure path. Eve's silent rounds leave only background.
inline SiftedAndError sifted_and_error(const protocol::Receiver& rx, const adversary::EveOutcomeProbabilities& eve,
                                       double mu_e, double p_b, Phase k) {
  const auto basis = k.basis();
  const std::size_t right = protocol::secure_detector(basis, k.bit()) - 2;
  const std::size_t wrong = protocol::secure_detector(basis, 1 - k.bit()) - 2;
  auto pair = [&](Phase sent) {
    const auto sq = squashed_probs(raw_click_probs(rx, mu_e, p_b, sent));
    return SiftedAndError{sq[right] + sq[wrong], sq[wrong]};
  };
  const auto c = pair(k);
  const auto w = pair(k.shifted(2));
  const auto n1 = pair(k.shifted(1));
  const auto n3 = pair(k.shifted(3));
  const double cr = rx.detectors[2 + right].background;
  const double cw = rx.detectors[2 + wrong].background;
  const double quiet = eve.none();
  return {eve.correct * c.sifted + eve.wrong * w.sifted + eve.incompatible * (n1.sifted + n3.sifted) +
              quiet * (cr + cw - cr * cw),
          eve.correct * c.error + eve.wrong * w.error + eve.incompatible * (n1.error + n3.error) +
              quiet * (cw - 0.5 * cr * cw)};
}

// ---------------------------------------------------------------------------
// Exact expectation of one round under the simulated receiver model.

struct RoundExpectation {
  double sifted = 0.0;
  double errors = 0.0;
  double alert_clicks = 0.0;
  std::array<double, kDetectorCount> clicks{};

  RoundExpectation operator+(const RoundExpectation& o) const {
    RoundExpectation r = *this;
    r.sifted += o.sifted;
    r.errors += o.errors;
    r.alert_clicks += o.alert_clicks;
    for (std::size_t d = 0; d < kDetectorCount; ++d) r.clicks[d] += o.clicks[d];
    return r;
  }
  friend RoundExpectation operator*(double s, RoundExpectation r) {
    r.sifted *= s;
    r.errors *= s;
    r.alert_clicks *= s;
    for (auto& c : r.clicks) c *= s;
    return r;
  }
};

/// Enumerates all 64 click patterns of the six detectors for one incoming
/// pulse (or none, when `light` is empty) and applies squashing and sifting
/// against Alice's phase exactly. Averaged over the alert-basis setting.
inline RoundExpectation expected_round(const protocol::Receiver& rx, const protocol::RoutingOutcome& routing,
                                       std::optional<Phase> light, double mean_photons, Phase alice,
                                       bool switched = false) {
  RoundExpectation total;
  for (int ab = 0; ab < 2; ++ab) {
    const auto alert_basis = static_cast<protocol::Basis>(ab);
    std::array<double, kDetectorCount> f{};
    if (light) f = protocol::detector_fractions(routing, *light, alert_basis, rx.fidelity, rx.secure_basis);

    // Per-pattern probability as a mixture over which detector (if any) the
    // signal reaches; Poisson light is a single independent-click component.
    struct Component {
      double weight;
      std::array<double, kDetectorCount> p;
    };
    std::vector<Component> comps;
    if (rx.statistics == protocol::PhotonStatistics::poisson) {
      Component c{1.0, {}};
      for (std::size_t d = 0; d < kDetectorCount; ++d) {
        c.p[d] = detectors::geiger_click_probability(rx.detectors[d], mean_photons * f[d]);
      }
      comps.push_back(c);
    } else {
      const double arrive = light ? std::min(mean_photons, 1.0) : 0.0;
      double rest = 1.0;
      for (std::size_t hit = 0; hit < kDetectorCount; ++hit) {
        const double w = arrive * f[hit];
        if (w <= 0.0) continue;
        rest -= w;
        Component c{w, {}};
        for (std::size_t d = 0; d < kDetectorCount; ++d) {
          const auto& g = rx.detectors[d];
          c.p[d] = d == hit ? 1.0 - (1.0 - g.efficiency) * (1.0 - g.background) : g.background;
        }
        comps.push_back(c);
      }
      Component none{std::max(rest, 0.0), {}};
      for (std::size_t d = 0; d < kDetectorCount; ++d) none.p[d] = rx.detectors[d].background;
      comps.push_back(none);
    }

    RoundExpectation part;
    for (const auto& comp : comps) {
      for (unsigned mask = 0; mask < (1u << kDetectorCount); ++mask) {
        double prob = comp.weight;
        for (std::size_t d = 0; d < kDetectorCount; ++d) prob *= (mask >> d & 1u) ? comp.p[d] : 1.0 - comp.p[d];
        if (prob == 0.0) continue;
        auto on = [&](std::size_t d) { return (mask >> d & 1u) != 0; };
        for (std::size_t d = 0; d < kDetectorCount; ++d) part.clicks[d] += on(d) ? prob : 0.0;

        std::optional<protocol::Basis> basis;
        bool zero = false, one = false;
        if (!switched) {
          part.alert_clicks += prob * (int{on(0)} + int{on(1)});
          const bool da = on(2) || on(3);
          const bool rl = on(4) || on(5);
          if (da != rl) {
            basis = da ? protocol::Basis::da : protocol::Basis::rl;
            zero = on(protocol::secure_detector(*basis, 0));
            one = on(protocol::secure_detector(*basis, 1));
          }
        } else {
          part.alert_clicks += prob * (int{on(2)} + int{on(3)} + int{on(4)} + int{on(5)});
          if (on(0) || on(1)) {
            basis = alert_basis;
            zero = on(0);
            one = on(1);
          }
        }
        if (basis && *basis == alice.basis()) {
          part.sifted += prob;
          const double err = (zero && one) ? 0.5 : ((one ? 1 : 0) != alice.bit() ? 1.0 : 0.0);
          part.errors += prob * err;
        }
      }
    }
    total = total + 0.5 * part;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Randomizer model for averaging over p_a.

/// p_a = <H|U rho U^dagger|H> is uniform on [(1-r)/2, (1+r)/2] for Haar U and
/// a state of Bloch radius r; a fixed U pins it to one value.
struct AlertShareRange {
  double lo = 0.0;
  double hi = 1.0;
};

inline AlertShareRange alert_share_range(const qmath::PolarizationState& rho,
                                         const std::optional<qmath::JonesUnitary>& fixed_u) {
  if (fixed_u) {
    const double p = protocol::faked_state_routing(rho, Phase(0), *fixed_u).p_alert;
    return {p, p};
  }
  const auto [x, y, z] = rho.bloch_vector();
  const double r = std::min(std::sqrt(x * x + y * y + z * z), 1.0);
  return {0.5 * (1.0 - r), 0.5 * (1.0 + r)};
}

namespace detail {
inline void finish(RatesReport& r) {
  r.qber = r.sifted_rate > 0.0 ? r.qber / r.sifted_rate : 0.0;
}

inline bool closed_form_applies(const SystemParams& p) {
  return p.receiver.secure_basis == protocol::SecureBasisMode::passive &&
         p.receiver.statistics == protocol::PhotonStatistics::poisson;
}

struct Accumulator {
  double sifted = 0, error = 0, alert = 0, printed = 0;
  std::array<double, kDetectorCount> clicks{};

  Accumulator operator+(const Accumulator& o) const {
    Accumulator a = *this;
    a.sifted += o.sifted;
    a.error += o.error;
    a.alert += o.alert;
    a.printed += o.printed;
    for (std::size_t d = 0; d < kDetectorCount; ++d) a.clicks[d] += o.clicks[d];
    return a;
  }
  friend Accumulator operator*(double s, Accumulator a) {
    a.sifted *= s;
    a.error *= s;
    a.alert *= s;
    a.printed *= s;
    for (auto& c : a.clicks) c *= s;
    return a;
  }
  void add(double w, const RoundExpectation& e) {
    sifted += w * e.sifted;
    error += w * e.errors;
    alert += w * e.alert_clicks;
    for (std::size_t d = 0; d < kDetectorCount; ++d) clicks[d] += w * e.clicks[d];
  }
};

/// Rounds with Eve's outcome distribution `eve`, averaged over Alice's four
/// phases, by exact enumeration. `switched` exchanges the path roles.
inline Accumulator enumerate_resends(const protocol::Receiver& rx, const adversary::EveOutcomeProbabilities& eve,
                                     const protocol::RoutingOutcome& routing, double mean_photons, bool switched) {
  Accumulator a;
  for (Phase k : protocol::kAllPhases) {
    auto add = [&](double w, std::optional<Phase> light) {
      if (w > 0.0) a.add(0.25 * w, expected_round(rx, routing, light, mean_photons, k, switched));
    };
    add(eve.correct, k);
    add(eve.wrong, k.shifted(2));
    add(eve.incompatible, k.shifted(1));
    add(eve.incompatible, k.shifted(3));
    add(eve.none(), std::nullopt);
  }
  return a;
}

/// The squashing closed form for unswitched rounds with passive detection.
inline Accumulator closed_form_resends(const protocol::Receiver& rx, const adversary::EveOutcomeProbabilities& eve,
                                       double p_b, double mean_photons) {
  Accumulator a;
  const double send = eve.send();
  for (Phase k : protocol::kAllPhases) {
    const auto se = sifted_and_error(rx, eve, mean_photons, p_b, k);
    a.sifted += 0.25 * se.sifted;
    a.error += 0.25 * se.error;
    const auto raw = raw_click_probs(rx, mean_photons, p_b, k);
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      a.clicks[d] += 0.25 * (send * raw[d] + (1.0 - send) * rx.detectors[d].background);
    }
  }
  a.alert = a.clicks[0] + a.clicks[1];
  return a;
}

/// Mixes unswitched and switched rounds with the path-switch rate. Switched
/// rounds are always evaluated by enumeration.
inline Accumulator resend_rounds(const SystemParams& p, const adversary::EveOutcomeProbabilities& eve, double p_a,
                                 double mean_photons, bool genuine) {
  const protocol::RoutingOutcome routing{p_a, 1.0 - p_a, protocol::kGateWindowFraction};
  Accumulator plain = closed_form_applies(p) ? closed_form_resends(p.receiver, eve, 1.0 - p_a, mean_photons)
                                             : enumerate_resends(p.receiver, eve, routing, mean_photons, false);
  if (p.switch_rate <= 0.0) return plain;
  // Bob steers his own photon into the alert path when he switches; injected
  // light is unaffected and only the labels change.
  const auto sw_routing = genuine ? routing.swapped() : routing;
  const Accumulator sw = enumerate_resends(p.receiver, eve, sw_routing, mean_photons, true);
  return (1.0 - p.switch_rate) * plain + p.switch_rate * sw;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Families.

/// Bob's own photon, no eavesdropper.
inline RatesReport honest_rates(const SystemParams& p) {
  p.validate();
  RatesReport r;
  r.kind = "honest";
  const adversary::EveOutcomeProbabilities faithful{1.0, 0.0, 0.0};
  const auto acc = detail::resend_rounds(p, faithful, 0.0, p.honest_mean_photons(), true);
  r.sifted_rate = acc.sifted;
  r.qber = acc.error;
  r.alert_rate = acc.alert;
  r.detector_click_rates = acc.clicks;
  detail::finish(r);
  return r;
}

/// Quantum attack: Eve measures Alice's pulse and, after a single click,
/// resends a faked state carrying her observed phase and polarization rho_T.
inline RatesReport quantum_attack_rates(const SystemParams& p, const qmath::PolarizationState& rho_t,
                                        const std::optional<qmath::JonesUnitary>& fixed_u = std::nullopt) {
  p.validate();
  RatesReport r;
  r.kind = "quantum";
  const auto eve = adversary::eve_outcome_probabilities(p.eve);
  const auto range = alert_share_range(rho_t, fixed_u);
  const double send = eve.send();
  const auto& det = p.receiver.detectors;

  const auto acc = uniform_average(range.lo, range.hi, [&](double p_a) {
    auto a = detail::resend_rounds(p, eve, p_a, p.mu_e, false);
    // As printed: both alert detectors credited with the matched share F p_a/2.
    const double x = p.mu_e * p_a;
    a.printed = det[0].background + det[1].background + 2.0 -
                0.5 * (std::exp(-x * p.receiver.fidelity * det[0].efficiency / 2.0) +
                       std::exp(-x * p.receiver.fidelity * det[1].efficiency / 2.0) +
                       std::exp(-x * det[0].efficiency / 4.0) + std::exp(-x * det[1].efficiency / 4.0));
    return a;
  });

  r.sifted_rate = acc.sifted;
  r.qber = acc.error;
  r.alert_rate = acc.alert;
  r.detector_click_rates = acc.clicks;
  detail::finish(r);
  r.diagnostics["eve_p_correct"] = eve.correct;
  r.diagnostics["eve_p_wrong"] = eve.wrong;
  r.diagnostics["eve_p_incompatible"] = eve.incompatible;
  r.diagnostics["eve_p_send"] = send;
  r.diagnostics["p_alert_lo"] = range.lo;
  r.diagnostics["p_alert_hi"] = range.hi;
  r.diagnostics["alert_rate_printed_per_resend"] = acc.printed;
  r.diagnostics["alert_rate_printed"] = send * acc.printed + (1.0 - send) * (det[0].background + det[1].background);
  return r;
}

/// Conventional intercept-resend: ideal BB84 measurement and single-photon
/// resends, evaluated by exact enumeration.
inline RatesReport intercept_resend_rates(SystemParams p, const qmath::PolarizationState& rho_t,
                                          const std::optional<qmath::JonesUnitary>& fixed_u = std::nullopt) {
  p.eve.model = adversary::EveModel::ideal_bb84;
  p.receiver.statistics = protocol::PhotonStatistics::single_photon;
  RatesReport r = quantum_attack_rates(p, rho_t, fixed_u);
  r.kind = "intercept_resend";
  r.diagnostics.erase("alert_rate_printed");
  r.diagnostics.erase("alert_rate_printed_per_resend");
  const auto range = alert_share_range(rho_t, fixed_u);
  r.diagnostics["mean_alert_arrival"] =
      adversary::eve_outcome_probabilities(p.eve).send() * std::min(p.mu_e, 1.0) * 0.5 * (range.lo + range.hi) *
      protocol::kGateWindowFraction;
  return r;
}

inline adversary::ThresholdSet split_thresholds(std::span<const detectors::DetectorModel> models,
                                                const adversary::AttackConfig& attack) {
  return adversary::blinded_thresholds(models, attack.blinding_power_mw, 0.5, attack.gate, attack.extrapolation);
}

/// Average of the ramp over a pulse energy uniform on [0, m].
inline double ramp_average(double m, double never, double always) {
  if (m <= never) return 0.0;
  if (m >= always) return 1.0 - (never + always) / (2.0 * m);
  return (m - never) * (m - never) / (2.0 * m * (always - never));
}

/// Blinding attack averaged over the randomizer (p_a uniform on [0, 1]).
inline RatesReport blinding_attack_rates(const SystemParams& p, std::span<const detectors::DetectorModel> models,
                                         const adversary::AttackConfig& attack) {
  p.validate();
  attack.validate();
  RatesReport r;
  r.kind = "blinding";
  const double et = attack.trigger_energy_pj();
  const auto th = split_thresholds(models, attack);
  const auto eve = adversary::eve_outcome_probabilities(p.eve);
  const double rsw = p.switch_rate;

  std::array<double, 2> r_a{};
  std::array<double, 4> r_b{};
  std::array<double, 2> r_a_exact{};
  std::array<double, 4> r_b_exact{};
  for (int i = 0; i < 2; ++i) {
    const auto [n, a] = th[static_cast<std::size_t>(i)];
    r_a[static_cast<std::size_t>(i)] = et > 0.0 ? 0.5 * std::max(1.0 - (n + a) / et, 0.0) : 0.0;
    r_a_exact[static_cast<std::size_t>(i)] = 0.5 * ramp_average(0.5 * et, n, a);
  }
  for (int j = 0; j < 4; ++j) {
    const auto [n, a] = th[static_cast<std::size_t>(2 + j)];
    if (attack.perfect_control) {
      r_b[static_cast<std::size_t>(j)] = r_b_exact[static_cast<std::size_t>(j)] = 1.0;
    } else {
      r_b[static_cast<std::size_t>(j)] = et > 0.0 ? std::max(1.0 - 2.0 * (n + a) / et, 0.0) : 0.0;
      r_b_exact[static_cast<std::size_t>(j)] = ramp_average(0.25 * et, n, a);
    }
  }
  auto combine = [&](const std::array<double, 2>& ra, const std::array<double, 4>& rb) {
    const double sa = ra[0] + ra[1];
    const double sb = rb[0] + rb[1] + rb[2] + rb[3];
    return std::pair{0.5 * (1.0 - rsw) * sa + 0.25 * rsw * sb, 0.5 * rsw * sa + 0.25 * (1.0 - rsw) * sb};
  };
  const auto [alert_per_trigger, secure_per_trigger] = combine(r_a, r_b);
  const auto [alert_exact, secure_exact] = combine(r_a_exact, r_b_exact);

  const double trig = eve.send();
  r.alert_rate = trig * alert_per_trigger;
  r.sifted_rate = eve.compatible() * secure_per_trigger;
  r.qber = eve.resend_qber();
  for (std::size_t i = 0; i < 2; ++i) r.detector_click_rates[i] = trig * 0.5 * r_a[i];
  for (std::size_t j = 0; j < 4; ++j) r.detector_click_rates[2 + j] = trig * 0.25 * r_b[j];

  r.diagnostics["alert_rate_per_trigger"] = alert_per_trigger;
  r.diagnostics["secure_rate_per_trigger"] = secure_per_trigger;
  r.diagnostics["trigger_probability"] = trig;
  r.diagnostics["alert_rate_exact_ramp"] = trig * alert_exact;
  r.diagnostics["sifted_rate_exact_ramp"] = eve.compatible() * secure_exact;
  for (std::size_t i = 0; i < 2; ++i) r.diagnostics[std::string("R_") + protocol::kDetectorNames[i]] = r_a[i];
  for (std::size_t j = 0; j < 4; ++j) r.diagnostics[std::string("R_") + protocol::kDetectorNames[2 + j]] = r_b[j];

  // The averaged ramp is exact only when the matched detectors can reach
  // E_always and the unmatched ones stay below E_never.
  bool regime = true;
  for (std::size_t i = 0; i < 2; ++i) {
    if (0.5 * et < th[i].second && r_a[i] > 0.0) regime = false;
    if (0.25 * et > th[i].first) regime = false;
  }
  for (std::size_t j = 2; j < kDetectorCount; ++j) {
    if (!attack.perfect_control) {
      if (0.25 * et < th[j].second && r_b[j - 2] > 0.0) regime = false;
      if (0.125 * et > th[j].first) regime = false;
    }
  }
  r.diagnostics["ramp_regime_valid"] = regime ? 1.0 : 0.0;
  if (!regime) {
    r.warnings.push_back("trigger energy outside the ramp-average regime; Monte Carlo follows alert_rate_exact_ramp");
  }
  if (attack.polarized_blinding()) r.warnings.push_back("closed form assumes unpolarized blinding light");
  const auto trigger = adversary::eve_source_state(attack.source).polarization;
  if (trigger.purity() < 1.0 - 1e-9) r.warnings.push_back("closed form assumes a pure trigger polarization");
  return r;
}

inline RatesReport wavelength_blinding_rates(const SystemParams& p) {
  p.validate();
  const auto eve = adversary::eve_outcome_probabilities(p.eve);
  RatesReport r;
  r.kind = "wavelength_blinding";
  r.alert_rate = p.switch_rate;
  r.sifted_rate = eve.compatible() * (1.0 - p.switch_rate);
  r.qber = eve.resend_qber();
  const double per = 0.25 * ((1.0 - p.switch_rate) * eve.send() + p.switch_rate);
  for (std::size_t j = 2; j < kDetectorCount; ++j) r.detector_click_rates[j] = per;
  return r;
}

/// Eve picks a family per round with the given weights. The QBER is the
/// sifted-weighted mean; the probability-weighted form is kept as
/// qber_printed.
inline RatesReport integrated_attack_rates(const RatesReport& quantum, const RatesReport& blinding,
                                           const RatesReport& wavelength, const adversary::AttackWeights& w) {
  w.validate();
  RatesReport r;
  r.kind = "integrated";
  const std::array<const RatesReport*, 3> parts{&quantum, &blinding, &wavelength};
  const std::array<double, 3> weight{w.quantum, w.blinding, w.wavelength};
  double errors = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    r.alert_rate += weight[i] * parts[i]->alert_rate;
    r.sifted_rate += weight[i] * parts[i]->sifted_rate;
    errors += weight[i] * parts[i]->sifted_rate * parts[i]->qber;
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      r.detector_click_rates[d] += weight[i] * parts[i]->detector_click_rates[d];
    }
    for (const auto& warn : parts[i]->warnings) r.warnings.push_back(parts[i]->kind + ": " + warn);
  }
  r.qber = r.sifted_rate > 0.0 ? errors / r.sifted_rate : 0.0;
  r.diagnostics["qber_printed"] = w.quantum * quantum.qber + (w.blinding + w.wavelength) * blinding.qber;
  return r;
}

/// Analytic report for any family of the attack catalog.
inline RatesReport attack_rates(const SystemParams& p, const adversary::AttackConfig& attack,
                                std::span<const detectors::DetectorModel> models,
                                const std::optional<qmath::JonesUnitary>& fixed_u = std::nullopt) {
  attack.validate();
  const auto rho_t = adversary::eve_source_state(attack.source).polarization;
  switch (attack.kind) {
    case adversary::AttackKind::intercept_resend:
      return intercept_resend_rates(p, rho_t, fixed_u);
    case adversary::AttackKind::quantum:
      return quantum_attack_rates(p, rho_t, fixed_u);
    case adversary::AttackKind::blinding:
      return blinding_attack_rates(p, models, attack);
    case adversary::AttackKind::wavelength_blinding:
      return wavelength_blinding_rates(p);
    case adversary::AttackKind::integrated: {
      const auto q = quantum_attack_rates(p, rho_t, fixed_u);
      const auto b = attack.weights.blinding > 0.0 ? blinding_attack_rates(p, models, attack) : [&] {
        RatesReport empty;
        empty.kind = "blinding";
        empty.qber = adversary::eve_outcome_probabilities(p.eve).resend_qber();
        return empty;
      }();
      const auto w = wavelength_blinding_rates(p);
      return integrated_attack_rates(q, b, w, attack.weights);
    }
  }
  throw std::logic_error("unknown attack kind");
}

}  // namespace prqkd::analysis
