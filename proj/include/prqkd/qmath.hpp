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

// Two-dimensional complex linear algebra for polarization optics.
//
// Conventions (fixed for the whole library):
//   * Jones vectors are column vectors ordered (H, V).
//   * D = (H + V)/sqrt2, A = (H - V)/sqrt2, R = (H + iV)/sqrt2, L = (H - iV)/sqrt2.
//   * Bloch vector (x, y, z) with rho = (I + x sx + y sy + z sz)/2, so that
//     H -> +z, D -> +x, R -> +y.
//   * Waveplate angles are measured from the vertical axis. A plate at angle
//     alpha has its fast axis at alpha + 90 deg from horizontal; its Jones
//     matrix is R(t) diag(e^{-i d/2}, e^{i d/2}) R(-t), so det = 1.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

namespace prqkd::qmath {

using Complex = std::complex<double>;

inline constexpr double kAlgebraTolerance = 1e-12;

struct JonesVector {
  Complex h{};
  Complex v{};

  double norm_squared() const { return std::norm(h) + std::norm(v); }
};

inline JonesVector operator*(Complex s, const JonesVector& x) { return {s * x.h, s * x.v}; }

inline Complex inner(const JonesVector& a, const JonesVector& b) {
  return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

namespace basis {
inline JonesVector horizontal() { return {1.0, 0.0}; }
inline JonesVector vertical() { return {0.0, 1.0}; }
inline JonesVector diagonal() { return {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}; }
inline JonesVector antidiagonal() { return {std::numbers::sqrt2 / 2, -std::numbers::sqrt2 / 2}; }
inline JonesVector right() { return {std::numbers::sqrt2 / 2, Complex(0, std::numbers::sqrt2 / 2)}; }
inline JonesVector left() { return {std::numbers::sqrt2 / 2, Complex(0, -std::numbers::sqrt2 / 2)}; }
}  // namespace basis

/// Row-major 2x2 complex matrix.
struct ComplexMatrix2 {
  std::array<Complex, 4> m{};

  static constexpr ComplexMatrix2 identity() { return {{1.0, 0.0, 0.0, 1.0}}; }
  static constexpr ComplexMatrix2 zero() { return {}; }

  Complex& operator()(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
  const Complex& operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

  ComplexMatrix2 adjoint() const { return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}}; }
  ComplexMatrix2 transpose() const { return {{m[0], m[2], m[1], m[3]}}; }
  Complex trace() const { return m[0] + m[3]; }
  Complex determinant() const { return m[0] * m[3] - m[1] * m[2]; }

  bool is_finite() const {
    for (const auto& z : m) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }
};

inline ComplexMatrix2 operator*(const ComplexMatrix2& a, const ComplexMatrix2& b) {
  return {{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
           a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
}

inline ComplexMatrix2 operator+(const ComplexMatrix2& a, const ComplexMatrix2& b) {
  return {{a.m[0] + b.m[0], a.m[1] + b.m[1], a.m[2] + b.m[2], a.m[3] + b.m[3]}};
}

inline ComplexMatrix2 operator-(const ComplexMatrix2& a, const ComplexMatrix2& b) {
  return {{a.m[0] - b.m[0], a.m[1] - b.m[1], a.m[2] - b.m[2], a.m[3] - b.m[3]}};
}

inline ComplexMatrix2 operator*(Complex s, const ComplexMatrix2& a) {
  return {{s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]}};
}

inline JonesVector operator*(const ComplexMatrix2& a, const JonesVector& x) {
  return {a.m[0] * x.h + a.m[1] * x.v, a.m[2] * x.h + a.m[3] * x.v};
}

inline ComplexMatrix2 outer(const JonesVector& a, const JonesVector& b) {
  return {{a.h * std::conj(b.h), a.h * std::conj(b.v), a.v * std::conj(b.h), a.v * std::conj(b.v)}};
}

/// Largest absolute entry of a - b.
inline double max_abs_diff(const ComplexMatrix2& a, const ComplexMatrix2& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
  return d;
}

/// max_abs_diff(a, e^{i phi} b) minimized over the global phase phi.
inline double max_abs_diff_up_to_phase(const ComplexMatrix2& a, const ComplexMatrix2& b) {
  Complex overlap = 0.0;
  for (std::size_t i = 0; i < 4; ++i) overlap += std::conj(b.m[i]) * a.m[i];
  if (std::abs(overlap) == 0.0) return max_abs_diff(a, b);
  return max_abs_diff(a, (overlap / std::abs(overlap)) * b);
}

/// Antisymmetric form J = [[0, 1], [-1, 0]]; satisfies T^T J T = det(T) J.
inline constexpr ComplexMatrix2 faraday_mirror() { return {{0.0, 1.0, -1.0, 0.0}}; }

inline constexpr ComplexMatrix2 pauli_x() { return {{0.0, 1.0, 1.0, 0.0}}; }

class JonesUnitary {
 public:
  JonesUnitary() : matrix_(ComplexMatrix2::identity()) {}

  /// Throws std::invalid_argument unless U U^dagger = I within `tolerance`.
  static JonesUnitary from_matrix(const ComplexMatrix2& u, double tolerance = kAlgebraTolerance) {
    if (!u.is_finite()) throw std::invalid_argument("unitary has non-finite entries");
    if (unitarity_defect(u) > tolerance) throw std::invalid_argument("matrix is not unitary");
    return JonesUnitary(u);
  }

  static double unitarity_defect(const ComplexMatrix2& u) {
    return max_abs_diff(u * u.adjoint(), ComplexMatrix2::identity());
  }

  const ComplexMatrix2& matrix() const { return matrix_; }
  JonesUnitary adjoint() const { return JonesUnitary(matrix_.adjoint()); }
  JonesUnitary transpose() const { return JonesUnitary(matrix_.transpose()); }

  friend JonesUnitary operator*(const JonesUnitary& a, const JonesUnitary& b) {
    return JonesUnitary(a.matrix_ * b.matrix_);
  }
  friend JonesVector operator*(const JonesUnitary& a, const JonesVector& x) { return a.matrix_ * x; }

 private:
  explicit JonesUnitary(const ComplexMatrix2& u) : matrix_(u) {}
  ComplexMatrix2 matrix_;
};

class PolarizationState {
 public:
  PolarizationState() : rho_(0.5 * ComplexMatrix2::identity()) {}

  /// Validates Hermiticity, unit trace and positivity within `tolerance`.
  static PolarizationState from_matrix(const ComplexMatrix2& rho, double tolerance = kAlgebraTolerance) {
    if (!rho.is_finite()) throw std::invalid_argument("density operator has non-finite entries");
    if (max_abs_diff(rho, rho.adjoint()) > tolerance) throw std::invalid_argument("density operator is not Hermitian");
    if (std::abs(rho.trace() - 1.0) > tolerance) throw std::invalid_argument("density operator trace differs from 1");
    PolarizationState s(rho);
    auto [lo, hi] = s.eigenvalues();
    (void)hi;
    if (lo < -tolerance) throw std::invalid_argument("density operator has a negative eigenvalue");
    return s;
  }

  static PolarizationState pure(const JonesVector& psi) {
    const double n = psi.norm_squared();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("cannot normalize a zero Jones vector");
    return PolarizationState(Complex(1.0 / n) * outer(psi, psi));
  }

  static PolarizationState maximally_mixed() { return PolarizationState(); }

  /// Bloch-vector form; |r| must not exceed 1.
  static PolarizationState from_bloch(double x, double y, double z) {
    const double r2 = x * x + y * y + z * z;
    if (!std::isfinite(r2) || r2 > 1.0 + kAlgebraTolerance) throw std::invalid_argument("Bloch vector longer than 1");
    return PolarizationState(ComplexMatrix2{{Complex(0.5 * (1 + z)), Complex(0.5 * x, -0.5 * y), Complex(0.5 * x, 0.5 * y),
                               Complex(0.5 * (1 - z))}});
  }

  /// weight * |a><a| + (1 - weight) * |b><b| for orthonormal a, b.
  static PolarizationState mixture(double weight, const JonesVector& a, const JonesVector& b) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("mixture weight outside [0, 1]");
    auto pa = pure(a).matrix();
    auto pb = pure(b).matrix();
    return from_matrix(Complex(weight) * pa + Complex(1.0 - weight) * pb, 1e-9);
  }

  const ComplexMatrix2& matrix() const { return rho_; }

  double purity() const {
    return std::norm(rho_.m[0]) + std::norm(rho_.m[3]) + 2.0 * std::norm(rho_.m[1]);
  }

  /// <psi|rho|psi> for a normalized psi.
  double expectation(const JonesVector& psi) const { return inner(psi, rho_ * psi).real(); }

  std::array<double, 3> bloch_vector() const {
    return {2.0 * rho_.m[2].real(), 2.0 * rho_.m[2].imag(), (rho_.m[0] - rho_.m[3]).real()};
  }

  /// Ascending eigenvalues (1 - r)/2, (1 + r)/2.
  std::pair<double, double> eigenvalues() const {
    const double tr = rho_.trace().real();
    const double diff = (rho_.m[0] - rho_.m[3]).real();
    const double r = std::sqrt(diff * diff + 4.0 * std::norm(rho_.m[1]));
    return {0.5 * (tr - r), 0.5 * (tr + r)};
  }

  friend PolarizationState conjugate_state(const JonesUnitary& u, const PolarizationState& state);

 private:
  explicit PolarizationState(const ComplexMatrix2& rho) : rho_(rho) {}
  ComplexMatrix2 rho_;
};

/// U rho U^dagger.
inline PolarizationState conjugate_state(const JonesUnitary& u, const PolarizationState& state) {
  return PolarizationState(u.matrix() * state.rho_ * u.matrix().adjoint());
}

inline double purity(const PolarizationState& state) { return state.purity(); }

struct OverlapBounds {
  double max;
  double min;
};

/// Extremes of <psi|U rho U^dagger|psi> over all unitaries U, for a state of
/// the given purity and any pure psi.
inline OverlapBounds overlap_bounds(double purity) {
  if (!(purity >= 0.5 - kAlgebraTolerance && purity <= 1.0 + kAlgebraTolerance)) {
    throw std::domain_error("purity must lie in [1/2, 1], got " + std::to_string(purity));
  }
  const double radius = std::sqrt(std::clamp(2.0 * purity - 1.0, 0.0, 1.0));
  return {0.5 * (1.0 + radius), 0.5 * (1.0 - radius)};
}

enum class WaveplateKind { half, quarter };

/// Ideal retarder with its fast axis at `angle` radians from the vertical.
inline JonesUnitary waveplate(WaveplateKind kind, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("waveplate angle must be finite");
  const double retardance = kind == WaveplateKind::half ? std::numbers::pi : std::numbers::pi / 2;
  const double theta = angle + std::numbers::pi / 2;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Complex slow = std::polar(1.0, retardance / 2);
  const Complex fast = std::conj(slow);
  const Complex off = c * s * (fast - slow);
  return JonesUnitary::from_matrix({{c * c * fast + s * s * slow, off, off, s * s * fast + c * c * slow}});
}

inline double degrees(double deg) { return deg * std::numbers::pi / 180.0; }

/// Bob's fixed-randomizer reference setting: light traverses a QWP at 45 deg
/// and then a HWP at 112.5 deg. Equal to (1/sqrt2)[[i, i], [1, -1]] up to a
/// global phase.
inline JonesUnitary reference_randomizer() {
  return waveplate(WaveplateKind::half, degrees(112.5)) * waveplate(WaveplateKind::quarter, degrees(45.0));
}

template <typename T>
concept NormalSource = requires(T& t) {
  { t.normal() } -> std::convertible_to<double>;
};

/// Haar-distributed element of U(2): Gram-Schmidt QR of a complex Ginibre
/// matrix. Gram-Schmidt leaves R with a positive real diagonal, which is the
/// phase normalization that makes Q Haar distributed.
template <NormalSource Rng>
JonesUnitary haar_random_unitary(Rng& rng) {
  constexpr double kScale = std::numbers::sqrt2 / 2;
  for (;;) {
    JonesVector a{Complex(rng.normal(), rng.normal()) * kScale, Complex(rng.normal(), rng.normal()) * kScale};
    JonesVector b{Complex(rng.normal(), rng.normal()) * kScale, Complex(rng.normal(), rng.normal()) * kScale};
    const double na = std::sqrt(a.norm_squared());
    if (na < 1e-150) continue;
    JonesVector q1 = Complex(1.0 / na) * a;
    const Complex proj = inner(q1, b);
    JonesVector r{b.h - proj * q1.h, b.v - proj * q1.v};
    const double nr = std::sqrt(r.norm_squared());
    if (nr < 1e-150) continue;
    JonesVector q2 = Complex(1.0 / nr) * r;
    return JonesUnitary::from_matrix({{q1.h, q2.h, q1.v, q2.v}}, 1e-10);
  }
}

/// Diagonal state of the given purity, heavier weight on H.
inline PolarizationState state_with_purity(double purity) {
  const auto b = overlap_bounds(purity);
  return PolarizationState::mixture(b.max, basis::horizontal(), basis::vertical());
}

/// Brute-force extremes of <H|U rho U^dagger|H> over `draws` Haar unitaries.
template <NormalSource Rng>
OverlapBounds sampled_overlap_extremes(const PolarizationState& rho, std::size_t draws, Rng& rng) {
  OverlapBounds out{0.0, 1.0};
  for (std::size_t k = 0; k < draws; ++k) {
    const double o = conjugate_state(haar_random_unitary(rng), rho).expectation(basis::horizontal());
    out.max = std::max(out.max, o);
    out.min = std::min(out.min, o);
  }
  return out;
}

}  // namespace prqkd::qmath
