// Copyright 2026 The qlatt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QLATT_PAULI_HPP
#define QLATT_PAULI_HPP

// Exact 2x2 algebra for a single polarization qubit.
//
// Basis convention: circular polarization, |L> = (1,0)^T and |R> = (0,1)^T.
// Linear states are built from it: |H> = (|L>+|R>)/sqrt2, |D> = (|L>+i|R>)/sqrt2,
// so H, D, L sit on the +s1, +s2, +s3 axes of the Bloch sphere.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace qlatt {

using Complex = std::complex<double>;
using Complex2x2 = Eigen::Matrix2cd;

namespace tol {
/// Default tolerance for algebraic identities (unitarity, hermiticity, round trips).
inline constexpr double kAlgebraic = 1e-12;
/// Tolerance for channel-level sums (trace preservation, Gram trace).
inline constexpr double kChannel = 1e-10;
}  // namespace tol

inline constexpr Complex kI{0.0, 1.0};

/// sigma_0 .. sigma_3; index outside [0, 3] throws.
inline Complex2x2 pauli(int index) {
  Complex2x2 m;
  switch (index) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli index must be in [0, 3]");
  }
  return m;
}

inline Complex trace(const Complex2x2& m) { return m(0, 0) + m(1, 1); }

inline bool is_hermitian(const Complex2x2& m, double tolerance = tol::kAlgebraic) {
  return (m - m.adjoint()).norm() <= tolerance;
}

inline bool is_unitary(const Complex2x2& m, double tolerance = tol::kAlgebraic) {
  return (m * m.adjoint() - Complex2x2::Identity()).norm() <= tolerance;
}

/// Closed-form spectrum of a Hermitian 2x2, ascending.
inline std::array<double, 2> hermitian_eigenvalues(const Complex2x2& m) {
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), std::abs(m(0, 1)));
  return {mean - radius, mean + radius};
}

inline bool is_psd(const Complex2x2& m, double tolerance = tol::kAlgebraic) {
  return is_hermitian(m, tolerance) && hermitian_eigenvalues(m)[0] >= -tolerance;
}

/// Square root of a Hermitian PSD 2x2 through its spectral projectors.
/// Eigenvalues in [-tolerance, 0) are clamped to zero.
inline Complex2x2 hermitian_sqrt(const Complex2x2& m, double tolerance = tol::kAlgebraic) {
  const auto [lo, hi] = hermitian_eigenvalues(m);
  if (lo < -tolerance) throw std::domain_error("hermitian_sqrt: matrix is not positive semidefinite");
  const double sqrt_lo = std::sqrt(std::max(lo, 0.0));
  const double sqrt_hi = std::sqrt(std::max(hi, 0.0));
  const double gap = hi - lo;
  const Complex2x2 id = Complex2x2::Identity();
  if (gap <= 1e-300) return sqrt_hi * id;
  // P_hi = (m - lo)/gap, P_lo = (hi - m)/gap
  const Complex2x2 p_hi = (m - lo * id) / gap;
  const Complex2x2 p_lo = (hi * id - m) / gap;
  return sqrt_hi * p_hi + sqrt_lo * p_lo;
}

// ---------------------------------------------------------------------------
// Pauli decomposition in the convention M = c0 s0 - i (c1 s1 + c2 s2 + c3 s3).

struct PauliVector {
  std::array<Complex, 4> c{};

  Complex& operator[](std::size_t i) { return c[i]; }
  const Complex& operator[](std::size_t i) const { return c[i]; }

  bool is_real(double tolerance = tol::kAlgebraic) const {
    return std::all_of(c.begin(), c.end(), [&](const Complex& z) { return std::abs(z.imag()) <= tolerance; });
  }
  Eigen::Vector4d real() const { return {c[0].real(), c[1].real(), c[2].real(), c[3].real()}; }

  static PauliVector from_real(const Eigen::Vector4d& u) { return {{u[0], u[1], u[2], u[3]}}; }
};

inline PauliVector pauli_decompose(const Complex2x2& m) {
  PauliVector v;
  v[0] = 0.5 * trace(m);
  for (int a = 1; a <= 3; ++a) v[a] = 0.5 * kI * trace(m * pauli(a));
  return v;
}

inline Complex2x2 pauli_compose(const PauliVector& v) {
  // Written out entrywise: s0, s1, s2, s3 contributions.
  Complex2x2 m;
  m(0, 0) = v[0] - kI * v[3];
  m(1, 1) = v[0] + kI * v[3];
  m(0, 1) = -kI * v[1] - v[2];
  m(1, 0) = -kI * v[1] + v[2];
  return m;
}

/// SU(2) element from a real unit quaternion (u0, u1, u2, u3).
inline Complex2x2 su2_from_quaternion(const Eigen::Vector4d& u) { return pauli_compose(PauliVector::from_real(u)); }

// ---------------------------------------------------------------------------
// States.

struct BlochVector {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  double norm() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }
  bool is_valid(double tolerance = tol::kAlgebraic) const {
    return std::isfinite(s1) && std::isfinite(s2) && std::isfinite(s3) &&
           s1 * s1 + s2 * s2 + s3 * s3 <= 1.0 + tolerance;
  }
  double operator[](int i) const { return i == 0 ? s1 : (i == 1 ? s2 : s3); }
};

/// A validated qubit density matrix: Hermitian, unit trace, PSD.
class DensityMatrix {
 public:
  /// Throws std::invalid_argument if `m` is not a density matrix within `tolerance`.
  explicit DensityMatrix(const Complex2x2& m, double tolerance = tol::kAlgebraic) : m_(m) {
    if (!m.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
    if (!is_hermitian(m, tolerance)) throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(trace(m) - 1.0) > tolerance) throw std::invalid_argument("density matrix trace differs from 1");
    if (hermitian_eigenvalues(m)[0] < -tolerance) throw std::invalid_argument("density matrix has a negative eigenvalue");
    // Symmetrize so downstream closed forms see an exactly Hermitian matrix.
    m_ = 0.5 * (m + m.adjoint());
  }

  static DensityMatrix pure(const Eigen::Vector2cd& psi) {
    const Eigen::Vector2cd n = psi / psi.norm();
    return DensityMatrix(n * n.adjoint());
  }
  static DensityMatrix maximally_mixed() { return DensityMatrix(0.5 * Complex2x2::Identity()); }

  const Complex2x2& matrix() const { return m_; }
  double purity() const { return (m_ * m_).trace().real(); }

 private:
  Complex2x2 m_;
};

inline BlochVector bloch_from_density(const DensityMatrix& rho) {
  const Complex2x2& m = rho.matrix();
  return {(m * pauli(1)).trace().real(), (m * pauli(2)).trace().real(), (m * pauli(3)).trace().real()};
}

inline DensityMatrix density_from_bloch(const BlochVector& s) {
  if (!s.is_valid()) throw std::invalid_argument("Bloch vector norm exceeds 1");
  const Complex2x2 m = 0.5 * (pauli(0) + s.s1 * pauli(1) + s.s2 * pauli(2) + s.s3 * pauli(3));
  return DensityMatrix(m);
}

/// Uhlmann fidelity [Tr sqrt(sqrt(a) b sqrt(a))]^2, clamped to [0, 1].
inline double fidelity(const DensityMatrix& theory, const DensityMatrix& measured) {
  const Complex2x2 root = hermitian_sqrt(theory.matrix());
  Complex2x2 inner = root * measured.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint());
  const double t = trace(hermitian_sqrt(inner)).real();
  return std::clamp(t * t, 0.0, 1.0);
}

/// Trace distance (1/2)||a - b||_1.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const auto ev = hermitian_eigenvalues(a.matrix() - b.matrix());
  return 0.5 * (std::abs(ev[0]) + std::abs(ev[1]));
}

}  // namespace qlatt

#endif  // QLATT_PAULI_HPP
