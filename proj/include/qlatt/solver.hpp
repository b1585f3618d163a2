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

#ifndef QLATT_SOLVER_HPP
#define QLATT_SOLVER_HPP

// Inverse design of a quasi-momentum dependent SU(2) field
//
//   U(q) = u0(q) s0 - i (u1(q) s1 + u2(q) s2 + u3(q) s3),   q in [0, 2pi),
//
// whose average action (1/2pi) int U(q) rho U(q)^dag dq equals a target
// channel. Each u_i is a real truncated Fourier series
//
//   u_i(q) = dc_i + sum_{n=1..N} (cos_in cos(nq) + sin_in sin(nq)),
//
// and the channel is matched through its second moments: the averaged field
// reproduces the channel iff (1/2pi) int u_i u_j dq = Re M_ij, with M the
// Pauli Gram matrix of the Kraus set. Two costs drive the design:
//
//   f1 = sum_ij [2 dc_i dc_j + sum_n (cos_in cos_jn + sin_in sin_jn) - 2 Re M_ij]^2
//   f2 = sum_j  (|u(q_j)|^2 - 1)^2           over q_j = 2 pi j / Q
//
// They are minimized alternately (f1 stage, then f2 stage from its output)
// until the two stage outputs agree in L1 norm or the outer budget runs out.

#include "qlatt/channels.hpp"
#include "qlatt/detail/levenberg_marquardt.hpp"
#include "qlatt/pauli.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlatt {

class InfeasibleTarget : public std::runtime_error {
 public:
  explicit InfeasibleTarget(const Feasibility& f) : std::runtime_error(f.diagnosis()), feasibility_(f) {}
  const Feasibility& feasibility() const { return feasibility_; }

 private:
  Feasibility feasibility_;
};

class NormCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FourierSolution {
  int n_max = 0;
  Eigen::Vector4d dc = Eigen::Vector4d::Zero();
  Eigen::MatrixXd cos_coeffs;  // 4 x n_max, column n-1 holds harmonic n
  Eigen::MatrixXd sin_coeffs;  // 4 x n_max

  static FourierSolution zeros(int n_max) {
    FourierSolution s;
    s.n_max = n_max;
    s.cos_coeffs = Eigen::MatrixXd::Zero(4, n_max);
    s.sin_coeffs = Eigen::MatrixXd::Zero(4, n_max);
    return s;
  }
  static FourierSolution constant(const Eigen::Vector4d& u, int n_max) {
    FourierSolution s = zeros(n_max);
    s.dc = u;
    return s;
  }

  /// Coefficients as a 4 x (2N+1) matrix [dc | cos_1..N | sin_1..N].
  Eigen::MatrixXd packed() const {
    Eigen::MatrixXd x(4, 2 * n_max + 1);
    x.col(0) = dc;
    x.middleCols(1, n_max) = cos_coeffs;
    x.middleCols(1 + n_max, n_max) = sin_coeffs;
    return x;
  }
  static FourierSolution from_packed(const Eigen::MatrixXd& x) {
    if (x.rows() != 4 || x.cols() % 2 != 1) throw std::invalid_argument("packed Fourier coefficients must be 4 x (2N+1)");
    const int n = static_cast<int>((x.cols() - 1) / 2);
    FourierSolution s;
    s.n_max = n;
    s.dc = x.col(0);
    s.cos_coeffs = x.middleCols(1, n);
    s.sin_coeffs = x.middleCols(1 + n, n);
    return s;
  }

  /// Row-major flattening of packed(): index i*(2N+1) + k.
  Eigen::VectorXd flatten() const {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = packed();
    return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  }
  static FourierSolution unflatten(const Eigen::VectorXd& v, int n_max) {
    if (v.size() != 4 * (2 * n_max + 1)) throw std::invalid_argument("flattened coefficient vector has wrong size");
    const Eigen::Map<const Eigen::Matrix<double, 4, Eigen::Dynamic, Eigen::RowMajor>> x(v.data(), 4, 2 * n_max + 1);
    return from_packed(x);
  }

  Eigen::Vector4d evaluate(double q) const {
    Eigen::Vector4d u = dc;
    for (int n = 1; n <= n_max; ++n)
      u += cos_coeffs.col(n - 1) * std::cos(n * q) + sin_coeffs.col(n - 1) * std::sin(n * q);
    return u;
  }
};

struct SolverConfig {
  int n_max = 20;
  int grid_q = 125;
  int max_outer_iters = 200;
  double convergence_tol = 1e-12;
  unsigned long long seed = 0;
  int restarts = 4;
  int max_inner_iters = 50;
  double gradient_tol = 1e-22;
  /// Joint LM iterations on [r1; r2] when alternation ends above the threshold.
  int polish_iters = 2000;
  /// Harmonic n starts at uniform(-a, a) / n^harmonic_decay.
  double harmonic_amplitude = 0.2;
  double harmonic_decay = 2.0;
  double success_threshold = 1e-10;
  /// Eigenvalues of Re M at or below this are treated as exact zeros.
  double rank_tol = 1e-12;

  void validate() const {
    if (n_max < 1 || grid_q < 1 || max_outer_iters < 1 || restarts < 1 || max_inner_iters < 1 || polish_iters < 0)
      throw std::invalid_argument("solver config: counts must be positive");
    if (!(convergence_tol > 0) || !(success_threshold > 0) || !(harmonic_amplitude >= 0) || !(rank_tol >= 0))
      throw std::invalid_argument("solver config: tolerances must be positive");
    if (grid_q < 2 * n_max + 1) throw std::invalid_argument("solver config: grid_q must be at least 2*n_max+1");
  }
};

struct SolverReport {
  double f1_final = 0.0;
  double f2_final = 0.0;
  int outer_iters = 0;
  bool converged = false;
  int restarts_used = 0;
  bool polished = false;
};

struct DesignResult {
  FourierSolution solution;
  SolverReport report;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, DesignResult best) : std::runtime_error(what), best_(std::move(best)) {}
  const DesignResult& best() const { return best_; }

 private:
  DesignResult best_;
};

inline std::vector<double> quasi_momentum_grid(int grid_q) {
  std::vector<double> q(grid_q);
  for (int j = 0; j < grid_q; ++j) q[j] = 2.0 * std::numbers::pi * j / grid_q;
  return q;
}

namespace detail {

/// (2N+1) x Q matrix of basis functions [1, cos(n q_j), sin(n q_j)].
inline Eigen::MatrixXd fourier_basis(int n_max, int grid_q) {
  Eigen::MatrixXd b(2 * n_max + 1, grid_q);
  const auto q = quasi_momentum_grid(grid_q);
  for (int j = 0; j < grid_q; ++j) {
    b(0, j) = 1.0;
    for (int n = 1; n <= n_max; ++n) {
      b(n, j) = std::cos(n * q[j]);
      b(n_max + n, j) = std::sin(n * q[j]);
    }
  }
  return b;
}

/// Integration weights of the packed coefficients: (2, 1, ..., 1).
inline Eigen::VectorXd moment_weights(int n_max) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(2 * n_max + 1);
  w(0) = 2.0;
  return w;
}

}  // namespace detail

/// (1/2pi) int u_i(q) u_j(q) dq, in closed form from the coefficients.
inline Eigen::Matrix4d second_moments(const FourierSolution& s) {
  const Eigen::MatrixXd x = s.packed();
  return 0.5 * x * detail::moment_weights(s.n_max).asDiagonal() * x.transpose();
}

inline double cost_f1(const FourierSolution& s, const GramMatrix& g) {
  const Eigen::Matrix4d r = 2.0 * second_moments(s) - 2.0 * g.m.real();
  return r.squaredNorm();
}

inline double cost_f2(const FourierSolution& s, int grid_q) {
  const Eigen::MatrixXd u = s.packed() * detail::fourier_basis(s.n_max, grid_q);
  return (u.colwise().squaredNorm().array() - 1.0).square().sum();
}

/// f2 evaluated on arbitrary field samples u(q_j).
inline double cost_f2_sampled(const std::vector<Eigen::Vector4d>& samples) {
  double total = 0.0;
  for (const auto& u : samples) total += (u.squaredNorm() - 1.0) * (u.squaredNorm() - 1.0);
  return total;
}

/// d f1 / d coefficients, in FourierSolution::flatten() layout.
inline Eigen::VectorXd gradient_f1(const FourierSolution& s, const GramMatrix& g) {
  const Eigen::MatrixXd x = s.packed();
  const Eigen::Matrix4d r = 2.0 * second_moments(s) - 2.0 * g.m.real();
  const Eigen::MatrixXd grad = 4.0 * r * x * detail::moment_weights(s.n_max).asDiagonal();
  return FourierSolution::from_packed(grad).flatten();
}

/// d f2 / d coefficients, in FourierSolution::flatten() layout.
inline Eigen::VectorXd gradient_f2(const FourierSolution& s, int grid_q) {
  const Eigen::MatrixXd basis = detail::fourier_basis(s.n_max, grid_q);
  const Eigen::MatrixXd u = s.packed() * basis;
  const Eigen::RowVectorXd r = u.colwise().squaredNorm().array() - 1.0;
  const Eigen::MatrixXd grad = 4.0 * (u.array().rowwise() * r.array()).matrix() * basis.transpose();
  return FourierSolution::from_packed(grad).flatten();
}

namespace detail {

/// Moment-matching problem restricted to span(V): u(q) = V z(q). The null
/// space of Re M must be orthogonal to u(q) everywhere, so nothing is lost.
class ReducedProblem {
 public:
  ReducedProblem(const Eigen::MatrixXd& target, int n_max, int grid_q)
      : target_(target), rank_(static_cast<int>(target.rows())), k_(2 * n_max + 1),
        weights_(moment_weights(n_max)), basis_(fourier_basis(n_max, grid_q)) {}

  int rank() const { return rank_; }
  int coefficient_count() const { return k_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(rank_) * k_; }

  Eigen::VectorXd residual_f1(const Eigen::VectorXd& z) const {
    const auto x = as_matrix(z);
    const Eigen::MatrixXd r = x * weights_.asDiagonal() * x.transpose() - 2.0 * target_;
    return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  }

  Eigen::MatrixXd jacobian_f1(const Eigen::VectorXd& z) const {
    const auto x = as_matrix(z);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rank_ * rank_, size());
    // r_ab = sum_k w_k x_ak x_bk (column-major residual index a + b*rank)
    for (int a = 0; a < rank_; ++a)
      for (int b = 0; b < rank_; ++b) {
        const Eigen::Index row = a + static_cast<Eigen::Index>(b) * rank_;
        for (int k = 0; k < k_; ++k) {
          jac(row, index(a, k)) += weights_(k) * x(b, k);
          jac(row, index(b, k)) += weights_(k) * x(a, k);
        }
      }
    return jac;
  }

  Eigen::VectorXd residual_f2(const Eigen::VectorXd& z) const {
    const Eigen::MatrixXd u = as_matrix(z) * basis_;
    return (u.colwise().squaredNorm().array() - 1.0).transpose();
  }

  Eigen::MatrixXd jacobian_f2(const Eigen::VectorXd& z) const {
    const Eigen::MatrixXd u = as_matrix(z) * basis_;
    Eigen::MatrixXd jac(basis_.cols(), size());
    for (int i = 0; i < rank_; ++i)
      for (int k = 0; k < k_; ++k) jac.col(index(i, k)) = 2.0 * (u.row(i).array() * basis_.row(k).array()).transpose();
    return jac;
  }

  Eigen::VectorXd residual_joint(const Eigen::VectorXd& z) const {
    Eigen::VectorXd r1 = residual_f1(z);
    Eigen::VectorXd r2 = residual_f2(z);
    Eigen::VectorXd r(r1.size() + r2.size());
    r << r1, r2;
    return r;
  }

  Eigen::MatrixXd jacobian_joint(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd j1 = jacobian_f1(z);
    Eigen::MatrixXd j2 = jacobian_f2(z);
    Eigen::MatrixXd jac(j1.rows() + j2.rows(), size());
    jac << j1, j2;
    return jac;
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> as_matrix(
      const Eigen::VectorXd& z) const {
    return {z.data(), rank_, k_};
  }

 private:
  Eigen::Index index(int row, int k) const { return static_cast<Eigen::Index>(row) * k_ + k; }

  Eigen::MatrixXd target_;
  int rank_;
  int k_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd basis_;
};

}  // namespace detail

/// Runs the alternating f1/f2 design loop with seeded restarts.
/// Throws InfeasibleTarget when the Gram matrix admits no lattice dilation,
/// and NonConvergence (carrying the best attempt) when no restart reaches
/// cfg.success_threshold on both costs.
inline DesignResult solve(const GramMatrix& g, const SolverConfig& cfg) {
  cfg.validate();
  const Feasibility feas = feasibility(g);
  if (!feas.feasible()) throw InfeasibleTarget(feas);

  const Eigen::Matrix4d target = 0.5 * (g.m.real() + g.m.real().transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(target);
  std::vector<int> kept;
  for (int i = 0; i < 4; ++i)
    if (eig.eigenvalues()(i) > cfg.rank_tol) kept.push_back(i);
  const int rank = static_cast<int>(kept.size());
  Eigen::MatrixXd basis(4, rank);
  Eigen::VectorXd values(rank);
  for (int c = 0; c < rank; ++c) {
    basis.col(c) = eig.eigenvectors().col(kept[c]);
    values(c) = eig.eigenvalues()(kept[c]);
  }
  const detail::ReducedProblem problem(Eigen::MatrixXd(values.asDiagonal()), cfg.n_max, cfg.grid_q);
  const int k = problem.coefficient_count();

  auto to_full = [&](const Eigen::VectorXd& z) {
    const Eigen::MatrixXd x = basis * problem.as_matrix(z);
    return FourierSolution::from_packed(x);
  };

  detail::LmOptions stage;
  stage.max_iterations = cfg.max_inner_iters;
  stage.gradient_tolerance = cfg.gradient_tol;
  detail::LmOptions polish = stage;
  polish.max_iterations = cfg.polish_iters;

  std::optional<DesignResult> best;
  auto score = [](const SolverReport& r) { return std::max(r.f1_final, r.f2_final); };

  for (int attempt = 0; attempt < cfg.restarts; ++attempt) {
    std::seed_seq seq{static_cast<unsigned>(cfg.seed & 0xffffffffu), static_cast<unsigned>(cfg.seed >> 32),
                      static_cast<unsigned>(attempt)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> harmonic(-cfg.harmonic_amplitude, cfg.harmonic_amplitude);

    // dc along the dominant eigenvector (last kept column), scaled by sqrt(eigenvalue).
    Eigen::VectorXd z = Eigen::VectorXd::Zero(problem.size());
    z((rank - 1) * k) = std::sqrt(values(rank - 1));
    if (rank > 1) {
      for (int i = 0; i < rank; ++i)
        for (int c = 1; c < k; ++c) {
          const int n = c <= cfg.n_max ? c : c - cfg.n_max;
          z(i * k + c) = harmonic(rng) / std::pow(static_cast<double>(n), cfg.harmonic_decay);
        }
    }

    SolverReport report;
    report.restarts_used = attempt;
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
      Eigen::VectorXd after_f1 = z;
      detail::levenberg_marquardt(
          after_f1, [&](const Eigen::VectorXd& v) { return problem.residual_f1(v); },
          [&](const Eigen::VectorXd& v) { return problem.jacobian_f1(v); }, stage);
      Eigen::VectorXd after_f2 = after_f1;
      detail::levenberg_marquardt(
          after_f2, [&](const Eigen::VectorXd& v) { return problem.residual_f2(v); },
          [&](const Eigen::VectorXd& v) { return problem.jacobian_f2(v); }, stage);
      const double change = (to_full(after_f1).flatten() - to_full(after_f2).flatten()).lpNorm<1>();
      z = std::move(after_f2);
      report.outer_iters = outer + 1;
      if (change < cfg.convergence_tol) break;
    }

    FourierSolution solution = to_full(z);
    report.f1_final = cost_f1(solution, g);
    report.f2_final = cost_f2(solution, cfg.grid_q);
    if (score(report) > cfg.success_threshold && cfg.polish_iters > 0) {
      detail::levenberg_marquardt(
          z, [&](const Eigen::VectorXd& v) { return problem.residual_joint(v); },
          [&](const Eigen::VectorXd& v) { return problem.jacobian_joint(v); }, polish);
      solution = to_full(z);
      report.f1_final = cost_f1(solution, g);
      report.f2_final = cost_f2(solution, cfg.grid_q);
      report.polished = true;
    }
    report.converged = score(report) <= cfg.success_threshold;
    if (report.converged) return {std::move(solution), report};
    if (!best || score(report) < score(best->report)) best = DesignResult{std::move(solution), report};
  }
  throw NonConvergence("solver did not reach f1, f2 <= " + std::to_string(cfg.success_threshold) + " after " +
                           std::to_string(cfg.restarts) + " restart(s)",
                       *best);
}

// ---------------------------------------------------------------------------
// Sampled field.

struct UnitaryField {
  std::vector<double> grid;              // q_j
  std::vector<Eigen::Vector4d> values;   // unit quaternions (u0, u1, u2, u3)

  std::size_t size() const { return values.size(); }
  Complex2x2 matrix(std::size_t j) const { return su2_from_quaternion(values[j]); }
};

/// Samples the Fourier series on q_j = 2 pi j / Q and renormalizes each
/// sample to unit norm. Throws NormCollapse if any raw norm is below 0.5.
inline UnitaryField evaluate_field(const FourierSolution& s, int grid_q) {
  if (grid_q < 1) throw std::invalid_argument("grid_q must be positive");
  UnitaryField field;
  field.grid = quasi_momentum_grid(grid_q);
  field.values.reserve(grid_q);
  for (double q : field.grid) {
    const Eigen::Vector4d u = s.evaluate(q);
    const double norm = u.norm();
    if (!(norm >= 0.5)) throw NormCollapse("field norm collapsed to " + std::to_string(norm) + " at q = " + std::to_string(q));
    field.values.push_back(u / norm);
  }
  return field;
}

/// Grid average (1/Q) sum_j U_j rho U_j^dag; the discretized partial trace over the lattice.
inline DensityMatrix apply_field(const UnitaryField& field, const DensityMatrix& rho) {
  Complex2x2 acc = Complex2x2::Zero();
  for (std::size_t j = 0; j < field.size(); ++j) {
    const Complex2x2 u = field.matrix(j);
    acc += u * rho.matrix() * u.adjoint();
  }
  return DensityMatrix(acc / static_cast<double>(field.size()), tol::kChannel);
}

/// Pauli second moments (1/Q) sum_j u(q_j) u(q_j)^T of a sampled field; the
/// chi matrix of the averaged channel.
inline Eigen::Matrix4d field_moments(const UnitaryField& field) {
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  for (const auto& u : field.values) acc += u * u.transpose();
  return acc / static_cast<double>(field.size());
}

}  // namespace qlatt

#endif  // QLATT_SOLVER_HPP
