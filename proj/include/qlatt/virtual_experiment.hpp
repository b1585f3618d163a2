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

#ifndef QLATT_VIRTUAL_EXPERIMENT_HPP
#define QLATT_VIRTUAL_EXPERIMENT_HPP

// Simulated optical bench: polarizer -> three patterned plates -> spatial
// average -> six-projector Stokes tomography, with Monte Carlo plate errors.

#include "qlatt/channels.hpp"
#include "qlatt/design.hpp"
#include "qlatt/metasurface.hpp"
#include "qlatt/pauli.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlatt {

struct InputState {
  enum class Kind { H, D, L, custom };
  Kind kind = Kind::H;
  std::optional<BlochVector> custom_bloch;

  static InputState named(Kind k) { return {k, std::nullopt}; }
  static InputState custom(const BlochVector& s) { return {Kind::custom, s}; }

  BlochVector bloch() const {
    switch (kind) {
      case Kind::H: return {1, 0, 0};
      case Kind::D: return {0, 1, 0};
      case Kind::L: return {0, 0, 1};
      case Kind::custom:
        if (!custom_bloch) throw std::invalid_argument("custom input state needs a Bloch vector");
        return *custom_bloch;
    }
    return {};
  }
  std::string label() const {
    switch (kind) {
      case Kind::H: return "H";
      case Kind::D: return "D";
      case Kind::L: return "L";
      case Kind::custom: return "custom";
    }
    return "custom";
  }
};

inline InputState parse_input_state(const std::string& name) {
  if (name == "H" || name == "h") return InputState::named(InputState::Kind::H);
  if (name == "D" || name == "d") return InputState::named(InputState::Kind::D);
  if (name == "L" || name == "l") return InputState::named(InputState::Kind::L);
  throw std::invalid_argument("unknown input state '" + name + "' (expected H, D or L)");
}

/// Throws std::invalid_argument for a custom Bloch vector outside the ball.
inline DensityMatrix prepare_state(const InputState& s) {
  const BlochVector b = s.bloch();
  if (!b.is_valid()) throw std::invalid_argument("input Bloch vector has norm above 1");
  return density_from_bloch(b);
}

// ---------------------------------------------------------------------------
// Plate imperfections.

struct PerturbedStack {
  std::array<double, 3> retardation{};  // delta_i'
  std::array<double, 3> offset{};       // Delta theta_i, radians

  static PerturbedStack ideal(const PlateStack& plates = kCanonicalStack) {
    PerturbedStack s;
    for (int i = 0; i < 3; ++i) s.retardation[i] = plates[i].delta;
    return s;
  }

  /// delta_i' = delta_i (1 + sigma eps_i), Delta theta_i = sigma (pi/2) eta_i with
  /// eps, eta standard normal from a stream seeded by (seed, realization).
  static PerturbedStack draw(double sigma_rel, unsigned long long seed, std::size_t realization,
                             const PlateStack& plates = kCanonicalStack) {
    std::seed_seq seq{static_cast<unsigned>(seed & 0xffffffffu), static_cast<unsigned>(seed >> 32),
                      static_cast<unsigned>(realization & 0xffffffffu), static_cast<unsigned>(realization >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    PerturbedStack s;
    for (int i = 0; i < 3; ++i) s.retardation[i] = plates[i].delta * (1.0 + sigma_rel * normal(rng));
    for (int i = 0; i < 3; ++i) s.offset[i] = sigma_rel * (kPi / 2) * normal(rng);
    return s;
  }
};

/// (1/Q) sum_j L(x_j) rho L(x_j)^dag with L the (possibly perturbed) three-plate stack.
inline DensityMatrix apply_stack(const PatternProfile& profile, const DensityMatrix& rho,
                                 const std::optional<PerturbedStack>& perturbation = std::nullopt,
                                 const PlateStack& plates = kCanonicalStack) {
  if (profile.size() == 0) throw std::invalid_argument("apply_stack: empty profile");
  PlateStack used = plates;
  std::array<double, 3> offset{};
  if (perturbation) {
    for (int i = 0; i < 3; ++i) used[i].delta = perturbation->retardation[i];
    offset = perturbation->offset;
  }
  Complex2x2 acc = Complex2x2::Zero();
  for (std::size_t j = 0; j < profile.size(); ++j) {
    const Complex2x2 l = stack_matrix(profile.theta1[j] + offset[0], profile.theta2[j] + offset[1],
                                      profile.theta3[j] + offset[2], used);
    acc += l * rho.matrix() * l.adjoint();
  }
  return DensityMatrix(acc / static_cast<double>(profile.size()), tol::kChannel);
}

// ---------------------------------------------------------------------------
// Tomography.

struct StokesIntensities {
  std::array<double, 3> plus{};
  std::array<double, 3> minus{};
};

/// Ideal analyzer intensities Tr(rho (s0 +- s_i)/2) for the H/V, D/A, L/R settings.
inline StokesIntensities projector_intensities(const DensityMatrix& rho) {
  StokesIntensities out;
  for (int i = 0; i < 3; ++i) {
    const Complex2x2 sigma = pauli(i + 1);
    out.plus[i] = (rho.matrix() * (pauli(0) + sigma)).trace().real() / 2;
    out.minus[i] = (rho.matrix() * (pauli(0) - sigma)).trace().real() / 2;
  }
  return out;
}

inline BlochVector tomography(const DensityMatrix& rho) {
  const StokesIntensities in = projector_intensities(rho);
  std::array<double, 3> s{};
  for (int i = 0; i < 3; ++i) s[i] = (in.plus[i] - in.minus[i]) / (in.plus[i] + in.minus[i]);
  return {s[0], s[1], s[2]};
}

// ---------------------------------------------------------------------------
// Monte Carlo.

struct MonteCarloConfig {
  int realizations = 100;
  double sigma_rel = 0.05;
  unsigned long long seed = 0;

  void validate() const {
    if (realizations < 1) throw std::invalid_argument("Monte Carlo needs at least one realization");
    if (!(sigma_rel >= 0.0)) throw std::invalid_argument("sigma_rel must be non-negative");
  }
};

struct TrajectoryPoint {
  std::string channel;
  std::string input;
  double p = 0.0;
  BlochVector theory;
  BlochVector simulated;  // mean over realizations
  BlochVector spread;     // per-component standard deviation
  double fidelity = 0.0;  // mean fidelity of the realizations against theory
};

/// Runs cfg.realizations perturbed stacks on `input`. `theory` defaults to
/// the unperturbed stack output.
inline TrajectoryPoint monte_carlo(const PatternProfile& profile, const InputState& input, const MonteCarloConfig& cfg,
                                   const std::optional<DensityMatrix>& theory = std::nullopt,
                                   const PlateStack& plates = kCanonicalStack) {
  cfg.validate();
  const DensityMatrix rho = prepare_state(input);
  const DensityMatrix reference = theory ? *theory : apply_stack(profile, rho, std::nullopt, plates);

  std::vector<BlochVector> samples(static_cast<std::size_t>(cfg.realizations));
  std::vector<double> fidelities(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const DensityMatrix out = apply_stack(profile, rho, PerturbedStack::draw(cfg.sigma_rel, cfg.seed, r, plates), plates);
    samples[r] = tomography(out);
    fidelities[r] = fidelity(reference, out);
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double mean_fidelity = 0.0;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    mean += Eigen::Vector3d(samples[r].s1, samples[r].s2, samples[r].s3);
    mean_fidelity += fidelities[r];
  }
  const double n = static_cast<double>(samples.size());
  mean /= n;
  mean_fidelity /= n;
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  if (samples.size() > 1) {
    for (const auto& s : samples) var += (Eigen::Vector3d(s.s1, s.s2, s.s3) - mean).cwiseAbs2();
    var /= (n - 1);
  }

  TrajectoryPoint point;
  point.input = input.label();
  point.theory = tomography(reference);
  point.simulated = {mean(0), mean(1), mean(2)};
  point.spread = {std::sqrt(var(0)), std::sqrt(var(1)), std::sqrt(var(2))};
  point.fidelity = std::clamp(mean_fidelity, 0.0, 1.0);
  return point;
}

// ---------------------------------------------------------------------------
// p sweeps.

struct TrajectoryFailure {
  enum class Kind { infeasible, nonconvergence, pattern, other };
  double p = 0.0;
  Kind kind = Kind::other;
  std::string message;
};

struct TrajectoryResult {
  std::vector<TrajectoryPoint> points;
  std::vector<TrajectoryFailure> failures;
};

/// Designs each p, then runs every input through Kraus theory and the
/// simulated bench. A failing p is recorded and the sweep continues.
inline TrajectoryResult trajectory(ChannelKind kind, const std::vector<double>& p_values,
                                   const std::vector<InputState>& inputs, const SolverConfig& solver,
                                   const MonteCarloConfig& mc, const PipelineOptions& pipeline = {}) {
  TrajectoryResult out;
  for (double p : p_values) {
    try {
      const ChannelSpec spec{kind, p, std::nullopt};
      const KrausSet kraus = kraus_set(spec);
      const ChannelDesign design = design_channel(spec, solver, pipeline);
      for (const InputState& in : inputs) {
        TrajectoryPoint point = monte_carlo(design.pattern, in, mc, apply_channel(kraus, prepare_state(in)));
        point.channel = std::string(to_string(kind));
        point.p = p;
        out.points.push_back(std::move(point));
      }
    } catch (const InfeasibleTarget& e) {
      out.failures.push_back({p, TrajectoryFailure::Kind::infeasible, e.what()});
    } catch (const NonConvergence& e) {
      out.failures.push_back({p, TrajectoryFailure::Kind::nonconvergence, e.what()});
    } catch (const UnresolvableJump& e) {
      out.failures.push_back({p, TrajectoryFailure::Kind::pattern, e.what()});
    } catch (const NormCollapse& e) {
      out.failures.push_back({p, TrajectoryFailure::Kind::pattern, e.what()});
    } catch (const std::exception& e) {
      out.failures.push_back({p, TrajectoryFailure::Kind::other, e.what()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory CSV.

inline constexpr const char* kTrajectoryHeader =
    "channel,input,p,s1_th,s2_th,s3_th,s1_sim,s2_sim,s3_sim,s1_std,s2_std,s3_std,fidelity";

inline void write_trajectory_csv(const std::vector<TrajectoryPoint>& points, std::ostream& out) {
  using detail::format_number;
  out << kTrajectoryHeader << '\n';
  for (const auto& pt : points) {
    out << pt.channel << ',' << pt.input << ',' << format_number(pt.p);
    for (const BlochVector* v : {&pt.theory, &pt.simulated, &pt.spread})
      out << ',' << format_number(v->s1) << ',' << format_number(v->s2) << ',' << format_number(v->s3);
    out << ',' << format_number(pt.fidelity) << '\n';
  }
}

inline std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw std::runtime_error("trajectory CSV header mismatch: '" + line + "'");
  std::vector<TrajectoryPoint> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 13)
      throw std::runtime_error("trajectory CSV line " + std::to_string(line_no) + ": expected 13 columns");
    auto num = [&](int i) { return detail::parse_number(cells[i], line_no); };
    TrajectoryPoint pt;
    pt.channel = cells[0];
    pt.input = cells[1];
    pt.p = num(2);
    pt.theory = {num(3), num(4), num(5)};
    pt.simulated = {num(6), num(7), num(8)};
    pt.spread = {num(9), num(10), num(11)};
    pt.fidelity = num(12);
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace qlatt

#endif  // QLATT_VIRTUAL_EXPERIMENT_HPP
