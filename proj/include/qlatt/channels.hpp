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

#ifndef QLATT_CHANNELS_HPP
#define QLATT_CHANNELS_HPP

#include "qlatt/pauli.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qlatt {

struct KrausSet {
  std::vector<Complex2x2> operators;
  std::string label;
};

enum class ChannelKind { bit_flip, bit_phase_flip, phase_flip, depolarizing, custom };

inline std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::bit_flip: return "bit_flip";
    case ChannelKind::bit_phase_flip: return "bit_phase_flip";
    case ChannelKind::phase_flip: return "phase_flip";
    case ChannelKind::depolarizing: return "depolarizing";
    case ChannelKind::custom: return "custom";
  }
  return "custom";
}

/// Accepts both snake_case and kebab-case names.
inline ChannelKind parse_channel_kind(std::string name) {
  for (char& ch : name) {
    if (ch == '-') ch = '_';
  }
  for (ChannelKind k : {ChannelKind::bit_flip, ChannelKind::bit_phase_flip, ChannelKind::phase_flip,
                        ChannelKind::depolarizing, ChannelKind::custom}) {
    if (name == to_string(k)) return k;
  }
  if (name == "depolarization") return ChannelKind::depolarizing;
  throw std::invalid_argument("unknown channel kind '" + name + "'");
}

struct ChannelSpec {
  ChannelKind kind = ChannelKind::phase_flip;
  double p = 0.0;
  std::optional<KrausSet> custom_kraus;
};

/// Named Pauli channels: {sqrt(1-p) s0, sqrt(p) s_i} for the flips, and
/// {sqrt(1-p) s0, sqrt(p/3) s1, sqrt(p/3) s2, sqrt(p/3) s3} for depolarization.
/// Zero-weight operators are dropped, so p = 0 gives {s0}.
inline KrausSet standard_channel(ChannelKind kind, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("channel strength p must lie in [0, 1]");
  KrausSet set;
  set.label = std::string(to_string(kind));
  auto push = [&](double weight, int index) {
    if (weight > 0.0) set.operators.push_back(std::sqrt(weight) * pauli(index));
  };
  switch (kind) {
    case ChannelKind::bit_flip: push(1 - p, 0); push(p, 1); break;
    case ChannelKind::bit_phase_flip: push(1 - p, 0); push(p, 2); break;
    case ChannelKind::phase_flip: push(1 - p, 0); push(p, 3); break;
    case ChannelKind::depolarizing:
      push(1 - p, 0);
      for (int i = 1; i <= 3; ++i) push(p / 3, i);
      break;
    case ChannelKind::custom: throw std::invalid_argument("custom channels need an explicit Kraus set");
  }
  return set;
}

inline KrausSet kraus_set(const ChannelSpec& spec) {
  if (spec.kind == ChannelKind::custom) {
    if (!spec.custom_kraus || spec.custom_kraus->operators.empty())
      throw std::invalid_argument("custom channel spec carries no Kraus operators");
    return *spec.custom_kraus;
  }
  return standard_channel(spec.kind, spec.p);
}

struct TraceCheck {
  bool trace_preserving = false;
  bool unital = false;
  double tp_residual = 0.0;      // ||sum A^dag A - s0||_F
  double unital_residual = 0.0;  // ||sum A A^dag - s0||_F
};

inline TraceCheck check_trace_preserving(const KrausSet& k, double tolerance = tol::kChannel) {
  Complex2x2 tp = Complex2x2::Zero();
  Complex2x2 un = Complex2x2::Zero();
  for (const auto& a : k.operators) {
    tp += a.adjoint() * a;
    un += a * a.adjoint();
  }
  TraceCheck out;
  out.tp_residual = (tp - Complex2x2::Identity()).norm();
  out.unital_residual = (un - Complex2x2::Identity()).norm();
  out.trace_preserving = !k.operators.empty() && out.tp_residual <= tolerance;
  out.unital = !k.operators.empty() && out.unital_residual <= tolerance;
  return out;
}

inline DensityMatrix apply_channel(const KrausSet& k, const DensityMatrix& rho) {
  const TraceCheck check = check_trace_preserving(k);
  if (!check.trace_preserving) {
    std::ostringstream msg;
    msg << "Kraus set '" << k.label << "' is not trace preserving (residual " << check.tp_residual << ")";
    throw std::invalid_argument(msg.str());
  }
  Complex2x2 out = Complex2x2::Zero();
  for (const auto& a : k.operators) out += a * rho.matrix() * a.adjoint();
  return DensityMatrix(out, tol::kChannel);
}

/// Target second moments M_ij = sum_k c_i^(k) conj(c_j^(k)) of the Kraus set.
struct GramMatrix {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
};

inline GramMatrix gram_matrix(const KrausSet& k) {
  GramMatrix g;
  for (const auto& a : k.operators) {
    const PauliVector c = pauli_decompose(a);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g.m(i, j) += c[i] * std::conj(c[j]);
  }
  return g;
}

/// Outcome of the structural dilation check. A lattice dilation yields
/// M = average of u u^T over real unit quaternions, so M must be real, PSD
/// and of unit trace.
struct Feasibility {
  enum class Failure { none, complex_entry, not_psd, trace_mismatch };

  Failure failure = Failure::none;
  double magnitude = 0.0;
  /// Upper-triangle (i, j) pairs whose imaginary part exceeds the tolerance.
  std::vector<std::pair<int, int>> complex_entries;

  bool feasible() const { return failure == Failure::none; }

  std::string diagnosis() const {
    std::ostringstream out;
    switch (failure) {
      case Failure::none: out << "feasible"; break;
      case Failure::complex_entry: {
        out << "infeasible: Gram " << (complex_entries.size() > 1 ? "entries " : "entry ");
        for (std::size_t n = 0; n < complex_entries.size(); ++n)
          out << (n ? ", " : "") << "M_" << complex_entries[n].first << complex_entries[n].second;
        out << (complex_entries.size() > 1 ? " are" : " is") << " not real (max |Im M_ij| = " << magnitude
            << "); only mixtures of unitaries (unital channels) can be dilated on the lattice";
        break;
      }
      case Failure::not_psd: out << "infeasible: Re M is not positive semidefinite (min eigenvalue " << -magnitude << ")"; break;
      case Failure::trace_mismatch: out << "infeasible: |Tr M - 1| = " << magnitude; break;
    }
    return out.str();
  }
};

inline Feasibility feasibility(const GramMatrix& g, double tolerance = tol::kChannel) {
  Feasibility out;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double im = std::max(std::abs(g.m(i, j).imag()), std::abs(g.m(j, i).imag()));
      if (im > tolerance) out.complex_entries.emplace_back(i, j);
      out.magnitude = std::max(out.magnitude, im);
    }
  if (!out.complex_entries.empty()) {
    out.failure = Feasibility::Failure::complex_entry;
    return out;
  }
  const Eigen::Matrix4d re = g.m.real();
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(0.5 * (re + re.transpose())).eigenvalues()(0);
  if (min_eig < -tolerance) {
    out.failure = Feasibility::Failure::not_psd;
    out.magnitude = -min_eig;
    return out;
  }
  const double trace_error = std::abs(re.trace() - 1.0);
  out.magnitude = trace_error;
  if (trace_error > tolerance) out.failure = Feasibility::Failure::trace_mismatch;
  return out;
}

}  // namespace qlatt

#endif  // QLATT_CHANNELS_HPP
