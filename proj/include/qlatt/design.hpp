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

#ifndef QLATT_DESIGN_HPP
#define QLATT_DESIGN_HPP

#include "qlatt/channels.hpp"
#include "qlatt/metasurface.hpp"
#include "qlatt/solver.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace qlatt {

struct PipelineOptions {
  double period_mm = kDefaultPeriodMm;
  /// Solver seeds cfg.seed, cfg.seed + 1, ... tried until the field can be patterned.
  int seed_attempts = 3;
  OrientOptions orient;
};

struct ChannelDesign {
  ChannelSpec spec;
  GramMatrix gram;
  DesignResult result;
  UnitaryField field;
  PatternProfile pattern;
  double reconstruction = 0.0;
  unsigned long long seed_used = 0;
};

/// Recomputes f1 and f2 of the stored solution.
inline void refresh_costs(DesignResult& r, const GramMatrix& g, int grid_q) {
  r.report.f1_final = cost_f1(r.solution, g);
  r.report.f2_final = cost_f2(r.solution, grid_q);
}

inline PatternProfile pattern_from_solution(const FourierSolution& s, int grid_q, double period_mm = kDefaultPeriodMm) {
  return design_pattern(evaluate_field(s, grid_q), period_mm);
}

/// Kraus set -> Gram -> solve -> orient -> sample -> waveplate patterns.
/// Throws std::invalid_argument for non trace-preserving sets, and passes
/// InfeasibleTarget / NonConvergence / UnresolvableJump through.
inline ChannelDesign design_channel(const ChannelSpec& spec, const SolverConfig& cfg, const PipelineOptions& opts = {}) {
  if (opts.seed_attempts < 1) throw std::invalid_argument("seed_attempts must be positive");
  const KrausSet kraus = kraus_set(spec);
  const TraceCheck check = check_trace_preserving(kraus);
  if (!check.trace_preserving)
    throw std::invalid_argument("Kraus set is not trace preserving (residual " + std::to_string(check.tp_residual) + ")");

  ChannelDesign out;
  out.spec = spec;
  out.gram = gram_matrix(kraus);
  std::optional<UnresolvableJump> last_jump;
  for (int attempt = 0; attempt < opts.seed_attempts; ++attempt) {
    SolverConfig run = cfg;
    run.seed = cfg.seed + static_cast<unsigned long long>(attempt);
    DesignResult result = solve(out.gram, run);
    result.solution = orient_for_waveplates(result.solution, out.gram, opts.orient);
    refresh_costs(result, out.gram, run.grid_q);
    UnitaryField field = evaluate_field(result.solution, run.grid_q);
    try {
      out.pattern = design_pattern(field, opts.period_mm);
    } catch (const UnresolvableJump& e) {
      last_jump = e;
      continue;
    }
    out.result = std::move(result);
    out.field = std::move(field);
    out.reconstruction = reconstruction_error(out.pattern, out.field);
    out.seed_used = run.seed;
    return out;
  }
  throw *last_jump;
}

}  // namespace qlatt

#endif  // QLATT_DESIGN_HPP
