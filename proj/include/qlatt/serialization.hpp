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

#ifndef QLATT_SERIALIZATION_HPP
#define QLATT_SERIALIZATION_HPP

// JSON forms of channel specs, solver configs and design results.
//
//   channel spec  {"kind": "phase_flip", "p": 0.25}
//                 {"kind": "custom", "kraus": [[[re,im],[re,im],[re,im],[re,im]], ...]}
//   design        {"channel", "config", "dc": [4], "cos": [4][N], "sin": [4][N], "report"}

#include "qlatt/channels.hpp"
#include "qlatt/solver.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace qlatt {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw FormatError(what + " must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw FormatError(what + ": unknown key '" + item.key() + "'");
}

inline const Json& require(const Json& j, const std::string& key, const std::string& what) {
  if (!j.contains(key)) throw FormatError(what + ": missing key '" + key + "'");
  return j.at(key);
}

inline double as_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw FormatError(what + " must be a number");
  return j.get<double>();
}

inline Complex as_complex(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw FormatError(what + " must be a [re, im] pair");
  return {as_number(j[0], what), as_number(j[1], what)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Channel spec.

inline Json to_json(const ChannelSpec& spec) {
  Json j;
  j["kind"] = std::string(to_string(spec.kind));
  if (spec.kind == ChannelKind::custom) {
    Json ops = Json::array();
    if (spec.custom_kraus) {
      for (const auto& a : spec.custom_kraus->operators) {
        Json op = Json::array();
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) op.push_back({a(r, c).real(), a(r, c).imag()});
        ops.push_back(op);
      }
      if (!spec.custom_kraus->label.empty()) j["label"] = spec.custom_kraus->label;
    }
    j["kraus"] = ops;
  } else {
    j["p"] = spec.p;
  }
  return j;
}

/// Kraus operators may be written as four row-major [re, im] pairs or as a
/// 2x2 nested array of pairs.
inline ChannelSpec channel_spec_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"kind", "p", "kraus", "label"}, "channel spec");
  const Json& kind = detail::require(j, "kind", "channel spec");
  if (!kind.is_string()) throw FormatError("channel spec: 'kind' must be a string");
  ChannelSpec spec;
  try {
    spec.kind = parse_channel_kind(kind.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("channel spec: ") + e.what());
  }
  if (spec.kind != ChannelKind::custom) {
    if (j.contains("kraus")) throw FormatError("channel spec: 'kraus' is only allowed for custom channels");
    spec.p = detail::as_number(detail::require(j, "p", "channel spec"), "channel spec 'p'");
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw FormatError("channel spec: 'p' must lie in [0, 1]");
    return spec;
  }
  const Json& ops = detail::require(j, "kraus", "channel spec");
  if (!ops.is_array() || ops.empty()) throw FormatError("channel spec: 'kraus' must be a non-empty array");
  KrausSet set;
  set.label = j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>() : "custom";
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const std::string what = "Kraus operator " + std::to_string(k);
    Json flat = ops[k];
    if (flat.is_array() && flat.size() == 2 && flat[0].is_array() && flat[0].size() == 2 && flat[0][0].is_array()) {
      flat = Json::array({ops[k][0][0], ops[k][0][1], ops[k][1][0], ops[k][1][1]});
    }
    if (!flat.is_array() || flat.size() != 4) throw FormatError(what + " must hold 4 row-major [re, im] entries");
    Complex2x2 a;
    for (int e = 0; e < 4; ++e) a(e / 2, e % 2) = detail::as_complex(flat[e], what + " entry");
    set.operators.push_back(a);
  }
  spec.custom_kraus = std::move(set);
  return spec;
}

// ---------------------------------------------------------------------------
// Solver config. Reading is a partial update: absent keys keep `base`.

inline Json to_json(const SolverConfig& c) {
  return {{"n_max", c.n_max},
          {"grid_q", c.grid_q},
          {"max_outer_iters", c.max_outer_iters},
          {"convergence_tol", c.convergence_tol},
          {"seed", c.seed},
          {"restarts", c.restarts},
          {"max_inner_iters", c.max_inner_iters},
          {"gradient_tol", c.gradient_tol},
          {"polish_iters", c.polish_iters},
          {"harmonic_amplitude", c.harmonic_amplitude},
          {"harmonic_decay", c.harmonic_decay},
          {"success_threshold", c.success_threshold},
          {"rank_tol", c.rank_tol}};
}

inline SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {}) {
  detail::reject_unknown_keys(j,
                              {"n_max", "grid_q", "max_outer_iters", "convergence_tol", "seed", "restarts",
                               "max_inner_iters", "gradient_tol", "polish_iters", "harmonic_amplitude",
                               "harmonic_decay", "success_threshold", "rank_tol"},
                              "solver config");
  auto integer = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    using T = std::remove_reference_t<decltype(field)>;
    const bool ok = std::is_unsigned_v<T> ? j[key].is_number_unsigned() : j[key].is_number_integer();
    if (!ok) throw FormatError(std::string("solver config: '") + key + "' must be an integer");
    field = j[key].get<T>();
  };
  auto real = [&](const char* key, double& field) {
    if (j.contains(key)) field = detail::as_number(j[key], std::string("solver config '") + key + "'");
  };
  integer("n_max", base.n_max);
  integer("grid_q", base.grid_q);
  integer("max_outer_iters", base.max_outer_iters);
  real("convergence_tol", base.convergence_tol);
  integer("seed", base.seed);
  integer("restarts", base.restarts);
  integer("max_inner_iters", base.max_inner_iters);
  real("gradient_tol", base.gradient_tol);
  integer("polish_iters", base.polish_iters);
  real("harmonic_amplitude", base.harmonic_amplitude);
  real("harmonic_decay", base.harmonic_decay);
  real("success_threshold", base.success_threshold);
  real("rank_tol", base.rank_tol);
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Design file.

struct DesignFile {
  ChannelSpec channel;
  SolverConfig config;
  DesignResult result;
};

inline Json to_json(const DesignFile& d) {
  const FourierSolution& s = d.result.solution;
  Json cos = Json::array();
  Json sin = Json::array();
  for (int i = 0; i < 4; ++i) {
    Json crow = Json::array();
    Json srow = Json::array();
    for (int n = 0; n < s.n_max; ++n) {
      crow.push_back(s.cos_coeffs(i, n));
      srow.push_back(s.sin_coeffs(i, n));
    }
    cos.push_back(crow);
    sin.push_back(srow);
  }
  const SolverReport& r = d.result.report;
  return {{"channel", to_json(d.channel)},
          {"config", to_json(d.config)},
          {"dc", {s.dc(0), s.dc(1), s.dc(2), s.dc(3)}},
          {"cos", cos},
          {"sin", sin},
          {"report",
           {{"f1", r.f1_final},
            {"f2", r.f2_final},
            {"iters", r.outer_iters},
            {"converged", r.converged},
            {"restarts_used", r.restarts_used},
            {"polished", r.polished}}}};
}

inline DesignFile design_file_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"channel", "config", "dc", "cos", "sin", "report"}, "design file");
  DesignFile d;
  d.channel = channel_spec_from_json(detail::require(j, "channel", "design file"));
  d.config = solver_config_from_json(detail::require(j, "config", "design file"));

  const Json& dc = detail::require(j, "dc", "design file");
  if (!dc.is_array() || dc.size() != 4) throw FormatError("design file: 'dc' must have 4 entries");
  FourierSolution s = FourierSolution::zeros(d.config.n_max);
  for (int i = 0; i < 4; ++i) s.dc(i) = detail::as_number(dc[i], "design file 'dc'");
  for (const char* key : {"cos", "sin"}) {
    const Json& block = detail::require(j, key, "design file");
    Eigen::MatrixXd& target = std::string(key) == "cos" ? s.cos_coeffs : s.sin_coeffs;
    if (!block.is_array() || block.size() != 4)
      throw FormatError(std::string("design file: '") + key + "' must have 4 rows");
    for (int i = 0; i < 4; ++i) {
      if (!block[i].is_array() || static_cast<int>(block[i].size()) != d.config.n_max)
        throw FormatError(std::string("design file: '") + key + "' rows must have n_max = " +
                          std::to_string(d.config.n_max) + " entries");
      for (int n = 0; n < d.config.n_max; ++n) target(i, n) = detail::as_number(block[i][n], "design coefficient");
    }
  }
  d.result.solution = std::move(s);

  const Json& report = detail::require(j, "report", "design file");
  detail::reject_unknown_keys(report, {"f1", "f2", "iters", "converged", "restarts_used", "polished"}, "design report");
  SolverReport& r = d.result.report;
  r.f1_final = detail::as_number(detail::require(report, "f1", "design report"), "design report 'f1'");
  r.f2_final = detail::as_number(detail::require(report, "f2", "design report"), "design report 'f2'");
  const Json& iters = detail::require(report, "iters", "design report");
  if (!iters.is_number_integer()) throw FormatError("design report: 'iters' must be an integer");
  r.outer_iters = iters.get<int>();
  const Json& converged = detail::require(report, "converged", "design report");
  if (!converged.is_boolean()) throw FormatError("design report: 'converged' must be a boolean");
  r.converged = converged.get<bool>();
  if (report.contains("restarts_used")) {
    if (!report["restarts_used"].is_number_integer()) throw FormatError("design report: 'restarts_used' must be an integer");
    r.restarts_used = report["restarts_used"].get<int>();
  }
  if (report.contains("polished")) {
    if (!report["polished"].is_boolean()) throw FormatError("design report: 'polished' must be a boolean");
    r.polished = report["polished"].get<bool>();
  }
  return d;
}

// ---------------------------------------------------------------------------
// Files.

/// Parses a JSON file; I/O and syntax problems become FormatError.
inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write to '" + path + "' failed");
}

}  // namespace qlatt

#endif  // QLATT_SERIALIZATION_HPP
