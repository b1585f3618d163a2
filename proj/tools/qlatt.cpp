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

// qlatt: design -> pattern -> verify -> simulate -> trajectory.
//
// Exit codes: 0 ok, 1 usage or I/O, 2 infeasible channel, 3 solver did not
// converge, 4 waveplate reconstruction failed, 5 verification failed.

#include "qlatt/qlatt.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace qlatt;

enum Exit : int { kOk = 0, kUsage = 1, kInfeasible = 2, kNoConvergence = 3, kReconstruction = 4, kVerification = 5 };

constexpr const char* kConfigEnv = "QLATT_CONFIG";
constexpr double kReconstructionTol = 1e-8;
constexpr double kChiTol = 1e-4;
constexpr double kProcessFidelityTol = 0.9999;
constexpr int kProcessInputs = 20;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Defaults: built-in, then the config file ($QLATT_CONFIG or --config), then flags.

struct Defaults {
  SolverConfig solver;
  MonteCarloConfig monte_carlo;
  double period_mm = kDefaultPeriodMm;
  std::string source = "built-in";
};

Defaults load_defaults(const std::string& flag_path) {
  Defaults d;
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  }
  if (path.empty()) return d;
  const Json j = read_json_file(path);
  detail::reject_unknown_keys(j, {"solver", "monte_carlo", "period_mm"}, "config file");
  if (j.contains("solver")) d.solver = solver_config_from_json(j["solver"], d.solver);
  if (j.contains("monte_carlo")) {
    const Json& mc = j["monte_carlo"];
    detail::reject_unknown_keys(mc, {"realizations", "sigma_rel", "seed"}, "monte_carlo config");
    if (mc.contains("realizations")) d.monte_carlo.realizations = mc["realizations"].get<int>();
    if (mc.contains("sigma_rel")) d.monte_carlo.sigma_rel = detail::as_number(mc["sigma_rel"], "sigma_rel");
    if (mc.contains("seed")) d.monte_carlo.seed = mc["seed"].get<unsigned long long>();
  }
  if (j.contains("period_mm")) d.period_mm = detail::as_number(j["period_mm"], "period_mm");
  d.source = path;
  return d;
}

// ---------------------------------------------------------------------------
// Manifests.

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

struct Manifest {
  Json body;
  explicit Manifest(const std::string& command) {
    body["command"] = command;
    body["tool_version"] = kVersion;
    body["started_utc"] = utc_now();
    body["inputs"] = Json::array();
    body["outputs"] = Json::array();
    body["channel"] = nullptr;
  }
  void write(const std::string& primary_output) {
    body["finished_utc"] = utc_now();
    write_json_file(body, manifest_path(primary_output));
  }
};

std::optional<ChannelSpec> channel_from_manifest(const std::string& output) {
  const std::string path = manifest_path(output);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const Json j = read_json_file(path);
  if (!j.contains("channel") || j["channel"].is_null()) return std::nullopt;
  return channel_spec_from_json(j["channel"]);
}

// ---------------------------------------------------------------------------
// Flag helpers.

struct ChannelFlags {
  std::string channel;
  double p = std::numeric_limits<double>::quiet_NaN();
  std::string spec_path;

  void add_to(CLI::App& app) {
    app.add_option("--channel", channel, "bit-flip, bit-phase-flip, phase-flip, depolarizing or custom");
    app.add_option("--p", p, "channel strength in [0, 1]");
    app.add_option("--spec", spec_path, "channel spec JSON")->check(CLI::ExistingFile);
  }
  bool given() const { return !channel.empty() || !spec_path.empty(); }

  ChannelSpec resolve() const {
    if (!spec_path.empty()) {
      ChannelSpec spec = channel_spec_from_json(read_json_file(spec_path));
      if (!channel.empty() && parse_channel_kind(channel) != spec.kind)
        throw UsageError("--channel disagrees with the kind in " + spec_path);
      if (!std::isnan(p)) {
        if (spec.kind == ChannelKind::custom) throw UsageError("--p does not apply to custom channels");
        spec.p = p;
      }
      return spec;
    }
    if (channel.empty()) throw UsageError("a channel is required (--channel or --spec)");
    ChannelSpec spec;
    try {
      spec.kind = parse_channel_kind(channel);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (spec.kind == ChannelKind::custom) throw UsageError("--channel custom needs --spec");
    if (std::isnan(p)) throw UsageError("--p is required for named channels");
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--p must lie in [0, 1]");
    spec.p = p;
    return spec;
  }
};

struct SolverFlags {
  std::optional<int> n_max, grid, max_iters, restarts;
  std::optional<double> tol;
  std::optional<unsigned long long> seed;

  void add_to(CLI::App& app) {
    app.add_option("--n-max", n_max, "highest harmonic N");
    app.add_option("--grid", grid, "quasi-momentum samples Q");
    app.add_option("--max-iters", max_iters, "outer alternation budget T");
    app.add_option("--tol", tol, "L1 stopping tolerance");
    app.add_option("--seed", seed, "solver seed");
    app.add_option("--restarts", restarts, "seeded restarts");
  }
  SolverConfig apply(SolverConfig c) const {
    if (n_max) c.n_max = *n_max;
    if (grid) c.grid_q = *grid;
    if (max_iters) c.max_outer_iters = *max_iters;
    if (tol) c.convergence_tol = *tol;
    if (seed) c.seed = *seed;
    if (restarts) c.restarts = *restarts;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

double parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  std::size_t used = 0;
  try {
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } else {
      const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
      std::size_t used_den = 0;
      const double a = std::stod(num, &used);
      const double b = std::stod(den, &used_den);
      if (used == num.size() && used_den == den.size() && b != 0.0) return a / b;
    }
  } catch (const std::exception&) {
  }
  throw UsageError("cannot parse number '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<InputState> parse_inputs(const std::string& text) {
  std::vector<InputState> out;
  for (const auto& name : split_list(text)) {
    try {
      out.push_back(parse_input_state(name));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("--input needs at least one of H, D, L");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// design

struct DesignArgs {
  ChannelFlags channel;
  SolverFlags solver;
  std::string output = "design.json";
};

int cmd_design(const DesignArgs& a, const Defaults& defaults) {
  Manifest manifest("design");
  const ChannelSpec spec = a.channel.resolve();
  const SolverConfig cfg = a.solver.apply(defaults.solver);
  PipelineOptions pipeline;
  pipeline.period_mm = defaults.period_mm;
  manifest.body["channel"] = to_json(spec);
  manifest.body["config"] = {{"solver", to_json(cfg)}, {"period_mm", pipeline.period_mm}, {"source", defaults.source}};
  manifest.body["seed"] = cfg.seed;
  if (!a.channel.spec_path.empty()) manifest.body["inputs"].push_back(a.channel.spec_path);

  ChannelDesign design;
  try {
    design = design_channel(spec, cfg, pipeline);
  } catch (const InfeasibleTarget& e) {
    std::cerr << "design: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NonConvergence& e) {
    std::cerr << "design: " << e.what() << " (best f1 = " << e.best().report.f1_final
              << ", f2 = " << e.best().report.f2_final << ")\n";
    return kNoConvergence;
  } catch (const UnresolvableJump& e) {
    std::cerr << "design: " << e.what() << '\n';
    return kReconstruction;
  } catch (const NormCollapse& e) {
    std::cerr << "design: " << e.what() << '\n';
    return kReconstruction;
  }

  SolverConfig stored = cfg;
  stored.seed = design.seed_used;
  write_json_file(to_json(DesignFile{spec, stored, design.result}), a.output);
  manifest.body["seed"] = design.seed_used;
  manifest.body["outputs"].push_back(a.output);
  manifest.write(a.output);
  const SolverReport& r = design.result.report;
  std::cout << "channel " << to_string(spec.kind);
  if (spec.kind != ChannelKind::custom) std::cout << " p=" << spec.p;
  std::cout << "\nf1 " << r.f1_final << "\nf2 " << r.f2_final << "\nouter_iters " << r.outer_iters << "\nrestarts_used "
            << r.restarts_used << "\nwrote " << a.output << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// pattern

struct PatternArgs {
  std::string design_path;
  std::optional<double> period_mm;
  std::optional<int> grid;
  std::string output = "pattern.csv";
};

int cmd_pattern(const PatternArgs& a, const Defaults& defaults) {
  Manifest manifest("pattern");
  const DesignFile design = design_file_from_json(read_json_file(a.design_path));
  const double period = a.period_mm.value_or(defaults.period_mm);
  const int grid = a.grid.value_or(design.config.grid_q);
  if (!(period > 0.0)) throw UsageError("--period-mm must be positive");
  if (grid < 1) throw UsageError("--grid must be positive");
  manifest.body["channel"] = to_json(design.channel);
  manifest.body["config"] = {{"period_mm", period}, {"grid", grid}};
  manifest.body["inputs"].push_back(a.design_path);

  PatternProfile profile;
  double error = 0.0;
  try {
    const UnitaryField field = evaluate_field(design.result.solution, grid);
    profile = design_pattern(field, period);
    error = reconstruction_error(profile, field);
  } catch (const UnresolvableJump& e) {
    std::cerr << "pattern: " << e.what() << '\n';
    return kReconstruction;
  } catch (const NormCollapse& e) {
    std::cerr << "pattern: " << e.what() << '\n';
    return kReconstruction;
  }
  std::cout << "samples " << profile.size() << "\nperiod_mm " << period << "\nreconstruction_max " << error
            << "\nmax_adjacent_jump " << max_adjacent_jump(profile) << "\nclosure_jump " << closure_jump(profile) << '\n';
  if (!(error <= kReconstructionTol)) {
    std::cerr << "pattern: reconstruction error " << error << " exceeds " << kReconstructionTol << '\n';
    return kReconstruction;
  }
  export_pattern(profile, a.output);
  manifest.body["reconstruction_max"] = error;
  manifest.body["outputs"].push_back(a.output);
  manifest.write(a.output);
  std::cout << "wrote " << a.output << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string design_path;
  ChannelFlags channel;
  unsigned long long seed = 0;
  std::string output = "verify.json";
};

int cmd_verify(const VerifyArgs& a, const Defaults& defaults) {
  Manifest manifest("verify");
  const DesignFile design = design_file_from_json(read_json_file(a.design_path));
  const ChannelSpec spec = a.channel.given() ? a.channel.resolve() : design.channel;
  const KrausSet kraus = kraus_set(spec);
  const GramMatrix gram = gram_matrix(kraus);
  manifest.body["channel"] = to_json(spec);
  manifest.body["seed"] = a.seed;
  manifest.body["inputs"].push_back(a.design_path);
  if (!a.channel.spec_path.empty()) manifest.body["inputs"].push_back(a.channel.spec_path);

  Json report;
  report["design"] = a.design_path;
  report["channel"] = to_json(spec);
  report["thresholds"] = {{"chi_error", kChiTol}, {"process_fidelity", kProcessFidelityTol},
                          {"reconstruction", kReconstructionTol}};
  bool ok = true;

  const UnitaryField field = evaluate_field(design.result.solution, design.config.grid_q);
  const Eigen::Matrix4cd moments = field_moments(field).cast<Complex>();
  const double chi_error = (moments - gram.m).cwiseAbs().maxCoeff();
  report["chi_error"] = chi_error;
  ok = ok && chi_error <= kChiTol;

  double min_fid = 1.0;
  const bool tp = check_trace_preserving(kraus).trace_preserving;
  if (tp) {
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < kProcessInputs; ++k) {
      const Eigen::Vector2cd psi(Complex(normal(rng), normal(rng)), Complex(normal(rng), normal(rng)));
      const DensityMatrix rho = DensityMatrix::pure(psi);
      min_fid = std::min(min_fid, fidelity(apply_channel(kraus, rho), apply_field(field, rho)));
    }
  } else {
    min_fid = 0.0;
    report["note"] = "target Kraus set is not trace preserving";
  }
  report["process_fidelity_min"] = min_fid;
  ok = ok && min_fid >= kProcessFidelityTol;

  double recon = std::numeric_limits<double>::infinity();
  try {
    recon = reconstruction_error(design_pattern(field, defaults.period_mm), field);
  } catch (const UnresolvableJump& e) {
    report["reconstruction_note"] = e.what();
  }
  report["reconstruction_max"] = std::isfinite(recon) ? Json(recon) : Json(nullptr);
  ok = ok && recon <= kReconstructionTol;
  report["passed"] = ok;

  std::cout << "chi_error " << chi_error << (chi_error <= kChiTol ? " ok" : " FAIL") << '\n'
            << "process_fidelity_min " << min_fid << (min_fid >= kProcessFidelityTol ? " ok" : " FAIL") << '\n'
            << "reconstruction_max " << recon << (recon <= kReconstructionTol ? " ok" : " FAIL") << '\n'
            << (ok ? "PASSED" : "FAILED") << '\n';
  write_json_file(report, a.output);
  manifest.body["outputs"].push_back(a.output);
  manifest.write(a.output);
  return ok ? kOk : kVerification;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::vector<std::string> patterns;
  std::string inputs = "H,D,L";
  std::optional<int> trials;
  std::optional<double> sigma;
  std::optional<unsigned long long> seed;
  std::optional<double> period_mm;
  ChannelFlags channel;
  std::string output = "trajectory.csv";
};

MonteCarloConfig monte_carlo_config(const Defaults& d, std::optional<int> trials, std::optional<double> sigma,
                                    std::optional<unsigned long long> seed) {
  MonteCarloConfig mc = d.monte_carlo;
  if (trials) mc.realizations = *trials;
  if (sigma) mc.sigma_rel = *sigma;
  if (seed) mc.seed = *seed;
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return mc;
}

Json monte_carlo_json(const MonteCarloConfig& mc) {
  return {{"realizations", mc.realizations}, {"sigma_rel", mc.sigma_rel}, {"seed", mc.seed}};
}

int cmd_simulate(const SimulateArgs& a, const Defaults& defaults) {
  Manifest manifest("simulate");
  const std::vector<InputState> inputs = parse_inputs(a.inputs);
  const MonteCarloConfig mc = monte_carlo_config(defaults, a.trials, a.sigma, a.seed);
  const std::optional<ChannelSpec> flagged = a.channel.given() ? std::optional(a.channel.resolve()) : std::nullopt;
  manifest.body["config"] = {{"monte_carlo", monte_carlo_json(mc)}, {"inputs", a.inputs}};
  manifest.body["seed"] = mc.seed;
  if (flagged) manifest.body["channel"] = to_json(*flagged);

  std::vector<TrajectoryPoint> points;
  for (const auto& path : a.patterns) {
    manifest.body["inputs"].push_back(path);
    const PatternProfile profile = import_pattern(path, a.period_mm);
    const std::optional<ChannelSpec> spec = flagged ? flagged : channel_from_manifest(path);
    std::optional<KrausSet> kraus;
    if (spec) kraus = kraus_set(*spec);
    for (const InputState& in : inputs) {
      std::optional<DensityMatrix> theory;
      if (kraus) theory = apply_channel(*kraus, prepare_state(in));
      TrajectoryPoint pt = monte_carlo(profile, in, mc, theory);
      pt.channel = spec ? std::string(to_string(spec->kind)) : "unknown";
      pt.p = spec && spec->kind != ChannelKind::custom ? spec->p : std::numeric_limits<double>::quiet_NaN();
      points.push_back(std::move(pt));
    }
  }
  std::ostringstream csv;
  write_trajectory_csv(points, csv);
  write_text(a.output, csv.str());
  manifest.body["outputs"].push_back(a.output);
  manifest.write(a.output);
  std::cout << "rows " << points.size() << "\nwrote " << a.output << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// trajectory

struct TrajectoryArgs {
  std::string channel;
  std::string p_list = "0,1/8,1/4,1/2";
  std::string inputs = "H,D,L";
  std::optional<int> trials;
  std::optional<double> sigma;
  std::optional<unsigned long long> mc_seed;
  SolverFlags solver;
  std::string output = "trajectory.csv";
  std::string plot_output;
};

Json plot_json(const std::string& channel, const std::vector<TrajectoryPoint>& points) {
  Json series = Json::object();
  for (const auto& pt : points) {
    Json& s = series[pt.input];
    if (s.is_null()) {
      for (const char* key : {"p", "s1_th", "s2_th", "s3_th", "s1_sim", "s2_sim", "s3_sim", "s1_std", "s2_std",
                              "s3_std", "fidelity"})
        s[key] = Json::array();
    }
    s["p"].push_back(pt.p);
    for (int i = 0; i < 3; ++i) {
      const std::string n = std::to_string(i + 1);
      s["s" + n + "_th"].push_back(pt.theory[i]);
      s["s" + n + "_sim"].push_back(pt.simulated[i]);
      s["s" + n + "_std"].push_back(pt.spread[i]);
    }
    s["fidelity"].push_back(pt.fidelity);
  }
  return {{"channel", channel}, {"series", series}};
}

int cmd_trajectory(const TrajectoryArgs& a, const Defaults& defaults) {
  Manifest manifest("trajectory");
  ChannelKind kind;
  try {
    kind = parse_channel_kind(a.channel);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kind == ChannelKind::custom) throw UsageError("trajectory sweeps named channels only");
  std::vector<double> ps;
  for (const auto& item : split_list(a.p_list)) {
    const double p = parse_fraction(item);
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p values must lie in [0, 1]");
    ps.push_back(p);
  }
  if (ps.empty()) throw UsageError("--p-list is empty");
  const std::vector<InputState> inputs = parse_inputs(a.inputs);
  const SolverConfig cfg = a.solver.apply(defaults.solver);
  const MonteCarloConfig mc = monte_carlo_config(defaults, a.trials, a.sigma, a.mc_seed);
  PipelineOptions pipeline;
  pipeline.period_mm = defaults.period_mm;
  const std::string plot_path = a.plot_output.empty() ? a.output + ".plot.json" : a.plot_output;

  manifest.body["channel"] = {{"kind", std::string(to_string(kind))}, {"p_list", ps}};
  manifest.body["config"] = {{"solver", to_json(cfg)}, {"monte_carlo", monte_carlo_json(mc)},
                             {"period_mm", pipeline.period_mm}, {"inputs", a.inputs}};
  manifest.body["seed"] = cfg.seed;

  const TrajectoryResult result = trajectory(kind, ps, inputs, cfg, mc, pipeline);
  std::ostringstream csv;
  write_trajectory_csv(result.points, csv);
  write_text(a.output, csv.str());
  write_json_file(plot_json(std::string(to_string(kind)), result.points), plot_path);

  int code = kOk;
  Json failures = Json::array();
  for (const auto& f : result.failures) {
    std::cerr << "trajectory: p=" << f.p << ": " << f.message << '\n';
    failures.push_back({{"p", f.p}, {"message", f.message}});
    int c = kUsage;
    switch (f.kind) {
      case TrajectoryFailure::Kind::infeasible: c = kInfeasible; break;
      case TrajectoryFailure::Kind::nonconvergence: c = kNoConvergence; break;
      case TrajectoryFailure::Kind::pattern: c = kReconstruction; break;
      case TrajectoryFailure::Kind::other: c = kUsage; break;
    }
    if (code == kOk) code = c;
  }
  manifest.body["failures"] = failures;
  manifest.body["outputs"].push_back(a.output);
  manifest.body["outputs"].push_back(plot_path);
  manifest.write(a.output);
  std::cout << "rows " << result.points.size() << "\nfailed_points " << result.failures.size() << "\nwrote " << a.output
            << "\nwrote " << plot_path << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design lattice dilations of single-qubit channels as three-plate metasurface stacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  app.add_option("--config", config_path, std::string("JSON config with defaults (else $") + kConfigEnv + ")");

  DesignArgs design;
  CLI::App* design_cmd = app.add_subcommand("design", "solve for the Fourier field of a channel");
  design.channel.add_to(*design_cmd);
  design.solver.add_to(*design_cmd);
  design_cmd->add_option("-o,--output", design.output, "design JSON path");

  PatternArgs pattern;
  CLI::App* pattern_cmd = app.add_subcommand("pattern", "convert a design into optic-axis patterns");
  pattern_cmd->add_option("design", pattern.design_path, "design JSON")->required();
  pattern_cmd->add_option("--period-mm", pattern.period_mm, "metasurface period in mm");
  pattern_cmd->add_option("--grid", pattern.grid, "number of samples (default: the design's Q)");
  pattern_cmd->add_option("-o,--output", pattern.output, "pattern CSV path");

  VerifyArgs verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "check a design against a channel");
  verify_cmd->add_option("design", verify.design_path, "design JSON")->required();
  verify.channel.add_to(*verify_cmd);
  verify_cmd->add_option("--seed", verify.seed, "seed for the random test inputs");
  verify_cmd->add_option("-o,--output", verify.output, "JSON report path");

  SimulateArgs simulate;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo bench simulation of pattern files");
  simulate_cmd->add_option("patterns", simulate.patterns, "pattern CSV files")->required();
  simulate_cmd->add_option("--input", simulate.inputs, "comma-separated inputs among H, D, L");
  simulate_cmd->add_option("--trials", simulate.trials, "Monte Carlo realizations");
  simulate_cmd->add_option("--sigma", simulate.sigma, "relative plate error");
  simulate_cmd->add_option("--seed", simulate.seed, "Monte Carlo seed");
  simulate_cmd->add_option("--period-mm", simulate.period_mm, "override the period inferred from x");
  simulate.channel.add_to(*simulate_cmd);
  simulate_cmd->add_option("-o,--output", simulate.output, "trajectory CSV path");

  TrajectoryArgs traj;
  CLI::App* traj_cmd = app.add_subcommand("trajectory", "end-to-end p sweep");
  traj_cmd->add_option("--channel", traj.channel, "named channel")->required();
  traj_cmd->add_option("--p-list", traj.p_list, "comma-separated p values (fractions allowed)");
  traj_cmd->add_option("--inputs", traj.inputs, "comma-separated inputs among H, D, L");
  traj_cmd->add_option("--trials", traj.trials, "Monte Carlo realizations");
  traj_cmd->add_option("--sigma", traj.sigma, "relative plate error");
  traj_cmd->add_option("--mc-seed", traj.mc_seed, "Monte Carlo seed");
  traj.solver.add_to(*traj_cmd);
  traj_cmd->add_option("-o,--output", traj.output, "trajectory CSV path");
  traj_cmd->add_option("--plot", traj.plot_output, "plot JSON path (default: <output>.plot.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const Defaults defaults = load_defaults(config_path);
    if (*design_cmd) return cmd_design(design, defaults);
    if (*pattern_cmd) return cmd_pattern(pattern, defaults);
    if (*verify_cmd) return cmd_verify(verify, defaults);
    if (*simulate_cmd) return cmd_simulate(simulate, defaults);
    if (*traj_cmd) return cmd_trajectory(traj, defaults);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kUsage;
}
