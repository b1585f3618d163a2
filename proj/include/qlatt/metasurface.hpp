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

#ifndef QLATT_METASURFACE_HPP
#define QLATT_METASURFACE_HPP

// Patterned waveplate synthesis. A stack QWP(theta1) -> HWP(theta2) -> QWP(theta3)
// realizes L = W3 W2 W1 = l0 s0 - i (l1 s1 + l2 s2 + l3 s3) with
//
//   l0 = -cos(a) cos(b),  l1 = -sin(b) sin(g),  l2 = sin(b) cos(g),  l3 = sin(a) cos(b),
//   a = theta1 - theta3,  b = theta1 - 2 theta2 + theta3,  g = theta1 + theta3.
//
// Matching L to a target rotation of angle chi about n = (sin t cos f, sin t sin f, cos t)
// gives g = f - pi/2 and two (a, b) branches; the per-sample choice between
// them is made by scanning the grid for continuity.

#include "qlatt/pauli.hpp"
#include "qlatt/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace qlatt {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDefaultPeriodMm = 2.5;
inline constexpr double kDegenerateAxis = 1e-9;
inline constexpr double kJumpThreshold = kPi / 4;

class UnresolvableJump : public std::runtime_error {
 public:
  UnresolvableJump(std::size_t sample, double jump)
      : std::runtime_error("optic-axis pattern jumps by " + std::to_string(jump) + " rad at sample " +
                           std::to_string(sample) + " on every solution branch"),
        sample_(sample) {}
  std::size_t sample() const { return sample_; }

 private:
  std::size_t sample_;
};

// ---------------------------------------------------------------------------
// Axis-angle form of the field.

struct AxisAngleField {
  double period_mm = kDefaultPeriodMm;
  std::vector<double> x;                // x_j = period * q_j / 2pi
  std::vector<double> chi;              // rotation angle in [0, 2pi]
  std::vector<Eigen::Vector3d> axis;    // unit rotation axis
  std::vector<bool> degenerate;         // sin(chi/2) below kDegenerateAxis; axis was filled in

  std::size_t size() const { return chi.size(); }
};

inline AxisAngleField axis_angle(const UnitaryField& field, double period_mm = kDefaultPeriodMm) {
  const std::size_t q = field.size();
  AxisAngleField out;
  out.period_mm = period_mm;
  out.x.resize(q);
  out.chi.resize(q);
  out.axis.assign(q, Eigen::Vector3d(1, 0, 0));
  out.degenerate.assign(q, false);
  for (std::size_t j = 0; j < q; ++j) {
    const Eigen::Vector4d& u = field.values[j];
    const Eigen::Vector3d v = u.tail<3>();
    const double s = v.norm();
    out.x[j] = period_mm * field.grid[j] / (2 * kPi);
    out.chi[j] = 2.0 * std::atan2(s, u(0));
    if (s > kDegenerateAxis) {
      out.axis[j] = v / s;
    } else {
      out.degenerate[j] = true;
    }
  }
  // Degenerate samples take the axis of the nearest regular sample (cyclic
  // distance, earlier sample on ties). The rotation there is +-identity, so
  // the axis is immaterial.
  std::vector<std::size_t> regular;
  for (std::size_t j = 0; j < q; ++j)
    if (!out.degenerate[j]) regular.push_back(j);
  if (regular.empty()) return out;
  for (std::size_t j = 0; j < q; ++j) {
    if (!out.degenerate[j]) continue;
    for (std::size_t d = 1; d <= q; ++d) {
      const std::size_t before = (j + q - d % q) % q;
      const std::size_t after = (j + d) % q;
      if (!out.degenerate[before]) { out.axis[j] = out.axis[before]; break; }
      if (!out.degenerate[after]) { out.axis[j] = out.axis[after]; break; }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Waveplates.

struct PlateSpec {
  double delta = kPi;  // retardation, radians

  static constexpr PlateSpec quarter_wave() { return {kPi / 2}; }
  static constexpr PlateSpec half_wave() { return {kPi}; }
};

using PlateStack = std::array<PlateSpec, 3>;

inline constexpr PlateStack kCanonicalStack{PlateSpec::quarter_wave(), PlateSpec::half_wave(), PlateSpec::quarter_wave()};

/// cos(d/2) s0 + i sin(d/2) (cos 2t s1 + sin 2t s2).
inline Complex2x2 waveplate_matrix(const PlateSpec& plate, double theta) {
  const double c = std::cos(plate.delta / 2);
  const double s = std::sin(plate.delta / 2);
  Complex2x2 m;
  m(0, 0) = c;
  m(1, 1) = c;
  m(0, 1) = kI * s * std::polar(1.0, -2 * theta);
  m(1, 0) = kI * s * std::polar(1.0, 2 * theta);
  return m;
}

/// W3(theta3) W2(theta2) W1(theta1); light traverses plate 1 first.
inline Complex2x2 stack_matrix(double theta1, double theta2, double theta3, const PlateStack& plates = kCanonicalStack) {
  return waveplate_matrix(plates[2], theta3) * waveplate_matrix(plates[1], theta2) * waveplate_matrix(plates[0], theta1);
}

/// Closed-form Pauli coefficients of the canonical QWP-HWP-QWP stack.
inline PauliVector triple_product_coefficients(double theta1, double theta2, double theta3) {
  const double a = theta1 - theta3;
  const double b = theta1 - 2 * theta2 + theta3;
  const double g = theta1 + theta3;
  return PauliVector::from_real({-std::cos(a) * std::cos(b), -std::sin(b) * std::sin(g), std::sin(b) * std::cos(g),
                                 std::sin(a) * std::cos(b)});
}

// ---------------------------------------------------------------------------
// Angle solutions.

struct AngleTriple {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Optic-axis angles (theta1, theta2, theta3) from (alpha, beta, gamma).
inline Eigen::Vector3d thetas_from(const AngleTriple& t) {
  const double theta1 = 0.5 * (t.alpha + t.gamma);
  const double theta3 = 0.5 * (t.gamma - t.alpha);
  return {theta1, 0.5 * (theta1 + theta3 - t.beta), theta3};
}

/// Exact solutions at one sample. candidates[0..1] are the two published
/// branches; candidates[2..3] are the same rotations written with the axis
/// reversed, (a, -b, g + pi) and (pi + a, b - pi, g + pi).
struct SampleBranches {
  std::array<AngleTriple, 4> candidates;
  /// sin(b) = 0: the axis is along +-s3 and gamma does not enter the product.
  bool gamma_free = false;
};

inline SampleBranches branch_solutions(double chi, const Eigen::Vector3d& n) {
  const double s = std::sin(chi / 2);
  const double c = std::cos(chi / 2);
  const double polar = std::atan2(std::hypot(n(0), n(1)), n(2));
  const double azimuth = std::atan2(n(1), n(0));
  const double transverse = s * std::sin(polar);
  const double longitudinal = s * std::cos(polar);

  SampleBranches out;
  out.gamma_free = std::abs(transverse) <= 1e-10;
  const double gamma = out.gamma_free ? 0.0 : azimuth - kPi / 2;
  const double alpha1 = std::atan2(-longitudinal, c);
  const double beta1 = std::atan2(transverse, -std::sqrt(c * c + longitudinal * longitudinal));
  out.candidates[0] = {alpha1, beta1, gamma};
  out.candidates[1] = {kPi + alpha1, kPi - beta1, gamma};
  out.candidates[2] = {alpha1, -beta1, gamma + kPi};
  out.candidates[3] = {kPi + alpha1, beta1 - kPi, gamma + kPi};
  return out;
}

struct PatternProfile {
  double period_mm = kDefaultPeriodMm;
  std::vector<double> x;
  std::vector<double> theta1;
  std::vector<double> theta2;
  std::vector<double> theta3;

  std::size_t size() const { return x.size(); }
  Eigen::Vector3d angles(std::size_t j) const { return {theta1[j], theta2[j], theta3[j]}; }
  Complex2x2 matrix(std::size_t j, const PlateStack& plates = kCanonicalStack) const {
    return stack_matrix(theta1[j], theta2[j], theta3[j], plates);
  }
};

/// Scans the samples in order and keeps the optic-axis angles continuous.
/// Each theta is defined modulo pi (W(theta + pi) = W(theta)); every sample
/// takes the candidate and representatives closest to its predecessor.
/// Throws UnresolvableJump if every candidate moves some theta by more than
/// `jump_threshold`.
inline PatternProfile stitch_branches(const std::vector<SampleBranches>& raw, const std::vector<double>& x,
                                      double period_mm = kDefaultPeriodMm, double jump_threshold = kJumpThreshold) {
  if (raw.size() != x.size()) throw std::invalid_argument("stitch_branches: grid and branch counts differ");
  PatternProfile out;
  out.period_mm = period_mm;
  out.x = x;
  out.theta1.resize(raw.size());
  out.theta2.resize(raw.size());
  out.theta3.resize(raw.size());
  if (raw.empty()) return out;

  AngleTriple start = raw[0].candidates[0];
  if (raw[0].gamma_free) {
    for (const SampleBranches& b : raw) {
      if (!b.gamma_free) {
        start.gamma = b.candidates[0].gamma;
        break;
      }
    }
  }
  Eigen::Vector3d prev = thetas_from(start);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    Eigen::Vector3d chosen = prev;
    if (j == 0) {
      chosen = prev;
    } else {
      double best_sum = std::numeric_limits<double>::infinity();
      double best_jump = std::numeric_limits<double>::infinity();
      double least_jump = std::numeric_limits<double>::infinity();
      for (AngleTriple cand : raw[j].candidates) {
        if (raw[j].gamma_free) cand.gamma = prev(0) + prev(2);
        Eigen::Vector3d t = thetas_from(cand);
        for (int i = 0; i < 3; ++i) t(i) += kPi * std::round((prev(i) - t(i)) / kPi);
        const Eigen::Vector3d d = (t - prev).cwiseAbs();
        least_jump = std::min(least_jump, d.maxCoeff());
        if (d.maxCoeff() > jump_threshold) continue;
        if (d.sum() < best_sum) {
          best_sum = d.sum();
          best_jump = d.maxCoeff();
          chosen = t;
        }
      }
      if (!std::isfinite(best_jump)) throw UnresolvableJump(j, least_jump);
    }
    out.theta1[j] = chosen(0);
    out.theta2[j] = chosen(1);
    out.theta3[j] = chosen(2);
    prev = chosen;
  }
  return out;
}

inline PatternProfile solve_angles(const AxisAngleField& a, double jump_threshold = kJumpThreshold) {
  std::vector<SampleBranches> raw;
  raw.reserve(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) raw.push_back(branch_solutions(a.chi[j], a.axis[j]));
  return stitch_branches(raw, a.x, a.period_mm, jump_threshold);
}

/// max_j ||W3 W2 W1 (x_j) - U(q_j)||_F.
inline double reconstruction_error(const PatternProfile& profile, const UnitaryField& field) {
  if (profile.size() != field.size()) throw std::invalid_argument("profile and field sizes differ");
  double worst = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) worst = std::max(worst, (profile.matrix(j) - field.matrix(j)).norm());
  return worst;
}

/// Angle reduced to (-pi, pi].
inline double reduce_angle(double theta) {
  double r = std::remainder(theta, 2 * kPi);
  if (r <= -kPi) r += 2 * kPi;
  return r;
}

/// Largest |theta_i(last) - theta_i(first)| after reduction modulo pi into (-pi/2, pi/2].
inline double closure_jump(const PatternProfile& p) {
  if (p.size() < 2) return 0.0;
  double worst = 0.0;
  for (const auto* t : {&p.theta1, &p.theta2, &p.theta3})
    worst = std::max(worst, std::abs(std::remainder(t->back() - t->front(), kPi)));
  return worst;
}

/// Largest adjacent-sample jump over the three lifted patterns.
inline double max_adjacent_jump(const PatternProfile& p) {
  double worst = 0.0;
  for (const auto* t : {&p.theta1, &p.theta2, &p.theta3})
    for (std::size_t j = 1; j < t->size(); ++j) worst = std::max(worst, std::abs((*t)[j] - (*t)[j - 1]));
  return worst;
}

/// Full chain: field -> axis-angle -> stitched optic-axis patterns.
inline PatternProfile design_pattern(const UnitaryField& field, double period_mm = kDefaultPeriodMm) {
  return solve_angles(axis_angle(field, period_mm));
}

// ---------------------------------------------------------------------------
// Orientation. The angle map is singular on two circles of SU(2):
// u1 = u2 = 0 (gamma undetermined) and u0 = u3 = 0 (alpha undetermined).
// A rotation R of (u1, u2, u3) with R Re(M) R^T = Re(M) changes neither
// cost nor the averaged channel.

/// Smallest distance of the normalized field from the two singular circles,
/// over `samples` equispaced points.
inline double waveplate_margin(const FourierSolution& s, int samples = 1000) {
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < samples; ++j) {
    Eigen::Vector4d u = s.evaluate(2 * kPi * j / samples);
    u /= u.norm();
    margin = std::min({margin, std::hypot(u(1), u(2)), std::hypot(u(0), u(3))});
  }
  return margin;
}

struct OrientOptions {
  int random_candidates = 256;
  int samples = 1000;
  unsigned long long seed = 7;
  double symmetry_tol = 1e-12;
};

/// Returns R s (R acting on u1..u3) maximizing waveplate_margin over the
/// identity, the half-turns about the eigenaxes of Re M, and seeded random
/// rotations, keeping only R with ||R Re(M) R^T - Re(M)|| <= symmetry_tol.
inline FourierSolution orient_for_waveplates(const FourierSolution& s, const GramMatrix& g, const OrientOptions& opts = {}) {
  const Eigen::Matrix4d target = g.m.real();
  std::vector<Eigen::Matrix3d> candidates{Eigen::Matrix3d::Identity()};
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (target.bottomRightCorner<3, 3>() +
                                                                  target.bottomRightCorner<3, 3>().transpose()));
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Vector3d flip = -Eigen::Vector3d::Ones();
    flip(axis) = 1.0;
    candidates.push_back(eig.eigenvectors() * flip.asDiagonal() * eig.eigenvectors().transpose());
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  for (int c = 0; c < opts.random_candidates; ++c) {
    Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    candidates.push_back(q.normalized().toRotationMatrix());
  }

  const Eigen::MatrixXd packed = s.packed();
  FourierSolution best = s;
  double best_margin = waveplate_margin(s, opts.samples);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    r.bottomRightCorner<3, 3>() = candidates[c];
    if ((r * target * r.transpose() - target).norm() > opts.symmetry_tol) continue;
    FourierSolution rotated = FourierSolution::from_packed(r * packed);
    const double margin = waveplate_margin(rotated, opts.samples);
    if (margin > best_margin + 1e-12) {
      best_margin = margin;
      best = std::move(rotated);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Pattern CSV: `x_mm,theta1_rad,theta2_rad,theta3_rad`, angles reduced to (-pi, pi].

namespace detail {

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 15);
  return std::string(buf.data(), res.ptr);
}

inline double parse_number(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::runtime_error("CSV line " + std::to_string(line) + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

}  // namespace detail

inline constexpr const char* kPatternHeader = "x_mm,theta1_rad,theta2_rad,theta3_rad";

inline void write_pattern_csv(const PatternProfile& p, std::ostream& out) {
  out << kPatternHeader << '\n';
  for (std::size_t j = 0; j < p.size(); ++j) {
    out << detail::format_number(p.x[j]) << ',' << detail::format_number(reduce_angle(p.theta1[j])) << ','
        << detail::format_number(reduce_angle(p.theta2[j])) << ',' << detail::format_number(reduce_angle(p.theta3[j]))
        << '\n';
  }
}

/// The period is recovered from the x spacing (x_j = period * j / Q) unless given.
inline PatternProfile read_pattern_csv(std::istream& in, std::optional<double> period_mm = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("pattern CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPatternHeader) throw std::runtime_error("pattern CSV header mismatch: '" + line + "'");
  PatternProfile p;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 4> row{};
    std::size_t start = 0;
    for (int c = 0; c < 4; ++c) {
      const std::size_t comma = line.find(',', start);
      if ((c < 3) != (comma != std::string::npos))
        throw std::runtime_error("pattern CSV line " + std::to_string(number) + ": expected 4 columns");
      const std::size_t end = c < 3 ? comma : line.size();
      row[c] = detail::parse_number(std::string_view(line).substr(start, end - start), number);
      start = end + 1;
    }
    p.x.push_back(row[0]);
    p.theta1.push_back(row[1]);
    p.theta2.push_back(row[2]);
    p.theta3.push_back(row[3]);
  }
  if (p.x.empty()) throw std::runtime_error("pattern CSV has no data rows");
  if (period_mm) {
    p.period_mm = *period_mm;
  } else if (p.size() > 1) {
    p.period_mm = (p.x[1] - p.x[0]) * static_cast<double>(p.size());
  }
  return p;
}

inline void export_pattern(const PatternProfile& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_pattern_csv(p, out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline PatternProfile import_pattern(const std::string& path, std::optional<double> period_mm = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_pattern_csv(in, period_mm);
}

}  // namespace qlatt

#endif  // QLATT_METASURFACE_HPP
