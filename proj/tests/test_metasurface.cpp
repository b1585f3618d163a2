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

#include "qlatt/design.hpp"
#include "qlatt/metasurface.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

namespace qlatt {
namespace {

using testing::Gen;

UnitaryField field_from(const std::function<Eigen::Vector4d(double)>& u, int grid_q = 125) {
  UnitaryField f;
  f.grid = quasi_momentum_grid(grid_q);
  for (double q : f.grid) {
    const Eigen::Vector4d v = u(q);
    f.values.push_back(v / v.norm());
  }
  return f;
}

// Stack product written from scratch: W(d, t) = [[cos d/2, i sin d/2 e^{-2it}], [i sin d/2 e^{2it}, cos d/2]].
Complex2x2 plate_oracle(double delta, double theta) {
  const Complex I{0, 1};
  Complex2x2 m;
  m << std::cos(delta / 2), I * std::sin(delta / 2) * std::exp(-2.0 * I * theta), I * std::sin(delta / 2) * std::exp(2.0 * I * theta),
      std::cos(delta / 2);
  return m;
}

Complex2x2 stack_oracle(double t1, double t2, double t3) {
  return plate_oracle(kPi / 2, t3) * plate_oracle(kPi, t2) * plate_oracle(kPi / 2, t1);
}

const ChannelDesign& designed(ChannelKind kind, double p) {
  static std::map<std::pair<int, double>, ChannelDesign> cache;
  const auto key = std::make_pair(static_cast<int>(kind), p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, design_channel({kind, p, std::nullopt}, SolverConfig{})).first;
  return it->second;
}

TEST(AxisAngle, Examples) {
  const AxisAngleField a = axis_angle(field_from([](double) { return Eigen::Vector4d(0, 0, 0, 1); }));
  EXPECT_NEAR(a.chi[0], kPi, 1e-15);
  EXPECT_LT((a.axis[0] - Eigen::Vector3d(0, 0, 1)).norm(), 1e-15);

  const AxisAngleField id = axis_angle(field_from([](double) { return Eigen::Vector4d(1, 0, 0, 0); }));
  EXPECT_EQ(id.chi[7], 0.0);
  EXPECT_TRUE(id.degenerate[7]);
  EXPECT_LT((id.axis[7] - Eigen::Vector3d(1, 0, 0)).norm(), 1e-15);

  const AxisAngleField r =
      axis_angle(field_from([](double) { return Eigen::Vector4d(std::cos(kPi / 8), std::sin(kPi / 8), 0, 0); }));
  EXPECT_NEAR(r.chi[3], kPi / 4, 1e-15);
  EXPECT_LT((r.axis[3] - Eigen::Vector3d(1, 0, 0)).norm(), 1e-15);
}

TEST(AxisAngle, DegenerateSamplesBorrowNeighbourAxis) {
  // Identity at q = 0 only; the neighbours rotate about +s2.
  const AxisAngleField a = axis_angle(field_from([](double q) {
    const double h = 0.5 * std::sin(q / 2) * std::sin(q / 2);
    return Eigen::Vector4d(std::cos(h), 0, std::sin(h), 0);
  }));
  EXPECT_TRUE(a.degenerate[0]);
  EXPECT_LT((a.axis[0] - Eigen::Vector3d(0, 1, 0)).norm(), 1e-12);
  EXPECT_NEAR(a.x[1], 2.5 / 125, 1e-15);
}

TEST(Waveplate, Examples) {
  const Complex I{0, 1};
  EXPECT_LT((waveplate_matrix(PlateSpec::half_wave(), 0) - I * pauli(1)).norm(), 1e-15);
  EXPECT_LT((waveplate_matrix(PlateSpec::quarter_wave(), 0) - (pauli(0) + I * pauli(1)) / std::sqrt(2.0)).norm(), 1e-15);
  EXPECT_LT((waveplate_matrix(PlateSpec::half_wave(), kPi / 4) - I * pauli(2)).norm(), 1e-15);
}

TEST(WaveplateProperty, SU2AndPiPeriodic) {
  Gen g(41);
  for (int n = 0; n < 200; ++n) {
    const PlateSpec plate{g.uniform(0, 2 * kPi)};
    const double t = g.angle();
    const Complex2x2 w = waveplate_matrix(plate, t);
    EXPECT_TRUE(is_unitary(w));
    EXPECT_NEAR(std::abs(w.determinant() - 1.0), 0.0, 1e-15);
    EXPECT_LT((waveplate_matrix(plate, t + kPi) - w).norm(), 1e-14);
    EXPECT_LT((w - plate_oracle(plate.delta, t)).norm(), 1e-14);
  }
}

TEST(TripleProduct, Examples) {
  const PauliVector id = triple_product_coefficients(0, -kPi / 2, 0);
  EXPECT_NEAR(id[0].real(), 1, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(std::abs(id[i]), 0, 1e-15);
  EXPECT_LT((stack_oracle(0, -kPi / 2, 0) - Complex2x2::Identity()).norm(), 1e-15);

  const PauliVector minus = triple_product_coefficients(0, 0, 0);
  EXPECT_NEAR(minus[0].real(), -1, 1e-15);
  EXPECT_LT((stack_oracle(0, 0, 0) + Complex2x2::Identity()).norm(), 1e-15);
}

TEST(TripleProductProperty, MatchesMatrixProduct) {
  Gen g(42);
  for (int n = 0; n < 100; ++n) {
    const double t1 = g.angle(), t2 = g.angle(), t3 = g.angle();
    const Complex2x2 product = stack_oracle(t1, t2, t3);
    EXPECT_LT((pauli_compose(triple_product_coefficients(t1, t2, t3)) - product).norm(), 1e-13);
    EXPECT_LT((stack_matrix(t1, t2, t3) - product).norm(), 1e-13);
  }
}

TEST(BranchProperty, EveryCandidateIsExact) {
  Gen g(43);
  for (int n = 0; n < 500; ++n) {
    Eigen::Vector4d u = g.unit_quaternion();
    if (n % 10 == 0) u = Eigen::Vector4d(g.normal(), 0, 0, g.normal()).normalized();  // axis along s3
    const AxisAngleField a = axis_angle(field_from([&](double) { return u; }, 1));
    const SampleBranches b = branch_solutions(a.chi[0], a.axis[0]);
    for (const AngleTriple& t : b.candidates) {
      const Eigen::Vector3d th = thetas_from(t);
      EXPECT_LT((stack_matrix(th(0), th(1), th(2)) - su2_from_quaternion(u)).norm(), 1e-10);
    }
  }
}

TEST(ThetasFrom, InvertsAngleCombinations) {
  Gen g(44);
  for (int n = 0; n < 100; ++n) {
    const AngleTriple t{g.angle(), g.angle(), g.angle()};
    const Eigen::Vector3d th = thetas_from(t);
    EXPECT_NEAR(th(0) - th(2), t.alpha, 1e-14);
    EXPECT_NEAR(th(0) - 2 * th(1) + th(2), t.beta, 1e-14);
    EXPECT_NEAR(th(0) + th(2), t.gamma, 1e-14);
  }
}

TEST(SolveAngles, ConstantFields) {
  for (const Eigen::Vector4d& u : {Eigen::Vector4d(0, 0, 0, 1), Eigen::Vector4d(1, 0, 0, 0)}) {
    const UnitaryField f = field_from([&](double) { return u; });
    const PatternProfile p = design_pattern(f);
    EXPECT_LE(reconstruction_error(p, f), 1e-8);
    EXPECT_EQ(max_adjacent_jump(p), 0.0);
    EXPECT_EQ(closure_jump(p), 0.0);
  }
}

TEST(Stitch, AxisReversalNeedsSwitching) {
  // Rotation about +s1 whose angle changes sign: the axis reverses at q = 0 and pi.
  const UnitaryField f = field_from([](double q) {
    const double a = 0.3 * std::sin(q);
    return Eigen::Vector4d(std::cos(a), std::sin(a), 0, 0);
  });
  const AxisAngleField a = axis_angle(f);
  std::vector<SampleBranches> single;
  for (std::size_t j = 0; j < a.size(); ++j) {
    SampleBranches b = branch_solutions(a.chi[j], a.axis[j]);
    b.candidates.fill(b.candidates[0]);
    single.push_back(b);
  }
  EXPECT_THROW(stitch_branches(single, a.x), UnresolvableJump);

  const PatternProfile p = solve_angles(a);
  EXPECT_LE(reconstruction_error(p, f), 1e-8);
  EXPECT_LT(max_adjacent_jump(p), 0.1);
  EXPECT_LT(closure_jump(p), 0.1);
}

TEST(StitchProperty, IsolatedIdentityPointsReconstruct) {
  Gen g(45);
  for (int n = 0; n < 20; ++n) {
    const double amp = g.uniform(0.2, 1.0), tilt = g.uniform(0, kPi), phase = g.angle();
    const UnitaryField f = field_from([&](double q) {
      const double h = amp * std::sin(q);
      const Eigen::Vector3d axis(std::cos(tilt) * std::cos(phase + 0.2 * std::cos(q)),
                                 std::cos(tilt) * std::sin(phase + 0.2 * std::cos(q)), std::sin(tilt));
      Eigen::Vector4d u;
      u << std::cos(h), std::sin(h) * axis;
      return u;
    });
    const PatternProfile p = design_pattern(f);
    EXPECT_LE(reconstruction_error(p, f), 1e-8) << "case " << n;
  }
}

TEST(DesignedPatterns, ReconstructAndClose) {
  for (ChannelKind k : {ChannelKind::phase_flip, ChannelKind::depolarizing}) {
    const ChannelDesign& d = designed(k, k == ChannelKind::phase_flip ? 0.25 : 0.5);
    EXPECT_LE(d.reconstruction, 1e-8);
    EXPECT_LE(reconstruction_error(d.pattern, d.field), 1e-8);
    EXPECT_LE(closure_jump(d.pattern), kPi / 4);
    EXPECT_LE(max_adjacent_jump(d.pattern), kJumpThreshold);
    ASSERT_EQ(d.pattern.size(), 125u);
  }
}

TEST(Orientation, KeepsMomentsAndCosts) {
  Gen g(46);
  const GramMatrix m = gram_matrix(standard_channel(ChannelKind::depolarizing, 0.25));
  const DesignResult r = solve(m, SolverConfig{});
  const FourierSolution o = orient_for_waveplates(r.solution, m);
  EXPECT_LT((second_moments(o) - second_moments(r.solution)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(cost_f2(o, 125), cost_f2(r.solution, 125), 1e-12);
  EXPECT_LE(cost_f1(o, m), 1e-10);
  EXPECT_GE(waveplate_margin(o), waveplate_margin(r.solution));
  // Pointwise norms are preserved: the rotation acts on u1..u3 only.
  for (int k = 0; k < 10; ++k) {
    const double q = g.uniform(0, 2 * kPi);
    EXPECT_NEAR(o.evaluate(q).norm(), r.solution.evaluate(q).norm(), 1e-13);
    EXPECT_NEAR(o.evaluate(q)(0), r.solution.evaluate(q)(0), 1e-13);
  }
}

TEST(ReduceAngle, Range) {
  EXPECT_NEAR(reduce_angle(3 * kPi), kPi, 1e-14);
  EXPECT_NEAR(reduce_angle(-kPi), kPi, 1e-14);
  EXPECT_NEAR(reduce_angle(0.5), 0.5, 1e-15);
  Gen g(47);
  for (int n = 0; n < 200; ++n) {
    const double t = g.uniform(-50, 50);
    const double r = reduce_angle(t);
    EXPECT_GT(r, -kPi);
    EXPECT_LE(r, kPi);
    EXPECT_NEAR(std::remainder(r - t, 2 * kPi), 0.0, 1e-12);
  }
}

TEST(PatternCsv, IdentityProfile) {
  const PatternProfile p = design_pattern(field_from([](double) { return Eigen::Vector4d(1, 0, 0, 0); }));
  std::stringstream ss;
  write_pattern_csv(p, ss);
  std::string line;
  int lines = 0;
  std::getline(ss, line);
  EXPECT_EQ(line, "x_mm,theta1_rad,theta2_rad,theta3_rad");
  while (std::getline(ss, line)) ++lines;
  EXPECT_EQ(lines, 125);
  EXPECT_EQ(ss.str().find('\r'), std::string::npos);
}

TEST(PatternCsv, RoundTrip) {
  Gen g(48);
  PatternProfile p;
  for (int j = 0; j < 125; ++j) {
    p.x.push_back(2.5 * j / 125);
    p.theta1.push_back(g.uniform(-kPi, kPi));
    p.theta2.push_back(g.uniform(-kPi, kPi));
    p.theta3.push_back(kPi);
  }
  std::stringstream ss;
  write_pattern_csv(p, ss);
  const PatternProfile back = read_pattern_csv(ss);
  ASSERT_EQ(back.size(), p.size());
  EXPECT_NEAR(back.period_mm, 2.5, 1e-12);
  for (std::size_t j = 0; j < p.size(); ++j) {
    EXPECT_NEAR(back.x[j], p.x[j], 1e-12);
    EXPECT_NEAR(back.theta1[j], p.theta1[j], 1e-12);
    EXPECT_NEAR(back.theta2[j], p.theta2[j], 1e-12);
    EXPECT_NEAR(back.theta3[j], p.theta3[j], 1e-12);
  }
}

TEST(PatternCsv, ReducedAnglesKeepTheStack) {
  const ChannelDesign& d = designed(ChannelKind::depolarizing, 0.5);
  std::stringstream ss;
  write_pattern_csv(d.pattern, ss);
  const PatternProfile back = read_pattern_csv(ss);
  ASSERT_EQ(back.size(), 125u);
  for (std::size_t j = 0; j < back.size(); ++j) {
    EXPECT_GE(back.x[j], 0.0);
    EXPECT_LT(back.x[j], 2.5);
    if (j) {
      EXPECT_GT(back.x[j], back.x[j - 1]);
    }
    for (double t : {back.theta1[j], back.theta2[j], back.theta3[j]}) {
      EXPECT_GT(t, -kPi);
      EXPECT_LE(t, kPi);
    }
  }
  EXPECT_LE(reconstruction_error(back, d.field), 1e-8);
}

TEST(PatternCsv, RejectsMalformedInput) {
  std::stringstream bad_header("x,theta1,theta2,theta3\n0,0,0,0\n");
  EXPECT_THROW(read_pattern_csv(bad_header), std::runtime_error);
  std::stringstream short_row("x_mm,theta1_rad,theta2_rad,theta3_rad\n0,0,0\n");
  EXPECT_THROW(read_pattern_csv(short_row), std::runtime_error);
  std::stringstream junk("x_mm,theta1_rad,theta2_rad,theta3_rad\n0,0,abc,0\n");
  EXPECT_THROW(read_pattern_csv(junk), std::runtime_error);
  std::stringstream empty("x_mm,theta1_rad,theta2_rad,theta3_rad\n");
  EXPECT_THROW(read_pattern_csv(empty), std::runtime_error);
}

}  // namespace
}  // namespace qlatt
