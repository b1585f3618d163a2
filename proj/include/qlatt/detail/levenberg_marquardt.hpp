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

#ifndef QLATT_DETAIL_LEVENBERG_MARQUARDT_HPP
#define QLATT_DETAIL_LEVENBERG_MARQUARDT_HPP

#include <Eigen/Dense>

#include <algorithm>

namespace qlatt::detail {

struct LmOptions {
  int max_iterations = 50;
  /// Stop once ||r||^2 falls below this.
  double cost_floor = 1e-30;
  /// Stop once ||J^T r||_inf falls below this.
  double gradient_tolerance = 1e-22;
  double initial_damping = 1e-3;
  double max_damping = 1e12;
};

struct LmResult {
  double cost = 0.0;
  int iterations = 0;
};

/// Minimizes ||r(x)||^2 in place. `residual(x)` returns r, `jacobian(x)`
/// returns dr/dx. Steps solve (J^T J + lambda I) dx = -J^T r; a step is only
/// accepted if it lowers the cost, so the result never gets worse than the start.
template <class ResidualFn, class JacobianFn>
LmResult levenberg_marquardt(Eigen::VectorXd& x, ResidualFn&& residual, JacobianFn&& jacobian,
                             const LmOptions& opts = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd r = residual(x);
  double cost = r.squaredNorm();
  double lambda = opts.initial_damping;
  Eigen::MatrixXd normal(n, n);
  LmResult out;
  for (; out.iterations < opts.max_iterations; ++out.iterations) {
    if (cost < opts.cost_floor) break;
    const Eigen::MatrixXd jac = jacobian(x);
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) break;
    normal.setZero();
    normal.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += lambda;
      const Eigen::VectorXd step = -damped.selfadjointView<Eigen::Lower>().ldlt().solve(grad);
      Eigen::VectorXd trial = x + step;
      Eigen::VectorXd trial_r = residual(trial);
      const double trial_cost = trial_r.squaredNorm();
      if (trial_cost < cost) {
        x.swap(trial);
        r.swap(trial_r);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 4.0;
        if (lambda > opts.max_damping) {
          out.cost = cost;
          return out;
        }
      }
    }
  }
  out.cost = cost;
  return out;
}

}  // namespace qlatt::detail

#endif  // QLATT_DETAIL_LEVENBERG_MARQUARDT_HPP
