#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mest/losses.hpp"
#include "mest/regularizers.hpp"

namespace mest {

struct SolverConfig {
  int max_iters = 5000;
  /// Relative objective change that counts as a plateau.
  double tol = 1e-9;
  double initial_step = 1.0;
  /// Step shrink factor for backtracking, in (0, 1).
  double backtrack = 0.5;
  bool accelerate = true;
  /// Fixed-point residual bound, relative to 1 + ||theta||.
  double residual_tol = 1e-6;

  void validate() const {
    if (max_iters <= 0) throw std::invalid_argument("SolverConfig: max_iters must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
    if (!(initial_step > 0.0)) throw std::invalid_argument("SolverConfig: initial_step must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0))
      throw std::invalid_argument("SolverConfig: backtrack must lie in (0, 1)");
    if (!(residual_tol > 0.0)) throw std::invalid_argument("SolverConfig: residual_tol must be positive");
  }
};

template <typename Scalar>
struct SolverResult {
  Vec<Scalar> theta;
  /// theta - theta* when the truth was supplied.
  std::optional<Vec<Scalar>> error;
  /// Objective at theta_0 = 0 followed by one entry per iteration.
  std::vector<Scalar> objective_trace;
  bool converged = false;
  int iterations = 0;
  Scalar step = Scalar(0);
  Scalar fixed_point_residual = Scalar(0);
};

/// L(theta) + lambda R(theta).
template <typename Scalar, typename Derived>
Scalar objective(const LossModel& loss, const RegularizerSpec& reg, const Dataset<Scalar>& data,
                 Scalar lambda, const Eigen::MatrixBase<Derived>& theta) {
  return loss_value(loss, theta, data) + lambda * eval_norm(reg, theta);
}

/// ||theta - prox(theta - step grad L(theta), step lambda)||.
template <typename Scalar>
Scalar fixed_point_residual(const LossModel& loss, const RegularizerSpec& reg,
                            const Dataset<Scalar>& data, Scalar lambda, const Vec<Scalar>& theta,
                            Scalar step) {
  const Vec<Scalar> g = loss_gradient(loss, theta, data);
  const Vec<Scalar> v = theta - step * g;
  return (theta - prox(reg, v, step * lambda)).norm();
}

/// Minimises L(theta) + lambda R(theta) from theta_0 = 0 by monotone
/// accelerated proximal gradient with backtracking on the quadratic upper
/// bound. Non-convergence is reported in the result, never thrown.
template <typename Scalar>
SolverResult<Scalar> solve(const LossModel& loss, const RegularizerSpec& reg,
                           const Dataset<Scalar>& data, Scalar lambda,
                           const SolverConfig& cfg = {},
                           const std::optional<Vec<Scalar>>& theta_star = std::nullopt) {
  cfg.validate();
  if (!(lambda > Scalar(0))) throw std::invalid_argument("solve: lambda must be positive");
  require_dim("solve: response length", data.X.rows(), data.y.size());
  require_dim("solve: regularizer dimension", data.X.cols(), reg.dim());
  if (theta_star) require_dim("solve: theta* length", reg.dim(), theta_star->size());

  using std::sqrt;
  const Index p = data.p();
  SolverResult<Scalar> res;
  Vec<Scalar> x = Vec<Scalar>::Zero(p);
  Vec<Scalar> y = x;
  Scalar fx = loss_value(loss, x, data);
  Scalar Fx = fx + lambda * eval_norm(reg, x);
  res.objective_trace.push_back(Fx);
  Scalar step = Scalar(cfg.initial_step);
  Scalar t = Scalar(1);
  const Scalar beta = Scalar(cfg.backtrack);
  const Scalar min_step = Scalar(1e-30);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Scalar fy = loss_value(loss, y, data);
    const Vec<Scalar> gy = loss_gradient(loss, y, data);
    Vec<Scalar> z;
    Scalar fz;
    for (;;) {
      z = prox(reg, (y - step * gy).eval(), step * lambda);
      const Vec<Scalar> d = z - y;
      fz = loss_value(loss, z, data);
      const Scalar model = fy + gy.dot(d) + d.squaredNorm() / (Scalar(2) * step);
      if (fz <= model + Scalar(1e-12) * (Scalar(1) + std::abs(fy)) || step < min_step) break;
      step *= beta;
    }
    const Scalar Fz = fz + lambda * eval_norm(reg, z);

    Vec<Scalar> x_next = x;
    Scalar F_next = Fx;
    // ties within rounding still move, so the iterate can keep refining
    // once objective differences fall below machine precision
    const Scalar slack = Scalar(4) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(Fx));
    if (Fz <= Fx + slack) {
      x_next = z;
      F_next = Fz;
    }
    if (cfg.accelerate) {
      const Scalar t_next = (Scalar(1) + sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
      y = x_next + (t / t_next) * (z - x_next) + ((t - Scalar(1)) / t_next) * (x_next - x);
      t = t_next;
    } else {
      y = x_next;
    }
    const Scalar change = std::abs(Fx - F_next) / std::max(Scalar(1), std::abs(F_next));
    x = std::move(x_next);
    Fx = F_next;
    res.objective_trace.push_back(Fx);
    res.iterations = k;

    if (change <= Scalar(cfg.tol)) {
      const Scalar r = fixed_point_residual(loss, reg, data, lambda, x, step);
      if (r <= Scalar(cfg.residual_tol) * (Scalar(1) + x.norm())) {
        res.converged = true;
        res.fixed_point_residual = r;
        break;
      }
      // restart momentum when stalled away from a fixed point
      y = x;
      t = Scalar(1);
    }
    if (step < min_step) break;
  }
  if (!res.converged) res.fixed_point_residual = fixed_point_residual(loss, reg, data, lambda, x, step);
  res.step = step;
  res.theta = std::move(x);
  if (theta_star) res.error = res.theta - *theta_star;
  return res;
}

}  // namespace mest
