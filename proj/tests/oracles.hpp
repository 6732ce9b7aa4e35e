#pragma once

// Independent reference computations for the tests. They use only eval_norm
// (never dual_norm or prox) so they check those operations from outside.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "mest/regularizers.hpp"

namespace oracle {

using mest::Index;
using mest::RegularizerKind;
using mest::RegularizerSpec;
using mest::VectorXd;

/// sup over sampled u of <u, v> / R(u). Mixes unstructured Gaussian
/// directions, directions supported on one coordinate or one group, sign
/// patterns inside one group, rank-one matrices, and local perturbations of
/// the incumbent.
inline double brute_force_dual(const RegularizerSpec& reg, const VectorXd& v, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> coin(0, 1);
  const Index p = reg.dim();
  VectorXd best_u = VectorXd::Zero(p);
  double best = 0.0;
  auto consider = [&](const VectorXd& u) {
    const double r = mest::eval_norm(reg, u);
    if (r <= 0.0) return;
    const double val = u.dot(v) / r;
    if (val > best) {
      best = val;
      best_u = u;
    }
  };
  const int global = samples / 2;
  VectorXd u(p);
  for (int k = 0; k < global; ++k) {
    u.setZero();
    switch (k % 4) {
      case 0:
        for (Index j = 0; j < p; ++j) u[j] = normal(rng);
        break;
      case 1: {
        const Index j = std::uniform_int_distribution<Index>(0, p - 1)(rng);
        u[j] = coin(rng) ? 1.0 : -1.0;
        break;
      }
      case 2:
        if (reg.kind() == RegularizerKind::Group) {
          const auto& g = reg.groups()[std::uniform_int_distribution<std::size_t>(0, reg.groups().size() - 1)(rng)];
          const bool signs = coin(rng);
          for (Index j : g) u[j] = signs ? (coin(rng) ? 1.0 : -1.0) : normal(rng);
        } else {
          for (Index j = 0; j < p; ++j) u[j] = coin(rng) ? 1.0 : -1.0;
        }
        break;
      case 3:
        if (reg.kind() == RegularizerKind::Nuclear) {
          VectorXd a(reg.rows()), b(reg.cols());
          for (Index i = 0; i < a.size(); ++i) a[i] = normal(rng);
          for (Index i = 0; i < b.size(); ++i) b[i] = normal(rng);
          const mest::MatrixXd m = a * b.transpose();
          u = Eigen::Map<const VectorXd>(m.data(), m.size());
        } else {
          for (Index j = 0; j < p; ++j) u[j] = normal(rng) * (coin(rng) ? 1.0 : 0.0);
        }
        break;
    }
    consider(u);
  }
  // shrinking random search around the incumbent
  double scale = 0.5;
  for (int k = global; k < samples; ++k) {
    const double nrm = best_u.norm();
    if (nrm == 0.0) break;
    for (Index j = 0; j < p; ++j) u[j] = best_u[j] / nrm + scale * normal(rng);
    consider(u);
    if ((k - global) % 1000 == 999) scale *= 0.6;
  }
  return best;
}

struct GridResult {
  VectorXd x;
  double value = 0.0;
};

/// argmin 0.5 ||x - v||^2 + t R(x) by nested grid search (11 points per axis,
/// box shrunk by 0.6 around the incumbent each round). Practical for p <= 4.
inline GridResult grid_prox(const RegularizerSpec& reg, const VectorXd& v, double t, int rounds = 60) {
  const Index p = v.size();
  auto f = [&](const VectorXd& x) { return 0.5 * (x - v).squaredNorm() + t * mest::eval_norm(reg, x); };
  // the minimiser satisfies ||x - v||^2 <= 2 t R(v)
  double half = std::sqrt(2.0 * t * mest::eval_norm(reg, v)) + 1e-9;
  VectorXd center = v;
  GridResult best{v, f(v)};
  const int pts = 11;
  std::vector<int> idx(static_cast<std::size_t>(p));
  VectorXd x(p);
  for (int r = 0; r < rounds; ++r) {
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      for (Index j = 0; j < p; ++j)
        x[j] = center[j] - half + 2.0 * half * idx[static_cast<std::size_t>(j)] / (pts - 1);
      const double val = f(x);
      if (val < best.value) best = {x, val};
      Index j = 0;
      while (j < p && ++idx[static_cast<std::size_t>(j)] == pts) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == p) break;
    }
    // the minimiser usually sits on a kink of R, which a grid never hits:
    // also try zeroing coordinates, whole groups, or trailing singular values
    auto consider = [&](const VectorXd& y) {
      const double val = f(y);
      if (val < best.value) best = {y, val};
    };
    if (reg.kind() == RegularizerKind::Nuclear) {
      const Eigen::Map<const mest::MatrixXd> m(best.x.data(), reg.rows(), reg.cols());
      Eigen::JacobiSVD<mest::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      for (Index k = 0; k < svd.singularValues().size(); ++k) {
        VectorXd sv = svd.singularValues();
        sv.tail(sv.size() - k).setZero();
        const mest::MatrixXd y = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
        consider(Eigen::Map<const VectorXd>(y.data(), y.size()));
      }
      // grid over rank-one factors a b^T around the leading singular pair,
      // which lands on the rank-one kink the full grid misses
      const Index rows = reg.rows(), cols = reg.cols();
      if (rows + cols <= 5) {
        const double s0 = std::sqrt(std::max(svd.singularValues()[0], 1e-12));
        VectorXd fc(rows + cols);
        fc << s0 * svd.matrixU().col(0), s0 * svd.matrixV().col(0);
        const double fh = half / std::max(s0, 1e-3) + 1e-9;
        std::vector<int> fi(static_cast<std::size_t>(rows + cols), 0);
        VectorXd f(rows + cols);
        for (;;) {
          for (Index j = 0; j < rows + cols; ++j) f[j] = fc[j] - fh + 2.0 * fh * fi[static_cast<std::size_t>(j)] / (pts - 1);
          const mest::MatrixXd y = f.head(rows) * f.tail(cols).transpose();
          consider(Eigen::Map<const VectorXd>(y.data(), y.size()));
          Index j = 0;
          while (j < rows + cols && ++fi[static_cast<std::size_t>(j)] == pts) fi[static_cast<std::size_t>(j++)] = 0;
          if (j == rows + cols) break;
        }
      }
    } else {
      for (Index j = 0; j < p; ++j) {
        VectorXd y = best.x;
        y[j] = 0.0;
        consider(y);
      }
      if (reg.kind() == RegularizerKind::Group) {
        for (const auto& g : reg.groups()) {
          VectorXd y = best.x;
          for (Index j : g) y[j] = 0.0;
          consider(y);
        }
      }
    }
    center = best.x;
    half *= 0.6;
  }
  return best;
}

/// max(R*(v - x) - t, 0) + |<v - x, x> - t R(x)|: zero exactly when
/// (v - x) / t is a subgradient of R at x.
inline double subgradient_residual(const RegularizerSpec& reg, const VectorXd& v, const VectorXd& x, double t) {
  const VectorXd g = v - x;
  return std::max(mest::dual_norm(reg, g) - t, 0.0) + std::abs(g.dot(x) - t * mest::eval_norm(reg, x));
}

}  // namespace oracle
