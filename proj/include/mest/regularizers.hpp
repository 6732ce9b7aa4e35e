#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "mest/types.hpp"

namespace mest {

enum class RegularizerKind { L1, WeightedL1, Group, Nuclear };

inline const char* to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::L1: return "l1";
    case RegularizerKind::WeightedL1: return "weighted_l1";
    case RegularizerKind::Group: return "group";
    case RegularizerKind::Nuclear: return "nuclear";
  }
  return "unknown";
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Conjugate exponent a* with 1/a + 1/a* = 1, for a in [1, inf].
inline double dual_exponent(double a) {
  if (std::isinf(a)) return 1.0;
  if (a == 1.0) return kInfinity;
  return a / (a - 1.0);
}

/// l_q norm of a dense vector expression for any q in [1, inf].
template <typename Derived>
typename Derived::Scalar lq_norm(const Eigen::MatrixBase<Derived>& x, double q) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  if (x.size() == 0) return Scalar(0);
  if (std::isinf(q)) return x.cwiseAbs().maxCoeff();
  if (q == 1.0) return x.cwiseAbs().sum();
  if (q == 2.0) return x.norm();
  const Scalar scale = x.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return Scalar(0);
  Scalar acc(0);
  for (Index i = 0; i < x.size(); ++i) acc += pow(std::abs(x[i]) / scale, Scalar(q));
  return scale * pow(acc, Scalar(1.0 / q));
}

/// Which decomposable norm and its structural parameters.
///
/// Vectors in the Nuclear case are the column-major flattening of a
/// rows x cols matrix. Group indices are zero-based.
class RegularizerSpec {
 public:
  static RegularizerSpec l1(Index p) {
    if (p <= 0) throw std::invalid_argument("l1: dimension must be positive");
    RegularizerSpec r(RegularizerKind::L1, p);
    return r;
  }

  static RegularizerSpec weighted_l1(VectorXd weights) {
    if (weights.size() == 0) throw std::invalid_argument("weighted_l1: empty weights");
    for (Index j = 0; j < weights.size(); ++j) {
      if (!(weights[j] > 0.0) || !std::isfinite(weights[j]))
        throw std::invalid_argument("weighted_l1: weight " + std::to_string(j) +
                                    " is not strictly positive");
    }
    RegularizerSpec r(RegularizerKind::WeightedL1, weights.size());
    r.weights_ = std::move(weights);
    return r;
  }

  static RegularizerSpec group(Index p, std::vector<std::vector<Index>> groups,
                               std::vector<double> alphas) {
    if (groups.empty()) throw std::invalid_argument("group: no groups given");
    if (alphas.size() != groups.size())
      throw DimensionError("group: exponent list", static_cast<Index>(groups.size()),
                           static_cast<Index>(alphas.size()));
    std::vector<int> seen(static_cast<std::size_t>(p), 0);
    std::vector<Index> owner(static_cast<std::size_t>(p), -1);
    for (std::size_t t = 0; t < groups.size(); ++t) {
      if (groups[t].empty()) throw std::invalid_argument("group: empty group " + std::to_string(t));
      if (!(alphas[t] >= 2.0))
        throw std::invalid_argument("group: exponent must lie in [2, inf] for group " +
                                    std::to_string(t));
      for (Index j : groups[t]) {
        if (j < 0 || j >= p)
          throw std::invalid_argument("group: index " + std::to_string(j) + " out of range");
        if (seen[static_cast<std::size_t>(j)]++)
          throw std::invalid_argument("group: index " + std::to_string(j) +
                                      " appears in more than one group");
        owner[static_cast<std::size_t>(j)] = static_cast<Index>(t);
      }
    }
    for (Index j = 0; j < p; ++j) {
      if (!seen[static_cast<std::size_t>(j)])
        throw std::invalid_argument("group: index " + std::to_string(j) + " is not covered");
    }
    RegularizerSpec r(RegularizerKind::Group, p);
    r.groups_ = std::move(groups);
    r.alphas_ = std::move(alphas);
    r.owner_ = std::move(owner);
    return r;
  }

  static RegularizerSpec group(Index p, std::vector<std::vector<Index>> groups, double alpha) {
    std::vector<double> alphas(groups.size(), alpha);
    return group(p, std::move(groups), std::move(alphas));
  }

  /// num_groups consecutive blocks of group_size coordinates each.
  static RegularizerSpec equal_groups(Index num_groups, Index group_size, double alpha) {
    if (num_groups <= 0 || group_size <= 0)
      throw std::invalid_argument("equal_groups: sizes must be positive");
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(num_groups));
    for (Index t = 0; t < num_groups; ++t) {
      for (Index k = 0; k < group_size; ++k)
        groups[static_cast<std::size_t>(t)].push_back(t * group_size + k);
    }
    return group(num_groups * group_size, std::move(groups), alpha);
  }

  static RegularizerSpec nuclear(Index rows, Index cols) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("nuclear: shape must be positive");
    RegularizerSpec r(RegularizerKind::Nuclear, rows * cols);
    r.rows_ = rows;
    r.cols_ = cols;
    return r;
  }

  RegularizerKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  const VectorXd& weights() const { return weights_; }
  const std::vector<std::vector<Index>>& groups() const { return groups_; }
  Index num_groups() const { return static_cast<Index>(groups_.size()); }
  double alpha(Index t) const { return alphas_[static_cast<std::size_t>(t)]; }
  /// Group that owns coordinate j (Group kind only).
  Index group_of(Index j) const { return owner_[static_cast<std::size_t>(j)]; }
  Index max_group_size() const {
    std::size_t m = 0;
    for (const auto& g : groups_) m = std::max(m, g.size());
    return static_cast<Index>(m);
  }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

 private:
  RegularizerSpec(RegularizerKind kind, Index dim) : kind_(kind), dim_(dim) {}

  RegularizerKind kind_;
  Index dim_;
  VectorXd weights_;
  std::vector<std::vector<Index>> groups_;
  std::vector<double> alphas_;
  std::vector<Index> owner_;
  Index rows_ = 0;
  Index cols_ = 0;
};

namespace detail {

template <typename Derived>
Vec<typename Derived::Scalar> gather(const Eigen::MatrixBase<Derived>& v,
                                     const std::vector<Index>& idx) {
  Vec<typename Derived::Scalar> out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

template <typename Scalar>
Eigen::Map<const Mat<Scalar>> as_matrix(const Vec<Scalar>& v, Index rows, Index cols) {
  return Eigen::Map<const Mat<Scalar>>(v.data(), rows, cols);
}

template <typename Scalar>
Vec<Scalar> singular_values(const Vec<Scalar>& v, Index rows, Index cols) {
  const Mat<Scalar> m = as_matrix(v, rows, cols);
  Eigen::BDCSVD<Mat<Scalar>> svd(m);
  return svd.singularValues();
}

/// Euclidean projection onto the l1 ball of the given radius (sort based).
template <typename Scalar>
Vec<Scalar> project_l1_ball(const Vec<Scalar>& v, Scalar radius) {
  if (v.cwiseAbs().sum() <= radius) return v;
  if (radius <= Scalar(0)) return Vec<Scalar>::Zero(v.size());
  std::vector<Scalar> u(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<Scalar>());
  Scalar cumsum(0);
  Scalar theta(0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const Scalar candidate = (cumsum - radius) / Scalar(k + 1);
    if (u[k] - candidate > Scalar(0)) theta = candidate;
  }
  Vec<Scalar> w(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar mag = std::max(std::abs(v[i]) - theta, Scalar(0));
    w[i] = v[i] < Scalar(0) ? -mag : mag;
  }
  return w;
}

/// Euclidean projection onto the l_q ball, 1 < q < 2, by nested bisection on
/// the KKT multiplier. Each coordinate solves z + mu*q*z^(q-1) = |v_j|.
template <typename Scalar>
Vec<Scalar> project_lq_ball(const Vec<Scalar>& v, Scalar radius, double q) {
  using std::pow;
  if (lq_norm(v, q) <= radius) return v;
  if (radius <= Scalar(0)) return Vec<Scalar>::Zero(v.size());
  const Scalar qs(q);
  auto coordinate = [&](Scalar a, Scalar mu) {
    Scalar lo(0), hi = a;
    for (int it = 0; it < 200 && hi - lo > std::numeric_limits<Scalar>::epsilon() * a; ++it) {
      const Scalar z = Scalar(0.5) * (lo + hi);
      if (z + mu * qs * pow(z, qs - Scalar(1)) > a) hi = z; else lo = z;
    }
    return Scalar(0.5) * (lo + hi);
  };
  auto mass = [&](Scalar mu) {
    Scalar s(0);
    for (Index i = 0; i < v.size(); ++i) s += pow(coordinate(std::abs(v[i]), mu), qs);
    return s;
  };
  const Scalar target = pow(radius, qs);
  Scalar mu_lo(0), mu_hi(1);
  while (mass(mu_hi) > target) mu_hi *= Scalar(2);
  for (int it = 0; it < 200 && mu_hi - mu_lo > std::numeric_limits<Scalar>::epsilon() * mu_hi; ++it) {
    const Scalar mid = Scalar(0.5) * (mu_lo + mu_hi);
    if (mass(mid) > target) mu_lo = mid; else mu_hi = mid;
  }
  Vec<Scalar> w(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar z = coordinate(std::abs(v[i]), mu_hi);
    w[i] = v[i] < Scalar(0) ? -z : z;
  }
  return w;
}

/// prox of t*||.||_alpha on one block: v - P_{B_{alpha*}(t)}(v).
template <typename Scalar>
Vec<Scalar> prox_block(const Vec<Scalar>& v, Scalar t, double alpha) {
  if (alpha == 2.0) {
    const Scalar nrm = v.norm();
    if (nrm <= t) return Vec<Scalar>::Zero(v.size());
    return (Scalar(1) - t / nrm) * v;
  }
  if (std::isinf(alpha)) return v - project_l1_ball<Scalar>(v, t);
  return v - project_lq_ball<Scalar>(v, t, dual_exponent(alpha));
}

}  // namespace detail

/// R(theta).
template <typename Derived>
typename Derived::Scalar eval_norm(const RegularizerSpec& reg,
                                   const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  require_dim("eval_norm", reg.dim(), theta.size());
  switch (reg.kind()) {
    case RegularizerKind::L1:
      return theta.cwiseAbs().sum();
    case RegularizerKind::WeightedL1:
      return theta.cwiseAbs().dot(reg.weights().template cast<Scalar>());
    case RegularizerKind::Group: {
      const Vec<Scalar> x = theta;
      Scalar total(0);
      for (Index t = 0; t < reg.num_groups(); ++t)
        total += lq_norm(detail::gather(x, reg.groups()[static_cast<std::size_t>(t)]),
                         reg.alpha(t));
      return total;
    }
    case RegularizerKind::Nuclear: {
      const Vec<Scalar> v = theta;
      return detail::singular_values<Scalar>(v, reg.rows(), reg.cols()).sum();
    }
  }
  return Scalar(0);
}

/// R*(v) = sup { <u, v> : R(u) <= 1 }.
template <typename Derived>
typename Derived::Scalar dual_norm(const RegularizerSpec& reg,
                                   const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  require_dim("dual_norm", reg.dim(), v.size());
  switch (reg.kind()) {
    case RegularizerKind::L1:
      return v.size() == 0 ? Scalar(0) : v.cwiseAbs().maxCoeff();
    case RegularizerKind::WeightedL1:
      return v.cwiseAbs().cwiseQuotient(reg.weights().template cast<Scalar>()).maxCoeff();
    case RegularizerKind::Group: {
      const Vec<Scalar> x = v;
      Scalar best(0);
      for (Index t = 0; t < reg.num_groups(); ++t) {
        best = std::max(best, lq_norm(detail::gather(x, reg.groups()[static_cast<std::size_t>(t)]),
                                      dual_exponent(reg.alpha(t))));
      }
      return best;
    }
    case RegularizerKind::Nuclear: {
      const Vec<Scalar> w = v;
      return detail::singular_values<Scalar>(w, reg.rows(), reg.cols()).maxCoeff();
    }
  }
  return Scalar(0);
}

/// argmin_x 1/2 ||x - v||^2 + t R(x).
template <typename Derived>
Vec<typename Derived::Scalar> prox(const RegularizerSpec& reg,
                                   const Eigen::MatrixBase<Derived>& v,
                                   typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  require_dim("prox", reg.dim(), v.size());
  if (!(t >= Scalar(0))) throw std::invalid_argument("prox: step t must be nonnegative");
  Vec<Scalar> out = v;
  if (t == Scalar(0)) return out;
  switch (reg.kind()) {
    case RegularizerKind::L1:
    case RegularizerKind::WeightedL1: {
      for (Index j = 0; j < out.size(); ++j) {
        const Scalar thr =
            reg.kind() == RegularizerKind::L1 ? t : t * Scalar(reg.weights()[j]);
        const Scalar mag = std::max(std::abs(out[j]) - thr, Scalar(0));
        out[j] = out[j] < Scalar(0) ? -mag : mag;
      }
      return out;
    }
    case RegularizerKind::Group: {
      for (Index g = 0; g < reg.num_groups(); ++g) {
        const auto& idx = reg.groups()[static_cast<std::size_t>(g)];
        const Vec<Scalar> block = detail::gather(out, idx);
        const Vec<Scalar> shrunk = detail::prox_block<Scalar>(block, t, reg.alpha(g));
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = shrunk[static_cast<Index>(k)];
      }
      return out;
    }
    case RegularizerKind::Nuclear: {
      const Mat<Scalar> m = detail::as_matrix<Scalar>(out, reg.rows(), reg.cols());
      Eigen::BDCSVD<Mat<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Vec<Scalar> s = svd.singularValues();
      // numerical rank floor
      for (Index i = 0; i < s.size(); ++i) {
        s[i] = std::max(s[i] - t, Scalar(0));
        if (s[i] < Scalar(1e-12)) s[i] = Scalar(0);
      }
      const Mat<Scalar> r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
      return Eigen::Map<const Vec<Scalar>>(r.data(), r.size());
    }
  }
  return out;
}

}  // namespace mest
