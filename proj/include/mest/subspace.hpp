#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mest/regularizers.hpp"

namespace mest {

/// Coordinates of the model subspace M(S) for (weighted) l1.
struct SupportSet {
  std::vector<Index> indices;
};

/// Active group indices S_G for group norms.
struct ActiveGroups {
  std::vector<Index> groups;
};

/// Orthonormal bases of the column space U (rows x r) and row space V (cols x r).
struct RowColumnSpaces {
  MatrixXd U;
  MatrixXd V;
};

using SubspaceStructure = std::variant<SupportSet, ActiveGroups, RowColumnSpaces>;

/// Model subspace M, its enclosing M-bar and the perturbation subspace M-bar-perp.
///
/// For coordinate structures M-bar = M and every projector zeroes
/// coordinates. For the nuclear norm
///   Pi_M(T)        = P_U T P_V
///   Pi_Mbarperp(T) = (I - P_U) T (I - P_V)
/// and the remaining projectors are the complements.
class SubspacePair {
 public:
  RegularizerKind kind() const { return kind_; }
  Index dim() const { return dim_; }

  /// true where coordinate j lies in M (coordinate structures only).
  const std::vector<char>& model_mask() const { return mask_; }
  const MatrixXd& column_projector() const { return pu_; }
  const MatrixXd& row_projector() const { return pv_; }
  Index column_rank() const { return rank_u_; }
  Index row_rank() const { return rank_v_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  template <typename Derived>
  Vec<typename Derived::Scalar> project_model(const Eigen::MatrixBase<Derived>& v) const {
    using Scalar = typename Derived::Scalar;
    require_dim("project_model", dim_, v.size());
    if (kind_ != RegularizerKind::Nuclear) return masked(v, true);
    const Vec<Scalar> x = v;
    const Mat<Scalar> m = pu_.cast<Scalar>() * detail::as_matrix<Scalar>(x, rows_, cols_) *
                          pv_.cast<Scalar>();
    return Eigen::Map<const Vec<Scalar>>(m.data(), m.size());
  }

  template <typename Derived>
  Vec<typename Derived::Scalar> project_model_perp(const Eigen::MatrixBase<Derived>& v) const {
    return v - project_model(v);
  }

  template <typename Derived>
  Vec<typename Derived::Scalar> project_perturbation(const Eigen::MatrixBase<Derived>& v) const {
    using Scalar = typename Derived::Scalar;
    require_dim("project_perturbation", dim_, v.size());
    if (kind_ != RegularizerKind::Nuclear) return masked(v, false);
    const Vec<Scalar> x = v;
    const Mat<Scalar> iu = Mat<Scalar>::Identity(rows_, rows_) - pu_.cast<Scalar>();
    const Mat<Scalar> iv = Mat<Scalar>::Identity(cols_, cols_) - pv_.cast<Scalar>();
    const Mat<Scalar> m = iu * detail::as_matrix<Scalar>(x, rows_, cols_) * iv;
    return Eigen::Map<const Vec<Scalar>>(m.data(), m.size());
  }

  template <typename Derived>
  Vec<typename Derived::Scalar> project_enclosing(const Eigen::MatrixBase<Derived>& v) const {
    return v - project_perturbation(v);
  }

  friend SubspacePair make_subspace_pair(const RegularizerSpec& reg,
                                         const SubspaceStructure& structure);

 private:
  template <typename Derived>
  Vec<typename Derived::Scalar> masked(const Eigen::MatrixBase<Derived>& v, bool keep_model) const {
    Vec<typename Derived::Scalar> out = v;
    for (Index j = 0; j < dim_; ++j) {
      if ((mask_[static_cast<std::size_t>(j)] != 0) != keep_model) out[j] = 0;
    }
    return out;
  }

  RegularizerKind kind_ = RegularizerKind::L1;
  Index dim_ = 0;
  std::vector<char> mask_;
  MatrixXd pu_;
  MatrixXd pv_;
  Index rank_u_ = 0;
  Index rank_v_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
};

namespace detail {

inline void require_orthonormal(const MatrixXd& B, Index rows, const char* name) {
  if (B.rows() != rows) throw DimensionError(std::string("make_subspace_pair: ") + name, rows, B.rows());
  if (B.cols() == 0) return;
  const double err =
      (B.transpose() * B - MatrixXd::Identity(B.cols(), B.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-8)
    throw std::invalid_argument(std::string("make_subspace_pair: basis ") + name +
                                " is not orthonormal (deviation " + std::to_string(err) + ")");
}

}  // namespace detail

inline SubspacePair make_subspace_pair(const RegularizerSpec& reg,
                                       const SubspaceStructure& structure) {
  SubspacePair pair;
  pair.kind_ = reg.kind();
  pair.dim_ = reg.dim();
  switch (reg.kind()) {
    case RegularizerKind::L1:
    case RegularizerKind::WeightedL1: {
      const auto* s = std::get_if<SupportSet>(&structure);
      if (!s) throw std::invalid_argument("make_subspace_pair: l1 norms take a support set");
      pair.mask_.assign(static_cast<std::size_t>(reg.dim()), 0);
      for (Index j : s->indices) {
        if (j < 0 || j >= reg.dim())
          throw std::invalid_argument("make_subspace_pair: support index " + std::to_string(j) +
                                      " out of range");
        pair.mask_[static_cast<std::size_t>(j)] = 1;
      }
      break;
    }
    case RegularizerKind::Group: {
      const auto* s = std::get_if<ActiveGroups>(&structure);
      if (!s) throw std::invalid_argument("make_subspace_pair: group norms take a group set");
      pair.mask_.assign(static_cast<std::size_t>(reg.dim()), 0);
      for (Index t : s->groups) {
        if (t < 0 || t >= reg.num_groups())
          throw std::invalid_argument("make_subspace_pair: group index " + std::to_string(t) +
                                      " out of range");
        for (Index j : reg.groups()[static_cast<std::size_t>(t)])
          pair.mask_[static_cast<std::size_t>(j)] = 1;
      }
      break;
    }
    case RegularizerKind::Nuclear: {
      const auto* s = std::get_if<RowColumnSpaces>(&structure);
      if (!s) throw std::invalid_argument("make_subspace_pair: nuclear norm takes (U, V) bases");
      detail::require_orthonormal(s->U, reg.rows(), "U");
      detail::require_orthonormal(s->V, reg.cols(), "V");
      pair.rows_ = reg.rows();
      pair.cols_ = reg.cols();
      pair.pu_ = s->U * s->U.transpose();
      pair.pv_ = s->V * s->V.transpose();
      pair.rank_u_ = s->U.cols();
      pair.rank_v_ = s->V.cols();
      break;
    }
  }
  return pair;
}

/// |R(theta + gamma) - R(theta) - R(gamma)| after projecting theta onto M and
/// gamma onto M-bar-perp.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar check_decomposability(const RegularizerSpec& reg,
                                                const SubspacePair& pair,
                                                const Eigen::MatrixBase<DerivedA>& theta,
                                                const Eigen::MatrixBase<DerivedB>& gamma) {
  using Scalar = typename DerivedA::Scalar;
  const Vec<Scalar> a = pair.project_model(theta);
  const Vec<Scalar> b = pair.project_perturbation(gamma);
  const Vec<Scalar> sum = a + b;
  return std::abs(eval_norm(reg, sum) - eval_norm(reg, a) - eval_norm(reg, b));
}

enum class CompatibilityMethod { Auto, MonteCarlo };

struct CompatibilityResult {
  double value = 0.0;
  /// false: value is a Monte Carlo lower bound on the supremum.
  bool analytic = false;
  Index mc_samples = 0;
};

/// Psi(M-bar) = sup over nonzero u in M-bar of R(u) / ||u||_2.
inline CompatibilityResult compatibility_constant(
    const RegularizerSpec& reg, const SubspacePair& pair,
    CompatibilityMethod method = CompatibilityMethod::Auto, Index samples = 10000,
    std::uint64_t seed = 0x5eed) {
  require_dim("compatibility_constant", reg.dim(), pair.dim());
  CompatibilityResult result;
  Index enclosing_dim = 0;
  if (reg.kind() == RegularizerKind::Nuclear) {
    const Index r = pair.rows(), c = pair.cols();
    const Index ru = pair.column_rank(), rv = pair.row_rank();
    enclosing_dim = r * c - (r - ru) * (c - rv);
  } else {
    enclosing_dim = std::count(pair.model_mask().begin(), pair.model_mask().end(), char{1});
  }
  if (enclosing_dim == 0)
    throw std::invalid_argument("compatibility_constant: enclosing subspace is {0}");

  if (method == CompatibilityMethod::Auto) {
    result.analytic = true;
    switch (reg.kind()) {
      case RegularizerKind::L1:
        result.value = std::sqrt(static_cast<double>(enclosing_dim));
        return result;
      case RegularizerKind::WeightedL1: {
        double acc = 0.0;
        for (Index j = 0; j < reg.dim(); ++j)
          if (pair.model_mask()[static_cast<std::size_t>(j)]) acc += reg.weights()[j] * reg.weights()[j];
        result.value = std::sqrt(acc);
        return result;
      }
      case RegularizerKind::Group: {
        Index active = 0;
        for (Index t = 0; t < reg.num_groups(); ++t) {
          const Index first = reg.groups()[static_cast<std::size_t>(t)].front();
          if (pair.model_mask()[static_cast<std::size_t>(first)]) ++active;
        }
        result.value = std::sqrt(static_cast<double>(active));
        return result;
      }
      case RegularizerKind::Nuclear: {
        // Elements of M-bar have rank at most ru + rv and the bound is attained
        // by a partial isometry.
        const Index k = std::min({pair.rows(), pair.cols(), pair.column_rank() + pair.row_rank()});
        result.value = std::sqrt(static_cast<double>(k));
        return result;
      }
    }
  }

  if (samples <= 0) throw std::invalid_argument("compatibility_constant: samples must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd g(reg.dim());
  double best = 0.0;
  for (Index k = 0; k < samples; ++k) {
    for (Index j = 0; j < g.size(); ++j) g[j] = normal(rng);
    const VectorXd u = pair.project_enclosing(g);
    const double nrm = u.norm();
    if (nrm > 0.0) best = std::max(best, eval_norm(reg, u) / nrm);
  }
  result.value = best;
  result.analytic = false;
  result.mc_samples = samples;
  return result;
}

}  // namespace mest
