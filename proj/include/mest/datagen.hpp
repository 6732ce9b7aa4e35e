#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mest/losses.hpp"
#include "mest/regularizers.hpp"
#include "mest/types.hpp"

namespace mest {

/// splitmix64 mix of a master seed with stream indices; used to give every
/// trial its own generator.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Row covariance of a Sigma-Gaussian design.
class Covariance {
 public:
  enum class Kind { Identity, Toeplitz, Explicit };

  static Covariance identity() { return Covariance(Kind::Identity); }
  /// Sigma_ij = rho^|i - j|, |rho| < 1.
  static Covariance toeplitz(double rho);
  static Covariance explicit_matrix(MatrixXd sigma);

  Kind kind() const { return kind_; }
  double rho() const { return rho_; }
  MatrixXd dense(Index p) const;
  /// "identity", "toeplitz:<rho>" or "explicit".
  std::string describe() const;
  /// Inverse of describe() for the first two forms.
  static Covariance parse(const std::string& text);

 private:
  explicit Covariance(Kind k) : kind_(k) {}
  Kind kind_;
  double rho_ = 0.0;
  MatrixXd explicit_;
};

/// n x p matrix whose rows are i.i.d. N(0, Sigma), built as Z L^T with
/// Sigma = L L^T. Throws std::invalid_argument when Sigma is not positive
/// definite.
MatrixXd sample_design(const Covariance& sigma, Index n, Index p, std::uint64_t seed);

/// Rescales every column to ||X_j||_2 / sqrt(n) = 1. Throws on a zero column.
MatrixXd column_normalize(const MatrixXd& X);

struct BlockNorms {
  /// ||X_G||_{alpha -> 2} / sqrt(n) per group
  std::vector<double> values;
  /// 0 where the value is only an upper bound
  std::vector<char> exact;
};

/// Operator norms ||X_G||_{alpha -> 2} / sqrt(n). alpha = 2 uses power
/// iteration on X_G^T X_G. alpha = inf maximises ||X_G s||_2 over sign vectors
/// exactly for |G| <= 20 and otherwise reports sqrt(|G|) ||X_G||_2, an upper
/// bound. Other alpha report the upper bound |G|^(1/2 - 1/alpha) ||X_G||_2.
BlockNorms block_operator_norms(const MatrixXd& X, const std::vector<std::vector<Index>>& groups,
                                double alpha);

/// Rescales each block so its (alpha -> 2) norm over sqrt(n) equals one (or is
/// at most one where only an upper bound is available).
MatrixXd block_normalize(const MatrixXd& X, const std::vector<std::vector<Index>>& groups,
                         double alpha);

/// Largest singular value by power iteration on A^T A.
double spectral_norm_power(const MatrixXd& A, int max_iters = 20000, double tol = 1e-15);

struct TargetSpec {
  enum class Kind { ExactSparse, LqBall, GroupSparse, LowRank };
  Kind kind = Kind::ExactSparse;
  Index sparsity = 0;
  double q = 0.0;
  double radius = 0.0;
  Index active_groups = 0;
  Index rank = 0;
  /// Entry magnitude for sparse and group-sparse targets (random signs).
  double magnitude = 1.0;

  static TargetSpec exact_sparse(Index s, double magnitude = 1.0);
  static TargetSpec lq_ball(double q, double radius);
  static TargetSpec group_sparse(Index s_g, double magnitude = 1.0);
  static TargetSpec low_rank(Index r);

  std::string describe() const;
};

/// theta* for the layout of `reg` (dimension, groups or matrix shape).
///
/// LqBall places c j^(-1/q), j = 1..p, on a random permutation with random
/// signs, c chosen so sum |theta_j|^q = R_q. q = 0 needs an integer R_q and
/// reduces to ExactSparse(R_q).
VectorXd make_target(const TargetSpec& spec, const RegularizerSpec& reg, std::uint64_t seed);

enum class NoiseKind { Gaussian, Rademacher };

/// Zero-mean noise with sub-Gaussian parameter sigma.
VectorXd sample_noise(NoiseKind kind, double sigma, Index n, std::uint64_t seed);

/// y = X theta* + w.
VectorXd synthesize_linear(const MatrixXd& X, const VectorXd& theta_star, const VectorXd& noise);

/// y_i ~ Bernoulli(logistic(<theta*, x_i>)).
VectorXd synthesize_logistic(const MatrixXd& X, const VectorXd& theta_star, std::uint64_t seed);

/// A synthetic problem with its provenance.
struct ProblemInstance {
  MatrixXd X;
  VectorXd y;
  VectorXd theta_star;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::LeastSquares;
  std::string covariance = "identity";
  std::string target = "";

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  DatasetD data() const { return {X, y}; }
};

enum class Normalization { None, Columns, Blocks };

/// Everything needed to draw a ProblemInstance from one seed.
struct InstanceRecipe {
  Index n = 0;
  Covariance covariance = Covariance::identity();
  TargetSpec target;
  NoiseKind noise = NoiseKind::Gaussian;
  double sigma = 1.0;
  LossKind loss = LossKind::LeastSquares;
  Normalization normalization = Normalization::Columns;
};

/// Design, target and response drawn from independent streams of `seed`.
/// Block normalization uses the groups and exponent of `reg`.
ProblemInstance generate_instance(const InstanceRecipe& recipe, const RegularizerSpec& reg,
                                  std::uint64_t seed);

}  // namespace mest
