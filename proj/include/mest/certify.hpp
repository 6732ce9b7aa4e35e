#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mest/losses.hpp"
#include "mest/regularizers.hpp"
#include "mest/subspace.hpp"
#include "mest/types.hpp"

namespace mest {

struct LambdaCertificate {
  /// 2 R*(grad L(theta*))
  double lambda = 0.0;
  double gradient_dual = 0.0;
  /// false when the gradient vanishes, so the rule gives the excluded lambda = 0.
  bool strictly_positive = false;
};

LambdaCertificate lambda_from_gradient(const LossModel& loss, const RegularizerSpec& reg,
                                       const DatasetD& data, const VectorXd& theta_star);

/// 4 sigma sqrt(log p / n).
double lambda_rule_lasso(double sigma, double n, double p);

/// 2 sigma (m^(1 - 1/alpha) / sqrt(n) + sqrt(log N_G / n)).
double lambda_rule_group(double sigma, double n, double m, double alpha, double num_groups);

struct ConeCheck {
  bool member = false;
  /// rhs - lhs; nonnegative exactly for members.
  double slack = 0.0;
  /// R(Pi_Mbarperp delta)
  double lhs = 0.0;
  /// 3 R(Pi_Mbar delta) + 4 R(Pi_Mperp theta*)
  double rhs = 0.0;
};

ConeCheck cone_membership(const VectorXd& delta, const RegularizerSpec& reg, const SubspacePair& pair,
                          const VectorXd& theta_star);

struct ReCurvePoint {
  double kappa2 = 0.0;
  double kappa1 = 0.0;
};

/// Two-term restricted eigenvalue fit
///   ||X delta||^2 / n >= kappa1 ||delta||^2 - kappa2 g R(delta)^2
/// over a finite probe set. A finite probe set gives a necessary condition
/// only; `probes` and `seed` make the fit reproducible.
struct ReCertificate {
  bool certified = false;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  /// log p / n for l1, rho_G^2 for group norms
  double g = 0.0;
  Index probes = 0;
  std::uint64_t seed = 0;
  /// Best kappa1 at every grid value of kappa2.
  std::vector<ReCurvePoint> curve;
};

/// 0 followed by 61 log-spaced points on [1e-3, 1e3].
std::vector<double> kappa2_grid();

/// Probe directions as columns: a third dense Gaussian, a third supported on
/// `sparsity` random coordinates (or groups), and a third cone-extremal with
/// R(delta_{S^c}) = 3 R(delta_S).
MatrixXd generate_re_probes(const RegularizerSpec& reg, Index count, Index sparsity, std::uint64_t seed);

/// Fits (kappa1, kappa2) on given probes. Picks the smallest grid kappa2 at
/// which kappa1 > 0 and the lower bound stays positive on some probe.
ReCertificate fit_re_constants(const MatrixXd& X, const MatrixXd& probes, const RegularizerSpec& reg,
                               double g);

/// Probes + fit. `reg` selects the penalty form (L1 or Group). Sparsity 0
/// picks max(1, p / 16) coordinates or max(1, N_G / 8) groups.
ReCertificate estimate_re_constants(const MatrixXd& X, const RegularizerSpec& reg, Index probes,
                                    std::uint64_t seed, Index sparsity = 0);

struct RhoEstimate {
  double value = 0.0;
  double std_error = 0.0;
  Index mc = 0;
};

/// E[max_t ||eps_{G_t}||_{alpha*}] / sqrt(n), eps ~ N(0, I_p), by Monte Carlo.
RhoEstimate rho_group(const RegularizerSpec& groups, Index n, Index mc, std::uint64_t seed);

struct RscCertificate {
  bool certified = false;
  double kappa_L = 0.0;
  double tau_sq = 0.0;
  /// theta* lies in M, so tau^2 was pinned to 0.
  bool tau_forced_zero = false;
  Index probes = 0;
  std::uint64_t seed = 0;
  /// Smallest dL / ||delta||^2 over the probes.
  double min_ratio = 0.0;
};

/// Fits dL(delta, theta*) >= kappa_L ||delta||^2 - tau^2 over probes drawn from
/// the cone set intersected with the unit ball. With theta* in M, tau^2 = 0 and
/// kappa_L is the smallest curvature ratio. Otherwise kappa_L is `kappa_target`
/// when given (half the median ratio when not) and tau^2 the smallest
/// tolerance that makes every probe satisfy the bound.
RscCertificate verify_rsc(const LossModel& loss, const RegularizerSpec& reg, const SubspacePair& pair,
                          const VectorXd& theta_star, const DatasetD& data, Index probes,
                          std::uint64_t seed, std::optional<double> kappa_target = std::nullopt);

/// Columns in C(M, Mbarperp; theta*) with ||delta||_2 <= 1.
MatrixXd generate_cone_probes(const RegularizerSpec& reg, const SubspacePair& pair,
                              const VectorXd& theta_star, Index count, std::uint64_t seed);

struct ThresholdReport {
  std::vector<Index> support;
  double cardinality_bound = 0.0;
  bool cardinality_ok = false;
  double tail_l1 = 0.0;
  double tail_bound = 0.0;
  bool tail_ok = false;
};

/// S_eta = {j : |theta*_j| > eta} with the checks |S_eta| <= eta^-q R_q and
/// ||theta*_{S_eta^c}||_1 <= R_q eta^(1 - q).
ThresholdReport weak_sparsity_threshold(const VectorXd& theta_star, double eta, double q, double radius);

struct TailCheck {
  double frequency = 0.0;
  double threshold = 0.0;
  /// 2 / N_G^2
  double bound = 0.0;
  double std_error = 0.0;
  Index trials = 0;
  bool passes = false;
};

/// Frequency over noise draws w ~ N(0, sigma^2 I) of
///   max_t ||X_{G_t}^T w / n||_{alpha*} >= lambda_rule_group(sigma, n, m, alpha, N_G).
/// Passes when the frequency is at most 2 / N_G^2 plus three binomial standard
/// errors taken at that probability.
TailCheck group_tail_check(const MatrixXd& X, const RegularizerSpec& groups, double sigma, Index trials,
                           std::uint64_t seed);

struct CertificateReport {
  double lambda_recommended = 0.0;
  LambdaCertificate gradient;
  std::optional<ConeCheck> cone;
  std::optional<ReCertificate> re;
  std::optional<RscCertificate> rsc;
  std::optional<RhoEstimate> rho;
  std::optional<TailCheck> tail;
  Index mc_samples = 0;
  std::uint64_t seed = 0;
};

/// key = value lines, one per reported field.
std::string to_text(const CertificateReport& report);

}  // namespace mest
