#include "mest/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mest/datagen.hpp"

namespace mest {

LambdaCertificate lambda_from_gradient(const LossModel& loss, const RegularizerSpec& reg,
                                       const DatasetD& data, const VectorXd& theta_star) {
  const VectorXd g = loss_gradient(loss, theta_star, data);
  LambdaCertificate out;
  out.gradient_dual = dual_norm(reg, g);
  out.lambda = 2.0 * out.gradient_dual;
  out.strictly_positive = out.lambda > 0.0;
  return out;
}

double lambda_rule_lasso(double sigma, double n, double p) {
  if (n < 2.0 || p < 2.0) throw std::invalid_argument("lambda_rule_lasso: need n, p >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("lambda_rule_lasso: sigma must be positive");
  return 4.0 * sigma * std::sqrt(std::log(p) / n);
}

double lambda_rule_group(double sigma, double n, double m, double alpha, double num_groups) {
  if (n < 2.0 || num_groups < 2.0) throw std::invalid_argument("lambda_rule_group: need n, N_G >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("lambda_rule_group: sigma must be positive");
  if (!(m >= 1.0)) throw std::invalid_argument("lambda_rule_group: group size must be at least 1");
  if (!(alpha >= 2.0)) throw std::invalid_argument("lambda_rule_group: alpha must be >= 2");
  const double expo = std::isinf(alpha) ? 1.0 : 1.0 - 1.0 / alpha;
  return 2.0 * sigma * (std::pow(m, expo) / std::sqrt(n) + std::sqrt(std::log(num_groups) / n));
}

ConeCheck cone_membership(const VectorXd& delta, const RegularizerSpec& reg, const SubspacePair& pair,
                          const VectorXd& theta_star) {
  require_dim("cone_membership: delta length", reg.dim(), delta.size());
  require_dim("cone_membership: theta* length", reg.dim(), theta_star.size());
  ConeCheck out;
  out.lhs = eval_norm(reg, pair.project_perturbation(delta));
  out.rhs = 3.0 * eval_norm(reg, pair.project_enclosing(delta)) +
            4.0 * eval_norm(reg, pair.project_model_perp(theta_star));
  out.slack = out.rhs - out.lhs;
  out.member = out.lhs <= out.rhs;
  return out;
}

std::vector<double> kappa2_grid() {
  std::vector<double> grid{0.0};
  for (int k = 0; k < 61; ++k) grid.push_back(std::pow(10.0, -3.0 + 6.0 * k / 60.0));
  return grid;
}

namespace {

// Coordinates of `count` random units: coordinates for l1 forms, whole groups
// for group norms.
std::vector<Index> random_units(const RegularizerSpec& reg, Index count, std::mt19937_64& rng) {
  const bool grouped = reg.kind() == RegularizerKind::Group;
  const Index units = grouped ? reg.num_groups() : reg.dim();
  std::vector<Index> ids(static_cast<std::size_t>(units));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(std::min(count, units)));
  if (!grouped) return ids;
  std::vector<Index> coords;
  for (Index t : ids) {
    const auto& g = reg.groups()[static_cast<std::size_t>(t)];
    coords.insert(coords.end(), g.begin(), g.end());
  }
  return coords;
}

void require_coordinate_form(const RegularizerSpec& reg, const char* fn) {
  if (reg.kind() != RegularizerKind::L1 && reg.kind() != RegularizerKind::Group)
    throw std::invalid_argument(std::string(fn) + ": penalty form must be l1 or group");
}

Index default_sparsity(const RegularizerSpec& reg) {
  if (reg.kind() == RegularizerKind::Group) return std::max<Index>(1, reg.num_groups() / 8);
  return std::max<Index>(1, reg.dim() / 16);
}

}  // namespace

MatrixXd generate_re_probes(const RegularizerSpec& reg, Index count, Index sparsity, std::uint64_t seed) {
  require_coordinate_form(reg, "generate_re_probes");
  if (count < 3) throw std::invalid_argument("generate_re_probes: need at least three probes");
  if (sparsity <= 0) sparsity = default_sparsity(reg);
  const Index p = reg.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd probes = MatrixXd::Zero(p, count);
  for (Index k = 0; k < count; ++k) {
    auto col = probes.col(k);
    switch (k % 3) {
      case 0:
        for (Index j = 0; j < p; ++j) col[j] = normal(rng);
        break;
      case 1:
        for (Index j : random_units(reg, sparsity, rng)) col[j] = normal(rng);
        break;
      case 2: {
        VectorXd inside = VectorXd::Zero(p), outside(p);
        std::vector<char> in_s(static_cast<std::size_t>(p), 0);
        for (Index j : random_units(reg, sparsity, rng)) {
          inside[j] = normal(rng);
          in_s[static_cast<std::size_t>(j)] = 1;
        }
        for (Index j = 0; j < p; ++j) outside[j] = in_s[static_cast<std::size_t>(j)] ? 0.0 : normal(rng);
        const double r_in = eval_norm(reg, inside), r_out = eval_norm(reg, outside);
        if (r_out > 0.0) outside *= 3.0 * r_in / r_out;
        col = inside + outside;
        break;
      }
    }
    if (col.norm() == 0.0) col[static_cast<Index>(rng() % static_cast<std::uint64_t>(p))] = 1.0;
  }
  return probes;
}

ReCertificate fit_re_constants(const MatrixXd& X, const MatrixXd& probes, const RegularizerSpec& reg,
                               double g) {
  require_dim("fit_re_constants: probe length", X.cols(), probes.rows());
  require_dim("fit_re_constants: regularizer dimension", X.cols(), reg.dim());
  const Index count = probes.cols();
  const double n = static_cast<double>(X.rows());
  const MatrixXd XD = X * probes;
  VectorXd a(count), b(count);
  for (Index i = 0; i < count; ++i) {
    const double sq = probes.col(i).squaredNorm();
    const double r = eval_norm(reg, probes.col(i));
    a[i] = XD.col(i).squaredNorm() / (n * sq);
    b[i] = g * r * r / sq;
  }
  const double b_min = b.minCoeff();

  ReCertificate out;
  out.g = g;
  out.probes = count;
  for (double k2 : kappa2_grid()) {
    const double k1 = (a + k2 * b).minCoeff();
    out.curve.push_back({k2, k1});
    // kappa1 - k2 * b_min > 0 keeps the bound non-vacuous on at least one probe
    if (!out.certified && k1 > 0.0 && k1 - k2 * b_min > 0.0) {
      out.certified = true;
      out.kappa1 = k1;
      out.kappa2 = k2;
    }
  }
  return out;
}

ReCertificate estimate_re_constants(const MatrixXd& X, const RegularizerSpec& reg, Index probes,
                                    std::uint64_t seed, Index sparsity) {
  require_coordinate_form(reg, "estimate_re_constants");
  if (probes < 1000) throw std::invalid_argument("estimate_re_constants: need at least 1000 probes");
  const double n = static_cast<double>(X.rows());
  double g = 0.0;
  if (reg.kind() == RegularizerKind::L1) {
    g = std::log(static_cast<double>(reg.dim())) / n;
  } else {
    const double rho = rho_group(reg, X.rows(), 2000, derive_seed(seed, 0x72686f)).value;
    g = rho * rho;
  }
  ReCertificate out = fit_re_constants(X, generate_re_probes(reg, probes, sparsity, seed), reg, g);
  out.seed = seed;
  return out;
}

RhoEstimate rho_group(const RegularizerSpec& groups, Index n, Index mc, std::uint64_t seed) {
  if (groups.kind() != RegularizerKind::Group) throw std::invalid_argument("rho_group: need a group layout");
  if (mc < 1000) throw std::invalid_argument("rho_group: need at least 1000 Monte Carlo draws");
  if (n <= 0) throw std::invalid_argument("rho_group: n must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd eps(groups.dim());
  double sum = 0.0, sum_sq = 0.0;
  for (Index k = 0; k < mc; ++k) {
    for (Index j = 0; j < eps.size(); ++j) eps[j] = normal(rng);
    double best = 0.0;
    for (Index t = 0; t < groups.num_groups(); ++t)
      best = std::max(best, lq_norm(detail::gather(eps, groups.groups()[static_cast<std::size_t>(t)]),
                                    dual_exponent(groups.alpha(t))));
    sum += best;
    sum_sq += best * best;
  }
  const double m = static_cast<double>(mc);
  const double mean = sum / m;
  const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  return {mean / sqrt_n, std::sqrt(var / m) / sqrt_n, mc};
}

MatrixXd generate_cone_probes(const RegularizerSpec& reg, const SubspacePair& pair,
                              const VectorXd& theta_star, Index count, std::uint64_t seed) {
  require_dim("generate_cone_probes: theta* length", reg.dim(), theta_star.size());
  const Index p = reg.dim();
  const double approx = eval_norm(reg, pair.project_model_perp(theta_star));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd probes(p, count);
  VectorXd z(p);
  for (Index k = 0; k < count; ++k) {
    for (Index j = 0; j < p; ++j) z[j] = normal(rng);
    VectorXd inside = pair.project_enclosing(z);
    // with an approximation term the cone also holds pure perturbations
    if (approx > 0.0 && k % 6 == 5) inside.setZero();
    for (Index j = 0; j < p; ++j) z[j] = normal(rng);
    VectorXd outside = pair.project_perturbation(z);
    const double limit = 3.0 * eval_norm(reg, inside) + 4.0 * approx;
    const double r_out = eval_norm(reg, outside);
    // every other probe sits on the cone boundary, up to rounding
    const double frac = (k % 2 == 0) ? 1.0 : 1.0 - unit(rng);
    if (r_out > 0.0) outside *= frac * (1.0 - 1e-12) * limit / r_out;
    VectorXd delta = inside + outside;
    double nrm = delta.norm();
    if (nrm == 0.0) {
      delta = pair.project_enclosing(VectorXd::Ones(p));
      nrm = delta.norm();
      if (nrm == 0.0) throw std::invalid_argument("generate_cone_probes: cone set is {0}");
    }
    // shrinking keeps cone membership; growing would not once the
    // approximation term is positive
    const double radius = 1.0 - unit(rng);
    probes.col(k) = delta * std::min(1.0, radius / nrm);
  }
  return probes;
}

RscCertificate verify_rsc(const LossModel& loss, const RegularizerSpec& reg, const SubspacePair& pair,
                          const VectorXd& theta_star, const DatasetD& data, Index probes,
                          std::uint64_t seed, std::optional<double> kappa_target) {
  if (probes <= 0) throw std::invalid_argument("verify_rsc: probes must be positive");
  const MatrixXd P = generate_cone_probes(reg, pair, theta_star, probes, seed);
  std::vector<double> dl(static_cast<std::size_t>(probes)), sq(static_cast<std::size_t>(probes)),
      ratio(static_cast<std::size_t>(probes));
  for (Index k = 0; k < probes; ++k) {
    const auto i = static_cast<std::size_t>(k);
    dl[i] = taylor_error(loss, theta_star, P.col(k), data);
    sq[i] = P.col(k).squaredNorm();
    ratio[i] = dl[i] / sq[i];
  }
  RscCertificate out;
  out.probes = probes;
  out.seed = seed;
  out.min_ratio = *std::min_element(ratio.begin(), ratio.end());
  const double approx = eval_norm(reg, pair.project_model_perp(theta_star));
  if (approx <= 1e-15 * std::max(1.0, eval_norm(reg, theta_star))) {
    out.tau_forced_zero = true;
    out.kappa_L = out.min_ratio;
    out.tau_sq = 0.0;
  } else {
    if (kappa_target) {
      out.kappa_L = *kappa_target;
    } else {
      std::vector<double> sorted = ratio;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                       sorted.end());
      out.kappa_L = 0.5 * sorted[sorted.size() / 2];
    }
    double tau = 0.0;
    for (std::size_t i = 0; i < dl.size(); ++i) tau = std::max(tau, out.kappa_L * sq[i] - dl[i]);
    out.tau_sq = tau;
  }
  out.certified = out.kappa_L > 0.0;
  return out;
}

ThresholdReport weak_sparsity_threshold(const VectorXd& theta_star, double eta, double q, double radius) {
  if (!(eta > 0.0)) throw std::invalid_argument("weak_sparsity_threshold: eta must be positive");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("weak_sparsity_threshold: q must lie in [0, 1]");
  ThresholdReport out;
  for (Index j = 0; j < theta_star.size(); ++j) {
    if (std::abs(theta_star[j]) > eta)
      out.support.push_back(j);
    else
      out.tail_l1 += std::abs(theta_star[j]);
  }
  out.cardinality_bound = std::pow(eta, -q) * radius;
  out.tail_bound = radius * std::pow(eta, 1.0 - q);
  const double slack = 1e-12 * std::max(1.0, radius);
  out.cardinality_ok = static_cast<double>(out.support.size()) <= out.cardinality_bound * (1.0 + 1e-12);
  out.tail_ok = out.tail_l1 <= out.tail_bound + slack;
  return out;
}

TailCheck group_tail_check(const MatrixXd& X, const RegularizerSpec& groups, double sigma, Index trials,
                           std::uint64_t seed) {
  if (groups.kind() != RegularizerKind::Group)
    throw std::invalid_argument("group_tail_check: need a group layout");
  require_dim("group_tail_check: design columns", groups.dim(), X.cols());
  if (trials <= 0) throw std::invalid_argument("group_tail_check: trials must be positive");
  const double alpha = groups.alpha(0);
  for (Index t = 1; t < groups.num_groups(); ++t)
    if (groups.alpha(t) != alpha) throw std::invalid_argument("group_tail_check: exponents must be equal");
  const Index n = X.rows();
  const double nd = static_cast<double>(n);
  const double n_groups = static_cast<double>(groups.num_groups());
  const double dual = dual_exponent(alpha);

  TailCheck out;
  out.trials = trials;
  out.bound = 2.0 / (n_groups * n_groups);
  out.std_error = std::sqrt(out.bound * (1.0 - out.bound) / static_cast<double>(trials));
  if (sigma > 0.0) {
    out.threshold = lambda_rule_group(sigma, nd, static_cast<double>(groups.max_group_size()), alpha, n_groups);
  }
  Index hits = 0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd w(n);
  for (Index k = 0; k < trials; ++k) {
    if (sigma == 0.0) break;
    for (Index i = 0; i < n; ++i) w[i] = sigma * normal(rng);
    const VectorXd v = X.transpose() * w / nd;
    double best = 0.0;
    for (Index t = 0; t < groups.num_groups(); ++t)
      best = std::max(best, lq_norm(detail::gather(v, groups.groups()[static_cast<std::size_t>(t)]), dual));
    if (best >= out.threshold) ++hits;
  }
  out.frequency = static_cast<double>(hits) / static_cast<double>(trials);
  out.passes = out.frequency <= out.bound + 3.0 * out.std_error;
  return out;
}

std::string to_text(const CertificateReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "lambda_recommended = " << r.lambda_recommended << "\n";
  os << "gradient_dual = " << r.gradient.gradient_dual << "\n";
  os << "lambda_from_gradient = " << r.gradient.lambda << "\n";
  os << "lambda_strictly_positive = " << (r.gradient.strictly_positive ? "true" : "false") << "\n";
  if (r.cone) {
    os << "cone_ok = " << (r.cone->member ? "true" : "false") << "\n";
    os << "cone_slack = " << r.cone->slack << "\n";
  }
  if (r.re) {
    os << "re_certified = " << (r.re->certified ? "true" : "false") << "\n";
    os << "kappa1_hat = " << r.re->kappa1 << "\n";
    os << "kappa2_hat = " << r.re->kappa2 << "\n";
    os << "re_g = " << r.re->g << "\n";
    os << "re_probes = " << r.re->probes << "\n";
    os << "re_seed = " << r.re->seed << "\n";
  }
  if (r.rsc) {
    os << "rsc_certified = " << (r.rsc->certified ? "true" : "false") << "\n";
    os << "kappa_L = " << r.rsc->kappa_L << "\n";
    os << "tau_L_sq = " << r.rsc->tau_sq << "\n";
    os << "tau_forced_zero = " << (r.rsc->tau_forced_zero ? "true" : "false") << "\n";
    os << "rsc_probes = " << r.rsc->probes << "\n";
    os << "rsc_seed = " << r.rsc->seed << "\n";
  }
  if (r.rho) {
    os << "rho_G = " << r.rho->value << "\n";
    os << "rho_G_std_error = " << r.rho->std_error << "\n";
  }
  if (r.tail) {
    os << "failure_frequency = " << r.tail->frequency << "\n";
    os << "tail_threshold = " << r.tail->threshold << "\n";
    os << "tail_bound = " << r.tail->bound << "\n";
    os << "tail_passes = " << (r.tail->passes ? "true" : "false") << "\n";
  }
  os << "mc_samples = " << r.mc_samples << "\n";
  os << "seed = " << r.seed << "\n";
  return os.str();
}

}  // namespace mest
