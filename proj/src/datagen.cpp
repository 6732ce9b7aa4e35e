#include "mest/datagen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mest {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

Covariance Covariance::toeplitz(double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("toeplitz covariance: need |rho| < 1");
  Covariance c(Kind::Toeplitz);
  c.rho_ = rho;
  return c;
}

Covariance Covariance::explicit_matrix(MatrixXd sigma) {
  if (sigma.rows() != sigma.cols())
    throw DimensionError("explicit covariance: column count", sigma.rows(), sigma.cols());
  Covariance c(Kind::Explicit);
  c.explicit_ = std::move(sigma);
  return c;
}

MatrixXd Covariance::dense(Index p) const {
  switch (kind_) {
    case Kind::Identity:
      return MatrixXd::Identity(p, p);
    case Kind::Toeplitz: {
      MatrixXd s(p, p);
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) s(i, j) = std::pow(rho_, static_cast<double>(std::abs(i - j)));
      return s;
    }
    case Kind::Explicit:
      require_dim("covariance dimension", p, explicit_.rows());
      return explicit_;
  }
  return {};
}

std::string Covariance::describe() const {
  switch (kind_) {
    case Kind::Identity:
      return "identity";
    case Kind::Toeplitz: {
      std::ostringstream os;
      os.precision(17);
      os << "toeplitz:" << rho_;
      return os.str();
    }
    case Kind::Explicit:
      return "explicit";
  }
  return "";
}

Covariance Covariance::parse(const std::string& text) {
  if (text == "identity") return identity();
  const std::string prefix = "toeplitz:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    const std::string rest = text.substr(prefix.size());
    double rho = 0.0;
    try {
      rho = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size())
      throw std::invalid_argument("covariance: cannot parse rho in '" + text + "'");
    return toeplitz(rho);
  }
  throw std::invalid_argument("covariance: expected 'identity' or 'toeplitz:<rho>', got '" + text + "'");
}

MatrixXd sample_design(const Covariance& sigma, Index n, Index p, std::uint64_t seed) {
  if (n <= 0 || p <= 0) throw std::invalid_argument("sample_design: n and p must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd Z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) Z(i, j) = normal(rng);
  if (sigma.kind() == Covariance::Kind::Identity) return Z;

  const MatrixXd S = sigma.dense(p);
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sample_design: covariance is not positive definite");
  return Z * llt.matrixL().transpose();
}

MatrixXd column_normalize(const MatrixXd& X) {
  const double sqrt_n = std::sqrt(static_cast<double>(X.rows()));
  MatrixXd out = X;
  for (Index j = 0; j < X.cols(); ++j) {
    const double c = X.col(j).norm();
    if (c == 0.0) throw std::invalid_argument("column_normalize: column " + std::to_string(j) + " is zero");
    out.col(j) *= sqrt_n / c;
  }
  return out;
}

double spectral_norm_power(const MatrixXd& A, int max_iters, double tol) {
  if (A.size() == 0) return 0.0;
  const MatrixXd G = A.transpose() * A;
  if (G.cols() == 1) return std::sqrt(G(0, 0));
  // start from the heaviest column's direction, then a fixed perturbation so a
  // zero overlap with the top eigenvector is not a concern
  VectorXd v = VectorXd::Constant(G.cols(), 1.0);
  Index heavy = 0;
  G.diagonal().maxCoeff(&heavy);
  v[heavy] += 1.0;
  for (Index j = 0; j < v.size(); ++j) v[j] += 1e-3 * static_cast<double>(j + 1);
  v.normalize();
  double lambda = v.dot(G * v);
  for (int it = 0; it < max_iters; ++it) {
    VectorXd w = G * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double next = w.dot(G * w);
    const bool done = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next)) &&
                      (w - v).norm() <= 1e-10;
    v = std::move(w);
    lambda = next;
    if (done) break;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

namespace {

MatrixXd block(const MatrixXd& X, const std::vector<Index>& idx) {
  MatrixXd B(X.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) B.col(static_cast<Index>(k)) = X.col(idx[k]);
  return B;
}

// max over s in {-1, 1}^m of ||B s||_2, with s_0 = +1 by symmetry; Gray-code
// order flips one sign per step.
double inf_to_two_exact(const MatrixXd& B) {
  const Index m = B.cols();
  VectorXd acc = B.rowwise().sum();
  double best = acc.squaredNorm();
  std::vector<int> sign(static_cast<std::size_t>(m), 1);
  const std::uint64_t count = std::uint64_t{1} << (m - 1);
  for (std::uint64_t k = 1; k < count; ++k) {
    const int bit = __builtin_ctzll(k);
    const Index col = bit + 1;
    auto& s = sign[static_cast<std::size_t>(col)];
    acc -= (2.0 * s) * B.col(col);
    s = -s;
    best = std::max(best, acc.squaredNorm());
  }
  return std::sqrt(best);
}

}  // namespace

BlockNorms block_operator_norms(const MatrixXd& X, const std::vector<std::vector<Index>>& groups,
                                double alpha) {
  if (!(alpha >= 2.0)) throw std::invalid_argument("block_operator_norms: alpha must be >= 2");
  const double sqrt_n = std::sqrt(static_cast<double>(X.rows()));
  BlockNorms out;
  for (const auto& g : groups) {
    for (Index j : g)
      if (j < 0 || j >= X.cols())
        throw std::invalid_argument("block_operator_norms: column index " + std::to_string(j) + " out of range");
    const MatrixXd B = block(X, g);
    const double m = static_cast<double>(g.size());
    double value = 0.0;
    bool exact = true;
    if (alpha == 2.0) {
      value = spectral_norm_power(B);
    } else if (std::isinf(alpha) && g.size() <= 20) {
      value = inf_to_two_exact(B);
    } else {
      value = std::pow(m, 0.5 - 1.0 / alpha) * spectral_norm_power(B);
      exact = g.size() == 1;
    }
    out.values.push_back(value / sqrt_n);
    out.exact.push_back(exact ? 1 : 0);
  }
  return out;
}

MatrixXd block_normalize(const MatrixXd& X, const std::vector<std::vector<Index>>& groups,
                         double alpha) {
  const BlockNorms norms = block_operator_norms(X, groups, alpha);
  MatrixXd out = X;
  for (std::size_t t = 0; t < groups.size(); ++t) {
    const double v = norms.values[t];
    if (v == 0.0) throw std::invalid_argument("block_normalize: group " + std::to_string(t) + " is zero");
    for (Index j : groups[t]) out.col(j) /= v;
  }
  return out;
}

TargetSpec TargetSpec::exact_sparse(Index s, double magnitude) {
  TargetSpec t;
  t.kind = Kind::ExactSparse;
  t.sparsity = s;
  t.magnitude = magnitude;
  return t;
}

TargetSpec TargetSpec::lq_ball(double q, double radius) {
  TargetSpec t;
  t.kind = Kind::LqBall;
  t.q = q;
  t.radius = radius;
  return t;
}

TargetSpec TargetSpec::group_sparse(Index s_g, double magnitude) {
  TargetSpec t;
  t.kind = Kind::GroupSparse;
  t.active_groups = s_g;
  t.magnitude = magnitude;
  return t;
}

TargetSpec TargetSpec::low_rank(Index r) {
  TargetSpec t;
  t.kind = Kind::LowRank;
  t.rank = r;
  return t;
}

std::string TargetSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::ExactSparse:
      os << "exact_sparse:s=" << sparsity << ",magnitude=" << magnitude;
      break;
    case Kind::LqBall:
      os << "lq_ball:q=" << q << ",radius=" << radius;
      break;
    case Kind::GroupSparse:
      os << "group_sparse:sG=" << active_groups << ",magnitude=" << magnitude;
      break;
    case Kind::LowRank:
      os << "low_rank:r=" << rank;
      break;
  }
  return os.str();
}

namespace {

std::vector<Index> random_subset(Index universe, Index k, std::mt19937_64& rng) {
  std::vector<Index> all(static_cast<std::size_t>(universe));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

double random_sign(std::mt19937_64& rng) { return (rng() & 1U) ? 1.0 : -1.0; }

}  // namespace

VectorXd make_target(const TargetSpec& spec, const RegularizerSpec& reg, std::uint64_t seed) {
  const Index p = reg.dim();
  std::mt19937_64 rng(seed);
  VectorXd theta = VectorXd::Zero(p);
  switch (spec.kind) {
    case TargetSpec::Kind::ExactSparse: {
      if (spec.sparsity < 0 || spec.sparsity > p)
        throw std::invalid_argument("make_target: sparsity must lie in [0, p]");
      for (Index j : random_subset(p, spec.sparsity, rng)) theta[j] = spec.magnitude * random_sign(rng);
      return theta;
    }
    case TargetSpec::Kind::LqBall: {
      if (!(spec.q >= 0.0 && spec.q <= 1.0)) throw std::invalid_argument("make_target: q must lie in [0, 1]");
      if (!(spec.radius > 0.0)) throw std::invalid_argument("make_target: R_q must be positive");
      if (spec.q == 0.0) {
        const double r = std::round(spec.radius);
        if (r != spec.radius || r > static_cast<double>(p))
          throw std::invalid_argument("make_target: q = 0 needs an integer R_q no larger than p");
        return make_target(TargetSpec::exact_sparse(static_cast<Index>(r), 1.0), reg, seed);
      }
      std::vector<Index> perm(static_cast<std::size_t>(p));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      // |theta_(j)|^q = c^q / j, so c^q = R_q / H_p
      double harmonic = 0.0;
      for (Index j = p; j >= 1; --j) harmonic += 1.0 / static_cast<double>(j);
      const double c = std::pow(spec.radius / harmonic, 1.0 / spec.q);
      for (Index j = 0; j < p; ++j)
        theta[perm[static_cast<std::size_t>(j)]] =
            random_sign(rng) * c * std::pow(static_cast<double>(j + 1), -1.0 / spec.q);
      return theta;
    }
    case TargetSpec::Kind::GroupSparse: {
      if (reg.kind() != RegularizerKind::Group)
        throw std::invalid_argument("make_target: group-sparse targets need a group regularizer");
      if (spec.active_groups < 0 || spec.active_groups > reg.num_groups())
        throw std::invalid_argument("make_target: s_G must lie in [0, N_G]");
      for (Index t : random_subset(reg.num_groups(), spec.active_groups, rng))
        for (Index j : reg.groups()[static_cast<std::size_t>(t)]) theta[j] = spec.magnitude * random_sign(rng);
      return theta;
    }
    case TargetSpec::Kind::LowRank: {
      if (reg.kind() != RegularizerKind::Nuclear)
        throw std::invalid_argument("make_target: low-rank targets need a nuclear-norm layout");
      if (spec.rank < 0 || spec.rank > std::min(reg.rows(), reg.cols()))
        throw std::invalid_argument("make_target: rank must lie in [0, min(p1, p2)]");
      std::normal_distribution<double> normal;
      MatrixXd A(reg.rows(), spec.rank), B(reg.cols(), spec.rank);
      for (Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
      for (Index i = 0; i < B.size(); ++i) B.data()[i] = normal(rng);
      const MatrixXd T = A * B.transpose();
      return Eigen::Map<const VectorXd>(T.data(), T.size());
    }
  }
  return theta;
}

VectorXd sample_noise(NoiseKind kind, double sigma, Index n, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sample_noise: sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  VectorXd w(n);
  if (kind == NoiseKind::Gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i) w[i] = sigma * normal(rng);
  } else {
    for (Index i = 0; i < n; ++i) w[i] = sigma * random_sign(rng);
  }
  return w;
}

VectorXd synthesize_linear(const MatrixXd& X, const VectorXd& theta_star, const VectorXd& noise) {
  require_dim("synthesize_linear: theta* length", X.cols(), theta_star.size());
  require_dim("synthesize_linear: noise length", X.rows(), noise.size());
  return X * theta_star + noise;
}

VectorXd synthesize_logistic(const MatrixXd& X, const VectorXd& theta_star, std::uint64_t seed) {
  require_dim("synthesize_logistic: theta* length", X.cols(), theta_star.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const VectorXd eta = X * theta_star;
  VectorXd y(X.rows());
  for (Index i = 0; i < y.size(); ++i) y[i] = unif(rng) < logistic_mean(eta[i]) ? 1.0 : 0.0;
  return y;
}

ProblemInstance generate_instance(const InstanceRecipe& recipe, const RegularizerSpec& reg,
                                  std::uint64_t seed) {
  ProblemInstance inst;
  inst.seed = seed;
  inst.sigma = recipe.sigma;
  inst.loss = recipe.loss;
  inst.covariance = recipe.covariance.describe();
  inst.target = recipe.target.describe();

  inst.X = sample_design(recipe.covariance, recipe.n, reg.dim(), derive_seed(seed, 1));
  switch (recipe.normalization) {
    case Normalization::None:
      break;
    case Normalization::Columns:
      inst.X = column_normalize(inst.X);
      break;
    case Normalization::Blocks:
      if (reg.kind() != RegularizerKind::Group)
        throw std::invalid_argument("generate_instance: block normalization needs a group regularizer");
      inst.X = block_normalize(inst.X, reg.groups(), reg.alpha(0));
      break;
  }
  inst.theta_star = make_target(recipe.target, reg, derive_seed(seed, 2));
  if (recipe.loss == LossKind::LeastSquares) {
    const VectorXd w = sample_noise(recipe.noise, recipe.sigma, recipe.n, derive_seed(seed, 3));
    inst.y = synthesize_linear(inst.X, inst.theta_star, w);
  } else {
    inst.y = synthesize_logistic(inst.X, inst.theta_star, derive_seed(seed, 3));
  }
  return inst;
}

}  // namespace mest
