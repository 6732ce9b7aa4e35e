#include "mest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "mest/bounds.hpp"

namespace mest {

std::vector<Cell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (Index n : cfg.n_grid) {
    switch (cfg.regime) {
      case Regime::LassoHard:
      case Regime::LogisticL1:
        for (Index p : cfg.p_grid)
          for (Index s : cfg.s_grid) cells.push_back({n, p, s, 0.0, 0, 0, 0});
        break;
      case Regime::LassoWeak:
        for (Index p : cfg.p_grid) cells.push_back({n, p, 0, cfg.q, 0, 0, 0});
        break;
      case Regime::GroupLasso:
        for (Index g : cfg.num_groups_grid)
          cells.push_back({n, g * cfg.group_size, 0, 0.0, cfg.active_groups, g, cfg.group_size});
        break;
    }
  }
  return cells;
}

RegularizerSpec regularizer_for(const ExperimentConfig& cfg, const Cell& cell) {
  if (cfg.regime == Regime::GroupLasso) return RegularizerSpec::equal_groups(cell.num_groups, cell.group_size, cfg.alpha);
  return RegularizerSpec::l1(cell.p);
}

ProblemInstance instance_for(const ExperimentConfig& cfg, const Cell& cell, Index cell_index, Index trial) {
  InstanceRecipe recipe;
  recipe.n = cell.n;
  recipe.covariance = Covariance::parse(cfg.covariance);
  recipe.noise = cfg.noise;
  recipe.sigma = cfg.sigma;
  switch (cfg.regime) {
    case Regime::LassoHard:
      recipe.target = TargetSpec::exact_sparse(cell.s, cfg.magnitude);
      break;
    case Regime::LogisticL1:
      recipe.target = TargetSpec::exact_sparse(cell.s, cfg.magnitude);
      recipe.loss = LossKind::LogisticGLM;
      break;
    case Regime::LassoWeak:
      recipe.target = TargetSpec::lq_ball(cfg.q, cfg.radius);
      break;
    case Regime::GroupLasso:
      recipe.target = TargetSpec::group_sparse(cell.s_g, cfg.magnitude);
      recipe.normalization = Normalization::Blocks;
      break;
  }
  const std::uint64_t seed =
      derive_seed(cfg.seed, static_cast<std::uint64_t>(cell_index), static_cast<std::uint64_t>(trial));
  return generate_instance(recipe, regularizer_for(cfg, cell), seed);
}

namespace {

LossModel loss_for(const ExperimentConfig& cfg) {
  return cfg.regime == Regime::LogisticL1 ? LossModel::logistic() : LossModel::least_squares();
}

SubspacePair pair_for(const ExperimentConfig& cfg, const RegularizerSpec& reg, const VectorXd& theta_star,
                      double eta) {
  if (cfg.regime == Regime::GroupLasso) {
    ActiveGroups active;
    for (Index t = 0; t < reg.num_groups(); ++t) {
      bool on = false;
      for (Index j : reg.groups()[static_cast<std::size_t>(t)]) on = on || theta_star[j] != 0.0;
      if (on) active.groups.push_back(t);
    }
    return make_subspace_pair(reg, active);
  }
  SupportSet support;
  for (Index j = 0; j < theta_star.size(); ++j)
    if (std::abs(theta_star[j]) > eta) support.indices.push_back(j);
  return make_subspace_pair(reg, support);
}

}  // namespace

double choose_lambda(const ExperimentConfig& cfg, const Cell& cell, const ProblemInstance& inst,
                     const RegularizerSpec& reg) {
  switch (cfg.lambda.kind) {
    case LambdaPolicy::Kind::Fixed:
      return cfg.lambda.value;
    case LambdaPolicy::Kind::OracleGradient: {
      const double lam = lambda_from_gradient(loss_for(cfg), reg, inst.data(), inst.theta_star).lambda + cfg.lambda.offset;
      if (!(lam > 0.0))
        throw std::invalid_argument("choose_lambda: oracle lambda is zero; set lambda_offset > 0");
      return lam;
    }
    case LambdaPolicy::Kind::PaperRule:
      break;
  }
  const double n = static_cast<double>(cell.n);
  switch (cfg.regime) {
    case Regime::LassoHard:
    case Regime::LassoWeak:
      return lambda_rule_lasso(cfg.sigma, n, static_cast<double>(cell.p));
    case Regime::LogisticL1:
      // centred Bernoulli responses are sub-Gaussian with parameter 1/2
      return lambda_rule_lasso(0.5, n, static_cast<double>(cell.p));
    case Regime::GroupLasso:
      return lambda_rule_group(cfg.sigma, n, static_cast<double>(cell.group_size), cfg.alpha,
                               static_cast<double>(cell.num_groups));
  }
  return 0.0;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, Index cell_index, Index trial) {
  const auto start = std::chrono::steady_clock::now();
  const ProblemInstance inst = instance_for(cfg, cell, cell_index, trial);
  const RegularizerSpec reg = regularizer_for(cfg, cell);
  const LossModel loss = loss_for(cfg);
  const DatasetD data = inst.data();
  const std::uint64_t cert_seed = derive_seed(inst.seed, 5);

  TrialRecord rec;
  rec.regime = cfg.regime;
  rec.n = cell.n;
  rec.p = cell.p;
  rec.s = cell.s;
  rec.q = cell.q;
  rec.s_g = cell.s_g;
  rec.trial = trial;
  rec.lambda = choose_lambda(cfg, cell, inst, reg);

  const SolverResult<double> sol = solve(loss, reg, data, rec.lambda, cfg.solver, std::optional<VectorXd>(inst.theta_star));
  const VectorXd& delta = *sol.error;
  rec.err_l2_sq = delta.squaredNorm();
  rec.err_reg = eval_norm(reg, delta);
  rec.iters = sol.iterations;
  rec.converged = sol.converged;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.bound = nan;
  rec.certified = false;
  double eta = 0.0;
  if (cfg.re_probes > 0) {
    if (cfg.regime == Regime::LogisticL1) {
      const SubspacePair pair = pair_for(cfg, reg, inst.theta_star, 0.0);
      const RscCertificate rsc = verify_rsc(loss, reg, pair, inst.theta_star, data, cfg.re_probes, cert_seed);
      rec.kappa1_hat = rsc.kappa_L;
      rec.kappa2_hat = 0.0;
      rec.certified = rsc.certified;
      if (rsc.certified)
        rec.bound = theorem1_bound(rec.lambda, rsc.kappa_L, std::sqrt(static_cast<double>(cell.s)), rsc.tau_sq, 0.0);
    } else {
      Index sparsity = cfg.regime == Regime::GroupLasso ? cell.s_g : cell.s;
      if (cfg.regime == Regime::LassoWeak) {
        sparsity = 0;
        for (Index j = 0; j < inst.theta_star.size(); ++j) sparsity += std::abs(inst.theta_star[j]) > rec.lambda;
      }
      const ReCertificate re =
          estimate_re_constants(inst.X, reg, cfg.re_probes, cert_seed, std::max<Index>(1, sparsity));
      rec.kappa1_hat = re.kappa1;
      rec.kappa2_hat = re.kappa2;
      rec.certified = re.certified;
      if (re.certified) {
        const double n = static_cast<double>(cell.n), p = static_cast<double>(cell.p);
        switch (cfg.regime) {
          case Regime::LassoHard:
            rec.bound = lasso_hard_bound(cfg.sigma, re.kappa1, static_cast<double>(cell.s), p, n).first;
            break;
          case Regime::LassoWeak:
            rec.bound = lasso_weak_bound(cfg.sigma, re.kappa1, cfg.radius, cfg.q, p, n, cfg.c0).value;
            eta = rec.lambda / re.kappa1;
            break;
          case Regime::GroupLasso:
            rec.bound = group_bound(rec.lambda, re.kappa1, static_cast<double>(cell.s_g), 0.0);
            break;
          case Regime::LogisticL1:
            break;
        }
      }
    }
  }
  if (cfg.regime == Regime::LassoWeak && eta == 0.0) eta = rec.lambda;
  const SubspacePair pair = pair_for(cfg, reg, inst.theta_star, eta);
  rec.cone_ok = cone_membership(delta, reg, pair, inst.theta_star).member;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Index resolve_threads(Index requested) {
  Index threads = requested > 0 ? requested : static_cast<Index>(std::max(1U, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MEST_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) threads = std::min<Index>(threads, cap);
  }
  return std::max<Index>(1, threads);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;
  report.cells = expand_grid(cfg);
  const Index total = static_cast<Index>(report.cells.size()) * cfg.trials;
  report.records.resize(static_cast<std::size_t>(total));

  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (Index k = next++; k < total && !failed; k = next++) {
      const Index cell = k / cfg.trials, trial = k % cfg.trials;
      try {
        report.records[static_cast<std::size_t>(k)] =
            run_trial(cfg, report.cells[static_cast<std::size_t>(cell)], cell, trial);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const Index threads = std::min(resolve_threads(cfg.threads), std::max<Index>(1, total));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  report.summary = summarize(report.cells, report.records, cfg.trials);
  return report;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

bool same_cell(const Cell& c, const TrialRecord& r) {
  return c.n == r.n && c.p == r.p && c.s == r.s && c.q == r.q && c.s_g == r.s_g;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<Cell>& cells, const std::vector<TrialRecord>& records,
                                   Index trials_per_cell) {
  (void)trials_per_cell;
  std::vector<CellSummary> out;
  for (const Cell& c : cells) {
    CellSummary s;
    s.cell = c;
    std::vector<double> errs, bounds;
    Index finite = 0, violations = 0;
    for (const TrialRecord& r : records) {
      if (!same_cell(c, r)) continue;
      ++s.trials;
      errs.push_back(r.err_l2_sq);
      if (std::isfinite(r.bound)) {
        bounds.push_back(r.bound);
        ++finite;
        if (r.err_l2_sq > r.bound) ++violations;
      }
      if (!r.certified) ++s.certificate_failures;
      if (!r.cone_ok) ++s.cone_failures;
      if (!r.converged) ++s.nonconverged;
    }
    s.median_err = median(errs);
    double sum = 0.0;
    for (double e : errs) sum += e;
    s.mean_err = errs.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(errs.size());
    s.median_bound = median(bounds);
    s.bound_violation_freq = finite ? static_cast<double>(violations) / static_cast<double>(finite)
                                    : std::numeric_limits<double>::quiet_NaN();
    out.push_back(s);
  }
  return out;
}

double predictor_value(RatePredictor pred, const Cell& cell, const ExperimentConfig& cfg) {
  const double n = static_cast<double>(cell.n), p = static_cast<double>(cell.p);
  switch (pred) {
    case RatePredictor::SLogPOverN:
      return static_cast<double>(cell.s) * std::log(p) / n;
    case RatePredictor::LqRate:
      return cfg.radius * std::pow(std::log(p) / n, 1.0 - cfg.q / 2.0);
    case RatePredictor::GroupRate: {
      const double sg = static_cast<double>(cell.s_g);
      return sg * static_cast<double>(cell.group_size) / n + sg * std::log(static_cast<double>(cell.num_groups)) / n;
    }
  }
  return 0.0;
}

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double min_span_ratio) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: x and y differ in length");
  if (x.size() < 4) throw std::invalid_argument("fit_loglog: need at least four cells");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*lo > 0.0)) throw std::invalid_argument("fit_loglog: predictor must be positive");
  if (!(*hi / *lo >= min_span_ratio))
    throw std::invalid_argument("fit_loglog: predictor spans a ratio of " + std::to_string(*hi / *lo) +
                                ", below the required " + std::to_string(min_span_ratio));
  for (double v : y)
    if (!(v > 0.0)) throw std::invalid_argument("fit_loglog: responses must be positive");
  const std::size_t m = x.size();
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) {
    A(static_cast<Index>(i), 0) = std::log(x[i]);
    A(static_cast<Index>(i), 1) = 1.0;
    b[static_cast<Index>(i)] = std::log(y[i]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  const double ss_res = (A * coef - b).squaredNorm();
  const double ss_tot = (b.array() - b.mean()).matrix().squaredNorm();
  RateFit fit;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points = static_cast<Index>(m);
  return fit;
}

RateFit rate_regression(const ExperimentReport& report, RatePredictor pred, double min_span_ratio) {
  std::vector<double> x, y;
  for (const CellSummary& s : report.summary) {
    x.push_back(predictor_value(pred, s.cell, report.config));
    y.push_back(s.median_err);
  }
  return fit_loglog(x, y, min_span_ratio);
}

}  // namespace mest
