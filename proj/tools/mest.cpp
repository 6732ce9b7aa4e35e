// mest: command-line front end for the regularized M-estimation toolkit.
//
//   mest solve|certify|bound|experiment --config <file> [--seed N] [--out DIR]
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error, 3 I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mest/bounds.hpp"
#include "mest/harness.hpp"

namespace {

using namespace mest;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

struct Loaded {
  ExperimentConfig cfg;
  std::optional<double> kappa;
};

Loaded load(const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) throw IoError("cannot read config file '" + opt.config + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto kv = parse_key_values(ss.str());
  Loaded out;
  // `kappa` only feeds the bound subcommand
  if (auto it = kv.find("kappa"); it != kv.end()) {
    try {
      out.kappa = std::stod(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config: key 'kappa' expects a number");
    }
    if (!(*out.kappa > 0.0)) throw ConfigError("config: kappa must be positive");
    kv.erase(it);
  }
  out.cfg = config_from_map(kv);
  if (opt.seed) out.cfg.seed = *opt.seed;
  if (opt.out) out.cfg.out_dir = *opt.out;
  return out;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

void publish(const ExperimentConfig& cfg, const std::string& file, const std::string& text) {
  std::cout << text;
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create directory '" + cfg.out_dir + "': " + ec.message());
  const std::string path = (std::filesystem::path(cfg.out_dir) / file).string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

LossModel loss_of(const ExperimentConfig& cfg) {
  return cfg.regime == Regime::LogisticL1 ? LossModel::logistic() : LossModel::least_squares();
}

SubspacePair truth_pair(const RegularizerSpec& reg, const VectorXd& theta) {
  if (reg.kind() == RegularizerKind::Group) {
    ActiveGroups active;
    for (Index t = 0; t < reg.num_groups(); ++t) {
      double acc = 0.0;
      for (Index j : reg.groups()[static_cast<std::size_t>(t)]) acc += std::abs(theta[j]);
      if (acc > 0.0) active.groups.push_back(t);
    }
    return make_subspace_pair(reg, active);
  }
  SupportSet s;
  for (Index j = 0; j < theta.size(); ++j)
    if (theta[j] != 0.0) s.indices.push_back(j);
  return make_subspace_pair(reg, s);
}

int cmd_solve(const Options& opt) {
  const ExperimentConfig cfg = load(opt).cfg;
  const Cell cell = expand_grid(cfg).front();
  const ProblemInstance inst = instance_for(cfg, cell, 0, 0);
  const RegularizerSpec reg = regularizer_for(cfg, cell);
  const double lambda = choose_lambda(cfg, cell, inst, reg);
  const auto res = solve(loss_of(cfg), reg, inst.data(), lambda, cfg.solver, std::optional<VectorXd>(inst.theta_star));

  std::ostringstream os;
  os << "regime = " << to_string(cfg.regime) << "\n";
  os << "n = " << cell.n << "\np = " << cell.p << "\nseed = " << cfg.seed << "\n";
  os << "lambda = " << num(lambda) << "\n";
  os << "objective = " << num(res.objective_trace.back()) << "\n";
  os << "converged = " << (res.converged ? "true" : "false") << "\n";
  os << "iterations = " << res.iterations << "\n";
  os << "fixed_point_residual = " << num(res.fixed_point_residual) << "\n";
  os << "err_l2_sq = " << num(res.error->squaredNorm()) << "\n";
  os << "err_reg = " << num(eval_norm(reg, *res.error)) << "\n";
  publish(cfg, "solve.txt", os.str());

  std::ostringstream theta;
  theta.precision(17);
  for (Index j = 0; j < res.theta.size(); ++j) theta << res.theta[j] << "\n";
  const std::string path = (std::filesystem::path(cfg.out_dir) / "theta_hat.txt").string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << theta.str();
  write_instance((std::filesystem::path(cfg.out_dir) / "instance.txt").string(), inst);
  return 0;
}

int cmd_certify(const Options& opt) {
  const ExperimentConfig cfg = load(opt).cfg;
  const Cell cell = expand_grid(cfg).front();
  const ProblemInstance inst = instance_for(cfg, cell, 0, 0);
  const RegularizerSpec reg = regularizer_for(cfg, cell);
  const LossModel loss = loss_of(cfg);
  const DatasetD data = inst.data();
  const std::uint64_t seed = derive_seed(inst.seed, 5);
  const Index probes = cfg.re_probes > 0 ? cfg.re_probes : 1500;

  CertificateReport rep;
  rep.seed = seed;
  rep.lambda_recommended = choose_lambda(cfg, cell, inst, reg);
  rep.gradient = lambda_from_gradient(loss, reg, data, inst.theta_star);
  const auto sol = solve(loss, reg, data, rep.lambda_recommended, cfg.solver, std::optional<VectorXd>(inst.theta_star));
  const SubspacePair pair = truth_pair(reg, inst.theta_star);
  rep.cone = cone_membership(*sol.error, reg, pair, inst.theta_star);
  if (cfg.regime == Regime::LogisticL1) {
    rep.rsc = verify_rsc(loss, reg, pair, inst.theta_star, data, probes, seed);
  } else {
    rep.re = estimate_re_constants(inst.X, reg, probes, seed);
    rep.rsc = verify_rsc(loss, reg, pair, inst.theta_star, data, probes, seed);
  }
  rep.mc_samples = probes;
  if (cfg.regime == Regime::GroupLasso) {
    rep.rho = rho_group(reg, cell.n, 2000, derive_seed(seed, 1));
    if (cfg.sigma > 0.0) rep.tail = group_tail_check(inst.X, reg, cfg.sigma, 10000, derive_seed(seed, 2));
  }
  publish(cfg, "certificate.txt", to_text(rep));
  return 0;
}

int cmd_bound(const Options& opt) {
  const Loaded loaded = load(opt);
  const ExperimentConfig& cfg = loaded.cfg;
  const Cell cell = expand_grid(cfg).front();
  const ProblemInstance inst = instance_for(cfg, cell, 0, 0);
  const RegularizerSpec reg = regularizer_for(cfg, cell);

  BoundReport rep;
  rep.regime = to_string(cfg.regime);
  rep.lambda = choose_lambda(cfg, cell, inst, reg);
  if (loaded.kappa) {
    rep.kappa = *loaded.kappa;
  } else if (cfg.regime == Regime::LogisticL1) {
    rep.kappa = verify_rsc(loss_of(cfg), reg, truth_pair(reg, inst.theta_star), inst.theta_star, inst.data(),
                           std::max<Index>(cfg.re_probes, 1000), derive_seed(inst.seed, 5))
                    .kappa_L;
  } else {
    const ReCertificate re = estimate_re_constants(inst.X, reg, std::max<Index>(cfg.re_probes, 1000),
                                                   derive_seed(inst.seed, 5));
    if (!re.certified) throw std::runtime_error("bound: curvature not certified on the sampled design");
    rep.kappa = re.kappa1;
  }
  const double n = static_cast<double>(cell.n), p = static_cast<double>(cell.p);
  switch (cfg.regime) {
    case Regime::LassoHard: {
      rep.psi = std::sqrt(static_cast<double>(cell.s));
      const auto [l2, l1] = lasso_hard_bound(cfg.sigma, rep.kappa, static_cast<double>(cell.s), p, n);
      rep.bound_err_sq = l2;
      rep.bound_reg = l1;
      break;
    }
    case Regime::LassoWeak: {
      const WeakSparsityBound w = lasso_weak_bound(cfg.sigma, rep.kappa, cfg.radius, cfg.q, p, n, cfg.c0);
      rep.bound_err_sq = w.value;
      rep.in_regime = w.in_regime;
      break;
    }
    case Regime::GroupLasso:
      rep.psi = std::sqrt(static_cast<double>(cell.s_g));
      rep.bound_err_sq = group_bound(rep.lambda, rep.kappa, static_cast<double>(cell.s_g), 0.0);
      break;
    case Regime::LogisticL1:
      rep.psi = std::sqrt(static_cast<double>(cell.s));
      rep.bound_err_sq = theorem1_bound(rep.lambda, rep.kappa, rep.psi, 0.0, 0.0);
      rep.bound_reg = corollary1_bounds(rep.lambda, rep.kappa, rep.psi).second;
      break;
  }
  std::ostringstream os;
  os << "regime = " << rep.regime << "\n";
  os << "bound_err_sq = " << num(rep.bound_err_sq) << "\n";
  if (rep.bound_reg) os << "bound_reg = " << num(*rep.bound_reg) << "\n";
  os << "lambda = " << num(rep.lambda) << "\n";
  os << "kappa = " << num(rep.kappa) << "\n";
  os << "psi = " << num(rep.psi) << "\n";
  os << "tau_sq = " << num(rep.tau_sq) << "\n";
  os << "approx = " << num(rep.approx) << "\n";
  os << "in_regime = " << (rep.in_regime ? "true" : "false") << "\n";
  publish(cfg, "bound.txt", os.str());
  return 0;
}

int cmd_experiment(const Options& opt) {
  const ExperimentConfig cfg = load(opt).cfg;
  const ExperimentReport report = run_experiment(cfg);
  emit(report, cfg.out_dir);
  std::cout << "wrote " << report.records.size() << " records to "
            << (std::filesystem::path(cfg.out_dir) / "results.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized M-estimation: solve, certify, bound and rate experiments"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  std::string out;
  int (*handler)(const Options&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "key = value configuration file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->callback([&, sub, fn] {
      handler = fn;
      if (sub->count("--seed")) opt.seed = seed;
      if (sub->count("--out")) opt.out = out;
    });
  };
  add("solve", "solve one instance and report the estimate", cmd_solve);
  add("certify", "certificate report for one instance", cmd_certify);
  add("bound", "evaluate the error bound for the first grid cell", cmd_bound);
  add("experiment", "run the Monte Carlo grid and write CSV + summary", cmd_experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    return handler(opt);
  } catch (const ConfigError& e) {
    std::cerr << "mest: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "mest: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "mest: " << e.what() << "\n";
    return 1;
  }
}
