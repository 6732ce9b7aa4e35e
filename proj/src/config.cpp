#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "mest/harness.hpp"

namespace mest {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

Index to_index(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<Index>(out);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v.front() == '-')
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

std::vector<Index> to_index_list(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_index(key, trim(item)));
  if (out.empty()) throw ConfigError("config: key '" + key + "' needs at least one value");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects true or false, got '" + v + "'");
}

LambdaPolicy to_lambda(const std::string& key, const std::string& v) {
  LambdaPolicy pol;
  if (v == "paper") {
    pol.kind = LambdaPolicy::Kind::PaperRule;
  } else if (v == "oracle") {
    pol.kind = LambdaPolicy::Kind::OracleGradient;
  } else if (v.rfind("fixed:", 0) == 0) {
    pol.kind = LambdaPolicy::Kind::Fixed;
    pol.value = to_double(key, v.substr(6));
  } else {
    throw ConfigError("config: key '" + key + "' expects paper, oracle or fixed:<value>, got '" + v + "'");
  }
  return pol;
}

std::string join(const std::vector<Index>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string num(double x) {
  if (std::isinf(x)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::LassoHard:
      return "lasso_hard";
    case Regime::LassoWeak:
      return "lasso_weak";
    case Regime::GroupLasso:
      return "group_lasso";
    case Regime::LogisticL1:
      return "logistic_l1";
  }
  return "";
}

Regime parse_regime(const std::string& text) {
  for (Regime r : {Regime::LassoHard, Regime::LassoWeak, Regime::GroupLasso, Regime::LogisticL1})
    if (text == to_string(r)) return r;
  throw ConfigError("config: unknown regime '" + text +
                    "' (expected lasso_hard, lasso_weak, group_lasso or logistic_l1)");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (!out.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"regime", [&](auto&, auto& v) { cfg.regime = parse_regime(v); }},
      {"n", [&](auto& k, auto& v) { cfg.n_grid = to_index_list(k, v); }},
      {"p", [&](auto& k, auto& v) { cfg.p_grid = to_index_list(k, v); }},
      {"s", [&](auto& k, auto& v) { cfg.s_grid = to_index_list(k, v); }},
      {"q", [&](auto& k, auto& v) { cfg.q = to_double(k, v); }},
      {"radius", [&](auto& k, auto& v) { cfg.radius = to_double(k, v); }},
      {"group_size", [&](auto& k, auto& v) { cfg.group_size = to_index(k, v); }},
      {"num_groups", [&](auto& k, auto& v) { cfg.num_groups_grid = to_index_list(k, v); }},
      {"active_groups", [&](auto& k, auto& v) { cfg.active_groups = to_index(k, v); }},
      {"alpha", [&](auto& k, auto& v) { cfg.alpha = to_double(k, v); }},
      {"trials", [&](auto& k, auto& v) { cfg.trials = to_index(k, v); }},
      {"sigma", [&](auto& k, auto& v) { cfg.sigma = to_double(k, v); }},
      {"covariance", [&](auto&, auto& v) { cfg.covariance = v; }},
      {"noise",
       [&](auto& k, auto& v) {
         if (v == "gaussian")
           cfg.noise = NoiseKind::Gaussian;
         else if (v == "rademacher")
           cfg.noise = NoiseKind::Rademacher;
         else
           throw ConfigError("config: key '" + k + "' expects gaussian or rademacher");
       }},
      {"magnitude", [&](auto& k, auto& v) { cfg.magnitude = to_double(k, v); }},
      {"lambda", [&](auto& k, auto& v) {
         const double offset = cfg.lambda.offset;
         cfg.lambda = to_lambda(k, v);
         cfg.lambda.offset = offset;
       }},
      {"lambda_offset", [&](auto& k, auto& v) { cfg.lambda.offset = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = to_seed(k, v); }},
      {"out", [&](auto&, auto& v) { cfg.out_dir = v; }},
      {"re_probes", [&](auto& k, auto& v) { cfg.re_probes = to_index(k, v); }},
      {"c0", [&](auto& k, auto& v) { cfg.c0 = to_double(k, v); }},
      {"max_iters", [&](auto& k, auto& v) { cfg.solver.max_iters = static_cast<int>(to_index(k, v)); }},
      {"tol", [&](auto& k, auto& v) { cfg.solver.tol = to_double(k, v); }},
      {"accelerate", [&](auto& k, auto& v) { cfg.solver.accelerate = to_bool(k, v); }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = to_index(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_map(parse_key_values(text)); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "regime = " << to_string(cfg.regime) << "\n";
  os << "n = " << join(cfg.n_grid) << "\n";
  os << "p = " << join(cfg.p_grid) << "\n";
  os << "s = " << join(cfg.s_grid) << "\n";
  os << "q = " << num(cfg.q) << "\n";
  os << "radius = " << num(cfg.radius) << "\n";
  os << "group_size = " << cfg.group_size << "\n";
  os << "num_groups = " << join(cfg.num_groups_grid) << "\n";
  os << "active_groups = " << cfg.active_groups << "\n";
  os << "alpha = " << num(cfg.alpha) << "\n";
  os << "trials = " << cfg.trials << "\n";
  os << "sigma = " << num(cfg.sigma) << "\n";
  os << "covariance = " << cfg.covariance << "\n";
  os << "noise = " << (cfg.noise == NoiseKind::Gaussian ? "gaussian" : "rademacher") << "\n";
  os << "magnitude = " << num(cfg.magnitude) << "\n";
  switch (cfg.lambda.kind) {
    case LambdaPolicy::Kind::PaperRule:
      os << "lambda = paper\n";
      break;
    case LambdaPolicy::Kind::OracleGradient:
      os << "lambda = oracle\n";
      break;
    case LambdaPolicy::Kind::Fixed:
      os << "lambda = fixed:" << num(cfg.lambda.value) << "\n";
      break;
  }
  os << "lambda_offset = " << num(cfg.lambda.offset) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "out = " << cfg.out_dir << "\n";
  os << "re_probes = " << cfg.re_probes << "\n";
  os << "c0 = " << num(cfg.c0) << "\n";
  os << "max_iters = " << cfg.solver.max_iters << "\n";
  os << "tol = " << num(cfg.solver.tol) << "\n";
  os << "accelerate = " << (cfg.solver.accelerate ? "true" : "false") << "\n";
  os << "threads = " << cfg.threads << "\n";
  return os.str();
}

void ExperimentConfig::validate() const {
  auto positive = [](const std::vector<Index>& xs, const char* name) {
    if (xs.empty()) throw ConfigError(std::string("config: grid '") + name + "' is empty");
    for (Index x : xs)
      if (x <= 0) throw ConfigError(std::string("config: grid '") + name + "' needs positive entries");
  };
  positive(n_grid, "n");
  if (trials < 1) throw ConfigError("config: trials must be at least 1");
  if (!(sigma >= 0.0)) throw ConfigError("config: sigma must be nonnegative");
  try {
    (void)Covariance::parse(covariance);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (lambda.kind == LambdaPolicy::Kind::Fixed && !(lambda.value > 0.0))
    throw ConfigError("config: fixed lambda must be positive");
  if (lambda.kind == LambdaPolicy::Kind::PaperRule && regime != Regime::LogisticL1 && !(sigma > 0.0))
    throw ConfigError("config: the default lambda rule needs sigma > 0; use lambda = fixed:<value>");
  if (re_probes != 0 && re_probes < 1000) throw ConfigError("config: re_probes must be 0 or at least 1000");
  if (threads < 0) throw ConfigError("config: threads must be nonnegative");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  switch (regime) {
    case Regime::LassoHard:
    case Regime::LogisticL1:
      positive(p_grid, "p");
      positive(s_grid, "s");
      for (Index p : p_grid) {
        if (p < 2) throw ConfigError("config: p must be at least 2");
        for (Index s : s_grid)
          if (s > p) throw ConfigError("config: s must not exceed p");
      }
      break;
    case Regime::LassoWeak:
      positive(p_grid, "p");
      if (!(q > 0.0 && q <= 1.0)) throw ConfigError("config: q must lie in (0, 1]");
      if (!(radius > 0.0)) throw ConfigError("config: radius must be positive");
      for (Index p : p_grid)
        if (p < 2) throw ConfigError("config: p must be at least 2");
      break;
    case Regime::GroupLasso:
      positive(num_groups_grid, "num_groups");
      if (group_size < 1) throw ConfigError("config: group_size must be at least 1");
      if (!(alpha >= 2.0)) throw ConfigError("config: alpha must be at least 2");
      for (Index g : num_groups_grid) {
        if (g < 2) throw ConfigError("config: num_groups must be at least 2");
        if (active_groups < 0 || active_groups > g)
          throw ConfigError("config: active_groups must lie in [0, num_groups]");
      }
      break;
  }
}

}  // namespace mest
