#include <cstdio>
#include <fstream>
#include <sstream>

#include "mest/harness.hpp"

namespace mest {

// Layout:
//   key = value header lines (n, p, sigma, seed, loss, covariance, target)
//   "data" then n rows of p design entries followed by y_i
//   "theta_star" then p values, one per line
void write_instance(const std::string& path, const ProblemInstance& inst) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write instance '" + path + "'");
  char buf[40];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  out << "n = " << inst.n() << "\n";
  out << "p = " << inst.p() << "\n";
  out << "sigma = " << num(inst.sigma) << "\n";
  out << "seed = " << inst.seed << "\n";
  out << "loss = " << to_string(inst.loss) << "\n";
  out << "covariance = " << inst.covariance << "\n";
  out << "target = " << (inst.target.empty() ? "none" : inst.target) << "\n";
  out << "data\n";
  for (Index i = 0; i < inst.n(); ++i) {
    for (Index j = 0; j < inst.p(); ++j) out << num(inst.X(i, j)) << ' ';
    out << num(inst.y[i]) << "\n";
  }
  out << "theta_star\n";
  for (Index j = 0; j < inst.theta_star.size(); ++j) out << num(inst.theta_star[j]) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for instance '" + path + "'");
}

ProblemInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read instance '" + path + "'");
  std::string header, line;
  while (std::getline(in, line) && line != "data") header += line + "\n";
  if (line != "data") throw std::invalid_argument("instance '" + path + "': missing data section");
  const auto kv = parse_key_values(header);
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("instance '" + path + "': missing key '" + key + "'");
    return it->second;
  };
  ProblemInstance inst;
  const Index n = std::stoll(get("n"));
  const Index p = std::stoll(get("p"));
  inst.sigma = std::stod(get("sigma"));
  inst.seed = std::stoull(get("seed"));
  inst.loss = get("loss") == "logistic" ? LossKind::LogisticGLM : LossKind::LeastSquares;
  inst.covariance = get("covariance");
  inst.target = kv.count("target") && kv.at("target") != "none" ? kv.at("target") : "";
  inst.X.resize(n, p);
  inst.y.resize(n);
  inst.theta_star.resize(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) in >> inst.X(i, j);
    in >> inst.y[i];
  }
  std::string tag;
  in >> tag;
  if (tag != "theta_star") throw std::invalid_argument("instance '" + path + "': missing theta_star section");
  for (Index j = 0; j < p; ++j) in >> inst.theta_star[j];
  if (!in) throw std::invalid_argument("instance '" + path + "': truncated payload");
  return inst;
}

}  // namespace mest
