#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mest/harness.hpp"

namespace mest {

namespace {

std::string g10(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

double parse_double(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || *end != '\0')
    throw std::invalid_argument("csv line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

Index parse_index(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (field.empty() || *end != '\0')
    throw std::invalid_argument("csv line " + std::to_string(line) + ": bad integer '" + field + "'");
  return static_cast<Index>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"regime", "n",     "p",         "s",      "q",         "sG",
                                             "trial",  "lambda", "err_l2_sq", "err_reg", "bound",    "cone_ok",
                                             "kappa1_hat", "kappa2_hat", "iters", "wall_ms"};
  return cols;
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const TrialRecord& r : records) {
    out += std::string(to_string(r.regime)) + "," + std::to_string(r.n) + "," + std::to_string(r.p) + "," +
           std::to_string(r.s) + "," + g10(r.q) + "," + std::to_string(r.s_g) + "," + std::to_string(r.trial) +
           "," + g10(r.lambda) + "," + g10(r.err_l2_sq) + "," + g10(r.err_reg) + "," + g10(r.bound) + "," +
           (r.cone_ok ? "1" : "0") + "," + g10(r.kappa1_hat) + "," + g10(r.kappa2_hat) + "," +
           std::to_string(r.iters) + "," + g10(r.wall_ms) + "\n";
  }
  return out;
}

std::vector<TrialRecord> from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  {
    std::string expected;
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
    if (line != expected) throw std::invalid_argument("csv: header does not match the schema");
  }
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != csv_columns().size())
      throw std::invalid_argument("csv line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(csv_columns().size()) + " fields, got " + std::to_string(f.size()));
    TrialRecord r;
    r.regime = parse_regime(f[0]);
    r.n = parse_index(f[1], lineno);
    r.p = parse_index(f[2], lineno);
    r.s = parse_index(f[3], lineno);
    r.q = parse_double(f[4], lineno);
    r.s_g = parse_index(f[5], lineno);
    r.trial = parse_index(f[6], lineno);
    r.lambda = parse_double(f[7], lineno);
    r.err_l2_sq = parse_double(f[8], lineno);
    r.err_reg = parse_double(f[9], lineno);
    r.bound = parse_double(f[10], lineno);
    r.cone_ok = parse_index(f[11], lineno) != 0;
    r.kappa1_hat = parse_double(f[12], lineno);
    r.kappa2_hat = parse_double(f[13], lineno);
    r.iters = parse_index(f[14], lineno);
    r.wall_ms = parse_double(f[15], lineno);
    r.certified = std::isfinite(r.bound);
    out.push_back(r);
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<TrialRecord>& records) {
  write_file(path, to_csv(records));
}

std::vector<TrialRecord> read_csv(const std::string& path) { return from_csv(read_file(path)); }

std::string summary_text(const ExperimentReport& report) {
  std::ostringstream os;
  os << "# configuration\n" << format_config(report.config) << "\n";
  Index records = 0, nonconverged = 0;
  for (const CellSummary& s : report.summary) {
    records += s.trials;
    nonconverged += s.nonconverged;
  }
  os << "records = " << records << "\n";
  os << "nonconverged = " << nonconverged << "\n";
  for (std::size_t i = 0; i < report.summary.size(); ++i) {
    const CellSummary& s = report.summary[i];
    os << "\n[cell " << i << "]\n";
    os << "n = " << s.cell.n << "\np = " << s.cell.p << "\ns = " << s.cell.s << "\nq = " << g10(s.cell.q)
       << "\nsG = " << s.cell.s_g << "\n";
    if (s.cell.num_groups) os << "num_groups = " << s.cell.num_groups << "\ngroup_size = " << s.cell.group_size << "\n";
    os << "trials = " << s.trials << "\n";
    os << "median_err_l2_sq = " << g10(s.median_err) << "\n";
    os << "mean_err_l2_sq = " << g10(s.mean_err) << "\n";
    os << "median_bound = " << g10(s.median_bound) << "\n";
    os << "bound_violation_freq = " << g10(s.bound_violation_freq) << "\n";
    os << "certificate_failures = " << s.certificate_failures << "\n";
    os << "cone_failures = " << s.cone_failures << "\n";
    os << "nonconverged = " << s.nonconverged << "\n";
  }
  return os.str();
}

void emit(const ExperimentReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  write_csv((base / "results.csv").string(), report.records);
  write_file((base / "summary.txt").string(), summary_text(report));
}

}  // namespace mest
