#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mest/harness.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "mest_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path path = work_dir() / name;
  std::ofstream(path) << text;
  return path.string();
}

int run(const std::string& args) {
  const std::string cmd = std::string(MEST_CLI_PATH) + " " + args + " > " + (work_dir() / "stdout.txt").string() +
                          " 2> " + (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmall =
    "regime = lasso_hard\n"
    "n = 80\n"
    "p = 40\n"
    "s = 3\n"
    "trials = 3\n"
    "sigma = 0.5\n"
    "re_probes = 1000\n";

}  // namespace

TEST_CASE("experiment writes csv and summary") {
  const std::string cfg = write_config("small.cfg", kSmall);
  const fs::path out = work_dir() / "exp";
  CHECK(run("experiment --config " + cfg + " --out " + out.string() + " --seed 5") == 0);
  const auto rows = mest::read_csv((out / "results.csv").string());
  CHECK(rows.size() == 3);
  CHECK(fs::exists(out / "summary.txt"));
  CHECK(slurp(out / "summary.txt").find("seed = 5") != std::string::npos);

  // same seed, same numbers
  const fs::path again = work_dir() / "exp2";
  CHECK(run("experiment --config " + cfg + " --out " + again.string() + " --seed 5") == 0);
  const auto rows2 = mest::read_csv((again / "results.csv").string());
  REQUIRE(rows2.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].err_l2_sq == rows2[i].err_l2_sq);
}

TEST_CASE("solve, certify and bound") {
  const std::string cfg = write_config("small2.cfg", kSmall);
  const fs::path out = work_dir() / "one";
  CHECK(run("solve --config " + cfg + " --out " + out.string()) == 0);
  CHECK(slurp(out / "solve.txt").find("converged = true") != std::string::npos);
  CHECK(fs::exists(out / "theta_hat.txt"));
  CHECK(mest::read_instance((out / "instance.txt").string()).p() == 40);

  CHECK(run("certify --config " + cfg + " --out " + out.string()) == 0);
  const std::string cert = slurp(out / "certificate.txt");
  CHECK(cert.find("kappa1_hat = ") != std::string::npos);
  CHECK(cert.find("cone_ok = ") != std::string::npos);

  CHECK(run("bound --config " + cfg + " --out " + out.string()) == 0);
  CHECK(slurp(out / "bound.txt").find("bound_err_sq = ") != std::string::npos);

  const std::string fixed = write_config("kappa.cfg", std::string(kSmall) + "kappa = 1\n");
  CHECK(run("bound --config " + fixed + " --out " + out.string()) == 0);
  // 64 * 0.25 * 3 * log(40) / 80 at kappa = 1
  CHECK(slurp(out / "bound.txt").find("bound_err_sq = 2.213") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("experiment --config " + write_config("bad1.cfg", "colour = red\n")) == 2);
  CHECK(run("experiment --config " + write_config("bad2.cfg", "trials = 0\n")) == 2);
  CHECK(run("bound --config " + write_config("bad3.cfg", "kappa = -1\n")) == 2);
  CHECK(run("experiment") == 2);
  CHECK(run("frobnicate --config x") == 2);
  CHECK(slurp(work_dir() / "stderr.txt").size() > 0);
}

TEST_CASE("i/o errors exit with 3") {
  CHECK(run("experiment --config " + (work_dir() / "missing.cfg").string()) == 3);
  const std::string cfg = write_config("small3.cfg", kSmall);
  // a regular file where the output directory should go
  std::ofstream(work_dir() / "blocker") << "x";
  CHECK(run("experiment --config " + cfg + " --out " + (work_dir() / "blocker" / "sub").string()) == 3);
  CHECK(slurp(work_dir() / "stderr.txt").find("blocker") != std::string::npos);
}

TEST_CASE("MEST_THREADS is honoured") {
  const std::string cfg = write_config("small4.cfg", kSmall);
  const fs::path out = work_dir() / "threads";
  CHECK(run("experiment --config " + cfg + " --out " + out.string() + " --seed 5") == 0);
  ::setenv("MEST_THREADS", "1", 1);
  const fs::path serial = work_dir() / "threads_serial";
  CHECK(run("experiment --config " + cfg + " --out " + serial.string() + " --seed 5") == 0);
  ::unsetenv("MEST_THREADS");
  const auto a = mest::read_csv((out / "results.csv").string());
  const auto b = mest::read_csv((serial / "results.csv").string());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].err_l2_sq == b[i].err_l2_sq);
}
