#include <doctest.h>

#include <cmath>
#include <limits>

#include "mest/bounds.hpp"

using namespace mest;

TEST_CASE("theorem1_bound") {
  CHECK(theorem1_bound(0.3, 0.5, 2.0, 0.0, 0.0) == doctest::Approx(9.0 * 0.09 * 4.0 / 0.25));
  CHECK(theorem1_bound(1.0, 1.0, 0.0, 0.5, 0.0) == doctest::Approx(1.0));
  const double a = theorem1_bound(0.1, 0.7, 3.0, 0.0, 0.0);
  CHECK(theorem1_bound(0.2, 0.7, 3.0, 0.0, 0.0) == doctest::Approx(4.0 * a));
  CHECK_THROWS_AS(theorem1_bound(1.0, 0.0, 1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_bound(1.0, -1.0, 1.0, 0.0, 0.0), std::invalid_argument);
  // single precision instantiation
  CHECK(theorem1_bound(1.0f, 1.0f, 1.0f, 0.0f, 0.0f) == doctest::Approx(9.0f));
}

TEST_CASE("corollary1_bounds") {
  const auto [err, reg] = corollary1_bounds(1.0, 1.0, 1.0);
  CHECK(err == 9.0);
  CHECK(reg == 12.0);
  const double psi = std::sqrt(8.0);
  const auto b = corollary1_bounds(0.2, 0.4, psi);
  CHECK(b.second / b.first == doctest::Approx(4.0 / (3.0 * 0.2)));
  const auto z = corollary1_bounds(0.2, 0.4, 0.0);
  CHECK(z.first == 0.0);
  CHECK(z.second == 0.0);
  CHECK_THROWS_AS(corollary1_bounds(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("the two printed curvature conventions") {
  // theorem1 with kappa^2 replaced by kappa reproduces the corollary's error bound
  for (double kappa : {0.25, 0.5, 2.0}) {
    const double lam = 0.3, psi = 2.5;
    CHECK(theorem1_bound(lam, std::sqrt(kappa), psi, 0.0, 0.0) ==
          doctest::Approx(corollary1_bounds(lam, kappa, psi).first).epsilon(1e-14));
  }
}

TEST_CASE("lasso_hard_bound") {
  const auto [l2, l1] = lasso_hard_bound(1.0, 1.0, 8.0, 256.0, 1000.0);
  CHECK(l2 == doctest::Approx(2.839130851573536).epsilon(1e-14));
  CHECK(l1 == doctest::Approx(14.297462058466692).epsilon(1e-14));
  CHECK(lasso_hard_bound(1.0, 1.0, 8.0, 256.0, 2000.0).first == doctest::Approx(l2 / 2.0));
  CHECK_THROWS_AS(lasso_hard_bound(1.0, 1.0, 0.0, 256.0, 1000.0), std::invalid_argument);
}

TEST_CASE("lasso_hard_bound against theorem1 with the matching lambda") {
  // lambda = 4 sigma sqrt(log p / n), Psi = sqrt(s): the general bound gives
  // 144 sigma^2 s log p / (n kappa^2) and the corollary's regularizer bound
  // 48 sigma s sqrt(log p / n) / kappa, versus the printed 64 and 24.
  for (double sigma : {0.5, 1.0, 2.0})
    for (double kappa : {0.25, 1.0}) {
      const double s = 8.0, p = 512.0, n = 800.0;
      const double lam = 4.0 * sigma * std::sqrt(std::log(p) / n);
      const auto [l2, l1] = lasso_hard_bound(sigma, kappa, s, p, n);
      CHECK(theorem1_bound(lam, kappa, std::sqrt(s), 0.0, 0.0) / l2 == doctest::Approx(9.0 / 4.0));
      CHECK(corollary1_bounds(lam, kappa, std::sqrt(s)).second / l1 == doctest::Approx(2.0));
    }
}

TEST_CASE("lasso_weak_bound") {
  const auto w = lasso_weak_bound(1.0, 1.0, 2.0, 0.5, 256.0, 1000.0, 1.0);
  CHECK(w.value == doctest::Approx(0.0406412055164644).epsilon(1e-13));
  CHECK(w.in_regime);
  // q = 0, R_0 = s, c0 = 64 is the hard-sparse bound
  CHECK(lasso_weak_bound(1.3, 0.6, 8.0, 0.0, 256.0, 1000.0).value ==
        doctest::Approx(lasso_hard_bound(1.3, 0.6, 8.0, 256.0, 1000.0).first).epsilon(1e-14));
  // q = 1: exponent one half
  const double rate = std::log(256.0) / 1000.0;
  CHECK(lasso_weak_bound(1.0, 1.0, 3.0, 1.0, 256.0, 1000.0, 1.0).value == doctest::Approx(3.0 * std::sqrt(rate)));
  // precondition: sqrt(R_q) (log p / n)^(1/2 - q/4) <= 1
  const auto out = lasso_weak_bound(1.0, 1.0, 400.0, 0.5, 256.0, 100.0);
  CHECK_FALSE(out.in_regime);
  CHECK(out.value > 0.0);
  CHECK_THROWS_AS(lasso_weak_bound(1.0, 1.0, 2.0, 1.5, 256.0, 1000.0), std::invalid_argument);
}

TEST_CASE("group_bound and the subset sweep") {
  CHECK(group_bound(0.5, 0.25, 3.0, 0.0) == doctest::Approx(4.0 * 0.25 / 0.0625 * 3.0));
  CHECK(group_bound(0.5, 0.25, 0.0, 7.0) == doctest::Approx(4.0 * 0.5 / 0.25 * 7.0));

  const std::vector<double> norms{4.0, 2.0, 1.0, 0.0};
  for (double lam : {0.05, 0.3, 1.0, 3.0}) {
    const double kappa = 0.5;
    // exhaustive check over all 2^4 subsets
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < 16; ++mask) {
      double tail = 0.0, size = 0.0;
      for (unsigned t = 0; t < 4; ++t) {
        if (mask & (1U << t))
          size += 1.0;
        else
          tail += norms[t];
      }
      best = std::min(best, 4.0 * lam * lam / (kappa * kappa) * size + 4.0 * lam / kappa * tail);
    }
    const GroupSweep sweep = group_bound_sweep(lam, kappa, norms);
    CHECK(sweep.bound == doctest::Approx(best).epsilon(1e-14));
    double tail = 0.0;
    for (std::size_t t = 0; t < norms.size(); ++t)
      if (std::find(sweep.subset.begin(), sweep.subset.end(), t) == sweep.subset.end()) tail += norms[t];
    CHECK(group_bound(lam, kappa, static_cast<double>(sweep.subset.size()), tail) == doctest::Approx(sweep.bound));
  }
}

TEST_CASE("singleton groups reduce to the l1 combination") {
  const std::vector<double> theta{1.5, -0.2, 0.0, 0.7, -0.05};
  const double lam = 0.2, kappa = 0.5;
  // S = {0, 3}; singleton l2 group norms are absolute values
  const double l1_tail = std::abs(theta[1]) + std::abs(theta[2]) + std::abs(theta[4]);
  CHECK(group_bound(lam, kappa, 2.0, l1_tail) ==
        doctest::Approx(4.0 * lam * lam * 2.0 / (kappa * kappa) + 4.0 * lam * l1_tail / kappa));
}

TEST_CASE("bounds are monotone in each argument") {
  const double h = 1e-3;
  const double base[5] = {0.3, 0.5, 2.0, 0.1, 0.2};
  const double b0 = theorem1_bound(base[0], base[1], base[2], base[3], base[4]);
  CHECK(theorem1_bound(base[0] + h, base[1], base[2], base[3], base[4]) >= b0);
  CHECK(theorem1_bound(base[0], base[1], base[2] + h, base[3], base[4]) >= b0);
  CHECK(theorem1_bound(base[0], base[1], base[2], base[3] + h, base[4]) >= b0);
  CHECK(theorem1_bound(base[0], base[1], base[2], base[3], base[4] + h) >= b0);
  CHECK(theorem1_bound(base[0], base[1] + h, base[2], base[3], base[4]) <= b0);
  CHECK(group_bound(0.3 + h, 0.5, 2.0, 1.0) >= group_bound(0.3, 0.5, 2.0, 1.0));
  CHECK(group_bound(0.3, 0.5, 2.0, 1.0 + h) >= group_bound(0.3, 0.5, 2.0, 1.0));
  CHECK(lasso_weak_bound(1.0, 1.0, 2.0 + h, 0.5, 256.0, 1000.0).value >=
        lasso_weak_bound(1.0, 1.0, 2.0, 0.5, 256.0, 1000.0).value);
}
