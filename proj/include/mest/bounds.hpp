#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

namespace mest {

/// Squared-error bound plus the inputs it was evaluated at.
///
/// Probabilistic qualifiers ("with probability at least 1 - c1 exp(-c2 n lambda^2)")
/// carry unspecified constants and are reported only through `regime`.
struct BoundReport {
  std::string regime;
  double bound_err_sq = 0.0;
  std::optional<double> bound_reg;
  double lambda = 0.0;
  double kappa = 0.0;
  double psi = 0.0;
  double tau_sq = 0.0;
  double approx = 0.0;
  /// false when a stated precondition of the bound does not hold.
  bool in_regime = true;
};

namespace detail {

inline void require_positive_kappa(double kappa, const char* fn) {
  if (!(kappa > 0.0)) throw std::invalid_argument(std::string(fn) + ": curvature must be positive");
}

}  // namespace detail

/// 9 lambda^2 Psi^2 / kappa^2 + (lambda / kappa) (2 tau^2 + 4 approx).
template <std::floating_point T>
T theorem1_bound(T lambda, T kappa, T psi, T tau_sq, T approx) {
  detail::require_positive_kappa(static_cast<double>(kappa), "theorem1_bound");
  if (!(lambda > T(0))) throw std::invalid_argument("theorem1_bound: lambda must be positive");
  if (psi < T(0) || tau_sq < T(0) || approx < T(0))
    throw std::invalid_argument("theorem1_bound: Psi, tau^2 and approximation error must be nonnegative");
  return T(9) * lambda * lambda * psi * psi / (kappa * kappa) +
         (lambda / kappa) * (T(2) * tau_sq + T(4) * approx);
}

/// Exactly structured case, as printed: error bound 9 lambda^2 Psi^2 / kappa
/// and regularizer-norm bound 12 lambda Psi^2 / kappa. The first divides by
/// kappa where theorem1_bound divides by kappa^2.
template <std::floating_point T>
std::pair<T, T> corollary1_bounds(T lambda, T kappa, T psi) {
  detail::require_positive_kappa(static_cast<double>(kappa), "corollary1_bounds");
  return {T(9) * lambda * lambda * psi * psi / kappa, T(12) * lambda * psi * psi / kappa};
}

/// Hard-sparse Lasso: (64 sigma^2 / kappa^2) s log p / n and
/// (24 sigma / kappa) s sqrt(log p / n).
template <std::floating_point T>
std::pair<T, T> lasso_hard_bound(T sigma, T kappa, T s, T p, T n) {
  using std::log;
  using std::sqrt;
  detail::require_positive_kappa(static_cast<double>(kappa), "lasso_hard_bound");
  if (p < T(2) || n < T(2) || s < T(1))
    throw std::invalid_argument("lasso_hard_bound: need p, n >= 2 and s >= 1");
  const T rate = log(p) / n;
  return {T(64) * sigma * sigma / (kappa * kappa) * s * rate, T(24) * sigma / kappa * s * sqrt(rate)};
}

struct WeakSparsityBound {
  double value = 0.0;
  /// sqrt(R_q) (log p / n)^(1/2 - q/4) <= 1
  bool in_regime = true;
};

/// c0 R_q (sigma^2 / kappa1^2 * log p / n)^(1 - q/2).
inline WeakSparsityBound lasso_weak_bound(double sigma, double kappa1, double radius, double q,
                                          double p, double n, double c0 = 64.0) {
  detail::require_positive_kappa(kappa1, "lasso_weak_bound");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("lasso_weak_bound: q must lie in [0, 1]");
  if (p < 2.0 || n < 2.0) throw std::invalid_argument("lasso_weak_bound: need p, n >= 2");
  const double rate = std::log(p) / n;
  WeakSparsityBound out;
  out.value = c0 * radius * std::pow(sigma * sigma / (kappa1 * kappa1) * rate, 1.0 - q / 2.0);
  out.in_regime = std::sqrt(radius) * std::pow(rate, 0.5 - q / 4.0) <= 1.0;
  return out;
}

/// (4 lambda^2 / kappa^2) s_G + (4 lambda / kappa) tail.
template <std::floating_point T>
T group_bound(T lambda, T kappa, T active_groups, T tail) {
  detail::require_positive_kappa(static_cast<double>(kappa), "group_bound");
  if (active_groups < T(0) || tail < T(0))
    throw std::invalid_argument("group_bound: s_G and tail must be nonnegative");
  return T(4) * lambda * lambda / (kappa * kappa) * active_groups + T(4) * lambda / kappa * tail;
}

struct GroupSweep {
  double bound = 0.0;
  /// Minimising subset, group indices in decreasing order of block norm.
  std::vector<std::size_t> subset;
};

/// Minimises group_bound over the prefix subsets of groups sorted by
/// decreasing block norm, trading estimation against approximation error.
inline GroupSweep group_bound_sweep(double lambda, double kappa, const std::vector<double>& group_norms) {
  std::vector<std::size_t> order(group_norms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group_norms[a] > group_norms[b]; });
  double tail = std::accumulate(group_norms.begin(), group_norms.end(), 0.0);
  GroupSweep best;
  best.bound = group_bound(lambda, kappa, 0.0, tail);
  for (std::size_t k = 0; k < order.size(); ++k) {
    tail = 0.0;
    for (std::size_t j = k + 1; j < order.size(); ++j) tail += group_norms[order[j]];
    const double b = group_bound(lambda, kappa, static_cast<double>(k + 1), tail);
    if (b < best.bound) {
      best.bound = b;
      best.subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1));
    }
  }
  return best;
}

}  // namespace mest
