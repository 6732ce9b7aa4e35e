#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mest/types.hpp"

namespace mest {

enum class LossKind { LeastSquares, LogisticGLM };

inline const char* to_string(LossKind kind) {
  return kind == LossKind::LeastSquares ? "least_squares" : "logistic";
}

/// Loss family. For LogisticGLM the negative log-likelihood is divided by the
/// known scale c(sigma), which is 1 for the Bernoulli model.
struct LossModel {
  LossKind kind = LossKind::LeastSquares;
  double scale = 1.0;

  static LossModel least_squares() { return {LossKind::LeastSquares, 1.0}; }
  static LossModel logistic(double scale = 1.0) {
    if (!(scale > 0.0)) throw std::invalid_argument("logistic: scale c(sigma) must be positive");
    return {LossKind::LogisticGLM, scale};
  }
};

/// log(1 + e^t) without overflow.
template <typename Scalar>
Scalar softplus(Scalar t) {
  using std::exp;
  using std::log1p;
  return (t > Scalar(0) ? t : Scalar(0)) + log1p(exp(-std::abs(t)));
}

/// d/dt log(1 + e^t).
template <typename Scalar>
Scalar logistic_mean(Scalar t) {
  using std::exp;
  if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-t));
  const Scalar e = exp(t);
  return e / (Scalar(1) + e);
}

namespace detail {

template <typename Scalar, typename Derived>
void check_loss_inputs(const LossModel& model, const Dataset<Scalar>& data,
                       const Eigen::MatrixBase<Derived>& theta) {
  require_dim("loss: response length", data.X.rows(), data.y.size());
  require_dim("loss: parameter length", data.X.cols(), theta.size());
  if (model.kind == LossKind::LogisticGLM) {
    for (Index i = 0; i < data.y.size(); ++i) {
      if (data.y[i] != Scalar(0) && data.y[i] != Scalar(1))
        throw std::invalid_argument("logistic loss: response " + std::to_string(i) +
                                    " is not in {0, 1}");
    }
  }
}

}  // namespace detail

/// L(theta; X, y).
template <typename Scalar, typename Derived>
Scalar loss_value(const LossModel& model, const Eigen::MatrixBase<Derived>& theta,
                  const Dataset<Scalar>& data) {
  detail::check_loss_inputs(model, data, theta);
  const Scalar n = static_cast<Scalar>(data.n());
  const Vec<Scalar> eta = data.X * theta;
  if (model.kind == LossKind::LeastSquares) return (data.y - eta).squaredNorm() / (Scalar(2) * n);
  Scalar acc(0);
  for (Index i = 0; i < eta.size(); ++i) acc += softplus(eta[i]) - data.y[i] * eta[i];
  return acc / (n * Scalar(model.scale));
}

/// grad L(theta; X, y).
template <typename Scalar, typename Derived>
Vec<Scalar> loss_gradient(const LossModel& model, const Eigen::MatrixBase<Derived>& theta,
                          const Dataset<Scalar>& data) {
  detail::check_loss_inputs(model, data, theta);
  const Scalar n = static_cast<Scalar>(data.n());
  Vec<Scalar> r = data.X * theta;
  if (model.kind == LossKind::LeastSquares) {
    r -= data.y;
    return data.X.transpose() * r / n;
  }
  for (Index i = 0; i < r.size(); ++i) r[i] = logistic_mean(r[i]) - data.y[i];
  return data.X.transpose() * r / (n * Scalar(model.scale));
}

/// First-order Taylor remainder
///   dL(delta, theta*) = L(theta* + delta) - L(theta*) - <grad L(theta*), delta>.
///
/// Least squares gives ||X delta||^2 / 2n, the 1/2n normalisation of the loss.
/// The logistic remainder is accumulated per sample as the Bregman divergence
/// of log(1 + e^t); the response terms cancel exactly.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar taylor_error(const LossModel& model, const Eigen::MatrixBase<DerivedA>& theta_star,
                    const Eigen::MatrixBase<DerivedB>& delta, const Dataset<Scalar>& data) {
  detail::check_loss_inputs(model, data, theta_star);
  require_dim("taylor_error: perturbation length", data.X.cols(), delta.size());
  const Scalar n = static_cast<Scalar>(data.n());
  const Vec<Scalar> d = data.X * delta;
  if (model.kind == LossKind::LeastSquares) return d.squaredNorm() / (Scalar(2) * n);
  const Vec<Scalar> a = data.X * theta_star;
  Scalar acc(0);
  for (Index i = 0; i < a.size(); ++i)
    acc += softplus(a[i] + d[i]) - softplus(a[i]) - logistic_mean(a[i]) * d[i];
  return acc / (n * Scalar(model.scale));
}

}  // namespace mest
