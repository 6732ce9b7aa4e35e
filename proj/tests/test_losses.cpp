#include <doctest.h>

#include <cmath>
#include <random>

#include "mest/losses.hpp"

using namespace mest;

namespace {

DatasetD sample_data(Index n, Index p, bool binary, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  DatasetD d{MatrixXd(n, p), VectorXd(n)};
  for (Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = normal(rng);
  for (Index i = 0; i < n; ++i) d.y[i] = binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
  return d;
}

VectorXd random_vec(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  VectorXd v(p);
  for (Index j = 0; j < p; ++j) v[j] = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("loss values") {
  DatasetD d{MatrixXd::Identity(2, 2), VectorXd::Zero(2)};
  d.y << 1.0, 0.0;
  CHECK(loss_value(LossModel::least_squares(), VectorXd::Zero(2), d) == doctest::Approx(0.25));
  const VectorXd exact = d.y;
  CHECK(loss_value(LossModel::least_squares(), exact, d) == 0.0);

  std::mt19937_64 rng(1);
  const DatasetD b = sample_data(7, 3, true, rng);
  CHECK(loss_value(LossModel::logistic(), VectorXd::Zero(3), b) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(loss_value(LossModel::logistic(2.0), VectorXd::Zero(3), b) == doctest::Approx(std::log(2.0) / 2.0));
}

TEST_CASE("input validation") {
  std::mt19937_64 rng(2);
  DatasetD d = sample_data(5, 3, false, rng);
  CHECK_THROWS_AS((void)loss_value(LossModel::least_squares(), VectorXd::Zero(4), d), DimensionError);
  CHECK_THROWS_AS((void)loss_value(LossModel::logistic(), VectorXd::Zero(3), d), std::invalid_argument);
  d.y.resize(4);
  CHECK_THROWS_AS((void)loss_gradient(LossModel::least_squares(), VectorXd::Zero(3), d), DimensionError);
  CHECK_THROWS_AS(LossModel::logistic(0.0), std::invalid_argument);
}

TEST_CASE("softplus is stable") {
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(-800.0) < 1e-300);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(logistic_mean(-800.0) >= 0.0);
  CHECK(logistic_mean(800.0) == 1.0);
}

TEST_CASE("gradient values") {
  std::mt19937_64 rng(3);
  DatasetD d = sample_data(6, 4, false, rng);
  const VectorXd theta = random_vec(4, rng);
  d.y = d.X * theta;
  CHECK(loss_gradient(LossModel::least_squares(), theta, d).cwiseAbs().maxCoeff() < 1e-14);

  DatasetD one{MatrixXd(1, 2), VectorXd(1)};
  one.X << 1.0, 0.0;
  one.y << 2.0;
  const VectorXd g = loss_gradient(LossModel::least_squares(), VectorXd::Zero(2), one);
  CHECK(g[0] == -2.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(4);
  for (const LossModel& model : {LossModel::least_squares(), LossModel::logistic(), LossModel::logistic(1.7)}) {
    const bool binary = model.kind == LossKind::LogisticGLM;
    for (int k = 0; k < 100; ++k) {
      const DatasetD d = sample_data(20, 5, binary, rng);
      const VectorXd theta = random_vec(5, rng);
      const VectorXd g = loss_gradient(model, theta, d);
      VectorXd fd(5);
      const double h = 1e-5;
      for (Index j = 0; j < 5; ++j) {
        VectorXd a = theta, b = theta;
        a[j] += h;
        b[j] -= h;
        fd[j] = (loss_value(model, a, d) - loss_value(model, b, d)) / (2.0 * h);
      }
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("taylor error") {
  std::mt19937_64 rng(5);
  const DatasetD d = sample_data(10, 3, false, rng);
  const VectorXd ts = random_vec(3, rng);
  CHECK(taylor_error(LossModel::least_squares(), ts, VectorXd::Zero(3), d) == 0.0);

  const Index n = 4;
  DatasetD iso{std::sqrt(static_cast<double>(n)) * MatrixXd::Identity(n, n), VectorXd::Zero(n)};
  VectorXd e1 = VectorXd::Zero(n);
  e1[0] = 1.0;
  CHECK(taylor_error(LossModel::least_squares(), VectorXd::Zero(n), e1, iso) == doctest::Approx(0.5));

  // definition: three separately evaluated terms
  for (const LossModel& model : {LossModel::least_squares(), LossModel::logistic()}) {
    for (int k = 0; k < 50; ++k) {
      const DatasetD dd = sample_data(30, 4, model.kind == LossKind::LogisticGLM, rng);
      const VectorXd theta = random_vec(4, rng), delta = random_vec(4, rng);
      const VectorXd moved = theta + delta;
      const double direct = loss_value(model, moved, dd) - loss_value(model, theta, dd) -
                            loss_gradient(model, theta, dd).dot(delta);
      const double te = taylor_error(model, theta, delta, dd);
      CHECK(std::abs(te - direct) <= 1e-10);
      CHECK(te >= -1e-12);
    }
  }
}

TEST_CASE("least-squares taylor error is quadratic") {
  std::mt19937_64 rng(6);
  const DatasetD d = sample_data(15, 6, false, rng);
  const VectorXd theta = random_vec(6, rng), delta = random_vec(6, rng);
  const double base = taylor_error(LossModel::least_squares(), theta, delta, d);
  for (double c : {-3.0, 0.5, 2.0}) {
    const VectorXd scaled = c * delta;
    CHECK(taylor_error(LossModel::least_squares(), theta, scaled, d) == doctest::Approx(c * c * base).epsilon(1e-13));
  }
  CHECK(base == doctest::Approx((d.X * delta).squaredNorm() / 30.0));
}

TEST_CASE("single precision") {
  Dataset<float> d{Mat<float>::Identity(2, 2), Vec<float>::Zero(2)};
  d.y << 1.0f, 0.0f;
  CHECK(loss_value(LossModel::least_squares(), Vec<float>::Zero(2), d) == doctest::Approx(0.25f));
}
