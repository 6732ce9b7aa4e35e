#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mest {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vec<double>;
using MatrixXd = Mat<double>;

/// Raised when an argument's length or shape disagrees with the model.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, Index expected, Index actual)
      : std::invalid_argument(what + ": expected dimension " +
                              std::to_string(expected) + ", got " +
                              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  Index expected() const noexcept { return expected_; }
  Index actual() const noexcept { return actual_; }

 private:
  Index expected_;
  Index actual_;
};

inline void require_dim(const char* what, Index expected, Index actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

/// Design matrix and response, the observed sample the loss is built on.
template <typename Scalar>
struct Dataset {
  Mat<Scalar> X;
  Vec<Scalar> y;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

using DatasetD = Dataset<double>;

}  // namespace mest
