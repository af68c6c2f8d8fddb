#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loorisk {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an iterative fit or factorization cannot produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A leave-one-out (or held-out fold) refit failed; `index` names the row or fold.
class RefitError : public NumericalError {
 public:
  RefitError(Index index, const std::string& what)
      : NumericalError(what), index_(index) {}
  Index index() const noexcept { return index_; }

 private:
  Index index_;
};

}  // namespace loorisk
