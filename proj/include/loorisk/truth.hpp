#pragma once

#include "loorisk/types.hpp"

#include <cmath>
#include <optional>
#include <string_view>

namespace loorisk {

enum class ResponseFamily { linear, logistic, poisson_softrect, negative_binomial };

std::string_view to_string(ResponseFamily family);
ResponseFamily response_family_from_string(std::string_view name);

/// Feature covariance: either c * I (dimension implied by the vectors it
/// acts on) or an explicit SPD matrix.
template <typename Scalar = double>
class Covariance {
 public:
  static Covariance scaled_identity(Scalar c) {
    if (!(c > Scalar(0))) throw std::invalid_argument("covariance: scale must be positive");
    Covariance out;
    out.scale_ = c;
    return out;
  }

  static Covariance dense(MatrixX<Scalar> sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
      throw std::invalid_argument("covariance: matrix must be square");
    if (!sigma.isApprox(sigma.transpose(), Scalar(1e-12)))
      throw std::invalid_argument("covariance: matrix is not symmetric");
    Covariance out;
    out.chol_ = Eigen::LLT<MatrixX<Scalar>>(sigma);
    if (out.chol_->info() != Eigen::Success)
      throw std::invalid_argument("covariance: matrix is not positive definite");
    out.matrix_ = std::move(sigma);
    return out;
  }

  bool is_scaled_identity() const { return !matrix_.has_value(); }
  Scalar scale() const { return scale_; }
  const MatrixX<Scalar>& matrix() const { return *matrix_; }

  /// a^T Sigma b
  Scalar quad(const VectorX<Scalar>& a, const VectorX<Scalar>& b) const {
    if (a.size() != b.size()) throw std::invalid_argument("covariance: length mismatch");
    if (is_scaled_identity()) return scale_ * a.dot(b);
    check_dim(a.size());
    return a.dot(*matrix_ * b);
  }

  Scalar max_eigenvalue(Index p) const {
    if (is_scaled_identity()) return scale_;
    check_dim(p);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(*matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }

  Scalar trace(Index p) const {
    if (is_scaled_identity()) return scale_ * Scalar(p);
    check_dim(p);
    return matrix_->trace();
  }

  /// Lower Cholesky factor L with Sigma = L L^T (dense only).
  MatrixX<Scalar> cholesky_factor() const {
    if (is_scaled_identity()) throw std::logic_error("covariance: no dense factor");
    return chol_->matrixL();
  }

 private:
  void check_dim(Index p) const {
    if (matrix_->rows() != p) throw std::invalid_argument("covariance: dimension mismatch");
  }

  Scalar scale_ = 1;
  std::optional<MatrixX<Scalar>> matrix_;
  std::optional<Eigen::LLT<MatrixX<Scalar>>> chol_;
};

/// Data-generating truth: x ~ N(0, Sigma), y | x from `family` with linear
/// predictor x^T beta_star.
template <typename Scalar = double>
struct TrueModel {
  VectorX<Scalar> beta_star;
  Covariance<Scalar> covariance = Covariance<Scalar>::scaled_identity(1);
  Scalar noise_var = 0;  // linear family
  ResponseFamily family = ResponseFamily::linear;
  Scalar shape = 1;      // negative_binomial

  void validate() const {
    if (!(noise_var >= Scalar(0))) throw std::invalid_argument("truth: noise_var must be >= 0");
    if (family == ResponseFamily::negative_binomial && !(shape > Scalar(0)))
      throw std::invalid_argument("truth: shape must be positive");
  }
};

}  // namespace loorisk
