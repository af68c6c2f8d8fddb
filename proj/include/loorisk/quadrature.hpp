#pragma once

#include "loorisk/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace loorisk {

namespace detail {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first eigenvector components.
template <typename Scalar>
void golub_welsch(const VectorX<Scalar>& diag, const VectorX<Scalar>& offdiag, Scalar mu0,
                  VectorX<Scalar>& nodes, VectorX<Scalar>& weights) {
  const Index n = diag.size();
  MatrixX<Scalar> J = MatrixX<Scalar>::Zero(n, n);
  J.diagonal() = diag;
  for (Index k = 0; k + 1 < n; ++k) J(k, k + 1) = J(k + 1, k) = offdiag(k);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(J);
  if (es.info() != Eigen::Success) throw NumericalError("quadrature: eigen-solve failed");
  nodes = es.eigenvalues();
  weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
}

}  // namespace detail

/// Gauss-Hermite rule for the weight e^{-x^2}. Golub-Welsch start, then
/// Newton polish on the orthonormal Hermite recurrence.
template <typename Scalar = double>
class GaussHermiteRule {
 public:
  explicit GaussHermiteRule(int order) {
    if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be >= 1");
    const int n = order;
    VectorX<Scalar> off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(Scalar(k) / Scalar(2));
    detail::golub_welsch<Scalar>(VectorX<Scalar>::Zero(n), off,
                                 std::sqrt(std::numbers::pi_v<Scalar>), nodes_, weights_);
    const Scalar pim4 = std::pow(std::numbers::pi_v<Scalar>, Scalar(-0.25));
    for (int i = 0; i < n; ++i) {
      Scalar z = nodes_(i);
      Scalar pp = 0;
      for (int it = 0; it < 3; ++it) {
        Scalar p1 = pim4;
        Scalar p2 = 0;
        for (int j = 1; j <= n; ++j) {
          const Scalar p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(Scalar(2) / Scalar(j)) * p2 -
               std::sqrt(Scalar(j - 1) / Scalar(j)) * p3;
        }
        pp = std::sqrt(Scalar(2 * n)) * p2;
        if (!(pp != Scalar(0)) || !std::isfinite(pp)) break;
        z -= p1 / pp;
      }
      if (pp != Scalar(0) && std::isfinite(pp) && std::abs(z - nodes_(i)) < Scalar(1e-6)) {
        nodes_(i) = z;
        weights_(i) = Scalar(2) / (pp * pp);
      }
    }
    // exact symmetry
    for (int i = 0; i < n / 2; ++i) {
      const Scalar x = (nodes_(n - 1 - i) - nodes_(i)) / Scalar(2);
      const Scalar w = (weights_(n - 1 - i) + weights_(i)) / Scalar(2);
      nodes_(i) = -x;
      nodes_(n - 1 - i) = x;
      weights_(i) = weights_(n - 1 - i) = w;
    }
    if (n % 2 == 1) nodes_(n / 2) = 0;
  }

  int order() const { return static_cast<int>(nodes_.size()); }
  const VectorX<Scalar>& nodes() const { return nodes_; }
  const VectorX<Scalar>& weights() const { return weights_; }

  /// E f(V) for V ~ N(0, variance).
  template <typename F>
  Scalar normal_expectation(F&& f, Scalar variance) const {
    const Scalar s = std::sqrt(Scalar(2) * variance);
    Scalar total = 0;
    for (Index k = 0; k < nodes_.size(); ++k) total += weights_(k) * f(s * nodes_(k));
    return total / std::sqrt(std::numbers::pi_v<Scalar>);
  }

 private:
  VectorX<Scalar> nodes_;
  VectorX<Scalar> weights_;
};

/// Gauss-Laguerre rule for the weight e^{-u} on [0, inf).
template <typename Scalar = double>
class GaussLaguerreRule {
 public:
  explicit GaussLaguerreRule(int order) {
    if (order < 1) throw std::invalid_argument("Gauss-Laguerre order must be >= 1");
    VectorX<Scalar> diag(order), off(std::max(order - 1, 0));
    for (int k = 0; k < order; ++k) diag(k) = Scalar(2 * k + 1);
    for (int k = 1; k < order; ++k) off(k - 1) = Scalar(k);
    detail::golub_welsch<Scalar>(diag, off, Scalar(1), nodes_, weights_);
  }

  int order() const { return static_cast<int>(nodes_.size()); }
  const VectorX<Scalar>& nodes() const { return nodes_; }
  const VectorX<Scalar>& weights() const { return weights_; }

  /// Integral of e^{-u} g(u) over [0, inf).
  template <typename G>
  Scalar integrate(G&& g) const {
    Scalar total = 0;
    for (Index k = 0; k < nodes_.size(); ++k) total += weights_(k) * g(nodes_(k));
    return total;
  }

 private:
  VectorX<Scalar> nodes_;
  VectorX<Scalar> weights_;
};

}  // namespace loorisk
