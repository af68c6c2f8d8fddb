#pragma once

#include "loorisk/solver.hpp"
#include "loorisk/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace loorisk {

/// C_b = (c0 c1 rho sqrt(delta) / nu)^2
template <typename Scalar>
Scalar compute_Cb(Scalar c0, Scalar c1, Scalar rho, Scalar delta, Scalar nu) {
  if (!(c0 > 0 && c1 > 0 && rho > 0 && delta > 0 && nu > 0))
    throw std::invalid_argument("compute_Cb: inputs must be positive");
  const Scalar r = c0 * c1 * rho * std::sqrt(delta) / nu;
  return r * r;
}

/// C_v = E_var + 2 C_b + 2 sqrt(C_b) sqrt(E_var + C_b)
template <typename Scalar>
Scalar compute_Cv_from_parts(Scalar e_var, Scalar c_b) {
  if (!(e_var >= 0 && c_b >= 0))
    throw std::invalid_argument("compute_Cv_from_parts: inputs must be nonnegative");
  return e_var + Scalar(2) * c_b + Scalar(2) * std::sqrt(c_b) * std::sqrt(e_var + c_b);
}

/// Variance term of the ridge-logistic constant: 6 + 5 rho delta / lambda.
template <typename Scalar>
Scalar logistic_variance_term(Scalar rho, Scalar delta, Scalar lambda) {
  return Scalar(6) + Scalar(5) * rho * delta / lambda;
}

/// Ridge-regularized logistic regression constant:
///   6 + 5 rho delta / lambda + 2 a^2 + 2 a sqrt(6 + 5 rho delta / lambda + a^2),
///   a = 4 rho sqrt(delta) / lambda.
template <typename Scalar>
Scalar compute_Cv_logistic(Scalar rho, Scalar delta, Scalar lambda) {
  if (!(rho >= 0 && delta > 0 && lambda > 0))
    throw std::invalid_argument("compute_Cv_logistic: rho >= 0, delta > 0, lambda > 0 required");
  const Scalar a = Scalar(4) * rho * std::sqrt(delta) / lambda;
  const Scalar v = logistic_variance_term(rho, delta, lambda);
  return v + Scalar(2) * a * a + Scalar(2) * a * std::sqrt(v + a * a);
}

/// Empirical counterparts of the smoothness / curvature constants.
template <typename Scalar = double>
struct AssumptionAudit {
  Scalar c0_emp = 0;
  Scalar nu_emp = 0;
  // Sample means: E|ell'|^8, E|x|^4, E sigma_min^{-8}.
  Scalar c0_tilde_est = 0;
  Scalar c4_est = 0;
  Scalar nu_tilde_est = 0;
  int t_grid_size = 0;
  std::vector<Index> audited;
  std::vector<Scalar> sigma_min_per_index;  // inf over the t grid, per audited row
};

template <typename Scalar = double>
struct BoundReport {
  Scalar rho = 0;
  Scalar delta = 0;
  Scalar lambda = 0;
  Scalar c0 = 0;
  Scalar c1 = 0;
  Scalar nu = 0;
  Scalar C_b = 0;
  Scalar C_v = 0;
  Index n = 0;
  Scalar bound_over_n = 0;
  std::optional<AssumptionAudit<Scalar>> audit;
};

/// Constants for ridge logistic regression: c0 = c1 = 2, nu = lambda.
template <typename Scalar>
BoundReport<Scalar> logistic_ridge_bounds(Scalar rho, Scalar delta, Scalar lambda, Index n) {
  BoundReport<Scalar> rep;
  rep.rho = rho;
  rep.delta = delta;
  rep.lambda = lambda;
  rep.c0 = 2;
  rep.c1 = 2;
  rep.nu = lambda;
  rep.C_b = compute_Cb(rep.c0, rep.c1, rho, delta, lambda);
  rep.C_v = compute_Cv_logistic(rho, delta, lambda);
  rep.n = n;
  rep.bound_over_n = n > 0 ? rep.C_v / Scalar(n) : std::numeric_limits<Scalar>::quiet_NaN();
  return rep;
}

/// min(n, sample_i) row indices spread evenly over 0..n-1.
inline std::vector<Index> audit_sample_indices(Index n, Index sample_i) {
  const Index s = std::min(n, sample_i);
  std::vector<Index> out;
  for (Index k = 0; k < s; ++k) out.push_back(k * n / s);
  return out;
}

/// Smallest eigenvalue of A_{t,/i} = X_{/i}^T diag(ell''(theta)) X_{/i} + lambda grad^2 r(theta),
/// theta = t b_{/i} + (1 - t) b.
template <typename Scalar>
Scalar segment_hessian_min_eig(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                               Index i, const VectorX<Scalar>& theta) {
  const VectorX<Scalar> z = data.X * theta;
  VectorX<Scalar> d2(data.n());
  for (Index j = 0; j < data.n(); ++j)
    d2(j) = j == i ? Scalar(0) : loss_eval(model.loss, data.y(j), z(j)).d2;
  const MatrixX<Scalar> A = detail::weighted_gram<Scalar>(
      data.X, d2, model.lambda * reg_curvature(model.reg, theta));
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("audit: eigen-solve failed");
  return es.eigenvalues()(0);
}

/// Audit the derivative and curvature assumptions on a fitted instance.
/// `loo_fits` pairs audited row indices with their leave-one-out fits.
template <typename Scalar>
AssumptionAudit<Scalar> audit_assumptions(
    const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
    const FitResult<Scalar>& full_fit,
    const std::vector<std::pair<Index, FitResult<Scalar>>>& loo_fits,
    int t_grid_size = 11) {
  if (t_grid_size < 2) throw std::invalid_argument("audit: t grid needs >= 2 points");
  AssumptionAudit<Scalar> out;
  out.t_grid_size = t_grid_size;
  const auto& b = full_fit.beta_hat;
  const VectorX<Scalar> z = data.X * b;

  Scalar c0 = 0;
  Scalar m8 = 0;
  Scalar m4 = 0;
  for (Index i = 0; i < data.n(); ++i) {
    const Scalar d1 = std::abs(loss_eval(model.loss, data.y(i), z(i)).d1);
    c0 = std::max(c0, d1);
    m8 += std::pow(d1, 8);
    m4 += std::pow(data.X.row(i).squaredNorm(), 2);
  }
  out.c0_tilde_est = m8 / Scalar(data.n());
  out.c4_est = m4 / Scalar(data.n());

  Scalar nu = std::numeric_limits<Scalar>::infinity();
  Scalar inv8 = 0;
  for (const auto& [i, loo] : loo_fits) {
    const Scalar zi = data.X.row(i).dot(loo.beta_hat);
    c0 = std::max(c0, std::abs(loss_eval(model.loss, data.y(i), zi).d1));
    Scalar smin = std::numeric_limits<Scalar>::infinity();
    for (int g = 0; g < t_grid_size; ++g) {
      const Scalar t = Scalar(g) / Scalar(t_grid_size - 1);
      const VectorX<Scalar> theta = t * loo.beta_hat + (Scalar(1) - t) * b;
      smin = std::min(smin, segment_hessian_min_eig(data, model, i, theta));
    }
    out.audited.push_back(i);
    out.sigma_min_per_index.push_back(smin);
    nu = std::min(nu, smin);
    inv8 += smin > Scalar(0) ? std::pow(smin, -8) : std::numeric_limits<Scalar>::infinity();
  }
  out.c0_emp = c0;
  out.nu_emp = loo_fits.empty() ? Scalar(0) : std::max(nu, Scalar(0));
  out.nu_tilde_est = loo_fits.empty() ? Scalar(0) : inv8 / Scalar(loo_fits.size());
  return out;
}

template <typename Scalar = double>
struct PerturbCheck {
  Index i = 0;
  Scalar lhs = 0;  // |b_{/i} - b|_2
  Scalar rhs = 0;  // |ell'_i(b)| |x_i|_2 / nu
  Scalar slack = 0;
  bool holds = false;
};

/// |b_{/i} - b|_2 <= |ell'_i(b)| |x_i|_2 / nu, per audited row. `abs_tol`
/// absorbs the solver tolerance carried by both fits.
template <typename Scalar>
std::vector<PerturbCheck<Scalar>> check_perturb_lemma(
    const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
    const FitResult<Scalar>& full_fit,
    const std::vector<std::pair<Index, FitResult<Scalar>>>& loo_fits, Scalar nu_emp,
    Scalar abs_tol = Scalar(1e-7)) {
  if (!(nu_emp > Scalar(0))) throw std::invalid_argument("perturb check: nu must be positive");
  std::vector<PerturbCheck<Scalar>> out;
  for (const auto& [i, loo] : loo_fits) {
    PerturbCheck<Scalar> c;
    c.i = i;
    c.lhs = (loo.beta_hat - full_fit.beta_hat).norm();
    const Scalar zi = data.X.row(i).dot(full_fit.beta_hat);
    c.rhs = std::abs(loss_eval(model.loss, data.y(i), zi).d1) * data.X.row(i).norm() / nu_emp;
    c.slack = c.rhs - c.lhs;
    c.holds = c.lhs <= c.rhs * (Scalar(1) + Scalar(1e-9)) + abs_tol;
    out.push_back(c);
  }
  return out;
}

}  // namespace loorisk
