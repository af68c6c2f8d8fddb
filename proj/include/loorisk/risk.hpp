#pragma once

#include "loorisk/rng.hpp"
#include "loorisk/solver.hpp"
#include "loorisk/types.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loorisk {

enum class RiskMethod { lo_exact, alo, kfold };

std::string_view to_string(RiskMethod method);
RiskMethod risk_method_from_string(std::string_view name);

/// Per-observation and aggregate out-of-sample risk estimate.
///
/// Entries whose ALO correction hits the pole H_ii -> 1 are stored as +inf,
/// listed in `flagged`, and excluded from `estimate`.
template <typename Scalar = double>
struct RiskReport {
  RiskMethod method = RiskMethod::lo_exact;
  VectorX<Scalar> per_sample;
  Scalar estimate = 0;
  std::optional<VectorX<Scalar>> h_diag;
  std::optional<std::vector<Index>> active_set;
  std::vector<Index> flagged;
  int folds = 0;  // kfold only

  void finalize() {
    Scalar sum = 0;
    Index count = 0;
    for (Index i = 0; i < per_sample.size(); ++i) {
      if (std::isfinite(static_cast<double>(per_sample(i)))) {
        sum += per_sample(i);
        ++count;
      }
    }
    estimate = count > 0 ? sum / Scalar(count)
                         : std::numeric_limits<Scalar>::quiet_NaN();
  }
};

struct AloOptions {
  double active_tol = 1e-8;  // relative to |beta_hat|_inf
  double pole_tol = 1e-12;   // H_ii >= 1 - pole_tol is flagged
};

/// Exact leave-one-out risk from an existing refitter.
template <typename Scalar>
RiskReport<Scalar> lo_exact(const Dataset<Scalar>& data,
                            const ModelSpec<Scalar>& model,
                            const LeaveOneOutRefitter<Scalar>& refitter) {
  RiskReport<Scalar> rep;
  rep.method = RiskMethod::lo_exact;
  rep.per_sample.resize(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    const auto res = refitter.refit(i);
    if (!res.converged)
      throw RefitError(i, "leave-one-out fit for row " + std::to_string(i) +
                              " did not converge (residual " +
                              std::to_string(static_cast<double>(res.grad_inf_norm)) + ")");
    rep.per_sample(i) = model.score(data.y(i), data.X.row(i).dot(res.beta_hat));
  }
  rep.finalize();
  return rep;
}

/// LO = (1/n) sum_i phi(y_i, x_i^T beta_hat_{/i}).
template <typename Scalar>
RiskReport<Scalar> lo_exact(const Dataset<Scalar>& data,
                            const ModelSpec<Scalar>& model,
                            const SolverOpts<Scalar>& opts = {}) {
  if (data.n() < 2) throw std::invalid_argument("lo_exact needs n >= 2");
  const auto full = fit(data, model, opts);
  if (!full.converged) throw NumericalError("lo_exact: full-data fit did not converge");
  LeaveOneOutRefitter<Scalar> refitter(data, model, full, opts);
  return lo_exact(data, model, refitter);
}

/// Approximate leave-one-out via one Newton step from the full fit:
///   phi(y_i, x_i^T b + H_ii/(1 - H_ii) * ell'_i / ell''_i).
/// Smooth regularizers use H = X (X^T D X + lambda grad^2 r)^{-1} X^T D; l1 and
/// elastic net restrict to the active set S and keep only the quadratic part
/// of r there (which is zero for l1).
template <typename Scalar>
RiskReport<Scalar> alo(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                       const FitResult<Scalar>& full_fit,
                       const AloOptions& aopts = {}) {
  if (!full_fit.converged) throw NumericalError("alo: full fit is not converged");
  const Index n = data.n();
  const auto& beta = full_fit.beta_hat;
  const VectorX<Scalar> z = data.X * beta;
  VectorX<Scalar> d1(n), d2(n);
  for (Index i = 0; i < n; ++i) {
    const auto lv = loss_eval(model.loss, data.y(i), z(i));
    d1(i) = lv.d1;
    d2(i) = lv.d2;
    if (!(lv.d2 > Scalar(0)))
      throw NumericalError("alo: zero loss curvature at row " + std::to_string(i));
  }

  RiskReport<Scalar> rep;
  rep.method = RiskMethod::alo;
  VectorX<Scalar> h = VectorX<Scalar>::Zero(n);

  if (model.smooth()) {
    const auto rg = reg_eval(model.reg, beta);
    const MatrixX<Scalar> K =
        detail::weighted_gram<Scalar>(data.X, d2, model.lambda * rg.hessian_diag);
    Eigen::LLT<MatrixX<Scalar>> llt(K);
    if (llt.info() != Eigen::Success) throw NumericalError("alo: singular Hessian");
    const MatrixX<Scalar> W = llt.matrixL().solve(data.X.transpose());
    h = d2.cwiseProduct(W.colwise().squaredNorm().transpose());
  } else {
    const Scalar bmax = beta.template lpNorm<Eigen::Infinity>();
    std::vector<Index> active;
    for (Index j = 0; j < beta.size(); ++j)
      if (bmax > Scalar(0) && std::abs(beta(j)) > Scalar(aopts.active_tol) * bmax)
        active.push_back(j);
    if (!active.empty()) {
      const MatrixX<Scalar> XS = data.X(Eigen::all, active);
      const VectorX<Scalar> curv =
          model.lambda * reg_curvature(model.reg, VectorX<Scalar>(beta(active)));
      const MatrixX<Scalar> K = detail::weighted_gram<Scalar>(XS, d2, curv);
      Eigen::LLT<MatrixX<Scalar>> llt(K);
      if (llt.info() != Eigen::Success)
        throw NumericalError("alo: singular active-set matrix (|S| = " +
                             std::to_string(active.size()) + ")");
      const MatrixX<Scalar> W = llt.matrixL().solve(XS.transpose());
      h = d2.cwiseProduct(W.colwise().squaredNorm().transpose());
    }
    rep.active_set = std::move(active);
  }

  rep.per_sample.resize(n);
  for (Index i = 0; i < n; ++i) {
    if (h(i) >= Scalar(1) - Scalar(aopts.pole_tol)) {
      rep.per_sample(i) = std::numeric_limits<Scalar>::infinity();
      rep.flagged.push_back(i);
      continue;
    }
    const Scalar zi = z(i) + (h(i) / (Scalar(1) - h(i))) * d1(i) / d2(i);
    rep.per_sample(i) = model.score(data.y(i), zi);
  }
  rep.h_diag = std::move(h);
  rep.finalize();
  return rep;
}

/// Fold id per row: seeded Fisher-Yates shuffle, then K contiguous blocks
/// whose sizes differ by at most one.
inline std::vector<Index> kfold_assignment(Index n, int K, std::uint64_t seed) {
  if (K < 2 || K > n) throw std::invalid_argument("kfold: need 2 <= K <= n");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> fold(static_cast<std::size_t>(n));
  const Index base = n / K;
  const Index extra = n % K;
  Index pos = 0;
  for (int k = 0; k < K; ++k) {
    const Index size = base + (k < extra ? 1 : 0);
    for (Index s = 0; s < size; ++s)
      fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = k;
  }
  return fold;
}

/// K-fold CV with an explicit fold id per row.
template <typename Scalar>
RiskReport<Scalar> kfold_cv_with_folds(const Dataset<Scalar>& data,
                                       const ModelSpec<Scalar>& model,
                                       const std::vector<Index>& fold_of,
                                       const SolverOpts<Scalar>& opts = {}) {
  if (static_cast<Index>(fold_of.size()) != data.n())
    throw std::invalid_argument("kfold: fold assignment has wrong length");
  const Index K = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  const auto full = fit(data, model, opts);
  SolverOpts<Scalar> warm = opts;
  if (full.converged) warm.warm_start = full.beta_hat;

  RiskReport<Scalar> rep;
  rep.method = RiskMethod::kfold;
  rep.folds = static_cast<int>(K);
  rep.per_sample.resize(data.n());
  for (Index k = 0; k < K; ++k) {
    std::vector<Index> rows;
    for (Index i = 0; i < data.n(); ++i)
      if (fold_of[static_cast<std::size_t>(i)] == k) rows.push_back(i);
    if (rows.empty()) continue;
    const auto res = fit_without_rows(data, model, std::span<const Index>(rows), warm);
    if (!res.converged)
      throw RefitError(k, "fold " + std::to_string(k) + " fit did not converge");
    for (Index i : rows)
      rep.per_sample(i) = model.score(data.y(i), data.X.row(i).dot(res.beta_hat));
  }
  rep.finalize();
  return rep;
}

/// K-fold cross validation. K = n is leave-one-out and is routed through
/// `lo_exact` so both agree exactly.
template <typename Scalar>
RiskReport<Scalar> kfold_cv(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                            int K, std::uint64_t seed,
                            const SolverOpts<Scalar>& opts = {}) {
  if (K < 2 || K > data.n()) throw std::invalid_argument("kfold: need 2 <= K <= n");
  if (K == data.n()) {
    auto rep = lo_exact(data, model, opts);
    rep.method = RiskMethod::kfold;
    rep.folds = K;
    return rep;
  }
  return kfold_cv_with_folds(data, model, kfold_assignment(data.n(), K, seed), opts);
}

}  // namespace loorisk
