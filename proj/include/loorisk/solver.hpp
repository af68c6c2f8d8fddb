#pragma once

#include "loorisk/losses.hpp"
#include "loorisk/regularizers.hpp"
#include "loorisk/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

namespace loorisk {

/// The sample D: design X (n x p) and responses y (n).
template <typename Scalar = double>
struct Dataset {
  MatrixX<Scalar> X;
  VectorX<Scalar> y;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  void validate() const {
    if (X.rows() != y.size())
      throw std::invalid_argument("dataset: X has " + std::to_string(X.rows()) +
                                  " rows but y has " + std::to_string(y.size()));
    if (!X.allFinite() || !y.allFinite())
      throw std::invalid_argument("dataset: non-finite entries");
  }

  Dataset without_rows(std::span<const Index> rows) const {
    std::vector<bool> drop(static_cast<std::size_t>(n()), false);
    for (Index r : rows) drop.at(static_cast<std::size_t>(r)) = true;
    std::vector<Index> keep;
    for (Index i = 0; i < n(); ++i)
      if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
    return {X(keep, Eigen::all), y(keep)};
  }
};

/// Loss, regularizer, penalty level and scoring function phi.
template <typename Scalar = double>
struct ModelSpec {
  LossSpec<Scalar> loss;
  RegSpec<Scalar> reg;
  Scalar lambda = 1;
  ErrorFunction phi = ErrorFunction::loss;

  void validate() const {
    loss.validate();
    reg.validate();
    if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
      throw std::invalid_argument("model: lambda must be positive");
  }

  bool smooth() const { return reg.smooth(); }

  Scalar score(Scalar y, Scalar z) const { return phi_eval(phi, loss, y, z); }
};

template <typename Scalar = double>
struct SolverOpts {
  Scalar tol = Scalar(1e-9);
  int max_iter = 500;
  Scalar line_search_shrink = Scalar(0.5);
  std::optional<VectorX<Scalar>> warm_start;

  void validate() const {
    if (!(tol > Scalar(0))) throw std::invalid_argument("solver: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solver: max_iter must be >= 1");
    if (!(line_search_shrink > Scalar(0) && line_search_shrink < Scalar(1)))
      throw std::invalid_argument("solver: line_search_shrink must lie in (0, 1)");
  }
};

template <typename Scalar = double>
struct FitResult {
  VectorX<Scalar> beta_hat;
  Scalar objective = 0;
  // Smooth path: |grad|_inf. Proximal path: |b - prox(b - eta grad)|_inf.
  Scalar grad_inf_norm = 0;
  int iterations = 0;
  bool converged = false;
  bool gradient_fallback = false;  // a Newton system was not positive definite
  Scalar step_size = 0;            // final eta (proximal path)
};

namespace detail {

template <typename Scalar>
struct LossStats {
  Scalar value = 0;
  VectorX<Scalar> d1;  // weighted
  VectorX<Scalar> d2;  // weighted, only when requested
};

template <typename Scalar>
LossStats<Scalar> loss_stats(const LossSpec<Scalar>& loss,
                             const VectorX<Scalar>& y, const VectorX<Scalar>& z,
                             const VectorX<Scalar>& weights, bool want_d2) {
  LossStats<Scalar> out;
  const Index n = y.size();
  out.d1.setZero(n);
  if (want_d2) out.d2.setZero(n);
  for (Index i = 0; i < n; ++i) {
    if (weights(i) == Scalar(0)) continue;
    const auto lv = loss_eval(loss, y(i), z(i));
    out.value += weights(i) * lv.value;
    out.d1(i) = weights(i) * lv.d1;
    if (want_d2) out.d2(i) = weights(i) * lv.d2;
  }
  return out;
}

template <typename Scalar>
Scalar loss_value(const LossSpec<Scalar>& loss, const VectorX<Scalar>& y,
                  const VectorX<Scalar>& z, const VectorX<Scalar>& weights) {
  Scalar total = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (weights(i) == Scalar(0)) continue;
    if (!std::isfinite(static_cast<double>(z(i))))
      return std::numeric_limits<Scalar>::infinity();
    total += weights(i) * loss_eval(loss, y(i), z(i)).value;
  }
  return total;
}

// X^T diag(d) X + diag(c), d >= 0.
template <typename Scalar>
MatrixX<Scalar> weighted_gram(const MatrixX<Scalar>& X, const VectorX<Scalar>& d,
                              const VectorX<Scalar>& c) {
  const MatrixX<Scalar> Xw = d.cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal() * X;
  MatrixX<Scalar> H = c.asDiagonal();
  H.template selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose());
  return H.template selfadjointView<Eigen::Lower>();
}

template <typename Scalar>
Scalar armijo_slack(Scalar f) {
  return Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
         (std::abs(f) + Scalar(1));
}

template <typename Scalar>
VectorX<Scalar> initial_beta(const Dataset<Scalar>& data,
                             const SolverOpts<Scalar>& opts) {
  if (opts.warm_start) {
    if (opts.warm_start->size() != data.p())
      throw std::invalid_argument("solver: warm start has wrong length");
    return *opts.warm_start;
  }
  return VectorX<Scalar>::Zero(data.p());
}

// Damped Newton on sum_i w_i ell_i + lambda r.
template <typename Scalar>
FitResult<Scalar> newton_fit(const Dataset<Scalar>& data,
                             const ModelSpec<Scalar>& model,
                             const VectorX<Scalar>& weights,
                             const SolverOpts<Scalar>& opts) {
  const auto& X = data.X;
  FitResult<Scalar> res;
  VectorX<Scalar> beta = initial_beta(data, opts);
  VectorX<Scalar> z = X * beta;
  const Scalar lambda = model.lambda;

  for (int it = 0;; ++it) {
    const auto st = loss_stats(model.loss, data.y, z, weights, true);
    const auto rg = reg_eval(model.reg, beta);
    const Scalar f = st.value + lambda * rg.value;
    const VectorX<Scalar> grad = X.transpose() * st.d1 + lambda * rg.gradient;
    res.beta_hat = beta;
    res.objective = f;
    res.grad_inf_norm = grad.template lpNorm<Eigen::Infinity>();
    res.iterations = it;
    if (res.grad_inf_norm <= opts.tol) {
      res.converged = true;
      return res;
    }
    if (it >= opts.max_iter) return res;

    const MatrixX<Scalar> H =
        weighted_gram<Scalar>(X, st.d2, lambda * rg.hessian_diag);
    Eigen::LLT<MatrixX<Scalar>> llt(H);
    VectorX<Scalar> dir;
    if (llt.info() == Eigen::Success) {
      dir = -llt.solve(grad);
    }
    if (llt.info() != Eigen::Success || !dir.allFinite() || grad.dot(dir) >= 0) {
      res.gradient_fallback = true;
      dir = -grad;
    }
    const Scalar slope = grad.dot(dir);
    const VectorX<Scalar> Xdir = X * dir;
    Scalar t = 1;
    bool accepted = false;
    while (t > Scalar(1e-20)) {
      const VectorX<Scalar> zt = z + t * Xdir;
      const VectorX<Scalar> bt = beta + t * dir;
      const Scalar ft = loss_value(model.loss, data.y, zt, weights) +
                        lambda * reg_value(model.reg, bt);
      if (ft <= f + Scalar(1e-4) * t * slope + armijo_slack(f)) {
        beta = bt;
        z = zt;
        accepted = true;
        break;
      }
      t *= opts.line_search_shrink;
    }
    if (!accepted) return res;  // stalled: converged stays false
  }
}

template <typename Scalar>
struct ProxState {
  Scalar lipschitz = 1;
};

// Monotone FISTA with adaptive restart on sum_i w_i ell_i + lambda r.
template <typename Scalar>
FitResult<Scalar> proximal_fit(const Dataset<Scalar>& data,
                               const ModelSpec<Scalar>& model,
                               const VectorX<Scalar>& weights,
                               const SolverOpts<Scalar>& opts,
                               Scalar initial_lipschitz = Scalar(1)) {
  const auto& X = data.X;
  const Scalar lambda = model.lambda;
  const Scalar grow = Scalar(1) / opts.line_search_shrink;
  Scalar L = initial_lipschitz;

  VectorX<Scalar> x = initial_beta(data, opts);
  VectorX<Scalar> zx = X * x;
  auto sx = loss_stats(model.loss, data.y, zx, weights, false);
  Scalar phix = sx.value + lambda * reg_value(model.reg, x);
  VectorX<Scalar> gx = X.transpose() * sx.d1;

  VectorX<Scalar> yv = x;
  VectorX<Scalar> zy = zx;
  Scalar t = 1;
  bool at_x = true;  // extrapolation point coincides with x

  FitResult<Scalar> res;
  const auto residual = [&](const VectorX<Scalar>& b, const VectorX<Scalar>& g) {
    const VectorX<Scalar> pb = prox_step(model.reg, b - g / L, Scalar(1) / L, lambda);
    return (b - pb).template lpNorm<Eigen::Infinity>();
  };

  for (int it = 0;; ++it) {
    res.beta_hat = x;
    res.objective = phix;
    res.grad_inf_norm = residual(x, gx);
    res.iterations = it;
    res.step_size = Scalar(1) / L;
    if (res.grad_inf_norm <= opts.tol) {
      res.converged = true;
      return res;
    }
    if (it >= opts.max_iter) return res;

    const auto sy = loss_stats(model.loss, data.y, zy, weights, false);
    const VectorX<Scalar> gy = X.transpose() * sy.d1;
    VectorX<Scalar> cand;
    VectorX<Scalar> zc;
    Scalar Fc = 0;
    for (;;) {
      cand = prox_step(model.reg, yv - gy / L, Scalar(1) / L, lambda);
      zc = X * cand;
      Fc = loss_value(model.loss, data.y, zc, weights);
      const VectorX<Scalar> diff = cand - yv;
      if (Fc <= sy.value + gy.dot(diff) + Scalar(0.5) * L * diff.squaredNorm() +
                    armijo_slack(sy.value))
        break;
      L *= grow;
      if (!std::isfinite(static_cast<double>(L)))
        throw NumericalError("proximal_fit: step size underflow");
    }
    const Scalar phic = Fc + lambda * reg_value(model.reg, cand);
    const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
    // A plain proximal step from x always descends; a rise there is rounding.
    if (phic <= phix || at_x) {
      // gradient-based restart when momentum points uphill
      const bool restart = (yv - cand).dot(cand - x) > Scalar(0);
      const VectorX<Scalar> x_prev = x;
      const VectorX<Scalar> zx_prev = zx;
      x = cand;
      zx = zc;
      phix = phic;
      if (restart) {
        t = 1;
        yv = x;
        zy = zx;
        at_x = true;
      } else {
        const Scalar mom = (t - Scalar(1)) / t_next;
        yv = x + mom * (x - x_prev);
        zy = zx + mom * (zx - zx_prev);
        t = t_next;
        at_x = false;
      }
    } else {
      // MFISTA: keep x, restart momentum from it
      t = 1;
      yv = x;
      zy = zx;
      at_x = true;
    }
    sx = loss_stats(model.loss, data.y, zx, weights, false);
    gx = X.transpose() * sx.d1;
  }
}

template <typename Scalar>
FitResult<Scalar> fit_weighted(const Dataset<Scalar>& data,
                               const ModelSpec<Scalar>& model,
                               const VectorX<Scalar>& weights,
                               const SolverOpts<Scalar>& opts,
                               Scalar initial_lipschitz = Scalar(1)) {
  data.validate();
  model.validate();
  opts.validate();
  for (Index i = 0; i < data.n(); ++i)
    if (weights(i) != Scalar(0) && !valid_response(model.loss, data.y(i)))
      throw std::invalid_argument("fit: response " + std::to_string(i) +
                                  " outside the loss domain");
  if (model.smooth()) return newton_fit(data, model, weights, opts);
  return proximal_fit(data, model, weights, opts, initial_lipschitz);
}

}  // namespace detail

/// Objective sum_i ell(y_i | x_i^T beta) + lambda r(beta).
template <typename Scalar>
Scalar objective(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                 const VectorX<Scalar>& beta) {
  const VectorX<Scalar> z = data.X * beta;
  const VectorX<Scalar> w = VectorX<Scalar>::Ones(data.n());
  return detail::loss_value(model.loss, data.y, z, w) +
         model.lambda * reg_value(model.reg, beta);
}

/// Penalized fit on the full dataset. Damped Newton for smooth
/// regularizers, monotone accelerated proximal gradient for l1 / elastic net.
template <typename Scalar>
FitResult<Scalar> fit(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                      const SolverOpts<Scalar>& opts = {}) {
  const VectorX<Scalar> w = VectorX<Scalar>::Ones(data.n());
  return detail::fit_weighted(data, model, w, opts);
}

/// Fit with the listed rows held out.
template <typename Scalar>
FitResult<Scalar> fit_without_rows(const Dataset<Scalar>& data,
                                   const ModelSpec<Scalar>& model,
                                   std::span<const Index> rows,
                                   const SolverOpts<Scalar>& opts = {}) {
  VectorX<Scalar> w = VectorX<Scalar>::Ones(data.n());
  for (Index r : rows) {
    if (r < 0 || r >= data.n()) throw std::out_of_range("fit: held-out row out of range");
    w(r) = 0;
  }
  return detail::fit_weighted(data, model, w, opts);
}

/// beta_hat with observation i removed, optionally warm started.
template <typename Scalar>
FitResult<Scalar> fit_leave_one_out(const Dataset<Scalar>& data,
                                    const ModelSpec<Scalar>& model, Index i,
                                    const std::optional<std::type_identity_t<VectorX<Scalar>>>& warm,
                                    std::type_identity_t<SolverOpts<Scalar>> opts = {}) {
  if (data.n() < 2) throw std::invalid_argument("leave-one-out needs n >= 2");
  if (warm) opts.warm_start = warm;
  const Index rows[] = {i};
  return fit_without_rows(data, model, std::span<const Index>(rows), opts);
}

/// Repeated leave-one-out refits around one full-data fit.
///
/// Smooth models iterate with the full-data Hessian, downdated by row i
/// through Sherman-Morrison, as a fixed preconditioner; the stopping rule is
/// the same gradient test as `fit`, so the result is the exact leave-i-out
/// minimizer. Falls back to damped Newton if the preconditioned iteration
/// stalls. Nonsmooth models warm start the proximal solver at beta_hat.
template <typename Scalar = double>
class LeaveOneOutRefitter {
 public:
  LeaveOneOutRefitter(const Dataset<Scalar>& data, const ModelSpec<Scalar>& model,
                      const FitResult<Scalar>& full, SolverOpts<Scalar> opts = {})
      : data_(data), model_(model), full_(full), opts_(std::move(opts)) {
    opts_.warm_start.reset();
    z_full_ = data_.X * full_.beta_hat;
    if (model_.smooth()) {
      const VectorX<Scalar> ones = VectorX<Scalar>::Ones(data_.n());
      const auto st = detail::loss_stats(model_.loss, data_.y, z_full_, ones, true);
      d2_ = st.d2;
      const auto rg = reg_eval(model_.reg, full_.beta_hat);
      llt_.compute(detail::weighted_gram<Scalar>(data_.X, d2_,
                                                 model_.lambda * rg.hessian_diag));
      factored_ = llt_.info() == Eigen::Success;
    } else if (full_.step_size > Scalar(0)) {
      lipschitz_ = Scalar(1) / full_.step_size;
    }
  }

  FitResult<Scalar> refit(Index i) const {
    if (i < 0 || i >= data_.n()) throw std::out_of_range("refit: row out of range");
    VectorX<Scalar> w = VectorX<Scalar>::Ones(data_.n());
    w(i) = 0;
    SolverOpts<Scalar> warm = opts_;
    warm.warm_start = full_.beta_hat;
    if (!model_.smooth())
      return detail::fit_weighted(data_, model_, w, warm, lipschitz_);
    if (factored_) {
      auto res = chord_refit(i, w);
      if (res.converged) return res;
      warm.warm_start = res.beta_hat;
    }
    return detail::fit_weighted(data_, model_, w, warm);
  }

  const FitResult<Scalar>& full_fit() const { return full_; }

 private:
  FitResult<Scalar> chord_refit(Index i, const VectorX<Scalar>& w) const {
    constexpr int kMaxChord = 60;
    const auto& X = data_.X;
    const Scalar lambda = model_.lambda;
    const VectorX<Scalar> xi = X.row(i).transpose();
    const VectorX<Scalar> u = llt_.solve(xi);
    const Scalar denom = Scalar(1) - d2_(i) * xi.dot(u);

    FitResult<Scalar> res;
    res.beta_hat = full_.beta_hat;
    if (!(denom > Scalar(1e-12))) return res;

    VectorX<Scalar> beta = full_.beta_hat;
    VectorX<Scalar> z = z_full_;
    for (int it = 0;; ++it) {
      const auto st = detail::loss_stats(model_.loss, data_.y, z, w, false);
      const auto rg = reg_eval(model_.reg, beta);
      const Scalar f = st.value + lambda * rg.value;
      const VectorX<Scalar> grad = X.transpose() * st.d1 + lambda * rg.gradient;
      res.beta_hat = beta;
      res.objective = f;
      res.grad_inf_norm = grad.template lpNorm<Eigen::Infinity>();
      res.iterations = it;
      if (res.grad_inf_norm <= opts_.tol) {
        res.converged = true;
        return res;
      }
      if (it >= kMaxChord) return res;
      const VectorX<Scalar> v = llt_.solve(grad);
      const VectorX<Scalar> dir = -(v + u * (d2_(i) * xi.dot(v) / denom));
      const Scalar slope = grad.dot(dir);
      if (!(slope < Scalar(0))) return res;
      const VectorX<Scalar> Xdir = X * dir;
      Scalar t = 1;
      bool accepted = false;
      while (t > Scalar(1e-10)) {
        const VectorX<Scalar> zt = z + t * Xdir;
        const VectorX<Scalar> bt = beta + t * dir;
        const Scalar ft = detail::loss_value(model_.loss, data_.y, zt, w) +
                          lambda * reg_value(model_.reg, bt);
        if (ft <= f + Scalar(1e-4) * t * slope + detail::armijo_slack(f)) {
          beta = bt;
          z = zt;
          accepted = true;
          break;
        }
        t *= opts_.line_search_shrink;
      }
      if (!accepted) return res;
    }
  }

  const Dataset<Scalar>& data_;
  ModelSpec<Scalar> model_;
  FitResult<Scalar> full_;
  SolverOpts<Scalar> opts_;
  VectorX<Scalar> z_full_;
  VectorX<Scalar> d2_;
  Eigen::LLT<MatrixX<Scalar>> llt_;
  bool factored_ = false;
  Scalar lipschitz_ = 1;
};

}  // namespace loorisk
