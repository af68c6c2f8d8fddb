#pragma once

#include "loorisk/losses.hpp"
#include "loorisk/types.hpp"

#include <cmath>
#include <string_view>

namespace loorisk {

enum class RegFamily {
  ridge,                 // |b|^2 / 2
  smoothed_elastic_net,  // mix b^2 + (1 - mix) r_a(b), r_a a softplus surrogate of |b|
  l1,                    // |b|
  elastic_net,           // (1 - mix)/2 b^2 + mix |b|
};

std::string_view to_string(RegFamily family);
RegFamily reg_family_from_string(std::string_view name);

/// Coordinatewise separable regularizer r(beta) = sum_j r(beta_j).
template <typename Scalar = double>
struct RegSpec {
  RegFamily family = RegFamily::ridge;
  Scalar mix = 0;               // smoothed_elastic_net / elastic_net weight
  Scalar smooth_sharpness = 1;  // smoothed_elastic_net only

  static RegSpec ridge() { return {RegFamily::ridge, 0, 1}; }
  static RegSpec smoothed_elastic_net(Scalar mix, Scalar sharpness) {
    return {RegFamily::smoothed_elastic_net, mix, sharpness};
  }
  static RegSpec l1() { return {RegFamily::l1, 1, 1}; }
  static RegSpec elastic_net(Scalar mix) {
    return {RegFamily::elastic_net, mix, 1};
  }

  bool smooth() const {
    return family == RegFamily::ridge ||
           family == RegFamily::smoothed_elastic_net;
  }

  void validate() const {
    if (!(mix >= Scalar(0) && mix <= Scalar(1)))
      throw std::invalid_argument("regularizer mix must lie in [0, 1]");
    if (!(smooth_sharpness > Scalar(0)))
      throw std::invalid_argument("regularizer smooth_sharpness must be positive");
  }

  friend bool operator==(const RegSpec&, const RegSpec&) = default;
};

template <typename Scalar>
struct RegValue {
  Scalar value;
  VectorX<Scalar> gradient;
  VectorX<Scalar> hessian_diag;
};

namespace detail {

// r(b) for one coordinate, any family.
template <typename Scalar>
Scalar reg_scalar_value(const RegSpec<Scalar>& spec, Scalar b) {
  using std::abs;
  switch (spec.family) {
    case RegFamily::ridge:
      return Scalar(0.5) * b * b;
    case RegFamily::smoothed_elastic_net: {
      const Scalar a = spec.smooth_sharpness;
      const Scalar ab = abs(a * b);
      // (softplus(ab) + softplus(-ab)) / a
      const Scalar surrogate = (ab + Scalar(2) * std::log1p(std::exp(-ab))) / a;
      return spec.mix * b * b + (Scalar(1) - spec.mix) * surrogate;
    }
    case RegFamily::l1:
      return abs(b);
    case RegFamily::elastic_net:
      return Scalar(0.5) * (Scalar(1) - spec.mix) * b * b + spec.mix * abs(b);
  }
  throw std::logic_error("unhandled regularizer");
}

template <typename Scalar>
Scalar soft_threshold(Scalar v, Scalar t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return Scalar(0);
}

}  // namespace detail

/// r(beta) for any family (the nonsmooth ones included).
template <typename Scalar, typename Derived>
Scalar reg_value(const RegSpec<Scalar>& spec,
                 const Eigen::MatrixBase<Derived>& beta) {
  Scalar total = 0;
  for (Index j = 0; j < beta.size(); ++j)
    total += detail::reg_scalar_value(spec, Scalar(beta(j)));
  return total;
}

/// Value, gradient and diagonal Hessian of a smooth regularizer.
template <typename Scalar, typename Derived>
RegValue<Scalar> reg_eval(const RegSpec<Scalar>& spec,
                          const Eigen::MatrixBase<Derived>& beta) {
  if (!spec.smooth())
    throw std::invalid_argument("reg_eval: " + std::string(to_string(spec.family)) +
                                " is not differentiable; use prox_step");
  const Index p = beta.size();
  RegValue<Scalar> out{reg_value(spec, beta), VectorX<Scalar>(p),
                       VectorX<Scalar>(p)};
  if (spec.family == RegFamily::ridge) {
    out.gradient = beta;
    out.hessian_diag.setOnes();
    return out;
  }
  const Scalar a = spec.smooth_sharpness;
  const Scalar mix = spec.mix;
  for (Index j = 0; j < p; ++j) {
    const Scalar ab = a * Scalar(beta(j));
    // r_a'(b) = tanh(a b / 2), r_a''(b) = 2 a sigma(a b) sigma(-a b)
    out.gradient(j) = Scalar(2) * mix * Scalar(beta(j)) +
                      (Scalar(1) - mix) * std::tanh(ab / Scalar(2));
    out.hessian_diag(j) =
        Scalar(2) * mix + (Scalar(1) - mix) * Scalar(2) * a *
                              detail::sigmoid(ab) * detail::sigmoid(-ab);
  }
  return out;
}

/// Diagonal Hessian of the twice-differentiable part of r: the full Hessian
/// for smooth families, the quadratic part for l1 / elastic_net (valid
/// wherever |beta_j| > 0).
template <typename Scalar, typename Derived>
VectorX<Scalar> reg_curvature(const RegSpec<Scalar>& spec,
                              const Eigen::MatrixBase<Derived>& beta) {
  if (spec.smooth()) return reg_eval(spec, beta).hessian_diag;
  const Scalar c =
      spec.family == RegFamily::elastic_net ? Scalar(1) - spec.mix : Scalar(0);
  return VectorX<Scalar>::Constant(beta.size(), c);
}

/// argmin_b 1/2 |b - v|^2 + step * lambda * r(b), coordinatewise.
template <typename Scalar, typename Derived>
VectorX<Scalar> prox_step(const RegSpec<Scalar>& spec,
                          const Eigen::MatrixBase<Derived>& v, Scalar step,
                          Scalar lambda) {
  if (spec.smooth())
    throw std::invalid_argument("prox_step: " + std::string(to_string(spec.family)) +
                                " is smooth; use the gradient path");
  const Scalar scale = step * lambda;
  const Scalar thresh =
      spec.family == RegFamily::l1 ? scale : scale * spec.mix;
  const Scalar shrink =
      spec.family == RegFamily::l1
          ? Scalar(1)
          : Scalar(1) + scale * (Scalar(1) - spec.mix);
  VectorX<Scalar> out(v.size());
  for (Index j = 0; j < v.size(); ++j)
    out(j) = detail::soft_threshold(Scalar(v(j)), thresh) / shrink;
  return out;
}

/// Lower bound on the curvature of lambda * r, i.e. its strong-convexity modulus.
template <typename Scalar>
Scalar strong_convexity_lower(const RegSpec<Scalar>& spec, Scalar lambda) {
  switch (spec.family) {
    case RegFamily::ridge:
      return lambda;
    case RegFamily::smoothed_elastic_net:
      return Scalar(2) * lambda * spec.mix;
    case RegFamily::elastic_net:
      return lambda * (Scalar(1) - spec.mix);
    case RegFamily::l1:
      return Scalar(0);
  }
  throw std::logic_error("unhandled regularizer");
}

}  // namespace loorisk
