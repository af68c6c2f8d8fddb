#pragma once

#include "loorisk/losses.hpp"
#include "loorisk/quadrature.hpp"
#include "loorisk/solver.hpp"
#include "loorisk/truth.hpp"

#include <cstdint>
#include <numbers>
#include <utility>

namespace loorisk {

/// Err_out = E (y_o - x_o^T b)^2 = sigma^2 + (b - b*)^T Sigma (b - b*) for the
/// linear-Gaussian truth.
template <typename Scalar>
Scalar err_out_linear(const VectorX<Scalar>& beta_hat, const TrueModel<Scalar>& truth) {
  if (truth.family != ResponseFamily::linear)
    throw std::invalid_argument("err_out_linear: truth is not linear-Gaussian");
  truth.validate();
  const VectorX<Scalar> diff = beta_hat - truth.beta_star;
  return truth.noise_var + truth.covariance.quad(diff, diff);
}

namespace detail {

// Past this variance the softplus poles at +-i pi sit too close, on the scale
// of the node spacing, for Gauss-Hermite to hold 1e-8; the half-line form with
// Gauss-Laguerre takes over.
inline constexpr double kHermiteMaxVariance = 2.0;

// E softplus(V) and E[V sigmoid(V)] for V ~ N(0, var). Half-line forms:
//   softplus(v)   = max(v, 0) + log1p(e^{-|v|})
//   v sigmoid(v)  = max(v, 0) - |v| sigmoid(-|v|)
template <typename Scalar>
std::pair<Scalar, Scalar> logistic_gaussian_moments(Scalar var_w, Scalar var_z, int order) {
  const auto hermite = [&](auto f, Scalar v) {
    return GaussHermiteRule<Scalar>(order).normal_expectation(f, v);
  };
  const auto laguerre = [&](auto h, Scalar v) {
    const Scalar norm = Scalar(1) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * v);
    return GaussLaguerreRule<Scalar>(order).integrate(
        [&](Scalar u) { return h(u) * norm * std::exp(-u * u / (Scalar(2) * v)); });
  };
  const Scalar root2pi = std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);

  Scalar ew;
  Scalar ez;
  if (var_w <= Scalar(kHermiteMaxVariance)) {
    ew = hermite([](Scalar v) { return softplus(v); }, var_w);
  } else {
    // e^u log1p(e^{-u}) stays bounded
    ew = std::sqrt(var_w) / root2pi +
         Scalar(2) * laguerre([](Scalar u) { return std::exp(u) * std::log1p(std::exp(-u)); },
                              var_w);
  }
  if (var_z <= Scalar(kHermiteMaxVariance)) {
    ez = hermite([](Scalar v) { return v * sigmoid(v); }, var_z);
  } else {
    ez = std::sqrt(var_z) / root2pi -
         Scalar(2) * laguerre([](Scalar u) { return u / (Scalar(1) + std::exp(-u)); }, var_z);
  }
  return {ew, ez};
}

}  // namespace detail

/// Err_out = E ell(y_o | x_o^T b) for the logistic truth with Gaussian features:
///   -(b^T Sigma b* / b*^T Sigma b*) E[Z sigma(Z)] + E log(1 + e^W),
/// Z ~ N(0, b*^T Sigma b*), W ~ N(0, b^T Sigma b). Gauss-Hermite of the given
/// order for moderate variances, Gauss-Laguerre of the same order beyond.
template <typename Scalar>
Scalar err_out_logistic(const VectorX<Scalar>& beta_hat, const TrueModel<Scalar>& truth,
                        int quad_order = 64) {
  if (truth.family != ResponseFamily::logistic)
    throw std::invalid_argument("err_out_logistic: truth is not logistic");
  if (quad_order < 20) throw std::invalid_argument("err_out_logistic: quad_order must be >= 20");
  const Scalar vz = truth.covariance.quad(truth.beta_star, truth.beta_star);
  if (!(vz > Scalar(0))) throw std::invalid_argument("err_out_logistic: beta_star is degenerate");
  const Scalar cross = truth.covariance.quad(beta_hat, truth.beta_star);
  const Scalar vw = truth.covariance.quad(beta_hat, beta_hat);
  const auto [ew, ez] = detail::logistic_gaussian_moments(vw, vz, quad_order);
  return -(cross / vz) * ez + ew;
}

struct MonteCarloEstimate {
  double mean = 0;
  double std_err = 0;
  std::uint64_t draws = 0;
};

/// Sample mean and standard error of phi(y_o, x_o^T b) over m fresh draws
/// from the truth. Draws are produced in fixed-size chunks, each on its own
/// substream, so the result depends only on (seed, m) and not on threading.
MonteCarloEstimate err_out_monte_carlo(const VectorX<double>& beta_hat,
                                       const TrueModel<double>& truth,
                                       const ModelSpec<double>& model, std::uint64_t m,
                                       std::uint64_t seed, int threads = 1);

}  // namespace loorisk
