#pragma once

#include "loorisk/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace loorisk {

enum class LossFamily {
  squared,
  logistic,
  pseudo_huber,
  smoothed_abs,
  poisson_softrect,
  negative_binomial,
};

std::string_view to_string(LossFamily family);
LossFamily loss_family_from_string(std::string_view name);

namespace detail {

// log(1 + e^z) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return (z > Scalar(0) ? z : Scalar(0)) + log1p(exp(-abs(z)));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

// (t - log(1 + t)) / log(1 + t) for t >= 0, accurate (and underflow free)
// when t is tiny.
template <typename Scalar>
Scalar t_minus_log1p_over_log1p(Scalar t) {
  using std::log1p;
  if (t < Scalar(1e-3)) {
    // t * (1/2 - t/3 + t^2/4 - ...) / (1 - t/2 + t^2/3 - ...)
    Scalar num = 0;
    Scalar den = 0;
    Scalar pw = 1;
    for (int k = 0; k < 10; ++k) {
      const Scalar term = (k % 2 == 0) ? pw : -pw;
      num += term / Scalar(k + 2);
      den += term / Scalar(k + 1);
      pw *= t;
    }
    return t * num / den;
  }
  const Scalar l = log1p(t);
  return (t - l) / l;
}

inline constexpr double kPoissonMeanFloor = 1e-300;

}  // namespace detail

/// Loss ell(y | z) of a penalized GLM together with its family parameters.
///
/// Parameters are held as optionals so that a spec carries exactly the
/// parameters its family needs. Use the named constructors.
template <typename Scalar = double>
struct LossSpec {
  LossFamily family = LossFamily::squared;
  std::optional<Scalar> huber_scale;   // pseudo_huber
  std::optional<Scalar> smooth_scale;  // smoothed_abs
  std::optional<Scalar> shape;         // negative_binomial

  static LossSpec squared() { return {LossFamily::squared, {}, {}, {}}; }
  static LossSpec logistic() { return {LossFamily::logistic, {}, {}, {}}; }
  static LossSpec pseudo_huber(Scalar gamma) {
    return {LossFamily::pseudo_huber, gamma, {}, {}};
  }
  static LossSpec smoothed_abs(Scalar gamma) {
    return {LossFamily::smoothed_abs, {}, gamma, {}};
  }
  static LossSpec poisson_softrect() {
    return {LossFamily::poisson_softrect, {}, {}, {}};
  }
  static LossSpec negative_binomial(Scalar alpha) {
    return {LossFamily::negative_binomial, {}, {}, alpha};
  }

  void validate() const {
    const auto check = [](const std::optional<Scalar>& v, bool needed,
                          const char* name) {
      if (needed && !v)
        throw std::invalid_argument(std::string("loss requires ") + name);
      if (!needed && v)
        throw std::invalid_argument(std::string("loss does not take ") + name);
      if (v && !(*v > Scalar(0) && std::isfinite(static_cast<double>(*v))))
        throw std::invalid_argument(std::string(name) + " must be positive");
    };
    check(huber_scale, family == LossFamily::pseudo_huber, "huber_scale");
    check(smooth_scale, family == LossFamily::smoothed_abs, "smooth_scale");
    check(shape, family == LossFamily::negative_binomial, "shape");
  }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

template <typename Scalar>
struct LossValue {
  Scalar value;
  Scalar d1;  // d ell / dz
  Scalar d2;  // d^2 ell / dz^2
};

/// True when y lies in the response domain of the family.
template <typename Scalar>
bool valid_response(const LossSpec<Scalar>& spec, Scalar y) {
  using std::floor;
  if (!std::isfinite(static_cast<double>(y))) return false;
  switch (spec.family) {
    case LossFamily::logistic:
      return y == Scalar(0) || y == Scalar(1);
    case LossFamily::poisson_softrect:
    case LossFamily::negative_binomial:
      return y >= Scalar(0) && floor(y) == y;
    default:
      return true;
  }
}

/// Value and exact first/second z-derivatives of ell(y | z).
template <typename Scalar>
LossValue<Scalar> loss_eval(const LossSpec<Scalar>& spec, Scalar y, Scalar z) {
  using std::abs;
  using std::exp;
  using std::hypot;
  using std::log;
  using std::log1p;
  using std::tanh;
  using detail::sigmoid;
  using detail::softplus;

  if (!std::isfinite(static_cast<double>(z)))
    throw std::invalid_argument("loss_eval: non-finite linear predictor");
  if (!valid_response(spec, y))
    throw std::invalid_argument("loss_eval: response outside the domain of " +
                                std::string(to_string(spec.family)));

  switch (spec.family) {
    case LossFamily::squared: {
      const Scalar r = z - y;
      return {Scalar(0.5) * r * r, r, Scalar(1)};
    }
    case LossFamily::logistic: {
      const Scalar s = sigmoid(z);
      const Scalar sc = sigmoid(-z);
      return {softplus(z) - y * z, s - y, s * sc};
    }
    case LossFamily::pseudo_huber: {
      const Scalar g = *spec.huber_scale;
      const Scalar u = y - z;
      const Scalar s = hypot(Scalar(1), u / g);
      // g^2 (s - 1) == u^2 / (s + 1)
      return {u * u / (s + Scalar(1)), -u / s, Scalar(1) / (s * s * s)};
    }
    case LossFamily::smoothed_abs: {
      const Scalar g = *spec.smooth_scale;
      const Scalar a = g * (y - z);
      const Scalar value =
          (abs(a) + Scalar(2) * log1p(exp(-abs(a)))) / g;
      return {value, -tanh(a / Scalar(2)),
              Scalar(2) * g * sigmoid(a) * sigmoid(-a)};
    }
    case LossFamily::poisson_softrect: {
      const Scalar s = sigmoid(z);
      const Scalar sc = sigmoid(-z);
      const Scalar f = softplus(z);
      // mean_ratio = f'/f, curv_ratio = (f'^2 - f f'') / (f' f); both kept
      // away from the under/overflow of f, f' for very negative z.
      Scalar mean_ratio;
      Scalar curv_ratio;
      if (z <= Scalar(0)) {
        const Scalar t = exp(z);
        const Scalar t_over_log1p = t > Scalar(0) ? t / log1p(t) : Scalar(1);
        mean_ratio = t_over_log1p / (Scalar(1) + t);
        curv_ratio = sc * detail::t_minus_log1p_over_log1p(t);
      } else {
        mean_ratio = s / f;
        curv_ratio = s / f - sc;
      }
      const Scalar value =
          f - y * log(std::max(f, static_cast<Scalar>(detail::kPoissonMeanFloor)));
      const Scalar d1 = s - y * mean_ratio;
      const Scalar d2 = s * sc + y * mean_ratio * curv_ratio;
      return {value, d1, d2};
    }
    case LossFamily::negative_binomial: {
      const Scalar alpha = *spec.shape;
      const Scalar w = z + log(alpha);
      const Scalar q = sigmoid(w);
      const Scalar c = y + Scalar(1) / alpha;
      return {c * softplus(w) - y * z, c * q - y, c * q * sigmoid(-w)};
    }
  }
  throw std::logic_error("loss_eval: unhandled family");
}

/// Uniform bound c0 on |d ell/dz| where the family admits one.
///
/// Logistic reports 2 rather than the sharper 1 so that the closed-form
/// logistic bound constants are reproduced.
template <typename Scalar>
std::optional<Scalar> loss_derivative_bound(const LossSpec<Scalar>& spec) {
  switch (spec.family) {
    case LossFamily::logistic:
      return Scalar(2);
    case LossFamily::pseudo_huber:
      return *spec.huber_scale;
    case LossFamily::smoothed_abs:
      return Scalar(1);
    default:
      return std::nullopt;
  }
}

/// Error function phi(y, z) used to score predictions.
enum class ErrorFunction {
  loss,           // phi = ell
  squared_error,  // phi = (y - z)^2
};

std::string_view to_string(ErrorFunction phi);
ErrorFunction error_function_from_string(std::string_view name);

template <typename Scalar>
Scalar phi_eval(ErrorFunction phi, const LossSpec<Scalar>& loss, Scalar y,
                Scalar z) {
  if (phi == ErrorFunction::squared_error) {
    if (!std::isfinite(static_cast<double>(z)))
      return std::numeric_limits<Scalar>::infinity();
    const Scalar r = y - z;
    return r * r;
  }
  return loss_eval(loss, y, z).value;
}

}  // namespace loorisk
