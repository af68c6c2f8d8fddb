#include <doctest.h>

#include "loorisk/oracles.hpp"
#include "loorisk/rng.hpp"

#include <cmath>
#include <numbers>

using namespace loorisk;
using doctest::Approx;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

namespace {

Vec random_vec(Index p, Rng& rng, double scale = 1.0) {
  Vec v(p);
  for (Index j = 0; j < p; ++j) v(j) = scale * rng.normal();
  return v;
}

Covariance<double> random_spd(Index p, Rng& rng) {
  Mat A(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) A(i, j) = rng.normal();
  return Covariance<double>::dense(A * A.transpose() / double(p) + 0.5 * Mat::Identity(p, p));
}

const ModelSpec<double> kSquaredError{LossSpec<double>::squared(), RegSpec<double>::ridge(), 1.0,
                                      ErrorFunction::squared_error};
const ModelSpec<double> kLogistic{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 1.0,
                                  ErrorFunction::loss};

}  // namespace

TEST_CASE("linear Err_out closed form") {
  TrueModel<double> t;
  t.beta_star = Vec::Zero(2);
  t.noise_var = 2;
  CHECK(err_out_linear(Vec(Vec::Zero(2)), t) == 2.0);
  CHECK(err_out_linear(Vec(Vec::Ones(2)), t) == 4.0);
  t.covariance = Covariance<double>::scaled_identity(0.5);
  CHECK(err_out_linear(Vec(Vec::Ones(2)), t) == 3.0);
}

TEST_CASE("linear Err_out is at least the noise level") {
  Rng rng(1);
  TrueModel<double> t;
  t.beta_star = random_vec(6, rng);
  t.noise_var = 0.7;
  t.covariance = random_spd(6, rng);
  for (int k = 0; k < 100; ++k) CHECK(err_out_linear(random_vec(6, rng), t) > 0.7);
  CHECK(err_out_linear(t.beta_star, t) == Approx(0.7).epsilon(1e-15));
}

TEST_CASE("logistic Err_out basics") {
  TrueModel<double> t;
  t.family = ResponseFamily::logistic;
  t.beta_star = Vec::Ones(3);
  CHECK(err_out_logistic(Vec(Vec::Zero(3)), t) == Approx(std::log(2.0)).epsilon(1e-14));
  t.beta_star.setZero();
  CHECK_THROWS_AS(err_out_logistic(Vec(Vec::Ones(3)), t), std::invalid_argument);
  t.beta_star.setOnes();
  CHECK_THROWS_AS(err_out_logistic(Vec(Vec::Ones(3)), t, 10), std::invalid_argument);
  t.family = ResponseFamily::linear;
  CHECK_THROWS_AS(err_out_logistic(Vec(Vec::Ones(3)), t), std::invalid_argument);
}

namespace {

// trapezoid on a wide grid: spectrally accurate for these analytic integrands
template <typename F>
double trapezoid_normal(F f, double var) {
  const double s = std::sqrt(var), h = 0.005 * s;
  double total = 0;
  for (double x = -40 * s; x <= 40 * s; x += h) total += f(x) * std::exp(-x * x / (2 * var));
  return total * h / std::sqrt(2 * std::numbers::pi * var);
}

double softplus_ref(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

TEST_CASE("logistic Err_out against an independent trapezoid rule") {
  for (double vz : {0.3, 1.0, 2.5, 9.0, 60.0}) {
    for (double ratio : {-0.5, 0.7, 1.3}) {
      TrueModel<double> t;
      t.family = ResponseFamily::logistic;
      t.beta_star = Vec::Constant(1, std::sqrt(vz));
      const Vec b = ratio * t.beta_star;
      const double vw = ratio * ratio * vz;
      const double ez = trapezoid_normal([](double v) { return v / (1 + std::exp(-v)); }, vz);
      const double ew = trapezoid_normal(softplus_ref, vw);
      CHECK(err_out_logistic(b, t) == Approx(-ratio * ez + ew).epsilon(1e-10));
    }
  }
}

TEST_CASE("quadrature order 40 vs 80") {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    TrueModel<double> t;
    t.family = ResponseFamily::logistic;
    t.beta_star = random_vec(5, rng);
    t.covariance = random_spd(5, rng);
    const Vec b = random_vec(5, rng);
    CHECK(std::abs(err_out_logistic(b, t, 40) - err_out_logistic(b, t, 80)) <= 1e-8);
  }
}

TEST_CASE("Gauss-Hermite rule") {
  for (int order : {20, 64, 100}) {
    const GaussHermiteRule<double> rule(order);
    CHECK(std::abs(rule.weights().sum() - std::sqrt(std::numbers::pi)) <= 1e-12);
    CHECK(std::abs(rule.normal_expectation([](double z) { return z * z; }, 1.0) - 1.0) <= 1e-10);
    CHECK(std::abs(rule.normal_expectation([](double z) { return z * z * z * z; }, 2.0) - 12.0) <=
          1e-9);
  }
  const GaussHermiteRule<double> big(200);
  CHECK(std::abs(big.normal_expectation([](double z) { return z * z; }, 1.0) - 1.0) <= 1e-10);
  CHECK(std::abs(big.normal_expectation([](double z) { return std::cos(z); }, 1.0) -
                 std::exp(-0.5)) <= 1e-12);
}

TEST_CASE("Gauss-Laguerre rule") {
  for (int order : {20, 64, 150}) {
    const GaussLaguerreRule<double> rule(order);
    CHECK(std::abs(rule.weights().sum() - 1.0) <= 1e-12);
    CHECK(rule.integrate([](double u) { return u * u * u; }) == Approx(6.0).epsilon(1e-11));
    CHECK(rule.integrate([](double u) { return std::exp(-u); }) == Approx(0.5).epsilon(1e-11));
  }
}

TEST_CASE("Monte Carlo is consistent with the noise level at the truth") {
  Rng rng(3);
  TrueModel<double> t;
  t.beta_star = random_vec(4, rng);
  t.noise_var = 1.5;
  const auto mc = err_out_monte_carlo(t.beta_star, t, kSquaredError, 200000, 11);
  CHECK(std::abs(mc.mean - 1.5) <= 3 * mc.std_err);
  CHECK(mc.draws == 200000);
}

TEST_CASE("standard error follows the square-root law") {
  TrueModel<double> t;
  t.beta_star = Vec::Ones(3);
  t.noise_var = 1;
  const auto a = err_out_monte_carlo(Vec(Vec::Zero(3)), t, kSquaredError, 100, 5);
  const auto b = err_out_monte_carlo(Vec(Vec::Zero(3)), t, kSquaredError, 10000, 5);
  const double ratio = a.std_err / b.std_err;
  CHECK(ratio > 6);
  CHECK(ratio < 16);
}

TEST_CASE("Monte Carlo agrees with the closed forms on dense covariances") {
  Rng rng(4);
  for (int k = 0; k < 3; ++k) {
    TrueModel<double> t;
    t.beta_star = random_vec(4, rng, 0.7);
    t.covariance = random_spd(4, rng);
    t.noise_var = 0.5;
    const Vec b = random_vec(4, rng, 0.7);
    const auto mc = err_out_monte_carlo(b, t, kSquaredError, 1000000, 100 + k);
    CHECK(std::abs(mc.mean - err_out_linear(b, t)) <= 3 * mc.std_err);

    t.family = ResponseFamily::logistic;
    const auto ml = err_out_monte_carlo(b, t, kLogistic, 1000000, 200 + k);
    CHECK(std::abs(ml.mean - err_out_logistic(b, t)) <= 3 * ml.std_err);
  }
}

TEST_CASE("Poisson soft-rect Monte Carlo is seed-consistent") {
  Rng rng(6);
  TrueModel<double> t;
  t.family = ResponseFamily::poisson_softrect;
  t.beta_star = random_vec(3, rng);
  const Vec b = random_vec(3, rng);
  const ModelSpec<double> m{LossSpec<double>::poisson_softrect(), RegSpec<double>::ridge(), 1.0,
                            ErrorFunction::loss};
  const auto a = err_out_monte_carlo(b, t, m, 200000, 1);
  const auto c = err_out_monte_carlo(b, t, m, 200000, 2);
  CHECK(std::isfinite(a.mean));
  CHECK(a.mean != c.mean);
  CHECK(std::abs(a.mean - c.mean) <= 4 * std::hypot(a.std_err, c.std_err));
}

TEST_CASE("Monte Carlo is deterministic and thread-count independent") {
  TrueModel<double> t;
  t.family = ResponseFamily::logistic;
  t.beta_star = Vec::Ones(3);
  const Vec b = Vec::Constant(3, 0.5);
  const auto a = err_out_monte_carlo(b, t, kLogistic, 300000, 9, 1);
  const auto c = err_out_monte_carlo(b, t, kLogistic, 300000, 9, 3);
  CHECK(a.mean == c.mean);
  CHECK(a.std_err == c.std_err);
}

TEST_CASE("Monte Carlo input checks") {
  TrueModel<double> t;
  t.beta_star = Vec::Ones(2);
  CHECK_THROWS_AS(err_out_monte_carlo(Vec(Vec::Ones(2)), t, kSquaredError, 99, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(err_out_monte_carlo(Vec(Vec::Ones(3)), t, kSquaredError, 1000, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(err_out_monte_carlo(Vec(Vec::Ones(2)), t, kLogistic, 1000, 1),
                  std::invalid_argument);
}
