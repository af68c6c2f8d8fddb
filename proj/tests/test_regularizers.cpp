#include <doctest.h>

#include "loorisk/regularizers.hpp"
#include "loorisk/rng.hpp"

#include <cmath>

using namespace loorisk;
using doctest::Approx;

using Vec = VectorX<double>;

TEST_CASE("ridge at the origin") {
  const auto r = reg_eval(RegSpec<double>::ridge(), Vec::Zero(4));
  CHECK(r.value == 0.0);
  CHECK(r.gradient.isZero());
  CHECK(r.hessian_diag.isOnes());
}

TEST_CASE("smooth l1 surrogate at the origin") {
  const double a = 3.0;
  const auto r = reg_eval(RegSpec<double>::smoothed_elastic_net(0.0, a), Vec::Zero(5));
  CHECK(r.value == Approx(5 * 2 * std::log(2.0) / a).epsilon(1e-14));
  CHECK(r.gradient.isZero());
}

TEST_CASE("smoothed elastic net derivatives by central differences") {
  const auto spec = RegSpec<double>::smoothed_elastic_net(0.3, 5.0);
  Vec b(2);
  b << 1, -2;
  const auto r = reg_eval(spec, b);
  const double h = 1e-6;
  for (Index j = 0; j < 2; ++j) {
    Vec bp = b, bm = b;
    bp(j) += h;
    bm(j) -= h;
    const double g = (reg_value(spec, bp) - reg_value(spec, bm)) / (2 * h);
    const double H = (reg_eval(spec, bp).gradient(j) - reg_eval(spec, bm).gradient(j)) / (2 * h);
    CHECK(std::abs(g - r.gradient(j)) <= 1e-5 * std::max(1.0, std::abs(g)));
    CHECK(std::abs(H - r.hessian_diag(j)) <= 1e-5 * std::max(1.0, std::abs(H)));
  }
}

TEST_CASE("prox of l1 is soft thresholding") {
  Vec v(2);
  v << 3, -0.5;
  const auto out = prox_step(RegSpec<double>::l1(), v, 1.0, 1.0);
  CHECK(out(0) == 2.0);
  CHECK(out(1) == 0.0);
}

TEST_CASE("elastic net with mix 1 is l1") {
  Rng rng(2);
  Vec v(20);
  for (Index j = 0; j < 20; ++j) v(j) = 3 * rng.normal();
  CHECK((prox_step(RegSpec<double>::elastic_net(1.0), v, 0.7, 1.3) -
         prox_step(RegSpec<double>::l1(), v, 0.7, 1.3))
            .isZero());
}

TEST_CASE("elastic net prox against grid search") {
  Vec v(1);
  v << 4;
  const double got = prox_step(RegSpec<double>::elastic_net(0.5), v, 1.0, 2.0)(0);
  CHECK(got == Approx(1.5).epsilon(1e-15));
  double best = 0, best_f = INFINITY;
  for (double b = -1; b <= 5; b += 1e-6) {
    const double f = 0.5 * (b - 4) * (b - 4) + 2 * (0.25 * b * b + 0.5 * std::abs(b));
    if (f < best_f) {
      best_f = f;
      best = b;
    }
  }
  CHECK(std::abs(got - best) <= 2e-6);
}

TEST_CASE("prox satisfies the subgradient condition") {
  Rng rng(3);
  for (auto spec : {RegSpec<double>::l1(), RegSpec<double>::elastic_net(0.3)}) {
    for (int k = 0; k < 200; ++k) {
      Vec v(1);
      v << 4 * rng.normal();
      const double step = 0.1 + rng.uniform(), lambda = 0.1 + 3 * rng.uniform();
      const double b = prox_step(spec, v, step, lambda)(0);
      const double l1w = spec.family == RegFamily::l1 ? 1.0 : spec.mix;
      const double quad = spec.family == RegFamily::l1 ? 0.0 : 1 - spec.mix;
      // 0 in (b - v) + step*lambda*(quad*b + l1w*sign(b))
      const double smooth_part = (b - v(0)) + step * lambda * quad * b;
      if (b != 0)
        CHECK(std::abs(smooth_part + step * lambda * l1w * (b > 0 ? 1 : -1)) <= 1e-10);
      else
        CHECK(std::abs(smooth_part) <= step * lambda * l1w + 1e-10);
    }
  }
}

TEST_CASE("strong convexity constants") {
  CHECK(strong_convexity_lower(RegSpec<double>::ridge(), 0.1) == 0.1);
  CHECK(strong_convexity_lower(RegSpec<double>::l1(), 5.0) == 0.0);
  CHECK(strong_convexity_lower(RegSpec<double>::elastic_net(0.5), 5.0) == 2.5);
  const auto sen = RegSpec<double>::smoothed_elastic_net(0.25, 2.0);
  CHECK(strong_convexity_lower(sen, 2.0) == 1.0);
  // grid minimum of lambda * r'' approaches the constant from above
  double lo = INFINITY;
  for (double b = -60; b <= 60; b += 0.01)
    lo = std::min(lo, 2.0 * reg_eval(sen, Vec::Constant(1, b)).hessian_diag(0));
  CHECK(lo >= 1.0);
  CHECK(lo == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evenness and curvature range") {
  Rng rng(4);
  const auto sen = RegSpec<double>::smoothed_elastic_net(0.4, 3.0);
  for (auto spec : {RegSpec<double>::ridge(), sen, RegSpec<double>::l1(),
                    RegSpec<double>::elastic_net(0.6)}) {
    for (int k = 0; k < 100; ++k) {
      const Vec b = Vec::Constant(1, 5 * rng.normal());
      CHECK(reg_value(spec, b) == Approx(reg_value(spec, Vec(-b))).epsilon(1e-15));
    }
  }
  for (int k = 0; k < 1000; ++k) {
    const double h = reg_eval(sen, Vec::Constant(1, 5 * rng.normal())).hessian_diag(0);
    CHECK(h >= 2 * 0.4);
    CHECK(h <= 2 * 0.4 + 0.6 * 3.0 / 2 + 1e-15);
  }
}

TEST_CASE("wrong path for the family throws") {
  CHECK_THROWS_AS(reg_eval(RegSpec<double>::l1(), Vec::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(prox_step(RegSpec<double>::ridge(), Vec::Zero(2), 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RegSpec<double>::elastic_net(1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(RegSpec<double>::smoothed_elastic_net(0.5, 0).validate(), std::invalid_argument);
}
