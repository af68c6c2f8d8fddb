#include <doctest.h>

#include "loorisk/datagen.hpp"
#include "loorisk/rng.hpp"

#include <cmath>
#include <set>

using namespace loorisk;
using doctest::Approx;

using Vec = VectorX<double>;

TEST_CASE("design rows have the right second moment") {
  const Index n = 400, p = 300;
  const auto X = gen_design(n, p, CovarianceSpec{}.resolve(n), 1);
  // E|x|^2 = tr(Sigma) = p / n
  const double mean_sq = X.rowwise().squaredNorm().mean();
  CHECK(std::abs(mean_sq - double(p) / double(n)) <= 0.05 * double(p) / double(n));
  CHECK(std::abs(X.rowwise().norm().mean() - std::sqrt(double(p) / double(n))) <=
        0.05 * std::sqrt(double(p) / double(n)));
}

TEST_CASE("dense covariance designs") {
  MatrixX<double> S(2, 2);
  S << 2, 0.8, 0.8, 1;
  const auto X = gen_design(20000, 2, Covariance<double>::dense(S), 3);
  const MatrixX<double> emp = X.transpose() * X / 20000.0;
  CHECK((emp - S).cwiseAbs().maxCoeff() <= 0.06);
  MatrixX<double> bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(Covariance<double>::dense(bad), std::invalid_argument);
}

TEST_CASE("determinism") {
  SimConfig c;
  c.n = 30;
  c.p = 12;
  c.k = 4;
  c.noise_var = 1;
  c.seed = 77;
  c.reps = 3;
  const auto a = simulate_replicate(c, 1);
  const auto b = simulate_replicate(c, 1);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.y == b.data.y);
  CHECK(a.truth.beta_star == b.truth.beta_star);
  const auto d = simulate_replicate(c, 2);
  CHECK(a.data.X != d.data.X);
}

TEST_CASE("beta_star support and values") {
  const auto b = gen_beta_star(2000, 100, BetaDist::constant(1 / (3 * std::sqrt(2.0))), 1);
  CHECK((b.array() != 0).count() == 100);
  CHECK((b.head(100).array() != 0).all());
  // Var(x^T b) with Sigma = I is |b|^2 = k / 18
  CHECK(b.squaredNorm() == Approx(100.0 / 18).epsilon(1e-12));

  CHECK(gen_beta_star(50, 0, BetaDist::laplace_unit(), 2).isZero());

  const auto r = gen_beta_star(500, 40, BetaDist::laplace_unit(), 3, true);
  CHECK((r.array() != 0).count() == 40);
  CHECK((r.head(40).array() != 0).count() < 40);

  const auto l = gen_beta_star(4000, 4000, BetaDist::laplace_unit(), 4);
  const double var = l.squaredNorm() / 4000 - l.mean() * l.mean();
  CHECK(std::abs(var - 1.0) <= 0.2);
  CHECK_THROWS_AS(gen_beta_star(5, 6, BetaDist::laplace_unit(), 1), std::invalid_argument);
}

TEST_CASE("signal variance of the Table 1 design concentrates near 0.1") {
  const Index n = 200, p = 2000;
  const auto b = gen_beta_star(p, n / 10, BetaDist::laplace_unit(), 8);
  const auto X = gen_design(n, p, CovarianceSpec{}.resolve(n), 9);
  const Vec eta = X * b;
  CHECK(std::abs(eta.squaredNorm() / double(n) - 0.1) <= 0.05);
}

TEST_CASE("responses") {
  const Index n = 4000, p = 5;
  const auto X = gen_design(n, p, Covariance<double>::scaled_identity(1.0), 1);
  Vec b(p);
  b << 1, -1, 0.5, 0, 2;
  CHECK(gen_response(X, b, ResponseFamily::linear, 0.0, 1.0, 2) == X * b);
  const Vec noise = gen_response(X, b, ResponseFamily::linear, 2.0, 1.0, 2) - X * b;
  CHECK(std::abs(noise.squaredNorm() / double(n) - 2.0) <= 0.15);

  const Vec zero = Vec::Zero(p);
  const Vec yb = gen_response(X, zero, ResponseFamily::logistic, 0, 1, 3);
  CHECK(std::abs(yb.mean() - 0.5) <= 3 / std::sqrt(double(n)));
  CHECK(((yb.array() == 0) || (yb.array() == 1)).all());

  const Vec yp = gen_response(X, zero, ResponseFamily::poisson_softrect, 0, 1, 4);
  CHECK(std::abs(yp.mean() - std::log(2.0)) <= 3 * std::sqrt(std::log(2.0) / double(n)));

  // mean 1 and variance 1 + alpha with eta = 0
  const Vec yn = gen_response(X, zero, ResponseFamily::negative_binomial, 0, 0.5, 5);
  CHECK(std::abs(yn.mean() - 1.0) <= 0.1);
  const double v = (yn.array() - yn.mean()).square().mean();
  CHECK(std::abs(v - 1.5) <= 0.2);
}

TEST_CASE("replicate substreams do not overlap") {
  SimConfig c;
  c.n = 4;
  c.p = 4;
  c.k = 4;
  c.seed = 12345;
  c.reps = 1000;
  std::set<std::vector<std::uint64_t>> prints;
  for (Index r = 0; r < 1000; ++r) {
    Rng rng(replicate_seed(c, r));
    std::vector<std::uint64_t> fp;
    for (int k = 0; k < 16; ++k) fp.push_back(rng.next_u64());
    prints.insert(fp);
  }
  CHECK(prints.size() == 1000);
}

TEST_CASE("config strings round trip") {
  for (const auto& s : {"identity", "identity_over_n", "scaled_identity:0.25"})
    CHECK(to_string(covariance_spec_from_string(s)) == s);
  CHECK(to_string(beta_dist_from_string("constant:0.2357022603955158")) ==
        "constant:0.2357022603955158");
  CHECK_THROWS_AS(beta_dist_from_string("gaussian"), std::invalid_argument);
  CHECK_THROWS_AS(covariance_spec_from_string("scaled_identity:-1"), std::invalid_argument);
}

TEST_CASE("rng distributions") {
  Rng rng(99);
  double s = 0, s2 = 0, l = 0, g = 0;
  const int m = 200000;
  for (int k = 0; k < m; ++k) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    l += std::abs(rng.laplace(1.0 / std::sqrt(2.0)));
    g += rng.gamma(2.5, 0.4);
  }
  CHECK(std::abs(s / m) <= 0.01);
  CHECK(std::abs(s2 / m - 1) <= 0.015);
  CHECK(std::abs(l / m - 1 / std::sqrt(2.0)) <= 0.01);
  CHECK(std::abs(g / m - 1.0) <= 0.01);
  double pm = 0;
  for (int k = 0; k < 20000; ++k) pm += double(rng.poisson(75.0));
  CHECK(std::abs(pm / 20000 - 75) <= 0.3);
}
