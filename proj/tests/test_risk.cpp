#include <doctest.h>

#include "loorisk/datagen.hpp"
#include "loorisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace loorisk;
using doctest::Approx;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

namespace {

Dataset<double> two_by_two() {
  Dataset<double> d{Mat::Identity(2, 2), Vec(2)};
  d.y << 1, 2;
  return d;
}

const ModelSpec<double> kRidgeSq{LossSpec<double>::squared(), RegSpec<double>::ridge(), 1.0,
                                 ErrorFunction::loss};

Dataset<double> sim(Index n, Index p, std::uint64_t seed, ResponseFamily fam,
                    double cov_scale = 1.0) {
  const auto X = gen_design(n, p, Covariance<double>::scaled_identity(cov_scale), seed);
  const auto b = gen_beta_star(p, std::min<Index>(p, 5), BetaDist::laplace_unit(), seed + 1);
  return {X, gen_response(X, b, fam, 1.0, 1.0, seed + 2)};
}

}  // namespace

TEST_CASE("exact leave-one-out on the 2x2 example") {
  const auto r = lo_exact(two_by_two(), kRidgeSq);
  CHECK(r.method == RiskMethod::lo_exact);
  CHECK(r.per_sample(0) == Approx(0.5).epsilon(1e-12));
  CHECK(r.per_sample(1) == Approx(2.0).epsilon(1e-12));
  CHECK(r.estimate == Approx(1.25).epsilon(1e-12));
}

TEST_CASE("ALO on the 2x2 example matches by hand") {
  const auto d = two_by_two();
  const auto r = alo(d, kRidgeSq, fit(d, kRidgeSq));
  REQUIRE(r.h_diag);
  CHECK((*r.h_diag)(0) == Approx(0.5));
  CHECK((*r.h_diag)(1) == Approx(0.5));
  CHECK(r.per_sample(0) == Approx(0.5).epsilon(1e-12));
  CHECK(r.per_sample(1) == Approx(2.0).epsilon(1e-12));
  CHECK(r.flagged.empty());
}

TEST_CASE("identical rows give identical entries; permutations do not matter") {
  Dataset<double> d{Mat(6, 3), Vec(6)};
  for (Index i = 0; i < 6; ++i) {
    d.X.row(i) << 1, -2, 0.5;
    d.y(i) = 1;
  }
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.5,
                      ErrorFunction::loss};
  d.y(0) = 1;
  const auto r = lo_exact(d, m);
  CHECK((r.per_sample.array() - r.per_sample(0)).abs().maxCoeff() <= 1e-12);

  const auto s = sim(30, 8, 4, ResponseFamily::logistic);
  std::vector<Index> perm(30);
  for (Index i = 0; i < 30; ++i) perm[static_cast<std::size_t>(i)] = (7 * i + 3) % 30;
  Dataset<double> q{s.X(perm, Eigen::all), s.y(perm)};
  CHECK(lo_exact(s, m).estimate == Approx(lo_exact(q, m).estimate).epsilon(1e-10));
}

TEST_CASE("estimate is the mean of the per-sample values; h in [0, 1)") {
  const auto d = sim(40, 30, 8, ResponseFamily::logistic, 1.0 / 40);
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.1,
                      ErrorFunction::loss};
  const auto full = fit(d, m);
  for (const auto& r : {lo_exact(d, m), alo(d, m, full), kfold_cv(d, m, 4, 1)}) {
    CHECK(std::abs(r.estimate - r.per_sample.mean()) <= 1e-12);
  }
  const auto a = alo(d, m, full);
  CHECK(a.h_diag->minCoeff() >= 0);
  CHECK(a.h_diag->maxCoeff() < 1);
}

TEST_CASE("ALO equals LO for ridge squared loss") {
  for (auto [n, p] : {std::pair<Index, Index>{30, 10}, {10, 30}}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto d = sim(n, p, 100 + s, ResponseFamily::linear);
      ModelSpec<double> m = kRidgeSq;
      m.lambda = 0.3 + double(s);
      const auto lo = lo_exact(d, m);
      const auto al = alo(d, m, fit(d, m));
      CHECK((lo.per_sample - al.per_sample).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }
}

TEST_CASE("leverages agree with leave-one-out residual ratios") {
  // Squared-loss ridge: y_i - x_i^T b_{/i} = (y_i - x_i^T b) / (1 - H_ii).
  const auto d = sim(15, 6, 41, ResponseFamily::linear);
  const auto m = kRidgeSq;
  const auto full = fit(d, m);
  const auto a = alo(d, m, full);
  SolverOpts<double> o;
  o.tol = 1e-13;
  for (Index i = 0; i < d.n(); ++i) {
    const auto f = fit_leave_one_out(d, m, i, std::nullopt, o);
    const double r = d.y(i) - d.X.row(i).dot(full.beta_hat);
    const double r_loo = d.y(i) - d.X.row(i).dot(f.beta_hat);
    CHECK(std::abs((1 - r / r_loo) - (*a.h_diag)(i)) <= 1e-8);
  }
}

TEST_CASE("huge penalty: ALO collapses to the zero-coefficient training error") {
  const auto d = sim(20, 5, 2, ResponseFamily::logistic);
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 1e12,
                      ErrorFunction::loss};
  const auto a = alo(d, m, fit(d, m));
  CHECK(a.h_diag->maxCoeff() <= 1e-9);
  CHECK(a.estimate == Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("l1 path: empty active set gives phi(y, 0)") {
  const auto d = sim(20, 10, 3, ResponseFamily::linear);
  ModelSpec<double> m{LossSpec<double>::squared(), RegSpec<double>::elastic_net(0.5), 1e6,
                      ErrorFunction::squared_error};
  const auto f = fit(d, m);
  REQUIRE(f.beta_hat.isZero());
  const auto a = alo(d, m, f);
  REQUIRE(a.active_set);
  CHECK(a.active_set->empty());
  for (Index i = 0; i < d.n(); ++i) CHECK(a.per_sample(i) == d.y(i) * d.y(i));
}

TEST_CASE("l1 path: H = X_S (X_S^T D X_S)^-1 X_S^T D, computed independently") {
  const auto d = sim(60, 20, 12, ResponseFamily::logistic);
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::l1(), 2.0,
                      ErrorFunction::loss};
  SolverOpts<double> o;
  o.max_iter = 100000;
  const auto f = fit(d, m, o);
  REQUIRE(f.converged);
  const auto a = alo(d, m, f);
  std::vector<Index> S;
  for (Index j = 0; j < 20; ++j)
    if (f.beta_hat(j) != 0) S.push_back(j);
  REQUIRE(*a.active_set == S);
  REQUIRE(!S.empty());
  const Mat XS = d.X(Eigen::all, S);
  const Vec z = d.X * f.beta_hat;
  Vec D(60);
  for (Index i = 0; i < 60; ++i) {
    const double s = 1 / (1 + std::exp(-z(i)));
    D(i) = s * (1 - s);
  }
  const Mat H = XS * (XS.transpose() * D.asDiagonal() * XS).inverse() * XS.transpose() *
                D.asDiagonal();
  CHECK((H.diagonal() - *a.h_diag).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("K = n reproduces leave-one-out exactly") {
  const auto d = sim(12, 4, 6, ResponseFamily::logistic);
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.4,
                      ErrorFunction::loss};
  const auto lo = lo_exact(d, m);
  const auto cv = kfold_cv(d, m, 12, 99);
  CHECK(cv.method == RiskMethod::kfold);
  CHECK(cv.per_sample == lo.per_sample);
}

TEST_CASE("two folds of duplicated rows are interchangeable") {
  Dataset<double> d{Mat(4, 2), Vec(4)};
  d.X << 1, 2, 1, 2, -1, 0.5, -1, 0.5;
  d.y << 1, 1, 0, 0;
  const std::vector<Index> folds{0, 1, 0, 1};
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.4,
                      ErrorFunction::loss};
  const auto r = kfold_cv_with_folds(d, m, folds);
  CHECK(r.per_sample(0) == Approx(r.per_sample(1)).epsilon(1e-12));
  CHECK(r.per_sample(2) == Approx(r.per_sample(3)).epsilon(1e-12));
}

TEST_CASE("fold assignment: balanced and deterministic") {
  for (auto [n, K] : {std::pair<Index, int>{10, 3}, {50, 7}, {7, 7}}) {
    const auto a = kfold_assignment(n, K, 42);
    CHECK(a == kfold_assignment(n, K, 42));
    std::map<Index, int> sizes;
    for (Index f : a) ++sizes[f];
    CHECK(static_cast<int>(sizes.size()) == K);
    int lo = 1 << 30, hi = 0;
    for (auto [f, s] : sizes) lo = std::min(lo, s), hi = std::max(hi, s);
    CHECK(hi - lo <= 1);
  }
  CHECK(kfold_assignment(50, 5, 1) != kfold_assignment(50, 5, 2));
  CHECK_THROWS_AS(kfold_assignment(5, 6, 0), std::invalid_argument);
  CHECK_THROWS_AS(kfold_assignment(5, 1, 0), std::invalid_argument);
}

TEST_CASE("fixed seed gives identical CV reports") {
  const auto d = sim(30, 10, 13, ResponseFamily::linear);
  ModelSpec<double> m{LossSpec<double>::squared(), RegSpec<double>::elastic_net(0.5), 2.0,
                      ErrorFunction::squared_error};
  const auto a = kfold_cv(d, m, 5, 77);
  const auto b = kfold_cv(d, m, 5, 77);
  CHECK(a.per_sample == b.per_sample);
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("pole entries are flagged and excluded") {
  // p >> n with a tiny ridge: leverages approach one, except for the two
  // duplicated rows, which share theirs
  const auto d0 = sim(5, 400, 17, ResponseFamily::linear);
  Dataset<double> d{MatrixX<double>(6, 400), VectorX<double>(6)};
  d.X << d0.X, d0.X.row(0);
  d.y << d0.y, d0.y(0) + 0.5;
  ModelSpec<double> m{LossSpec<double>::squared(), RegSpec<double>::ridge(), 1e-12,
                      ErrorFunction::loss};
  const auto f = fit(d, m);
  REQUIRE(f.converged);
  const auto a = alo(d, m, f);
  CHECK(a.flagged.size() == 4);
  for (Index i : a.flagged) {
    CHECK(std::isinf(a.per_sample(i)));
    CHECK(i != 0);
    CHECK(i != 5);
  }
  CHECK(std::isfinite(a.estimate));
  CHECK(a.estimate == Approx((a.per_sample(0) + a.per_sample(5)) / 2));
}

TEST_CASE("non-converged fits are rejected") {
  const auto d = sim(30, 10, 19, ResponseFamily::logistic);
  ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::l1(), 0.01,
                      ErrorFunction::loss};
  SolverOpts<double> o;
  o.max_iter = 1;
  auto f = fit(d, m, o);
  CHECK_THROWS_AS(alo(d, m, f), NumericalError);
  CHECK_THROWS_AS(lo_exact(d, m, o), NumericalError);
}
