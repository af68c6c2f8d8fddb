#include <doctest.h>

#include "loorisk/datagen.hpp"
#include "loorisk/experiments.hpp"
#include "loorisk/risk.hpp"

#include <cmath>

using namespace loorisk;

namespace {

SimConfig logistic_cell(Index n, Index reps, std::uint64_t seed) {
  SimConfig s;
  s.n = n;
  s.p = n;
  s.k = n;
  s.family = ResponseFamily::logistic;
  s.lambda = 0.1;
  s.reps = reps;
  s.seed = seed;
  return s;
}

double mean_alo_lo_gap(Index n, Index reps) {
  const auto cell = logistic_cell(n, reps, 314);
  const ModelSpec<double> m{LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.1,
                            ErrorFunction::loss};
  double total = 0;
  for (Index r = 0; r < reps; ++r) {
    const auto inst = simulate_replicate(cell, r);
    const auto full = fit(inst.data, m);
    REQUIRE(full.converged);
    LeaveOneOutRefitter<double> refitter(inst.data, m, full);
    total += std::abs(alo(inst.data, m, full).estimate - lo_exact(inst.data, m, refitter).estimate);
  }
  return total / double(reps);
}

}  // namespace

TEST_CASE("ALO approaches LO as n grows") {
  const double small = mean_alo_lo_gap(100, 10);
  const double large = mean_alo_lo_gap(400, 10);
  MESSAGE("mean |ALO - LO|: n=100 " << small << ", n=400 " << large);
  CHECK(small / large >= 1.5);
}

TEST_CASE("results are insensitive to the solver tolerance") {
  ExperimentConfig c;
  c.kind = ExperimentKind::table2;
  c.model = {LossSpec<double>::logistic(), RegSpec<double>::ridge(), 0.1, ErrorFunction::loss};
  for (Index n : {30, 60, 90}) c.cells.push_back(logistic_cell(n, 4, 7 + std::uint64_t(n)));

  std::vector<ExperimentResult> runs;
  for (double tol : {1e-8, 1e-9, 1e-10}) {
    c.solver.tol = tol;
    runs.push_back(run_experiment(c));
  }
  for (std::size_t k = 1; k < runs.size(); ++k) {
    REQUIRE(runs[k].rows.size() == runs[0].rows.size());
    for (std::size_t i = 0; i < runs[0].rows.size(); ++i) {
      CAPTURE(runs[0].rows[i].estimator);
      CHECK(std::abs(runs[k].rows[i].mse - runs[0].rows[i].mse) <=
            1e-6 * std::max(1e-3, runs[0].rows[i].mse));
    }
  }

  // elastic net goes through the proximal path
  ExperimentConfig e;
  e.kind = ExperimentKind::table1;
  e.model = {LossSpec<double>::squared(), RegSpec<double>::elastic_net(0.5), 5.0,
             ErrorFunction::squared_error};
  e.solver.max_iter = 20000;
  for (Index n : {20, 30, 40}) {
    SimConfig s;
    s.n = n;
    s.p = 10 * n;
    s.k = n / 10;
    s.noise_var = 0.4;
    s.lambda = 5;
    s.reps = 3;
    s.seed = 99 + std::uint64_t(n);
    e.cells.push_back(s);
  }
  std::vector<ExperimentResult> en;
  for (double tol : {1e-8, 1e-9, 1e-10}) {
    e.solver.tol = tol;
    en.push_back(run_experiment(e));
  }
  for (std::size_t k = 1; k < en.size(); ++k)
    for (std::size_t i = 0; i < en[0].rows.size(); ++i)
      CHECK(std::abs(en[k].rows[i].mse - en[0].rows[i].mse) <=
            1e-5 * std::max(1e-3, en[0].rows[i].mse));
}
