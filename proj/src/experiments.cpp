#include "loorisk/experiments.hpp"

#include "loorisk/bounds.hpp"
#include "loorisk/oracles.hpp"
#include "loorisk/parallel.hpp"
#include "loorisk/risk.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

namespace loorisk {

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::table1: return "table1";
    case ExperimentKind::table2: return "table2";
    case ExperimentKind::figure1: return "figure1";
  }
  throw std::logic_error("unhandled experiment kind");
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "table1") return ExperimentKind::table1;
  if (name == "table2") return ExperimentKind::table2;
  if (name == "figure1") return ExperimentKind::figure1;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (cells.empty()) throw std::invalid_argument("experiment: no cells");
  model.validate();
  solver.validate();
  if (quad_order < 20) throw std::invalid_argument("experiment: quad_order must be >= 20");
  for (const auto& c : cells) c.validate();
  const auto& family = cells.front().family;
  switch (kind) {
    case ExperimentKind::table1:
    case ExperimentKind::figure1:
      if (family != ResponseFamily::linear)
        throw std::invalid_argument(fmt::format("{}: design.family must be linear", to_string(kind)));
      break;
    case ExperimentKind::table2:
      if (family != ResponseFamily::logistic || model.loss.family != LossFamily::logistic)
        throw std::invalid_argument("table2: needs logistic family and logistic loss");
      if (model.reg.family != RegFamily::ridge)
        throw std::invalid_argument("table2: needs ridge regularizer");
      break;
  }
  if (kind == ExperimentKind::figure1)
    for (const auto& c : cells)
      if (c.k_folds.empty()) throw std::invalid_argument("figure1: cv.k_folds is empty");
}

SlopeFit fit_loglog_slope(const std::vector<double>& ns, const std::vector<double>& mses) {
  if (ns.size() != mses.size()) throw std::invalid_argument("fit_loglog_slope: length mismatch");
  if (ns.size() < 3) throw std::invalid_argument("fit_loglog_slope: need >= 3 points");
  const auto m = static_cast<Index>(ns.size());
  VectorX<double> x(m), y(m);
  for (Index i = 0; i < m; ++i) {
    const double a = ns[static_cast<std::size_t>(i)];
    const double b = mses[static_cast<std::size_t>(i)];
    if (!(a > 0 && b > 0)) throw std::invalid_argument("fit_loglog_slope: inputs must be positive");
    x(i) = std::log(a);
    y(i) = std::log(b);
  }
  const double xm = x.mean();
  const double ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  if (!(sxx > 0)) throw std::invalid_argument("fit_loglog_slope: n values must differ");
  const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  SlopeFit out;
  out.slope = sxy / sxx;
  out.intercept = ym - out.slope * xm;
  const double sse = (y.array() - out.intercept - out.slope * x.array()).square().sum();
  const double sst = (y.array() - ym).square().sum();
  const double s2 = sse / double(m - 2);
  out.slope_se = std::sqrt(s2 / sxx);
  out.intercept_se = std::sqrt(s2 * (1.0 / double(m) + xm * xm / sxx));
  const double r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
  out.adj_r2 = 1.0 - (1.0 - r2) * double(m - 1) / double(m - 2);
  return out;
}

namespace {

struct MeanSe {
  double mean = 0;
  std::optional<double> se;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  const double count = double(v.size());
  for (double x : v) out.mean += x;
  out.mean /= count;
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (count - 1) / count);
  }
  return out;
}

}  // namespace

MseSummary mse_of_estimator(const std::vector<double>& err_out_values,
                            const std::vector<double>& estimates) {
  if (err_out_values.size() != estimates.size())
    throw std::invalid_argument("mse_of_estimator: length mismatch");
  if (estimates.empty()) throw std::invalid_argument("mse_of_estimator: empty input");
  std::vector<double> sq(estimates.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = err_out_values[i] - estimates[i];
    sq[i] = d * d;
  }
  const auto ms = mean_se(sq);
  return {ms.mean, ms.se};
}

double oracle_err_out(const VectorX<double>& beta_hat, const TrueModel<double>& truth,
                      const ModelSpec<double>& model, int quad_order) {
  switch (truth.family) {
    case ResponseFamily::linear: {
      const double e = err_out_linear(beta_hat, truth);
      if (model.phi == ErrorFunction::squared_error) return e;
      if (model.loss.family == LossFamily::squared) return 0.5 * e;
      break;
    }
    case ResponseFamily::logistic:
      if (model.phi == ErrorFunction::loss && model.loss.family == LossFamily::logistic)
        return err_out_logistic(beta_hat, truth, quad_order);
      break;
    default:
      break;
  }
  throw std::invalid_argument(fmt::format(
      "no closed-form Err_out for family {} with loss {} and phi {}", to_string(truth.family),
      to_string(model.loss.family), to_string(model.phi)));
}

namespace {

struct RepOutcome {
  double err_out = 0;
  double lo = 0;
  double alo = 0;
  std::vector<double> kfold;
};

struct CellOutcome {
  std::vector<RepOutcome> reps;
  double seconds = 0;
};

CellOutcome run_cell(const ExperimentConfig& config, const SimConfig& cell, bool with_alo,
                     const std::vector<int>& k_folds) {
  ModelSpec<double> model = config.model;
  model.lambda = cell.lambda;
  CellOutcome out;
  out.reps.resize(static_cast<std::size_t>(cell.reps));
  const auto start = std::chrono::steady_clock::now();
  parallel_for(cell.reps, config.threads, [&](Index rep) {
    try {
      const auto inst = simulate_replicate(cell, rep);
      const auto full = fit(inst.data, model, config.solver);
      if (!full.converged) throw NumericalError("full-data fit did not converge");
      RepOutcome r;
      r.err_out = oracle_err_out(full.beta_hat, inst.truth, model, config.quad_order);
      LeaveOneOutRefitter<double> refitter(inst.data, model, full, config.solver);
      r.lo = lo_exact(inst.data, model, refitter).estimate;
      if (with_alo) r.alo = alo(inst.data, model, full).estimate;
      const auto fold_root = substream_seed(inst.replicate_seed,
                                            static_cast<std::uint64_t>(Stream::folds));
      for (int K : k_folds)
        r.kfold.push_back(kfold_cv(inst.data, model, K,
                                   substream_seed(fold_root, static_cast<std::uint64_t>(K)),
                                   config.solver)
                              .estimate);
      out.reps[static_cast<std::size_t>(rep)] = std::move(r);
    } catch (const std::exception& e) {
      throw ReplicateError(cell.n, cell.lambda, rep,
                           fmt::format("n={} lambda={} replicate {} (seed {}): {}", cell.n,
                                       cell.lambda, rep, replicate_seed(cell, rep), e.what()));
    }
  });
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<double> column(const std::vector<RepOutcome>& reps, double RepOutcome::*field) {
  std::vector<double> v;
  for (const auto& r : reps) v.push_back(r.*field);
  return v;
}

ExperimentRow estimator_row(const SimConfig& cell, std::string name,
                            const std::vector<double>& err_out,
                            const std::vector<double>& estimates) {
  ExperimentRow row;
  row.n = cell.n;
  row.p = cell.p;
  row.lambda = cell.lambda;
  row.estimator = std::move(name);
  const auto m = mse_of_estimator(err_out, estimates);
  row.mse = m.mse;
  row.mse_se = m.se;
  return row;
}

std::vector<SimConfig> sorted_cells(const ExperimentConfig& config) {
  auto cells = config.cells;
  std::stable_sort(cells.begin(), cells.end(), [](const SimConfig& a, const SimConfig& b) {
    return a.n != b.n ? a.n < b.n : a.lambda < b.lambda;
  });
  return cells;
}

// Slope over the LO rows when the run has a single lambda and >= 3 sizes.
std::optional<SlopeFit> lo_slope(const std::vector<ExperimentRow>& rows) {
  std::set<double> lambdas;
  std::vector<double> ns, mses;
  for (const auto& r : rows)
    if (r.estimator == "lo") {
      lambdas.insert(r.lambda);
      ns.push_back(double(r.n));
      mses.push_back(r.mse);
    }
  if (lambdas.size() != 1 || std::set<double>(ns.begin(), ns.end()).size() < 3)
    return std::nullopt;
  if (std::any_of(mses.begin(), mses.end(), [](double v) { return !(v > 0); }))
    return std::nullopt;
  return fit_loglog_slope(ns, mses);
}

ExperimentResult run_table(const ExperimentConfig& config, bool with_bound) {
  config.validate();
  ExperimentResult res;
  res.kind = config.kind;
  res.config_echo = sorted_cells(config);
  for (const auto& cell : res.config_echo) {
    const auto out = run_cell(config, cell, config.include_alo, {});
    res.wall_time.push_back({cell.n, cell.lambda, out.seconds});
    const auto err = column(out.reps, &RepOutcome::err_out);
    auto lo_row = estimator_row(cell, "lo", err, column(out.reps, &RepOutcome::lo));
    if (with_bound) {
      const double rho = double(cell.p) * cell.covariance.resolve(cell.n).max_eigenvalue(cell.p);
      const double delta = double(cell.n) / double(cell.p);
      lo_row.bound_over_n = logistic_ridge_bounds(rho, delta, cell.lambda, cell.n).bound_over_n;
    }
    res.rows.push_back(std::move(lo_row));
    if (config.include_alo)
      res.rows.push_back(estimator_row(cell, "alo", err, column(out.reps, &RepOutcome::alo)));
  }
  res.slope_fit = lo_slope(res.rows);
  return res;
}

}  // namespace

ExperimentResult run_table1(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::table1)
    throw std::invalid_argument("run_table1: config is not a table1 experiment");
  if (config.model.reg.family != RegFamily::elastic_net)
    throw std::invalid_argument("table1: needs elastic_net regularizer");
  return run_table(config, false);
}

ExperimentResult run_table2(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::table2)
    throw std::invalid_argument("run_table2: config is not a table2 experiment");
  return run_table(config, true);
}

ExperimentResult run_figure1(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::figure1)
    throw std::invalid_argument("run_figure1: config is not a figure1 experiment");
  config.validate();
  ExperimentResult res;
  res.kind = config.kind;
  res.config_echo = sorted_cells(config);
  for (const auto& cell : res.config_echo) {
    auto k_folds = cell.k_folds;
    std::sort(k_folds.begin(), k_folds.end());
    const auto out = run_cell(config, cell, config.include_alo, k_folds);
    res.wall_time.push_back({cell.n, cell.lambda, out.seconds});
    const auto err = column(out.reps, &RepOutcome::err_out);
    const auto add = [&](std::string name, const std::vector<double>& est) {
      auto row = estimator_row(cell, std::move(name), err, est);
      const auto ms = mean_se(est);
      row.mean = ms.mean;
      row.mean_se = ms.se;
      res.rows.push_back(std::move(row));
    };
    for (std::size_t j = 0; j < k_folds.size(); ++j) {
      std::vector<double> est;
      for (const auto& r : out.reps) est.push_back(r.kfold[j]);
      add(fmt::format("kfold{}", k_folds[j]), est);
    }
    add("lo", column(out.reps, &RepOutcome::lo));
    if (config.include_alo) add("alo", column(out.reps, &RepOutcome::alo));
    add("oracle", err);
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::table1: return run_table1(config);
    case ExperimentKind::table2: return run_table2(config);
    case ExperimentKind::figure1: return run_figure1(config);
  }
  throw std::logic_error("unhandled experiment kind");
}

}  // namespace loorisk
