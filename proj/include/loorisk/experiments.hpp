#pragma once

#include "loorisk/datagen.hpp"
#include "loorisk/solver.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loorisk {

enum class ExperimentKind { table1, table2, figure1 };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// A Monte-Carlo study: one SimConfig per (n, lambda) cell, all sharing the
/// model and solver settings. `model.lambda` is replaced by each cell's lambda.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::table1;
  std::vector<SimConfig> cells;
  ModelSpec<double> model;
  SolverOpts<double> solver;
  int threads = 1;
  int quad_order = 64;
  bool include_alo = true;

  void validate() const;
};

struct ExperimentRow {
  Index n = 0;
  Index p = 0;
  double lambda = 0;
  std::string estimator;  // lo, alo, kfold<K>, oracle
  double mse = 0;
  std::optional<double> mse_se;
  std::optional<double> bound_over_n;
  // figure1: mean of the estimate (of Err_out for the oracle row)
  std::optional<double> mean;
  std::optional<double> mean_se;

  friend bool operator==(const ExperimentRow&, const ExperimentRow&) = default;
};

struct SlopeFit {
  double slope = 0;
  double slope_se = 0;
  double intercept = 0;
  double intercept_se = 0;
  double adj_r2 = 0;

  friend bool operator==(const SlopeFit&, const SlopeFit&) = default;
};

struct CellTiming {
  Index n = 0;
  double lambda = 0;
  double seconds = 0;

  friend bool operator==(const CellTiming&, const CellTiming&) = default;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::table1;
  std::vector<ExperimentRow> rows;  // sorted by (n, lambda), estimator order fixed
  std::optional<SlopeFit> slope_fit;
  std::vector<SimConfig> config_echo;
  std::vector<CellTiming> wall_time;

  bool operator==(const ExperimentResult&) const = default;
};

/// A replicate failed; carries the cell and replicate that produced it.
class ReplicateError : public NumericalError {
 public:
  ReplicateError(Index n, double lambda, Index rep, const std::string& what)
      : NumericalError(what), n_(n), lambda_(lambda), rep_(rep) {}
  Index n() const noexcept { return n_; }
  double lambda() const noexcept { return lambda_; }
  Index rep() const noexcept { return rep_; }

 private:
  Index n_;
  double lambda_;
  Index rep_;
};

/// OLS of log(mse) on log(n).
SlopeFit fit_loglog_slope(const std::vector<double>& ns, const std::vector<double>& mses);

struct MseSummary {
  double mse = 0;
  std::optional<double> se;  // missing with a single replicate
};

/// Mean and standard error (sample sd / sqrt(count)) of (a_i - b_i)^2.
MseSummary mse_of_estimator(const std::vector<double>& err_out_values,
                            const std::vector<double>& estimates);

/// Err_out of a fitted coefficient under the truth, by closed form or quadrature.
double oracle_err_out(const VectorX<double>& beta_hat, const TrueModel<double>& truth,
                      const ModelSpec<double>& model, int quad_order);

ExperimentResult run_table1(const ExperimentConfig& config);
ExperimentResult run_table2(const ExperimentConfig& config);
ExperimentResult run_figure1(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace loorisk
