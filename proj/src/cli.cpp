#include "loorisk/cli.hpp"

#include "loorisk/bounds.hpp"
#include "loorisk/config.hpp"
#include "loorisk/experiments.hpp"
#include "loorisk/parallel.hpp"
#include "loorisk/report.hpp"
#include "loorisk/risk.hpp"
#include "loorisk/selftest.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>

#ifndef LOORISK_VERSION
#define LOORISK_VERSION "dev"
#endif

namespace loorisk {
namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::optional<double> tol;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "INI config file");
    cmd->add_option("--preset", c.preset, "preset name (desk, paper, or a presets/*.ini stem)");
  }
  cmd->add_option("--seed", c.seed, "root seed");
  cmd->add_option("--out", c.out, "output directory (results.csv, report.json, manifest.json)");
  cmd->add_option("--threads", c.threads, "worker threads (default: LOORISK_THREADS)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const Common& c, const std::string& preset_prefix, std::string& path) {
  if (!c.config.empty() && !c.preset.empty())
    throw ConfigError("give --config or --preset, not both");
  RunConfig cfg;
  if (!c.config.empty()) {
    path = c.config;
    cfg = load_config(path);
  } else if (!c.preset.empty()) {
    std::filesystem::path p;
    try {
      p = preset_path(preset_prefix.empty() ? c.preset : preset_prefix + "_" + c.preset);
    } catch (const ConfigError&) {
      p = preset_path(c.preset);
    }
    path = p.string();
    cfg = load_config(p);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.tol) cfg.solver.tol = *c.tol;
  cfg.threads = resolve_threads(c.threads ? c.threads : cfg.threads);
  return cfg;
}

struct Instance {
  Dataset<double> data;
  std::optional<TrueModel<double>> truth;
};

Instance load_instance(const RunConfig& cfg) {
  if (cfg.data_path)
    return {load_csv_dataset(*cfg.data_path, cfg.data_header, cfg.response_column), std::nullopt};
  auto inst = simulate_replicate(cfg.first_cell(), 0);
  return {std::move(inst.data), std::move(inst.truth)};
}

void emit(const Common& c, const std::string& command, const std::string& config_path,
          std::uint64_t seed, const std::string& started, const std::string& csv,
          const Json& report) {
  if (c.out.empty()) {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    return;
  }
  RunManifest m;
  m.command = command;
  m.config_path = config_path;
  m.seed = seed;
  m.version = LOORISK_VERSION;
  m.started = started;
  const auto paths = write_results(c.out, csv, report, std::move(m));
  for (const auto& p : paths) fmt::print(stderr, "wrote {}\n", p.string());
}

std::string fit_csv(const FitResult<double>& f) {
  std::string out = "index,beta_hat\n";
  for (Index j = 0; j < f.beta_hat.size(); ++j)
    out += fmt::format("{},{}\n", j, format_real(f.beta_hat(j)));
  return out;
}

FitResult<double> checked_fit(const Dataset<double>& data, const ModelSpec<double>& model,
                              const SolverOpts<double>& opts) {
  auto f = fit(data, model, opts);
  if (!f.converged)
    throw NumericalError(fmt::format("full-data fit did not converge after {} iterations (residual {:.3g})",
                                     f.iterations, f.grad_inf_norm));
  return f;
}

// rho = p sigma_max(Sigma): from the truth when known, else from X^T X / n.
double estimate_rho(const Instance& inst) {
  const Index p = inst.data.p();
  if (inst.truth) return double(p) * inst.truth->covariance.max_eigenvalue(p);
  const MatrixX<double> S = detail::weighted_gram<double>(
      inst.data.X, VectorX<double>::Ones(inst.data.n()), VectorX<double>::Zero(p)) /
                            double(inst.data.n());
  Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(S, Eigen::EigenvaluesOnly);
  return double(p) * es.eigenvalues().maxCoeff();
}

int run_selftest(std::uint64_t seed) {
  auto checks = ridge_alo_identity_checks(10, seed);
  for (auto& c : derivative_checks(200, seed)) checks.push_back(std::move(c));
  bool ok = true;
  for (const auto& c : checks) {
    fmt::print("{} {}: {:.3g} (tol {:.1g})\n", c.passed ? "PASS" : "FAIL", c.name, c.measured,
               c.tolerance);
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Leave-one-out and approximate leave-one-out risk estimation for penalized GLMs"};
  app.set_version_flag("--version", LOORISK_VERSION);
  app.require_subcommand(1);

  Common c;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model on the configured data");
  auto* lo_cmd = app.add_subcommand("lo", "exact leave-one-out risk");
  auto* alo_cmd = app.add_subcommand("alo", "approximate leave-one-out risk");
  auto* cv_cmd = app.add_subcommand("cv", "K-fold cross validation risk");
  auto* bounds_cmd = app.add_subcommand("bounds", "bound constants for ridge logistic regression");
  auto* audit_cmd = app.add_subcommand("audit", "audit curvature and derivative assumptions");
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo study");
  auto* self_cmd = app.add_subcommand("selftest", "ALO/LO identity and derivative checks");
  for (auto* cmd : {fit_cmd, lo_cmd, alo_cmd, cv_cmd, audit_cmd, sim_cmd}) add_common(cmd, c);
  add_common(bounds_cmd, c, false);
  self_cmd->add_option("--seed", c.seed, "root seed");

  int folds = 0;
  cv_cmd->add_option("--folds", folds, "K (default: first of [cv] k_folds)")->check(CLI::Range(2, 1 << 30));

  double rho = 0, delta = 0, lambda = 0;
  Index bound_n = 0;
  bounds_cmd->add_option("--rho", rho, "p * sigma_max(Sigma)")->required()->check(CLI::NonNegativeNumber);
  bounds_cmd->add_option("--delta", delta, "n / p")->required()->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--lambda", lambda, "ridge penalty")->required()->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--n", bound_n, "sample size for C_v / n");

  std::string study;
  sim_cmd->add_option("study", study, "table1, table2 or figure1")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "figure1"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string started = utc_timestamp();
  try {
    if (self_cmd->parsed()) return run_selftest(c.seed.value_or(20240601));

    if (bounds_cmd->parsed()) {
      const auto rep = logistic_ridge_bounds(rho, delta, lambda, bound_n);
      fmt::print(stderr, "C_b = {}\nC_v = {}\n", format_real(rep.C_b), format_real(rep.C_v));
      emit(c, "bounds", "", c.seed.value_or(0), started, to_csv(rep), to_json(rep));
      return 0;
    }

    std::string config_path;
    if (sim_cmd->parsed()) {
      auto cfg = resolve_config(c, study, config_path);
      if (config_path.empty()) throw ConfigError("simulate needs --config or --preset");
      if (!cfg.kind) cfg.kind = experiment_kind_from_string(study);
      if (*cfg.kind != experiment_kind_from_string(study))
        throw ConfigError(fmt::format("{}: [experiment] kind is {}, not {}", config_path,
                                      to_string(*cfg.kind), study));
      const auto result = run_experiment(cfg.experiment());
      for (const auto& w : result.wall_time)
        fmt::print(stderr, "n={} lambda={}: {:.1f} s\n", w.n, w.lambda, w.seconds);
      if (result.slope_fit)
        fmt::print(stderr, "log-log slope {:.3f} (SE {:.3f})\n", result.slope_fit->slope,
                   result.slope_fit->slope_se);
      emit(c, "simulate " + study, config_path, cfg.seed, started, to_csv(result), to_json(result));
      return 0;
    }

    const auto cfg = resolve_config(c, "", config_path);
    const auto inst = load_instance(cfg);
    const auto& model = cfg.model;
    model.validate();

    if (fit_cmd->parsed()) {
      const auto f = checked_fit(inst.data, model, cfg.solver);
      emit(c, "fit", config_path, cfg.seed, started, fit_csv(f), to_json(f));
    } else if (lo_cmd->parsed()) {
      const auto rep = lo_exact(inst.data, model, cfg.solver);
      fmt::print(stderr, "LO = {}\n", format_real(rep.estimate));
      emit(c, "lo", config_path, cfg.seed, started, to_csv(rep), to_json(rep));
    } else if (alo_cmd->parsed()) {
      const auto f = checked_fit(inst.data, model, cfg.solver);
      const auto rep = alo(inst.data, model, f);
      fmt::print(stderr, "ALO = {} ({} flagged)\n", format_real(rep.estimate), rep.flagged.size());
      emit(c, "alo", config_path, cfg.seed, started, to_csv(rep), to_json(rep));
    } else if (cv_cmd->parsed()) {
      const int K = folds > 0 ? folds : cfg.k_folds.front();
      const auto fold_seed = substream_seed(cfg.seed, static_cast<std::uint64_t>(Stream::folds));
      const auto rep = kfold_cv(inst.data, model, K, fold_seed, cfg.solver);
      fmt::print(stderr, "CV(K={}) = {}\n", K, format_real(rep.estimate));
      emit(c, "cv", config_path, cfg.seed, started, to_csv(rep), to_json(rep));
    } else if (audit_cmd->parsed()) {
      const auto full = checked_fit(inst.data, model, cfg.solver);
      if (!model.smooth())
        throw std::invalid_argument("audit needs a smooth regularizer (ridge or smoothed_elastic_net)");
      LeaveOneOutRefitter<double> refitter(inst.data, model, full, cfg.solver);
      std::vector<std::pair<Index, FitResult<double>>> loo;
      for (Index i : audit_sample_indices(inst.data.n(), cfg.audit_sample)) {
        auto r = refitter.refit(i);
        if (!r.converged) throw RefitError(i, fmt::format("leave-one-out fit for row {} did not converge", i));
        loo.emplace_back(i, std::move(r));
      }
      auto audit = audit_assumptions(inst.data, model, full, loo, cfg.audit_t_grid);
      const double rho_hat = estimate_rho(inst);
      const double delta_hat = double(inst.data.n()) / double(inst.data.p());
      BoundReport<double> rep;
      if (model.loss.family == LossFamily::logistic && model.reg.family == RegFamily::ridge &&
          model.phi == ErrorFunction::loss) {
        rep = logistic_ridge_bounds(rho_hat, delta_hat, model.lambda, inst.data.n());
      } else {
        rep.rho = rho_hat;
        rep.delta = delta_hat;
        rep.lambda = model.lambda;
        rep.n = inst.data.n();
        rep.c0 = audit.c0_emp;
        rep.c1 = audit.c0_emp;
        rep.nu = audit.nu_emp;
        rep.C_b = rep.nu > 0 && rep.c0 > 0 ? compute_Cb(rep.c0, rep.c1, rho_hat, delta_hat, rep.nu)
                                           : std::numeric_limits<double>::quiet_NaN();
        rep.C_v = std::numeric_limits<double>::quiet_NaN();
        rep.bound_over_n = std::numeric_limits<double>::quiet_NaN();
      }
      const auto checks = audit.nu_emp > 0
                              ? check_perturb_lemma(inst.data, model, full, loo, audit.nu_emp,
                                                    cfg.audit_abs_tol)
                              : std::vector<PerturbCheck<double>>{};
      rep.audit = std::move(audit);
      std::string csv = "index,lhs,rhs,slack,holds\n";
      Json pj = Json::array();
      std::size_t held = 0;
      for (const auto& pc : checks) {
        csv += fmt::format("{},{},{},{},{}\n", pc.i, format_real(pc.lhs), format_real(pc.rhs),
                           format_real(pc.slack), pc.holds ? 1 : 0);
        pj.push_back({{"index", pc.i}, {"lhs", pc.lhs}, {"rhs", pc.rhs}, {"holds", pc.holds}});
        held += pc.holds ? 1 : 0;
      }
      fmt::print(stderr, "c0_emp = {}\nnu_emp = {}\nperturbation bound holds on {}/{} rows\n",
                 format_real(rep.audit->c0_emp), format_real(rep.audit->nu_emp), held, checks.size());
      Json report = to_json(rep);
      report["perturb_checks"] = std::move(pj);
      emit(c, "audit", config_path, cfg.seed, started, csv, report);
    }
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const ReplicateError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}

}  // namespace loorisk
