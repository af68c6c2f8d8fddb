#pragma once

#include "loorisk/experiments.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace loorisk {

/// Malformed config: the message names the file, line and field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parsed INI config. Sections and keys:
///   [experiment] kind, seed, reps, threads, quad_order, include_alo
///   [design]     n (list), p | p_over_n, k | k_over_n, covariance, noise_var,
///                beta_dist, family, shape, random_support
///   [model]      loss, huber_scale, smooth_scale, shape, reg, mix,
///                smooth_sharpness, lambda (list), phi
///   [solver]     tol, max_iter, line_search_shrink
///   [data]       path, response_column, header
///   [cv]         k_folds (list)
///   [audit]      sample, t_grid, abs_tol
/// Lists are comma separated. Unknown sections or keys are errors.
struct RunConfig {
  std::string source;  // file the config came from, empty for defaults
  std::optional<ExperimentKind> kind;
  std::uint64_t seed = 0;
  Index reps = 1;
  std::optional<int> threads;
  int quad_order = 64;
  bool include_alo = true;

  std::vector<Index> ns{100};
  std::optional<Index> p;
  std::optional<double> p_over_n;
  std::optional<Index> k;
  std::optional<double> k_over_n;
  SimConfig design;  // family, covariance, noise, beta_dist, shape, random_support

  ModelSpec<double> model;
  std::vector<double> lambdas{1.0};
  SolverOpts<double> solver;

  std::optional<std::filesystem::path> data_path;  // resolved against the config's directory
  std::optional<std::string> response_column;      // header name or 0-based index; default last
  bool data_header = true;

  std::vector<int> k_folds{5};

  Index audit_sample = 25;
  int audit_t_grid = 11;
  double audit_abs_tol = 1e-7;

  Index p_for(Index n) const;
  Index k_for(Index n) const;

  /// One cell per (n, lambda); each cell's seed is substream_seed(seed, n), so
  /// cells that differ only in lambda see the same replicates.
  ExperimentConfig experiment() const;
  /// Replicate 0 of the first n, for single-instance commands without a data file.
  SimConfig first_cell() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::filesystem::path& path);

/// presets/<name>.ini from LOORISK_PRESET_DIR (env), else the build-time directory.
std::filesystem::path preset_path(const std::string& name);

/// Numeric CSV: every column but the response becomes a feature.
Dataset<double> load_csv_dataset(const std::filesystem::path& path, bool header,
                                 const std::optional<std::string>& response_column);

}  // namespace loorisk
