#pragma once

#include "loorisk/solver.hpp"
#include "loorisk/truth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace loorisk {

struct BetaDist {
  enum class Kind { laplace_unit, constant };
  Kind kind = Kind::laplace_unit;
  double value = 0;  // constant only

  static BetaDist laplace_unit() { return {Kind::laplace_unit, 0}; }
  static BetaDist constant(double v) { return {Kind::constant, v}; }
  friend bool operator==(const BetaDist&, const BetaDist&) = default;
};

std::string to_string(const BetaDist& dist);
BetaDist beta_dist_from_string(const std::string& text);

/// Covariance recipe resolved per cell: I, I/n, or c * I.
struct CovarianceSpec {
  enum class Kind { identity, identity_over_n, scaled_identity };
  Kind kind = Kind::identity_over_n;
  double scale = 1;  // scaled_identity only

  Covariance<double> resolve(Index n) const;
  friend bool operator==(const CovarianceSpec&, const CovarianceSpec&) = default;
};

std::string to_string(const CovarianceSpec& spec);
CovarianceSpec covariance_spec_from_string(const std::string& text);

/// One simulation cell.
struct SimConfig {
  Index n = 0;
  Index p = 0;
  Index k = 0;  // nonzeros of beta_star
  CovarianceSpec covariance;
  double noise_var = 0;
  BetaDist beta_dist;
  ResponseFamily family = ResponseFamily::linear;
  double shape = 1;  // negative_binomial
  double lambda = 1;
  Index reps = 1;
  std::uint64_t seed = 0;
  std::vector<int> k_folds;
  bool random_support = false;

  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// n x p matrix with i.i.d. N(0, Sigma) rows, filled row by row.
MatrixX<double> gen_design(Index n, Index p, const Covariance<double>& cov, std::uint64_t seed);

/// Exactly k nonzeros: the first k coordinates, or a seeded random support.
VectorX<double> gen_beta_star(Index p, Index k, const BetaDist& dist, std::uint64_t seed,
                              bool random_support = false);

class Rng;

/// One response draw given the linear predictor eta = x^T beta_star.
double draw_response(Rng& rng, ResponseFamily family, double eta, double noise_var,
                     double shape);

/// Responses given linear predictors X beta_star.
VectorX<double> gen_response(const MatrixX<double>& X, const VectorX<double>& beta_star,
                             ResponseFamily family, double noise_var, double shape,
                             std::uint64_t seed);

struct SimInstance {
  Dataset<double> data;
  TrueModel<double> truth;
  std::uint64_t replicate_seed = 0;
};

/// Seed of replicate r of a cell.
std::uint64_t replicate_seed(const SimConfig& cfg, Index rep);

/// Substream tags under a replicate seed.
enum class Stream : std::uint64_t { design = 1, beta = 2, response = 3, folds = 4 };

SimInstance simulate_replicate(const SimConfig& cfg, Index rep);

}  // namespace loorisk
