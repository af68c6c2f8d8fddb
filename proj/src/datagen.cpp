#include "loorisk/datagen.hpp"

#include "loorisk/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace loorisk {

namespace {

// shortest decimal that reads back to the same double
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

std::string to_string(const BetaDist& dist) {
  if (dist.kind == BetaDist::Kind::laplace_unit) return "laplace_unit";
  return "constant:" + shortest(dist.value);
}

BetaDist beta_dist_from_string(const std::string& text) {
  if (text == "laplace_unit") return BetaDist::laplace_unit();
  const std::string prefix = "constant:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    const std::string rest = text.substr(prefix.size());
    const double v = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("bad constant value '" + rest + "'");
    return BetaDist::constant(v);
  }
  throw std::invalid_argument("unknown beta distribution '" + text + "'");
}

Covariance<double> CovarianceSpec::resolve(Index n) const {
  switch (kind) {
    case Kind::identity:
      return Covariance<double>::scaled_identity(1.0);
    case Kind::identity_over_n:
      return Covariance<double>::scaled_identity(1.0 / static_cast<double>(n));
    case Kind::scaled_identity:
      return Covariance<double>::scaled_identity(scale);
  }
  throw std::logic_error("unhandled covariance kind");
}

std::string to_string(const CovarianceSpec& spec) {
  switch (spec.kind) {
    case CovarianceSpec::Kind::identity:
      return "identity";
    case CovarianceSpec::Kind::identity_over_n:
      return "identity_over_n";
    case CovarianceSpec::Kind::scaled_identity:
      return "scaled_identity:" + shortest(spec.scale);
  }
  throw std::logic_error("unhandled covariance kind");
}

CovarianceSpec covariance_spec_from_string(const std::string& text) {
  if (text == "identity") return {CovarianceSpec::Kind::identity, 1};
  if (text == "identity_over_n") return {CovarianceSpec::Kind::identity_over_n, 1};
  const std::string prefix = "scaled_identity:";
  if (text.rfind(prefix, 0) == 0) {
    const double c = std::stod(text.substr(prefix.size()));
    if (!(c > 0)) throw std::invalid_argument("covariance scale must be positive");
    return {CovarianceSpec::Kind::scaled_identity, c};
  }
  throw std::invalid_argument("unknown covariance '" + text + "'");
}

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("sim: n and p must be positive");
  if (k < 0 || k > p) throw std::invalid_argument("sim: need 0 <= k <= p");
  if (reps < 1) throw std::invalid_argument("sim: reps must be >= 1");
  if (!(noise_var >= 0)) throw std::invalid_argument("sim: noise_var must be >= 0");
  if (!(lambda > 0)) throw std::invalid_argument("sim: lambda must be positive");
  for (int K : k_folds)
    if (K < 2 || K > n) throw std::invalid_argument("sim: fold count out of range");
}

MatrixX<double> gen_design(Index n, Index p, const Covariance<double>& cov,
                           std::uint64_t seed) {
  Rng rng(seed);
  MatrixX<double> Z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  if (cov.is_scaled_identity()) return std::sqrt(cov.scale()) * Z;
  const MatrixX<double> L = cov.cholesky_factor();
  if (L.rows() != p) throw std::invalid_argument("gen_design: covariance dimension mismatch");
  return Z * L.transpose();
}

VectorX<double> gen_beta_star(Index p, Index k, const BetaDist& dist, std::uint64_t seed,
                              bool random_support) {
  if (k < 0 || k > p) throw std::invalid_argument("gen_beta_star: need 0 <= k <= p");
  Rng rng(seed);
  std::vector<Index> support(static_cast<std::size_t>(p));
  std::iota(support.begin(), support.end(), Index{0});
  if (random_support) {
    // partial Fisher-Yates: the first k slots become the support
    for (Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(p - i)));
      std::swap(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
    }
  }
  VectorX<double> beta = VectorX<double>::Zero(p);
  const double unit_scale = 1.0 / std::sqrt(2.0);
  for (Index s = 0; s < k; ++s) {
    double v = dist.kind == BetaDist::Kind::constant ? dist.value : 0.0;
    if (dist.kind == BetaDist::Kind::laplace_unit) {
      do {
        v = rng.laplace(unit_scale);
      } while (v == 0.0);
    }
    beta(support[static_cast<std::size_t>(s)]) = v;
  }
  return beta;
}

double draw_response(Rng& rng, ResponseFamily family, double eta, double noise_var,
                     double shape) {
  switch (family) {
    case ResponseFamily::linear:
      return eta + (noise_var > 0 ? std::sqrt(noise_var) * rng.normal() : 0.0);
    case ResponseFamily::logistic:
      return rng.bernoulli(detail::sigmoid(eta)) ? 1.0 : 0.0;
    case ResponseFamily::poisson_softrect:
      return static_cast<double>(rng.poisson(detail::softplus(eta)));
    case ResponseFamily::negative_binomial: {
      // Gamma-Poisson mixture: mean e^eta, variance mu + shape mu^2
      const double mu = std::exp(eta);
      return static_cast<double>(rng.poisson(rng.gamma(1.0 / shape, shape * mu)));
    }
  }
  throw std::logic_error("unhandled response family");
}

VectorX<double> gen_response(const MatrixX<double>& X, const VectorX<double>& beta_star,
                             ResponseFamily family, double noise_var, double shape,
                             std::uint64_t seed) {
  Rng rng(seed);
  const VectorX<double> eta = X * beta_star;
  VectorX<double> y(eta.size());
  for (Index i = 0; i < eta.size(); ++i)
    y(i) = draw_response(rng, family, eta(i), noise_var, shape);
  return y;
}

std::uint64_t replicate_seed(const SimConfig& cfg, Index rep) {
  return substream_seed(cfg.seed, static_cast<std::uint64_t>(rep));
}

SimInstance simulate_replicate(const SimConfig& cfg, Index rep) {
  cfg.validate();
  const std::uint64_t rs = replicate_seed(cfg, rep);
  const auto cov = cfg.covariance.resolve(cfg.n);
  SimInstance inst;
  inst.replicate_seed = rs;
  inst.data.X = gen_design(cfg.n, cfg.p, cov,
                           substream_seed(rs, static_cast<std::uint64_t>(Stream::design)));
  const VectorX<double> beta =
      gen_beta_star(cfg.p, cfg.k, cfg.beta_dist,
                    substream_seed(rs, static_cast<std::uint64_t>(Stream::beta)),
                    cfg.random_support);
  inst.data.y = gen_response(inst.data.X, beta, cfg.family, cfg.noise_var, cfg.shape,
                             substream_seed(rs, static_cast<std::uint64_t>(Stream::response)));
  inst.truth.beta_star = beta;
  inst.truth.covariance = cov;
  inst.truth.noise_var = cfg.noise_var;
  inst.truth.family = cfg.family;
  inst.truth.shape = cfg.shape;
  return inst;
}

}  // namespace loorisk
