#include "loorisk/oracles.hpp"

#include "loorisk/datagen.hpp"
#include "loorisk/parallel.hpp"
#include "loorisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace loorisk {
namespace {

struct Moments {
  double count = 0;
  double mean = 0;
  double m2 = 0;

  void push(double x) {
    count += 1;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }

  // Chan et al. pairwise merge
  void merge(const Moments& o) {
    if (o.count == 0) return;
    const double total = count + o.count;
    const double d = o.mean - mean;
    mean += d * o.count / total;
    m2 += o.m2 + d * d * count * o.count / total;
    count = total;
  }
};

bool compatible(ResponseFamily family, LossFamily loss) {
  switch (family) {
    case ResponseFamily::linear:
      return loss == LossFamily::squared || loss == LossFamily::pseudo_huber ||
             loss == LossFamily::smoothed_abs;
    case ResponseFamily::logistic:
      return loss == LossFamily::logistic;
    case ResponseFamily::poisson_softrect:
    case ResponseFamily::negative_binomial:
      return loss == LossFamily::poisson_softrect || loss == LossFamily::negative_binomial;
  }
  return false;
}

constexpr std::uint64_t kChunk = 1u << 16;

}  // namespace

MonteCarloEstimate err_out_monte_carlo(const VectorX<double>& beta_hat,
                                       const TrueModel<double>& truth,
                                       const ModelSpec<double>& model, std::uint64_t m,
                                       std::uint64_t seed, int threads) {
  if (m < 100) throw std::invalid_argument("err_out_monte_carlo: m must be >= 100");
  truth.validate();
  if (beta_hat.size() != truth.beta_star.size())
    throw std::invalid_argument("err_out_monte_carlo: coefficient length mismatch");
  if (model.phi == ErrorFunction::loss && !compatible(truth.family, model.loss.family))
    throw std::invalid_argument("err_out_monte_carlo: loss " +
                                std::string(to_string(model.loss.family)) +
                                " does not match response family " +
                                std::string(to_string(truth.family)));
  const Index p = beta_hat.size();
  const bool iso = truth.covariance.is_scaled_identity();
  const double root_scale = iso ? std::sqrt(truth.covariance.scale()) : 0.0;
  // Project through the factor once: x^T b = z^T (L^T b).
  VectorX<double> bh = beta_hat;
  VectorX<double> bs = truth.beta_star;
  if (!iso) {
    const MatrixX<double> L = truth.covariance.cholesky_factor();
    bh = L.transpose() * beta_hat;
    bs = L.transpose() * truth.beta_star;
  } else {
    bh *= root_scale;
    bs *= root_scale;
  }

  const std::uint64_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<Moments> parts(chunks);
  parallel_for(static_cast<Index>(chunks), threads, [&](Index c) {
    const auto cu = static_cast<std::uint64_t>(c);
    Rng rng(substream_seed(seed, cu));
    const std::uint64_t count = std::min(kChunk, m - cu * kChunk);
    Moments mom;
    for (std::uint64_t k = 0; k < count; ++k) {
      double zh = 0;
      double zs = 0;
      for (Index j = 0; j < p; ++j) {
        const double g = rng.normal();
        zh += g * bh(j);
        zs += g * bs(j);
      }
      const double y = draw_response(rng, truth.family, zs, truth.noise_var, truth.shape);
      mom.push(model.score(y, zh));
    }
    parts[static_cast<std::size_t>(c)] = mom;
  });
  Moments total;
  for (const auto& part : parts) total.merge(part);
  MonteCarloEstimate out;
  out.mean = total.mean;
  out.draws = m;
  out.std_err = std::sqrt(total.m2 / (total.count - 1) / total.count);
  return out;
}

}  // namespace loorisk
