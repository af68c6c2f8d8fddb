#include "loorisk/selftest.hpp"

#include "loorisk/datagen.hpp"
#include "loorisk/risk.hpp"
#include "loorisk/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace loorisk {
namespace {

constexpr std::array<double, 2> kSteps{1e-5, 1e-6};

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(std::abs(analytic), 1.0);
}

double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

LossSpec<double> random_loss(LossFamily family, Rng& rng) {
  switch (family) {
    case LossFamily::squared: return LossSpec<double>::squared();
    case LossFamily::logistic: return LossSpec<double>::logistic();
    case LossFamily::pseudo_huber: return LossSpec<double>::pseudo_huber(0.5 + 1.5 * rng.uniform());
    case LossFamily::smoothed_abs: return LossSpec<double>::smoothed_abs(0.5 + 2.5 * rng.uniform());
    case LossFamily::poisson_softrect: return LossSpec<double>::poisson_softrect();
    case LossFamily::negative_binomial:
      return LossSpec<double>::negative_binomial(0.2 + 1.8 * rng.uniform());
  }
  throw std::logic_error("unhandled loss");
}

double random_response(LossFamily family, Rng& rng) {
  switch (family) {
    case LossFamily::logistic: return rng.bernoulli(0.5) ? 1.0 : 0.0;
    case LossFamily::poisson_softrect:
    case LossFamily::negative_binomial: return static_cast<double>(rng.poisson(3.0));
    default: return 2.0 * rng.normal();
  }
}

}  // namespace

std::vector<CheckResult> derivative_checks(int points, std::uint64_t seed, double tol_d1,
                                           double tol_d2) {
  std::vector<CheckResult> out;
  constexpr std::array families{LossFamily::squared,      LossFamily::logistic,
                                LossFamily::pseudo_huber, LossFamily::smoothed_abs,
                                LossFamily::poisson_softrect, LossFamily::negative_binomial};
  for (std::size_t f = 0; f < families.size(); ++f) {
    Rng rng(substream_seed(seed, f));
    double worst1 = 0, worst2 = 0;
    for (int k = 0; k < points; ++k) {
      const auto spec = random_loss(families[f], rng);
      const double y = random_response(families[f], rng);
      const double z = -4.0 + 8.0 * rng.uniform();
      const auto lv = loss_eval(spec, y, z);
      for (double h : kSteps) {
        worst1 = std::max(worst1, rel_err(lv.d1, central([&](double t) {
          return loss_eval(spec, y, t).value; }, z, h)));
        worst2 = std::max(worst2, rel_err(lv.d2, central([&](double t) {
          return loss_eval(spec, y, t).d1; }, z, h)));
      }
    }
    const std::string name(to_string(families[f]));
    out.push_back({"d1 " + name, worst1 <= tol_d1, worst1, tol_d1});
    out.push_back({"d2 " + name, worst2 <= tol_d2, worst2, tol_d2});
  }

  constexpr std::array regs{RegFamily::ridge, RegFamily::smoothed_elastic_net};
  for (std::size_t r = 0; r < regs.size(); ++r) {
    Rng rng(substream_seed(seed, 100 + r));
    double worst1 = 0, worst2 = 0;
    for (int k = 0; k < points; ++k) {
      const auto spec = regs[r] == RegFamily::ridge
                            ? RegSpec<double>::ridge()
                            : RegSpec<double>::smoothed_elastic_net(rng.uniform(),
                                                                    0.5 + 4.5 * rng.uniform());
      VectorX<double> b(1);
      b(0) = -3.0 + 6.0 * rng.uniform();
      const auto rv = reg_eval(spec, b);
      const auto value = [&](double t) { return reg_value(spec, VectorX<double>::Constant(1, t)); };
      const auto grad = [&](double t) {
        return reg_eval(spec, VectorX<double>::Constant(1, t)).gradient(0);
      };
      for (double h : kSteps) {
        worst1 = std::max(worst1, rel_err(rv.gradient(0), central(value, b(0), h)));
        worst2 = std::max(worst2, rel_err(rv.hessian_diag(0), central(grad, b(0), h)));
      }
    }
    const std::string name(to_string(regs[r]));
    out.push_back({"gradient " + name, worst1 <= tol_d1, worst1, tol_d1});
    out.push_back({"hessian " + name, worst2 <= tol_d2, worst2, tol_d2});
  }
  return out;
}

std::vector<CheckResult> ridge_alo_identity_checks(int instances, std::uint64_t seed, double tol) {
  std::vector<CheckResult> out;
  constexpr std::array<std::pair<Index, Index>, 2> shapes{{{30, 10}, {10, 30}}};
  for (const auto& [n, p] : shapes) {
    double worst = 0;
    for (int s = 0; s < instances; ++s) {
      SimConfig cfg;
      cfg.n = n;
      cfg.p = p;
      cfg.k = p;
      cfg.covariance = {CovarianceSpec::Kind::identity, 1};
      cfg.noise_var = 1;
      cfg.seed = substream_seed(seed, static_cast<std::uint64_t>(n * 1000 + p));
      cfg.reps = instances;
      const auto inst = simulate_replicate(cfg, s);
      ModelSpec<double> model{LossSpec<double>::squared(), RegSpec<double>::ridge(),
                              0.1 + static_cast<double>(s % 5), ErrorFunction::loss};
      SolverOpts<double> opts;
      opts.tol = 1e-12;
      const auto full = fit(inst.data, model, opts);
      const auto lo = lo_exact(inst.data, model, opts);
      const auto al = alo(inst.data, model, full);
      worst = std::max(worst, (lo.per_sample - al.per_sample).cwiseAbs().maxCoeff());
    }
    out.push_back({fmt::format("ridge ALO = LO (n={}, p={})", n, p), worst <= tol, worst, tol});
  }
  return out;
}

}  // namespace loorisk
