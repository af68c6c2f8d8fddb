#include "loorisk/losses.hpp"
#include "loorisk/regularizers.hpp"
#include "loorisk/risk.hpp"
#include "loorisk/truth.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace loorisk {
namespace {

template <typename E, std::size_t N>
E lookup(const std::array<std::pair<E, std::string_view>, N>& table,
         std::string_view name, const char* what) {
  for (const auto& [e, s] : table)
    if (s == name) return e;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [k, s] : table)
    if (k == e) return s;
  throw std::logic_error("unnamed enumerator");
}

constexpr std::array<std::pair<LossFamily, std::string_view>, 6> kLoss{{
    {LossFamily::squared, "squared"},
    {LossFamily::logistic, "logistic"},
    {LossFamily::pseudo_huber, "pseudo_huber"},
    {LossFamily::smoothed_abs, "smoothed_abs"},
    {LossFamily::poisson_softrect, "poisson_softrect"},
    {LossFamily::negative_binomial, "negative_binomial"},
}};

constexpr std::array<std::pair<RegFamily, std::string_view>, 4> kReg{{
    {RegFamily::ridge, "ridge"},
    {RegFamily::smoothed_elastic_net, "smoothed_elastic_net"},
    {RegFamily::l1, "l1"},
    {RegFamily::elastic_net, "elastic_net"},
}};

constexpr std::array<std::pair<ErrorFunction, std::string_view>, 2> kPhi{{
    {ErrorFunction::loss, "loss"},
    {ErrorFunction::squared_error, "squared_error"},
}};

constexpr std::array<std::pair<RiskMethod, std::string_view>, 3> kMethod{{
    {RiskMethod::lo_exact, "lo_exact"},
    {RiskMethod::alo, "alo"},
    {RiskMethod::kfold, "kfold"},
}};

constexpr std::array<std::pair<ResponseFamily, std::string_view>, 4> kResponse{{
    {ResponseFamily::linear, "linear"},
    {ResponseFamily::logistic, "logistic"},
    {ResponseFamily::poisson_softrect, "poisson_softrect"},
    {ResponseFamily::negative_binomial, "negative_binomial"},
}};

}  // namespace

std::string_view to_string(LossFamily f) { return name_of(kLoss, f); }
LossFamily loss_family_from_string(std::string_view s) { return lookup(kLoss, s, "loss"); }
std::string_view to_string(RegFamily f) { return name_of(kReg, f); }
RegFamily reg_family_from_string(std::string_view s) { return lookup(kReg, s, "regularizer"); }
std::string_view to_string(ErrorFunction f) { return name_of(kPhi, f); }
ErrorFunction error_function_from_string(std::string_view s) {
  return lookup(kPhi, s, "error function");
}
std::string_view to_string(RiskMethod m) { return name_of(kMethod, m); }
RiskMethod risk_method_from_string(std::string_view s) { return lookup(kMethod, s, "method"); }
std::string_view to_string(ResponseFamily f) { return name_of(kResponse, f); }
ResponseFamily response_family_from_string(std::string_view s) {
  return lookup(kResponse, s, "response family");
}

}  // namespace loorisk
