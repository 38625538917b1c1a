#include "lmselect/criteria.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lmselect {

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kBIC:
      return "BIC";
    case Criterion::kAIC:
      return "AIC";
    case Criterion::kAIC3:
      return "AIC3";
    case Criterion::kCAIC:
      return "CAIC";
    case Criterion::kNEC:
      return "NEC";
    case Criterion::kNEC1:
      return "NEC1";
    case Criterion::kNEC2:
      return "NEC2";
    case Criterion::kCLC:
      return "CLC";
    case Criterion::kICLBIC:
      return "ICL-BIC";
  }
  return "?";
}

std::optional<Criterion> parse_criterion(std::string_view name) {
  for (Criterion c : kAllCriteria) {
    if (criterion_name(c) == name) return c;
  }
  return std::nullopt;
}

bool is_classification_based(Criterion c) {
  switch (c) {
    case Criterion::kBIC:
    case Criterion::kAIC:
    case Criterion::kAIC3:
    case Criterion::kCAIC:
      return false;
    default:
      return true;
  }
}

LoglikCriteria loglik_criteria(double loglik, std::int64_t n_params, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (n_params < 0) throw std::invalid_argument("parameter count must be >= 0");
  const double p = static_cast<double>(n_params);
  const double log_n = std::log(static_cast<double>(n));
  const double dev = -2.0 * loglik;
  LoglikCriteria out;
  out.aic = dev + 2.0 * p;
  out.bic = dev + p * log_n;
  out.aic3 = dev + 3.0 * p;
  out.caic = dev + p * (log_n + 1.0);
  return out;
}

ClassificationCriteria classification_criteria(double loglik_k, double loglik_1, double bic_k, double en, double en1,
                                               double en2, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  ClassificationCriteria out;
  if (k >= 2) {
    const double gain = loglik_k - loglik_1;
    if (gain > 0.0) {
      out.nec = en / gain;
      out.nec1 = en1 / gain;
      out.nec2 = en2 / gain;
    } else {
      constexpr double inf = std::numeric_limits<double>::infinity();
      out.nec = out.nec1 = out.nec2 = inf;
      out.degenerate_denominator = true;
    }
  }
  out.clc = -2.0 * loglik_k + 2.0 * en;
  out.icl_bic = bic_k + 2.0 * en;
  return out;
}

double CriterionValues::get(Criterion c) const {
  switch (c) {
    case Criterion::kBIC:
      return bic;
    case Criterion::kAIC:
      return aic;
    case Criterion::kAIC3:
      return aic3;
    case Criterion::kCAIC:
      return caic;
    case Criterion::kNEC:
      return nec;
    case Criterion::kNEC1:
      return nec1;
    case Criterion::kNEC2:
      return nec2;
    case Criterion::kCLC:
      return clc;
    case Criterion::kICLBIC:
      return icl_bic;
  }
  return 0.0;
}

CriterionValues make_criterion_values(int k, double loglik, std::int64_t n_params, std::int64_t n, double en,
                                      double en1, double en2, double loglik_1) {
  CriterionValues v;
  v.k = k;
  v.loglik = loglik;
  v.n_params = n_params;
  v.en = en;
  v.en1 = en1;
  v.en2 = en2;
  const auto ll = loglik_criteria(loglik, n_params, n);
  v.aic = ll.aic;
  v.bic = ll.bic;
  v.aic3 = ll.aic3;
  v.caic = ll.caic;
  const auto cl = classification_criteria(loglik, loglik_1, ll.bic, en, en1, en2, k);
  v.nec = cl.nec;
  v.nec1 = cl.nec1;
  v.nec2 = cl.nec2;
  v.clc = cl.clc;
  v.icl_bic = cl.icl_bic;
  return v;
}

std::string_view rule_name(SelectionRule rule) {
  return rule == SelectionRule::kFirstIncrease ? "first-increase" : "global-minimum";
}

std::optional<SelectionRule> parse_rule(std::string_view name) {
  if (name == "first-increase") return SelectionRule::kFirstIncrease;
  if (name == "global-minimum") return SelectionRule::kGlobalMinimum;
  return std::nullopt;
}

Selection first_increase(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("empty criterion series");
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    if (series[i + 1] > series[i]) return {static_cast<int>(i) + 1, false};
  }
  return {static_cast<int>(series.size()), true};
}

Selection global_minimum(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("empty criterion series");
  std::size_t best = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i] < series[best]) best = i;
  }
  return {static_cast<int>(best) + 1, best + 1 == series.size()};
}

SelectionReport select_k(std::vector<CriterionValues> values, SelectionRule rule) {
  if (values.empty()) throw std::invalid_argument("no fitted k values to select from");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].k != static_cast<int>(i) + 1) {
      throw std::invalid_argument("criterion values must cover consecutive k starting at 1");
    }
  }
  SelectionReport report;
  report.rule = rule;
  report.k_min = 1;
  report.k_max = static_cast<int>(values.size());
  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    std::vector<double> series;
    series.reserve(values.size());
    for (const auto& v : values) series.push_back(v.get(kAllCriteria[c]));
    report.selected[c] = rule == SelectionRule::kFirstIncrease ? first_increase(series) : global_minimum(series);
  }
  report.values = std::move(values);
  return report;
}

}  // namespace lmselect
