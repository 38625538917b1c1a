#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmselect {

/// The nine selection indices, in the column order used by every report.
enum class Criterion { kBIC, kAIC, kAIC3, kCAIC, kNEC, kNEC1, kNEC2, kCLC, kICLBIC };

inline constexpr std::array<Criterion, 9> kAllCriteria = {
    Criterion::kBIC,  Criterion::kAIC,  Criterion::kAIC3, Criterion::kCAIC,  Criterion::kNEC,
    Criterion::kNEC1, Criterion::kNEC2, Criterion::kCLC,  Criterion::kICLBIC};

/// "BIC", "AIC", "AIC3", "CAIC", "NEC", "NEC1", "NEC2", "CLC", "ICL-BIC".
std::string_view criterion_name(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view name);
bool is_classification_based(Criterion c);

struct LoglikCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double aic3 = 0.0;
  double caic = 0.0;
};

/// Penalized -2 log-likelihood indices: penalties 2, log n, 3 and log n + 1 per parameter.
LoglikCriteria loglik_criteria(double loglik, std::int64_t n_params, std::int64_t n);

struct ClassificationCriteria {
  double nec = 1.0;
  double nec1 = 1.0;
  double nec2 = 1.0;
  double clc = 0.0;
  double icl_bic = 0.0;
  /// Set when k >= 2 and the fit gains nothing over k = 1; the NEC family is +inf.
  bool degenerate_denominator = false;
};

/// NEC-family (entropy over the log-likelihood gain against k = 1, fixed at 1
/// for k = 1), CLC = -2 loglik + 2 EN and ICL-BIC = BIC + 2 EN.
ClassificationCriteria classification_criteria(double loglik_k, double loglik_1, double bic_k, double en, double en1,
                                               double en2, int k);

/// Everything known about one fitted k.
struct CriterionValues {
  int k = 1;
  double loglik = 0.0;
  std::int64_t n_params = 0;
  double en = 0.0;
  double en1 = 0.0;
  double en2 = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double aic3 = 0.0;
  double caic = 0.0;
  double nec = 1.0;
  double nec1 = 1.0;
  double nec2 = 1.0;
  double clc = 0.0;
  double icl_bic = 0.0;

  double get(Criterion c) const;
};

/// Assembles the full row for one k from its fit summary.
CriterionValues make_criterion_values(int k, double loglik, std::int64_t n_params, std::int64_t n, double en,
                                      double en1, double en2, double loglik_1);

enum class SelectionRule {
  kFirstIncrease,  // k just before the first strict increase
  kGlobalMinimum,  // argmin, smallest k on ties
};

std::string_view rule_name(SelectionRule rule);
std::optional<SelectionRule> parse_rule(std::string_view name);

struct Selection {
  int k = 1;
  /// The scan reached the last examined k without an increase.
  bool boundary = false;
};

struct SelectionReport {
  std::vector<CriterionValues> values;  // consecutive k starting at 1
  std::array<Selection, 9> selected{};  // indexed like kAllCriteria
  SelectionRule rule = SelectionRule::kFirstIncrease;
  int k_min = 1;
  int k_max = 1;

  const Selection& of(Criterion c) const { return selected[static_cast<std::size_t>(c)]; }
};

/// Selected k per criterion. Requires values for k = 1, 2, ... in order;
/// throws std::invalid_argument otherwise.
SelectionReport select_k(std::vector<CriterionValues> values, SelectionRule rule = SelectionRule::kFirstIncrease);

/// First-increase scan over one index series; series[i] belongs to k = i + 1.
Selection first_increase(const std::vector<double>& series);
Selection global_minimum(const std::vector<double>& series);

}  // namespace lmselect
