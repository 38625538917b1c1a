#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmselect/criteria.hpp"
#include "lmselect/em.hpp"
#include "lmselect/simulate.hpp"

namespace lmselect {

inline FitOptions default_study_em() {
  FitOptions o;
  o.screen_iterations = 30;
  return o;
}

struct StudyConfig {
  std::vector<int> scenarios{1};
  std::vector<int> r_values{1, 3, 5};
  std::vector<std::int64_t> n_values{250};
  int k_max = 5;
  int replicates = 100;
  /// EM settings; the seed field is ignored in favour of per-fit substreams.
  /// Starts are screened for 30 iterations by default to keep cells fast.
  FitOptions em = default_study_em();
  std::uint64_t master_seed = kDefaultMasterSeed;
  SelectionRule rule = SelectionRule::kFirstIncrease;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;

  /// Throws std::invalid_argument naming the offending field.
  void check() const;
};

/// Everything computed for one simulated sample.
struct ReplicateRecord {
  int index = 0;
  bool failed = false;
  std::string error;
  std::vector<CriterionValues> values;  // k = 1..k_max
  std::array<Selection, 9> selection{};
  std::vector<int> iterations;  // EM iterations of the winning start per k
  double worst_decrease = 0.0;  // largest log-likelihood drop over every EM trace
};

/// Selection frequencies for one (scenario, r, n) combination.
struct CellResult {
  int scenario = 0;
  int responses = 0;
  std::int64_t n = 0;
  std::string name;
  int replicates = 0;
  int failures = 0;
  /// frequency[c][k-1]: share of successful replicates where criterion c picked k.
  std::array<std::vector<double>, 9> frequency;
  /// Replicates whose pick for criterion c was a boundary selection.
  std::array<int, 9> boundary{};
  std::vector<ReplicateRecord> records;
  double worst_decrease = 0.0;

  double freq(Criterion c, int k) const { return frequency[static_cast<std::size_t>(c)][static_cast<std::size_t>(k - 1)]; }
};

struct FrequencyTable {
  int k_max = 5;
  std::vector<CellResult> cells;

  /// nullptr when the combination was not run.
  const CellResult* find(int scenario, int responses, std::int64_t n) const;
  int total_failures() const;
};

struct Progress {
  std::string cell;
  int done = 0;
  int total = 0;
};

using ProgressFn = std::function<void(const Progress&)>;

/// Fits k = 1..k_max to one dataset and applies the selection rule.
ReplicateRecord analyze_dataset(const Dataset& data, const ModelSpec& base_spec, int k_max, const FitOptions& em,
                                SelectionRule rule, std::uint64_t fit_seed);

/// All replicates of one scenario. Replicates run on `config.threads`
/// workers and are reduced in index order, so the result does not depend
/// on scheduling.
CellResult run_cell(int scenario, int responses, std::int64_t n, const StudyConfig& config,
                    const ProgressFn& progress = {});

/// Every valid (scenario, n, r) combination of the config, in that nesting
/// order. Combinations a scenario does not define (scenarios 4-5 at n != 500)
/// are skipped.
FrequencyTable run_study(const StudyConfig& config, const ProgressFn& progress = {});

}  // namespace lmselect
