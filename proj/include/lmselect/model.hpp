#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lmselect {

/// Structural description of a latent Markov model for longitudinal
/// categorical responses.
struct ModelSpec {
  int states = 1;                 // k
  int occasions = 1;              // T
  std::vector<int> categories;    // c_j for each of the r responses, labels 0..c_j-1
  bool transition_homogeneous = true;
  bool emission_homogeneous = true;

  int responses() const noexcept { return static_cast<int>(categories.size()); }

  /// Number of distinct transition matrices stored (1 or T-1, 0 when T == 1).
  int transition_slots() const noexcept;
  /// Number of distinct emission sets stored (1 or T).
  int emission_slots() const noexcept;
  /// Slot used for the transition into occasion t (t in 1..T-1, 0-based).
  int transition_slot(int t) const noexcept { return transition_homogeneous ? 0 : t - 1; }
  /// Slot used for emissions at occasion t (0-based).
  int emission_slot(int t) const noexcept { return emission_homogeneous ? 0 : t; }

  /// Throws std::invalid_argument when k, T, r or any c_j is out of range.
  void check() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Initial, transition and conditional response probabilities.
///
/// transitions[s](v, u) is p(U_t = u | U_{t-1} = v) for slot s.
/// emissions[s][j](u, y) is p(Y_j = y | U = u) for slot s.
struct LMParameters {
  Eigen::VectorXd initial;
  std::vector<Eigen::MatrixXd> transitions;
  std::vector<std::vector<Eigen::MatrixXd>> emissions;

  const Eigen::MatrixXd& transition_into(const ModelSpec& spec, int t) const {
    return transitions[spec.transition_slot(t)];
  }
  const std::vector<Eigen::MatrixXd>& emissions_at(const ModelSpec& spec, int t) const {
    return emissions[spec.emission_slot(t)];
  }
};

/// Tolerance for row sums of every probability vector.
inline constexpr double kStochasticTolerance = 1e-10;

/// Free parameters: emissions k*sum(c_j-1) (times T when heterogeneous),
/// initial k-1, transitions k(k-1) (times T-1 when heterogeneous).
std::int64_t count_free_parameters(const ModelSpec& spec);

struct Violation {
  std::string where;    // e.g. "transitions[0] row 1"
  std::string message;  // e.g. "row sum 0.9"
};

/// Every shape or stochasticity violation of params against spec; empty when valid.
std::vector<Violation> validate(const LMParameters& params, const ModelSpec& spec);

/// Throws std::invalid_argument listing the violations, if any.
void require_valid(const LMParameters& params, const ModelSpec& spec);

/// All distributions uniform.
LMParameters uniform_parameters(const ModelSpec& spec);

/// Applies a state relabelling: new state i is old state order[i].
LMParameters permute_states(const LMParameters& params, const std::vector<int>& order);

/// Observed responses of one unit, stored occasion-major: index t*r + j.
using Pattern = std::vector<int>;

struct PatternCount {
  Pattern pattern;
  std::int64_t count = 0;

  bool operator==(const PatternCount&) const = default;
};

/// Aggregated response configurations with their frequencies n_(y).
/// Patterns are kept in lexicographic order so that iteration order (and
/// therefore every floating-point reduction over the dataset) depends only on
/// the pattern-frequency map.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int responses, int occasions);

  /// Adds `count` units with the given pattern. Throws std::invalid_argument
  /// on a wrong pattern length, negative label, or non-positive count.
  void add(const Pattern& pattern, std::int64_t count = 1);

  int responses() const noexcept { return responses_; }
  int occasions() const noexcept { return occasions_; }
  std::int64_t size() const noexcept { return total_; }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<PatternCount>& entries() const noexcept { return entries_; }

  /// Smallest category count per response that accommodates every label (at least 2).
  std::vector<int> inferred_categories() const;

  /// Throws DataError when a label falls outside 0..c_j-1 or the shape disagrees.
  void check_against(const ModelSpec& spec) const;

  /// Same dataset with every frequency multiplied by `factor`.
  Dataset scaled(std::int64_t factor) const;

  bool operator==(const Dataset&) const = default;

 private:
  int responses_ = 0;
  int occasions_ = 0;
  std::int64_t total_ = 0;
  std::vector<PatternCount> entries_;
};

inline int label_at(const Pattern& pattern, int responses, int t, int j) {
  return pattern[static_cast<std::size_t>(t * responses + j)];
}

}  // namespace lmselect
