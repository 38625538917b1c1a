#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lmselect/model.hpp"

namespace lmselect {

enum class Scaling {
  kPerOccasion,  // renormalize forward/backward vectors at every occasion
  kNone,         // plain recursions; underflows for long sequences
};

/// Forward and backward quantities for one response pattern, all k x T with
/// occasion t in column t.
///
/// forward(:,t) is proportional to q_t(u) = p(U_t = u, Y_1..Y_t) and
/// backward(:,t) to p(Y_{t+1}..Y_T | U_t = v). With per-occasion scaling
/// sum_u forward(u,t) = 1, and for every t
///   log p(Y = y) = log_scale.sum() + log(forward.col(t) . backward.col(t)).
struct ForwardBackwardTables {
  Eigen::MatrixXd emission;  // prod_j phi_j(y_j^t | u)
  Eigen::MatrixXd forward;
  Eigen::MatrixXd backward;
  Eigen::VectorXd log_scale;
  double log_probability = 0.0;

  bool zero_probability() const noexcept;
  /// log p(Y = y) rebuilt from the tables at occasion t.
  double reconstituted_log_probability(int t) const;
};

/// Runs both recursions. A zero-probability pattern leaves log_probability at
/// -infinity; the remaining tables are then unspecified.
ForwardBackwardTables forward_backward(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                                       Scaling scaling = Scaling::kPerOccasion);

/// Allocation-free variant for hot loops; reuses the storage in `out`.
void forward_backward_into(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                           Scaling scaling, ForwardBackwardTables& out);

/// log p(Y = y); -infinity when the pattern has probability zero.
double log_manifest_probability(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern);

struct LikelihoodEvaluation {
  double value = 0.0;  // -infinity if any pattern has probability zero
  std::optional<std::size_t> zero_probability_pattern;  // index into dataset.entries()
};

/// sum_y n_(y) log p(Y = y).
LikelihoodEvaluation log_likelihood(const LMParameters& params, const ModelSpec& spec, const Dataset& data);

/// Posterior state probabilities given one response pattern.
struct PosteriorTables {
  /// marginal(u, t) = p(U_t = u | y).
  Eigen::MatrixXd marginal;
  /// conditional[t-1](v, u) = p(U_t = u | U_{t-1} = v, y) for t = 1..T-1.
  /// Rows whose time-(t-1) marginal is zero hold a uniform placeholder.
  std::vector<Eigen::MatrixXd> conditional;

  /// p(U_{t-1} = v, U_t = u | y) for t = 1..T-1.
  Eigen::MatrixXd joint(int t) const;
};

/// Throws ZeroProbabilityPattern when p(Y = y) = 0.
PosteriorTables posteriors(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern);
PosteriorTables posteriors(const ForwardBackwardTables& tables, const LMParameters& params, const ModelSpec& spec);

/// Largest k^T for which the enumeration evaluator of the exact entropy runs.
inline constexpr double kEnumerationCap = 100000.0;

enum class EntropyEvaluator { kDecomposition, kEnumeration };

/// -p log p summed over a distribution, with 0 log 0 = 0.
double shannon_entropy(const Eigen::Ref<const Eigen::VectorXd>& p);

/// Entropy of the posterior over whole latent paths, via
/// H(U_1|y) + sum_t sum_v f_{t-1}(v) H(U_t | U_{t-1} = v, y).
double chain_entropy(const PosteriorTables& post);
/// Sum over occasions of the marginal posterior entropies.
double marginal_entropy(const PosteriorTables& post);

/// Exact path entropy of one unit (EN contribution). The enumeration
/// evaluator throws EnumerationCapExceeded above kEnumerationCap paths.
double entropy_exact(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                     EntropyEvaluator evaluator = EntropyEvaluator::kDecomposition);
/// EN1 contribution of one unit.
double entropy_marginal(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern);
/// EN2 contribution of one unit: EN1 / T.
double entropy_normalized(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern);

enum class EntropyKind { kExact, kMarginal, kNormalized };

/// Frequency-weighted sum of the per-unit entropy over the dataset; exactly 0 for k = 1.
double dataset_entropy(const LMParameters& params, const ModelSpec& spec, const Dataset& data, EntropyKind kind);

struct DatasetEntropies {
  double exact = 0.0;       // EN
  double marginal = 0.0;    // EN1
  double normalized = 0.0;  // EN2
};

/// All three dataset entropies in a single pass (exact via decomposition).
DatasetEntropies dataset_entropies(const LMParameters& params, const ModelSpec& spec, const Dataset& data);

}  // namespace lmselect
