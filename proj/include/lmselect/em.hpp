#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmselect/model.hpp"
#include "lmselect/rng.hpp"

namespace lmselect {

/// Expected complete-data frequencies given the data and current parameters.
struct ExpectedCounts {
  /// responses[t][j](u, y): expected units in state u at occasion t answering y on response j.
  std::vector<std::vector<Eigen::MatrixXd>> responses;
  /// initial[u]: expected units in state u at the first occasion.
  Eigen::VectorXd initial;
  /// transitions[t-1](v, u): expected moves v -> u into occasion t, t = 1..T-1.
  std::vector<Eigen::MatrixXd> transitions;
  double n = 0.0;
  /// Log-likelihood of the parameters the counts were computed under.
  double log_likelihood = 0.0;
};

/// Throws ZeroProbabilityPattern (with the dataset entry index) if any
/// observed pattern is impossible under `params`.
ExpectedCounts e_step(const LMParameters& params, const ModelSpec& spec, const Dataset& data);

struct MStepDiagnostics {
  /// Rows whose expected occupancy fell below kDegenerateOccupancy and were reset to uniform.
  int degenerate_rows = 0;
};

inline constexpr double kDegenerateOccupancy = 1e-12;

/// Closed-form maximizer of the expected complete-data log-likelihood.
LMParameters m_step(const ExpectedCounts& counts, const ModelSpec& spec, MStepDiagnostics* diagnostics = nullptr);

enum class StartType { kClosedForm, kDeterministic, kRandom, kUser };

std::string to_string(StartType type);

struct FitOptions {
  int max_iter = 5000;
  double tol = 1e-8;
  int random_starts = 4;
  /// When > 0, every start first runs at most this many iterations and only
  /// the best one is carried on to convergence. 0 runs every start to convergence.
  int screen_iterations = 0;
  std::uint64_t seed = kDefaultMasterSeed;
  /// Extra start tried after the deterministic one, before the random ones.
  std::optional<LMParameters> user_start;
};

struct FitResult {
  ModelSpec spec;
  LMParameters params;
  double log_likelihood = 0.0;
  int iterations = 0;
  /// Log-likelihood of every iterate of the winning start, the first entry
  /// being the start itself.
  std::vector<double> trace;
  bool converged = false;
  int start_index = 0;
  StartType start_type = StartType::kDeterministic;
  /// Final log-likelihood per start; -inf for starts that failed.
  std::vector<double> start_log_likelihoods;
  int failed_starts = 0;
  int degenerate_rows = 0;
  /// Largest single-step drop of the log-likelihood over the traces of all
  /// starts (<= 0 when every trace is nondecreasing).
  double worst_decrease = 0.0;
  std::int64_t n = 0;
};

/// Deterministic EM start: uniform initial and transition probabilities,
/// emission rows tilted by up to +-0.1 in a state-dependent direction.
LMParameters deterministic_start(const ModelSpec& spec);

/// Random EM start with every row a flat Dirichlet draw.
LMParameters random_start(const ModelSpec& spec, Rng& rng);

/// Maximum-likelihood parameters of the single-state model.
LMParameters closed_form_single_state(const ModelSpec& spec, const Dataset& data);

/// EM from a single start until the relative log-likelihood change drops
/// below tol or max_iter M-steps have run.
FitResult run_em(const ModelSpec& spec, const Dataset& data, const LMParameters& start, const FitOptions& options);

/// Multistart maximum likelihood. k = 1 uses the closed form (zero
/// iterations). Starts: index 0 deterministic, then the user start if any,
/// then the random starts, each random start drawing from its own substream
/// derive_seed(seed, {start index}). Highest final log-likelihood wins, lowest
/// index on ties. With screening enabled the comparison happens after the
/// screening run and only the winner is iterated further.
/// Throws FitFailure when every start fails.
FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options = {});

/// Relabels states in ascending order of p(Y_1 = 0 | u) (first response,
/// first emission slot), then ascending initial probability, then index.
FitResult canonicalize_states(const FitResult& result);

/// The relabelling canonicalize_states applies: new state i is old state order[i].
std::vector<int> canonical_order(const LMParameters& params);

}  // namespace lmselect
