#include "lmselect/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "lmselect/errors.hpp"
#include "lmselect/inference.hpp"

namespace lmselect {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ExpectedCounts zero_counts(const ModelSpec& spec) {
  const int k = spec.states;
  ExpectedCounts c;
  c.responses.resize(static_cast<std::size_t>(spec.occasions));
  for (auto& per_t : c.responses) {
    for (int cat : spec.categories) per_t.push_back(Eigen::MatrixXd::Zero(k, cat));
  }
  c.initial = Eigen::VectorXd::Zero(k);
  c.transitions.assign(static_cast<std::size_t>(std::max(spec.occasions - 1, 0)), Eigen::MatrixXd::Zero(k, k));
  return c;
}

// Normalizes each row of `m` in place; rows with total below the occupancy
// threshold become uniform.
void normalize_rows(Eigen::MatrixXd& m, MStepDiagnostics& diag) {
  for (Eigen::Index v = 0; v < m.rows(); ++v) {
    const double s = m.row(v).sum();
    if (s < kDegenerateOccupancy) {
      m.row(v).setConstant(1.0 / static_cast<double>(m.cols()));
      ++diag.degenerate_rows;
    } else {
      m.row(v) /= s;
    }
  }
}

}  // namespace

ExpectedCounts e_step(const LMParameters& params, const ModelSpec& spec, const Dataset& data) {
  const int k = spec.states;
  const int T = spec.occasions;
  const int r = spec.responses();
  const auto K = static_cast<std::size_t>(k);
  ExpectedCounts counts = zero_counts(spec);
  counts.n = static_cast<double>(data.size());

  // Row-major copies of the transition matrices: trans[s][v * k + u].
  std::vector<std::vector<double>> trans(params.transitions.size(), std::vector<double>(K * K));
  for (std::size_t s = 0; s < params.transitions.size(); ++s) {
    for (int v = 0; v < k; ++v) {
      for (int u = 0; u < k; ++u) trans[s][static_cast<std::size_t>(v * k + u)] = params.transitions[s](v, u);
    }
  }
  // Scaled recursions laid out occasion-major: x[t * k + u].
  const auto TK = static_cast<std::size_t>(T) * K;
  std::vector<double> emit(TK), fwd(TK), bwd(TK), tail(TK), scale(static_cast<std::size_t>(T));

  const auto& entries = data.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& pattern = entries[i].pattern;
    const auto n = static_cast<double>(entries[i].count);

    for (int t = 0; t < T; ++t) {
      const auto& set = params.emissions_at(spec, t);
      double* e = &emit[static_cast<std::size_t>(t) * K];
      for (int u = 0; u < k; ++u) e[u] = 1.0;
      for (int j = 0; j < r; ++j) {
        const auto& phi = set[static_cast<std::size_t>(j)];
        const int y = label_at(pattern, r, t, j);
        for (int u = 0; u < k; ++u) e[u] *= phi(u, y);
      }
    }

    double log_p = 0.0;
    bool zero = false;
    for (int t = 0; t < T && !zero; ++t) {
      double* a = &fwd[static_cast<std::size_t>(t) * K];
      const double* e = &emit[static_cast<std::size_t>(t) * K];
      if (t == 0) {
        for (int u = 0; u < k; ++u) a[u] = params.initial[u] * e[u];
      } else {
        const double* prev = a - k;
        const double* P = trans[static_cast<std::size_t>(spec.transition_slot(t))].data();
        for (int u = 0; u < k; ++u) a[u] = 0.0;
        for (int v = 0; v < k; ++v) {
          const double w = prev[v];
          const double* row = P + v * k;
          for (int u = 0; u < k; ++u) a[u] += w * row[u];
        }
        for (int u = 0; u < k; ++u) a[u] *= e[u];
      }
      double c = 0.0;
      for (int u = 0; u < k; ++u) c += a[u];
      if (!(c > 0.0)) {
        zero = true;
        break;
      }
      const double inv = 1.0 / c;
      for (int u = 0; u < k; ++u) a[u] *= inv;
      scale[static_cast<std::size_t>(t)] = c;
      log_p += std::log(c);
    }
    if (zero) throw ZeroProbabilityPattern(i);
    counts.log_likelihood += n * log_p;

    // tail[t][u] = phi(y_t | u) * bwd[t][u] / c_t, shared by the backward pass and the pairwise posteriors.
    double* b_last = &bwd[static_cast<std::size_t>(T - 1) * K];
    for (int u = 0; u < k; ++u) b_last[u] = 1.0;
    for (int t = T - 1; t >= 1; --t) {
      const double* b = &bwd[static_cast<std::size_t>(t) * K];
      const double* e = &emit[static_cast<std::size_t>(t) * K];
      double* w = &tail[static_cast<std::size_t>(t) * K];
      const double inv = 1.0 / scale[static_cast<std::size_t>(t)];
      for (int u = 0; u < k; ++u) w[u] = e[u] * b[u] * inv;
      const double* P = trans[static_cast<std::size_t>(spec.transition_slot(t))].data();
      double* b_prev = &bwd[static_cast<std::size_t>(t - 1) * K];
      for (int v = 0; v < k; ++v) {
        const double* row = P + v * k;
        double acc = 0.0;
        for (int u = 0; u < k; ++u) acc += row[u] * w[u];
        b_prev[v] = acc;
      }
    }

    for (int t = 0; t < T; ++t) {
      const double* a = &fwd[static_cast<std::size_t>(t) * K];
      const double* b = &bwd[static_cast<std::size_t>(t) * K];
      double norm = 0.0;
      for (int u = 0; u < k; ++u) norm += a[u] * b[u];
      const double f = n / norm;
      auto& per_t = counts.responses[static_cast<std::size_t>(t)];
      for (int j = 0; j < r; ++j) {
        double* col = per_t[static_cast<std::size_t>(j)].col(label_at(pattern, r, t, j)).data();
        for (int u = 0; u < k; ++u) col[u] += f * a[u] * b[u];
      }
      if (t == 0) {
        for (int u = 0; u < k; ++u) counts.initial[u] += f * a[u] * b[u];
      } else {
        const double* prev = a - k;
        const double* w = &tail[static_cast<std::size_t>(t) * K];
        const double* P = trans[static_cast<std::size_t>(spec.transition_slot(t))].data();
        auto& acc = counts.transitions[static_cast<std::size_t>(t - 1)];
        // Under per-occasion scaling the joint sums to sum_u a_t(u) b_t(u), i.e. `norm`.
        for (int u = 0; u < k; ++u) {
          double* col = acc.col(u).data();
          const double wu = f * w[u];
          for (int v = 0; v < k; ++v) col[v] += prev[v] * P[v * k + u] * wu;
        }
      }
    }
  }
  return counts;
}

LMParameters m_step(const ExpectedCounts& counts, const ModelSpec& spec, MStepDiagnostics* diagnostics) {
  const int k = spec.states;
  const int T = spec.occasions;
  MStepDiagnostics diag;
  LMParameters p;

  p.initial = counts.initial / counts.initial.sum();

  if (T > 1) {
    if (spec.transition_homogeneous) {
      Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k, k);
      for (const auto& b : counts.transitions) pooled += b;
      normalize_rows(pooled, diag);
      p.transitions.push_back(std::move(pooled));
    } else {
      for (const auto& b : counts.transitions) {
        Eigen::MatrixXd m = b;
        normalize_rows(m, diag);
        p.transitions.push_back(std::move(m));
      }
    }
  }

  if (spec.emission_homogeneous) {
    std::vector<Eigen::MatrixXd> pooled = counts.responses.front();
    for (std::size_t t = 1; t < counts.responses.size(); ++t) {
      for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += counts.responses[t][j];
    }
    for (auto& m : pooled) normalize_rows(m, diag);
    p.emissions.push_back(std::move(pooled));
  } else {
    for (const auto& per_t : counts.responses) {
      std::vector<Eigen::MatrixXd> set = per_t;
      for (auto& m : set) normalize_rows(m, diag);
      p.emissions.push_back(std::move(set));
    }
  }

  if (diagnostics != nullptr) *diagnostics = diag;
  return p;
}

std::string to_string(StartType type) {
  switch (type) {
    case StartType::kClosedForm:
      return "closed-form";
    case StartType::kDeterministic:
      return "deterministic";
    case StartType::kRandom:
      return "random";
    case StartType::kUser:
      return "user";
  }
  return "unknown";
}

LMParameters deterministic_start(const ModelSpec& spec) {
  LMParameters p = uniform_parameters(spec);
  const int k = spec.states;
  for (auto& set : p.emissions) {
    for (std::size_t j = 0; j < set.size(); ++j) {
      const int c = spec.categories[j];
      for (int u = 0; u < k; ++u) {
        // tilt in [-1, 1] across states; direction across categories in [-1, 1]
        const double tilt = k == 1 ? 0.0 : (2.0 * u - (k - 1)) / (k - 1);
        for (int y = 0; y < c; ++y) {
          const double direction = (2.0 * y - (c - 1)) / (c - 1);
          set[j](u, y) = (1.0 + 0.2 * tilt * direction) / c;
        }
      }
    }
  }
  return p;
}

LMParameters random_start(const ModelSpec& spec, Rng& rng) {
  LMParameters p = uniform_parameters(spec);
  const int k = spec.states;
  p.initial = rng.dirichlet_flat(k);
  for (auto& m : p.transitions) {
    for (int v = 0; v < k; ++v) m.row(v) = rng.dirichlet_flat(k).transpose();
  }
  for (auto& set : p.emissions) {
    for (auto& m : set) {
      for (int u = 0; u < k; ++u) m.row(u) = rng.dirichlet_flat(static_cast<int>(m.cols())).transpose();
    }
  }
  return p;
}

LMParameters closed_form_single_state(const ModelSpec& spec, const Dataset& data) {
  if (spec.states != 1) throw std::invalid_argument("closed form applies to k = 1 only");
  // With one state every posterior is 1, so a single E-step yields the observed counts.
  return m_step(e_step(uniform_parameters(spec), spec, data), spec);
}

FitResult run_em(const ModelSpec& spec, const Dataset& data, const LMParameters& start, const FitOptions& options) {
  FitResult res;
  res.spec = spec;
  res.n = data.size();
  LMParameters current = start;
  int iter = 0;
  for (;;) {
    ExpectedCounts counts = e_step(current, spec, data);
    const double ll = counts.log_likelihood;
    if (!res.trace.empty()) {
      const double prev = res.trace.back();
      res.trace.push_back(ll);
      if (std::abs(ll - prev) / (1.0 + std::abs(ll)) < options.tol) {
        res.converged = true;
        break;
      }
    } else {
      res.trace.push_back(ll);
    }
    if (iter >= options.max_iter) break;
    MStepDiagnostics diag;
    current = m_step(counts, spec, &diag);
    res.degenerate_rows = diag.degenerate_rows;
    ++iter;
  }
  res.params = std::move(current);
  res.log_likelihood = res.trace.back();
  res.worst_decrease = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    res.worst_decrease = std::max(res.worst_decrease, res.trace[i - 1] - res.trace[i]);
  }
  if (res.trace.size() < 2) res.worst_decrease = 0.0;
  res.iterations = iter;
  return res;
}

FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options) {
  spec.check();
  if (data.empty()) throw std::invalid_argument("cannot fit an empty dataset");
  data.check_against(spec);
  if (options.max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  if (options.random_starts < 0) throw std::invalid_argument("number of random starts must be >= 0");

  if (spec.states == 1) {
    FitResult res;
    res.spec = spec;
    res.n = data.size();
    res.params = closed_form_single_state(spec, data);
    res.log_likelihood = log_likelihood(res.params, spec, data).value;
    res.trace = {res.log_likelihood};
    res.converged = true;
    res.start_type = StartType::kClosedForm;
    res.start_log_likelihoods = {res.log_likelihood};
    return res;
  }

  struct Start {
    StartType type;
    LMParameters params;
  };
  std::vector<Start> starts;
  starts.push_back({StartType::kDeterministic, deterministic_start(spec)});
  if (options.user_start) {
    require_valid(*options.user_start, spec);
    starts.push_back({StartType::kUser, *options.user_start});
  }
  for (int i = 0; i < options.random_starts; ++i) {
    const auto index = static_cast<std::uint64_t>(starts.size());
    Rng rng(derive_seed(options.seed, {index}));
    starts.push_back({StartType::kRandom, random_start(spec, rng)});
  }

  FitOptions run_options = options;
  const bool screening = options.screen_iterations > 0 && starts.size() > 1;
  if (screening) run_options.max_iter = std::min(options.max_iter, options.screen_iterations);

  std::optional<FitResult> best;
  std::vector<double> finals;
  int failed = 0;
  double worst_decrease = 0.0;
  std::string last_error;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    try {
      FitResult candidate = run_em(spec, data, starts[s].params, run_options);
      candidate.start_index = static_cast<int>(s);
      candidate.start_type = starts[s].type;
      finals.push_back(candidate.log_likelihood);
      worst_decrease = std::max(worst_decrease, candidate.worst_decrease);
      if (!best || candidate.log_likelihood > best->log_likelihood) best = std::move(candidate);
    } catch (const ZeroProbabilityPattern& e) {
      finals.push_back(kNegInf);
      ++failed;
      last_error = e.what();
    }
  }
  if (!best) throw FitFailure("all " + std::to_string(starts.size()) + " EM starts failed: " + last_error);

  if (screening && !best->converged && best->iterations < options.max_iter) {
    FitOptions rest = options;
    rest.max_iter = options.max_iter - best->iterations;
    FitResult tail = run_em(spec, data, best->params, rest);
    // tail.trace[0] re-evaluates the screening run's last iterate
    best->trace.insert(best->trace.end(), tail.trace.begin() + 1, tail.trace.end());
    best->params = std::move(tail.params);
    best->log_likelihood = tail.log_likelihood;
    best->iterations += tail.iterations;
    best->converged = tail.converged;
    best->degenerate_rows = tail.degenerate_rows;
    worst_decrease = std::max(worst_decrease, tail.worst_decrease);
    finals[static_cast<std::size_t>(best->start_index)] = best->log_likelihood;
  }
  best->start_log_likelihoods = std::move(finals);
  best->failed_starts = failed;
  best->worst_decrease = worst_decrease;
  return std::move(*best);
}

std::vector<int> canonical_order(const LMParameters& params) {
  const auto k = static_cast<int>(params.initial.size());
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  const auto& phi = params.emissions.front().front();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::make_tuple(phi(a, 0), params.initial[a], a) < std::make_tuple(phi(b, 0), params.initial[b], b);
  });
  return order;
}

FitResult canonicalize_states(const FitResult& result) {
  FitResult out = result;
  out.params = permute_states(result.params, canonical_order(result.params));
  return out;
}

}  // namespace lmselect
