#include "lmselect/inference.hpp"

#include <cmath>
#include <limits>

#include "lmselect/errors.hpp"

namespace lmselect {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void fill_emission(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern, Eigen::MatrixXd& e) {
  const int k = spec.states;
  const int r = spec.responses();
  e.resize(k, spec.occasions);
  for (int t = 0; t < spec.occasions; ++t) {
    const auto& set = params.emissions_at(spec, t);
    for (int u = 0; u < k; ++u) {
      double prod = 1.0;
      for (int j = 0; j < r; ++j) prod *= set[static_cast<std::size_t>(j)](u, label_at(pattern, r, t, j));
      e(u, t) = prod;
    }
  }
}

}  // namespace

bool ForwardBackwardTables::zero_probability() const noexcept {
  return !(log_probability > kNegInf);
}

double ForwardBackwardTables::reconstituted_log_probability(int t) const {
  return log_scale.sum() + std::log(forward.col(t).dot(backward.col(t)));
}

void forward_backward_into(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                           Scaling scaling, ForwardBackwardTables& out) {
  const int k = spec.states;
  const int T = spec.occasions;
  const bool scaled = scaling == Scaling::kPerOccasion;

  fill_emission(params, spec, pattern, out.emission);
  out.forward.resize(k, T);
  out.backward.resize(k, T);
  out.log_scale.setZero(T);

  out.forward.col(0) = params.initial.cwiseProduct(out.emission.col(0));
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      out.forward.col(t).noalias() = params.transition_into(spec, t).transpose() * out.forward.col(t - 1);
      out.forward.col(t).array() *= out.emission.col(t).array();
    }
    if (scaled) {
      const double c = out.forward.col(t).sum();
      if (!(c > 0.0)) {
        out.log_probability = kNegInf;
        return;
      }
      out.forward.col(t) /= c;
      out.log_scale[t] = std::log(c);
    }
  }

  out.backward.col(T - 1).setOnes();
  for (int t = T - 2; t >= 0; --t) {
    out.backward.col(t).noalias() =
        params.transition_into(spec, t + 1) * out.emission.col(t + 1).cwiseProduct(out.backward.col(t + 1));
    if (scaled) out.backward.col(t) /= std::exp(out.log_scale[t + 1]);
  }

  const double tail = out.forward.col(T - 1).sum();
  out.log_probability = tail > 0.0 ? out.log_scale.sum() + std::log(tail) : kNegInf;
}

ForwardBackwardTables forward_backward(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                                       Scaling scaling) {
  ForwardBackwardTables tables;
  forward_backward_into(params, spec, pattern, scaling, tables);
  return tables;
}

double log_manifest_probability(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern) {
  return forward_backward(params, spec, pattern).log_probability;
}

LikelihoodEvaluation log_likelihood(const LMParameters& params, const ModelSpec& spec, const Dataset& data) {
  LikelihoodEvaluation result;
  ForwardBackwardTables tables;
  const auto& entries = data.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    forward_backward_into(params, spec, entries[i].pattern, Scaling::kPerOccasion, tables);
    if (tables.zero_probability()) {
      result.value = kNegInf;
      result.zero_probability_pattern = i;
      return result;
    }
    result.value += static_cast<double>(entries[i].count) * tables.log_probability;
  }
  return result;
}

Eigen::MatrixXd PosteriorTables::joint(int t) const {
  return marginal.col(t - 1).asDiagonal() * conditional[static_cast<std::size_t>(t - 1)];
}

PosteriorTables posteriors(const ForwardBackwardTables& tables, const LMParameters& params, const ModelSpec& spec) {
  if (tables.zero_probability()) throw ZeroProbabilityPattern(0);
  const int k = spec.states;
  const int T = spec.occasions;
  PosteriorTables post;
  post.marginal = tables.forward.cwiseProduct(tables.backward);
  for (int t = 0; t < T; ++t) post.marginal.col(t) /= post.marginal.col(t).sum();

  post.conditional.reserve(static_cast<std::size_t>(T > 0 ? T - 1 : 0));
  for (int t = 1; t < T; ++t) {
    // f(u | v, y) is proportional to pi(u|v) phi(y_t|u) qbar_t(u) and does not involve the forward pass.
    const Eigen::VectorXd tail = tables.emission.col(t).cwiseProduct(tables.backward.col(t));
    Eigen::MatrixXd cond = params.transition_into(spec, t) * tail.asDiagonal();
    for (int v = 0; v < k; ++v) {
      const double s = cond.row(v).sum();
      if (s > 0.0) {
        cond.row(v) /= s;
      } else {
        cond.row(v).setConstant(1.0 / k);
      }
    }
    post.conditional.push_back(std::move(cond));
  }
  return post;
}

PosteriorTables posteriors(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern) {
  return posteriors(forward_backward(params, spec, pattern), params, spec);
}

double shannon_entropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double chain_entropy(const PosteriorTables& post) {
  double h = shannon_entropy(post.marginal.col(0));
  for (std::size_t s = 0; s < post.conditional.size(); ++s) {
    const auto& cond = post.conditional[s];
    for (Eigen::Index v = 0; v < cond.rows(); ++v) {
      const double w = post.marginal(v, static_cast<Eigen::Index>(s));
      if (w > 0.0) h += w * shannon_entropy(cond.row(v).transpose());
    }
  }
  return h;
}

double marginal_entropy(const PosteriorTables& post) {
  double h = 0.0;
  for (Eigen::Index t = 0; t < post.marginal.cols(); ++t) h += shannon_entropy(post.marginal.col(t));
  return h;
}

namespace {

double enumerated_entropy(const LMParameters& params, const ModelSpec& spec, const ForwardBackwardTables& tables) {
  const int k = spec.states;
  const int T = spec.occasions;
  const double paths = std::pow(static_cast<double>(k), T);
  if (paths > kEnumerationCap) throw EnumerationCapExceeded(paths, kEnumerationCap);

  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double h = 0.0;
  for (;;) {
    double log_joint = std::log(params.initial[path[0]] * tables.emission(path[0], 0));
    for (int t = 1; t < T && log_joint > kNegInf; ++t) {
      const auto from = path[static_cast<std::size_t>(t - 1)];
      const auto to = path[static_cast<std::size_t>(t)];
      log_joint += std::log(params.transition_into(spec, t)(from, to) * tables.emission(to, t));
    }
    if (log_joint > kNegInf) {
      const double log_f = log_joint - tables.log_probability;
      h -= std::exp(log_f) * log_f;
    }
    int t = T - 1;
    while (t >= 0 && ++path[static_cast<std::size_t>(t)] == k) path[static_cast<std::size_t>(t--)] = 0;
    if (t < 0) break;
  }
  return h;
}

}  // namespace

double entropy_exact(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern,
                     EntropyEvaluator evaluator) {
  const auto tables = forward_backward(params, spec, pattern);
  if (tables.zero_probability()) throw ZeroProbabilityPattern(0);
  if (evaluator == EntropyEvaluator::kEnumeration) return enumerated_entropy(params, spec, tables);
  return chain_entropy(posteriors(tables, params, spec));
}

double entropy_marginal(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern) {
  return marginal_entropy(posteriors(params, spec, pattern));
}

double entropy_normalized(const LMParameters& params, const ModelSpec& spec, const Pattern& pattern) {
  return entropy_marginal(params, spec, pattern) / spec.occasions;
}

DatasetEntropies dataset_entropies(const LMParameters& params, const ModelSpec& spec, const Dataset& data) {
  DatasetEntropies out;
  if (spec.states == 1) return out;
  ForwardBackwardTables tables;
  const auto& entries = data.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    forward_backward_into(params, spec, entries[i].pattern, Scaling::kPerOccasion, tables);
    if (tables.zero_probability()) throw ZeroProbabilityPattern(i);
    const auto post = posteriors(tables, params, spec);
    const auto n = static_cast<double>(entries[i].count);
    out.exact += n * chain_entropy(post);
    out.marginal += n * marginal_entropy(post);
  }
  out.normalized = out.marginal / spec.occasions;
  return out;
}

double dataset_entropy(const LMParameters& params, const ModelSpec& spec, const Dataset& data, EntropyKind kind) {
  const auto all = dataset_entropies(params, spec, data);
  switch (kind) {
    case EntropyKind::kExact:
      return all.exact;
    case EntropyKind::kMarginal:
      return all.marginal;
    case EntropyKind::kNormalized:
      return all.normalized;
  }
  return all.exact;
}

}  // namespace lmselect
