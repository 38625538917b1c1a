#include "lmselect/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lmselect/errors.hpp"

namespace lmselect {

int ModelSpec::transition_slots() const noexcept {
  if (occasions <= 1) return 0;
  return transition_homogeneous ? 1 : occasions - 1;
}

int ModelSpec::emission_slots() const noexcept { return emission_homogeneous ? 1 : occasions; }

void ModelSpec::check() const {
  if (states < 1) throw std::invalid_argument("number of latent states must be >= 1");
  if (occasions < 1) throw std::invalid_argument("number of occasions must be >= 1");
  if (categories.empty()) throw std::invalid_argument("at least one response variable is required");
  for (std::size_t j = 0; j < categories.size(); ++j) {
    if (categories[j] < 2) {
      throw std::invalid_argument("response " + std::to_string(j + 1) + " must have at least 2 categories");
    }
  }
}

std::int64_t count_free_parameters(const ModelSpec& spec) {
  spec.check();
  const std::int64_t k = spec.states;
  const std::int64_t T = spec.occasions;
  std::int64_t per_state_emission = 0;
  for (int c : spec.categories) per_state_emission += c - 1;

  std::int64_t emission = k * per_state_emission;
  if (!spec.emission_homogeneous) emission *= T;

  const std::int64_t initial = k - 1;

  std::int64_t transition = 0;
  if (T > 1) transition = spec.transition_homogeneous ? k * (k - 1) : (T - 1) * k * (k - 1);

  return emission + initial + transition;
}

namespace {

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& row, const std::string& where,
                        std::vector<Violation>& out) {
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double p = row[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      out.push_back({where, "entry " + std::to_string(i) + " = " + fmt_double(p) + " outside [0,1]"});
    }
  }
  const double sum = row.sum();
  if (!(std::abs(sum - 1.0) <= kStochasticTolerance)) {
    out.push_back({where, "row sum " + fmt_double(sum)});
  }
}

void check_matrix(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& name,
                  std::vector<Violation>& out) {
  if (m.rows() != rows || m.cols() != cols) {
    out.push_back({name, "shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols)});
    return;
  }
  for (Eigen::Index v = 0; v < rows; ++v) {
    check_distribution(m.row(v).transpose(), name + " row " + std::to_string(v), out);
  }
}

}  // namespace

std::vector<Violation> validate(const LMParameters& params, const ModelSpec& spec) {
  std::vector<Violation> out;
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    out.push_back({"spec", e.what()});
    return out;
  }
  const int k = spec.states;

  if (params.initial.size() != k) {
    out.push_back({"initial", "length " + std::to_string(params.initial.size()) + ", expected " + std::to_string(k)});
  } else {
    check_distribution(params.initial, "initial", out);
  }

  const auto n_trans = static_cast<std::size_t>(spec.transition_slots());
  if (params.transitions.size() != n_trans) {
    out.push_back({"transitions", std::to_string(params.transitions.size()) + " matrices, expected " +
                                      std::to_string(n_trans)});
  } else {
    for (std::size_t s = 0; s < n_trans; ++s) {
      check_matrix(params.transitions[s], k, k, "transitions[" + std::to_string(s) + "]", out);
    }
  }

  const auto n_emit = static_cast<std::size_t>(spec.emission_slots());
  if (params.emissions.size() != n_emit) {
    out.push_back({"emissions", std::to_string(params.emissions.size()) + " occasion sets, expected " +
                                    std::to_string(n_emit)});
  } else {
    for (std::size_t s = 0; s < n_emit; ++s) {
      const auto& set = params.emissions[s];
      if (set.size() != spec.categories.size()) {
        out.push_back({"emissions[" + std::to_string(s) + "]", std::to_string(set.size()) +
                                                                   " responses, expected " +
                                                                   std::to_string(spec.categories.size())});
        continue;
      }
      for (std::size_t j = 0; j < set.size(); ++j) {
        check_matrix(set[j], k, spec.categories[j],
                     "emissions[" + std::to_string(s) + "][" + std::to_string(j) + "]", out);
      }
    }
  }
  return out;
}

void require_valid(const LMParameters& params, const ModelSpec& spec) {
  const auto violations = validate(params, spec);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid parameters:";
  for (const auto& v : violations) os << "\n  " << v.where << ": " << v.message;
  throw std::invalid_argument(os.str());
}

LMParameters uniform_parameters(const ModelSpec& spec) {
  spec.check();
  const int k = spec.states;
  LMParameters p;
  p.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
  p.transitions.assign(static_cast<std::size_t>(spec.transition_slots()), Eigen::MatrixXd::Constant(k, k, 1.0 / k));
  std::vector<Eigen::MatrixXd> set;
  for (int c : spec.categories) set.push_back(Eigen::MatrixXd::Constant(k, c, 1.0 / c));
  p.emissions.assign(static_cast<std::size_t>(spec.emission_slots()), set);
  return p;
}

LMParameters permute_states(const LMParameters& params, const std::vector<int>& order) {
  const auto k = static_cast<Eigen::Index>(order.size());
  if (params.initial.size() != k) throw std::invalid_argument("permutation length does not match state count");
  LMParameters out = params;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.initial[i] = params.initial[src];
    for (std::size_t s = 0; s < params.transitions.size(); ++s) {
      for (Eigen::Index j = 0; j < k; ++j) {
        out.transitions[s](i, j) = params.transitions[s](src, order[static_cast<std::size_t>(j)]);
      }
    }
    for (std::size_t s = 0; s < params.emissions.size(); ++s) {
      for (std::size_t r = 0; r < params.emissions[s].size(); ++r) {
        out.emissions[s][r].row(i) = params.emissions[s][r].row(src);
      }
    }
  }
  return out;
}

Dataset::Dataset(int responses, int occasions) : responses_(responses), occasions_(occasions) {
  if (responses < 1 || occasions < 1) throw std::invalid_argument("dataset needs r >= 1 and T >= 1");
}

void Dataset::add(const Pattern& pattern, std::int64_t count) {
  if (pattern.size() != static_cast<std::size_t>(responses_ * occasions_)) {
    throw std::invalid_argument("pattern has " + std::to_string(pattern.size()) + " labels, expected " +
                                std::to_string(responses_ * occasions_));
  }
  if (count <= 0) throw std::invalid_argument("pattern frequency must be positive");
  for (int y : pattern) {
    if (y < 0) throw std::invalid_argument("category labels must be nonnegative");
  }
  auto it = std::lower_bound(entries_.begin(), entries_.end(), pattern,
                             [](const PatternCount& e, const Pattern& p) { return e.pattern < p; });
  if (it != entries_.end() && it->pattern == pattern) {
    it->count += count;
  } else {
    entries_.insert(it, PatternCount{pattern, count});
  }
  total_ += count;
}

std::vector<int> Dataset::inferred_categories() const {
  std::vector<int> c(static_cast<std::size_t>(responses_), 2);
  for (const auto& e : entries_) {
    for (int t = 0; t < occasions_; ++t) {
      for (int j = 0; j < responses_; ++j) {
        c[static_cast<std::size_t>(j)] = std::max(c[static_cast<std::size_t>(j)], label_at(e.pattern, responses_, t, j) + 1);
      }
    }
  }
  return c;
}

void Dataset::check_against(const ModelSpec& spec) const {
  if (spec.responses() != responses_ || spec.occasions != occasions_) {
    throw DataError("dataset has r=" + std::to_string(responses_) + ", T=" + std::to_string(occasions_) +
                    " but the model expects r=" + std::to_string(spec.responses()) +
                    ", T=" + std::to_string(spec.occasions));
  }
  for (const auto& e : entries_) {
    for (int t = 0; t < occasions_; ++t) {
      for (int j = 0; j < responses_; ++j) {
        const int y = label_at(e.pattern, responses_, t, j);
        if (y >= spec.categories[static_cast<std::size_t>(j)]) {
          throw DataError("category " + std::to_string(y) + " out of range for response " + std::to_string(j + 1) +
                          " at occasion " + std::to_string(t + 1));
        }
      }
    }
  }
}

Dataset Dataset::scaled(std::int64_t factor) const {
  if (factor <= 0) throw std::invalid_argument("scale factor must be positive");
  Dataset out = *this;
  for (auto& e : out.entries_) e.count *= factor;
  out.total_ *= factor;
  return out;
}

}  // namespace lmselect
