#include "lmselect/simulate.hpp"

#include <stdexcept>

namespace lmselect {

SimulatedUnit draw_unit_with_states(const LMParameters& params, const ModelSpec& spec, Rng& rng) {
  const int T = spec.occasions;
  const int r = spec.responses();
  SimulatedUnit unit;
  unit.states.resize(static_cast<std::size_t>(T));
  unit.responses.resize(static_cast<std::size_t>(T * r));
  int state = rng.categorical(params.initial);
  for (int t = 0; t < T; ++t) {
    if (t > 0) state = rng.categorical(params.transition_into(spec, t).row(state).transpose());
    unit.states[static_cast<std::size_t>(t)] = state;
    const auto& set = params.emissions_at(spec, t);
    for (int j = 0; j < r; ++j) {
      unit.responses[static_cast<std::size_t>(t * r + j)] =
          rng.categorical(set[static_cast<std::size_t>(j)].row(state).transpose());
    }
  }
  return unit;
}

Pattern draw_unit(const LMParameters& params, const ModelSpec& spec, Rng& rng) {
  return draw_unit_with_states(params, spec, rng).responses;
}

std::vector<Pattern> draw_unit_list(const LMParameters& params, const ModelSpec& spec, std::int64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  std::vector<Pattern> units;
  units.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) units.push_back(draw_unit(params, spec, rng));
  return units;
}

Dataset draw_units(const LMParameters& params, const ModelSpec& spec, std::int64_t n, Rng& rng) {
  Dataset data(spec.responses(), spec.occasions);
  for (const auto& p : draw_unit_list(params, spec, n, rng)) data.add(p);
  return data;
}

namespace {

Eigen::MatrixXd persistence_matrix(int k, double stay) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(k, k, (1.0 - stay) / (k - 1));
  m.diagonal().setConstant(stay);
  return m;
}

}  // namespace

Scenario scenario_preset(int id, int responses, std::int64_t n) {
  if (id < 1 || id > 5) throw std::invalid_argument("unknown scenario " + std::to_string(id) + " (expected 1-5)");
  if (responses < 1) throw std::invalid_argument("number of responses must be >= 1");
  if (id <= 3 && n != 250 && n != 500) {
    throw std::invalid_argument("scenario " + std::to_string(id) + " is defined for n = 250 or 500");
  }
  if (id >= 4 && n != 500) throw std::invalid_argument("scenario " + std::to_string(id) + " is defined for n = 500");

  Scenario s;
  s.name = "scenario" + std::to_string(id) + "-r" + std::to_string(responses) + "-n" + std::to_string(n);
  s.n = n;
  s.replicates = 100;
  s.spec.occasions = 5;
  s.spec.categories.assign(static_cast<std::size_t>(responses), 2);

  Eigen::MatrixXd emission;  // rows: states, columns: categories 0/1
  Eigen::MatrixXd transition;
  if (id <= 3) {
    s.spec.states = 2;
    const double stay = id == 2 ? 0.7 : 0.9;
    const double hit = id == 3 ? 0.7 : 0.8;
    transition = persistence_matrix(2, stay);
    emission.resize(2, 2);
    emission << hit, 1.0 - hit, 1.0 - hit, hit;
  } else {
    s.spec.states = 3;
    transition = persistence_matrix(3, id == 4 ? 0.90 : 0.70);
    emission.resize(3, 2);
    emission << 0.9, 0.1, 0.1, 0.9, 0.7, 0.3;
  }
  const int k = s.spec.states;
  s.params.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
  s.params.transitions = {transition};
  s.params.emissions = {std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(responses), emission)};
  return s;
}

std::uint64_t replicate_seed(const Scenario& scenario, int replicate_index, std::uint64_t master_seed) {
  if (replicate_index < 0) throw std::invalid_argument("replicate index must be >= 0");
  return derive_seed(master_seed, {stable_hash(scenario.name), static_cast<std::uint64_t>(replicate_index)});
}

Dataset draw_dataset(const Scenario& scenario, int replicate_index, std::uint64_t master_seed) {
  Rng rng(replicate_seed(scenario, replicate_index, master_seed));
  return draw_units(scenario.params, scenario.spec, scenario.n, rng);
}

}  // namespace lmselect
