#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmselect/model.hpp"
#include "lmselect/rng.hpp"

namespace lmselect {

/// A data-generating setting for the Monte Carlo study.
struct Scenario {
  std::string name;
  ModelSpec spec;
  LMParameters params;
  std::int64_t n = 0;
  int replicates = 100;
};

/// One simulated unit.
struct SimulatedUnit {
  Pattern responses;
  std::vector<int> states;  // latent path, kept for diagnostics
};

SimulatedUnit draw_unit_with_states(const LMParameters& params, const ModelSpec& spec, Rng& rng);

/// Response pattern of one unit drawn from the model.
Pattern draw_unit(const LMParameters& params, const ModelSpec& spec, Rng& rng);

/// n unit patterns from `rng`, in draw order.
std::vector<Pattern> draw_unit_list(const LMParameters& params, const ModelSpec& spec, std::int64_t n, Rng& rng);

/// n units from `rng`, aggregated.
Dataset draw_units(const LMParameters& params, const ModelSpec& spec, std::int64_t n, Rng& rng);

/// The five benchmark settings (T = 5, binary responses sharing one emission
/// matrix). Scenarios 1-3 have k = 2 and n in {250, 500}; scenarios 4-5 have
/// k = 3 and n = 500 only. Throws std::invalid_argument for an unknown id,
/// an r < 1, or a disallowed n.
Scenario scenario_preset(int id, int responses, std::int64_t n);

/// Substream seed of one replicate: derive_seed(master_seed, {stable_hash(name), replicate_index}).
std::uint64_t replicate_seed(const Scenario& scenario, int replicate_index, std::uint64_t master_seed);

/// Replicate `replicate_index` of a scenario, drawn from its replicate_seed substream.
Dataset draw_dataset(const Scenario& scenario, int replicate_index, std::uint64_t master_seed = kDefaultMasterSeed);

}  // namespace lmselect
