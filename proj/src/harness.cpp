#include "lmselect/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "lmselect/inference.hpp"

namespace lmselect {

void StudyConfig::check() const {
  if (scenarios.empty()) throw std::invalid_argument("scenarios: at least one scenario is required");
  for (int s : scenarios) {
    if (s < 1 || s > 5) throw std::invalid_argument("scenarios: unknown scenario " + std::to_string(s));
  }
  if (r_values.empty()) throw std::invalid_argument("r_values: at least one value is required");
  for (int r : r_values) {
    if (r < 1) throw std::invalid_argument("r_values: values must be >= 1");
  }
  if (n_values.empty()) throw std::invalid_argument("n_values: at least one value is required");
  for (auto n : n_values) {
    if (n != 250 && n != 500) throw std::invalid_argument("n_values: only 250 and 500 are defined");
  }
  if (k_max < 1) throw std::invalid_argument("k_max: must be >= 1");
  if (replicates < 1) throw std::invalid_argument("replicates: must be >= 1");
  if (em.max_iter < 0) throw std::invalid_argument("em.max_iter: must be >= 0");
  if (!(em.tol > 0.0)) throw std::invalid_argument("em.tol: must be > 0");
  if (em.random_starts < 0) throw std::invalid_argument("em.starts: must be >= 0");
  if (em.screen_iterations < 0) throw std::invalid_argument("em.screen_iterations: must be >= 0");
  if (threads < 0) throw std::invalid_argument("threads: must be >= 0");
}

const CellResult* FrequencyTable::find(int scenario, int responses, std::int64_t n) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.responses == responses && c.n == n) return &c;
  }
  return nullptr;
}

int FrequencyTable::total_failures() const {
  int f = 0;
  for (const auto& c : cells) f += c.failures;
  return f;
}

ReplicateRecord analyze_dataset(const Dataset& data, const ModelSpec& base_spec, int k_max, const FitOptions& em,
                                SelectionRule rule, std::uint64_t fit_seed) {
  ReplicateRecord rec;
  double loglik_1 = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    ModelSpec spec = base_spec;
    spec.states = k;
    FitOptions opts = em;
    opts.seed = derive_seed(fit_seed, {static_cast<std::uint64_t>(k)});
    const FitResult f = fit(spec, data, opts);
    if (k == 1) loglik_1 = f.log_likelihood;
    const auto en = dataset_entropies(f.params, spec, data);
    rec.values.push_back(make_criterion_values(k, f.log_likelihood, count_free_parameters(spec), data.size(), en.exact,
                                               en.marginal, en.normalized, loglik_1));
    rec.iterations.push_back(f.iterations);
    rec.worst_decrease = std::max(rec.worst_decrease, f.worst_decrease);
  }
  rec.selection = select_k(rec.values, rule).selected;
  return rec;
}

CellResult run_cell(int scenario, int responses, std::int64_t n, const StudyConfig& config, const ProgressFn& progress) {
  config.check();
  const Scenario sc = scenario_preset(scenario, responses, n);

  CellResult cell;
  cell.scenario = scenario;
  cell.responses = responses;
  cell.n = n;
  cell.name = sc.name;
  cell.replicates = config.replicates;
  cell.records.resize(static_cast<std::size_t>(config.replicates));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= config.replicates) return;
      ReplicateRecord rec;
      try {
        const Dataset data = draw_dataset(sc, i, config.master_seed);
        const auto fit_seed = derive_seed(config.master_seed, {stable_hash(sc.name), static_cast<std::uint64_t>(i),
                                                               stable_hash("fit")});
        rec = analyze_dataset(data, sc.spec, config.k_max, config.em, config.rule, fit_seed);
      } catch (const std::exception& e) {
        rec = ReplicateRecord{};
        rec.failed = true;
        rec.error = e.what();
      }
      rec.index = i;
      cell.records[static_cast<std::size_t>(i)] = std::move(rec);
      const int d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress({sc.name, d, config.replicates});
      }
    }
  };

  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, config.replicates);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& f : cell.frequency) f.assign(static_cast<std::size_t>(config.k_max), 0.0);
  std::array<std::vector<int>, 9> counts;
  for (auto& c : counts) c.assign(static_cast<std::size_t>(config.k_max), 0);
  for (const auto& rec : cell.records) {
    if (rec.failed) {
      ++cell.failures;
      continue;
    }
    cell.worst_decrease = std::max(cell.worst_decrease, rec.worst_decrease);
    for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
      ++counts[c][static_cast<std::size_t>(rec.selection[c].k - 1)];
      if (rec.selection[c].boundary) ++cell.boundary[c];
    }
  }
  const int ok = cell.replicates - cell.failures;
  if (ok > 0) {
    for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
      for (std::size_t k = 0; k < counts[c].size(); ++k) {
        cell.frequency[c][k] = static_cast<double>(counts[c][k]) / ok;
      }
    }
  }
  return cell;
}

FrequencyTable run_study(const StudyConfig& config, const ProgressFn& progress) {
  config.check();
  FrequencyTable table;
  table.k_max = config.k_max;
  for (int s : config.scenarios) {
    for (auto n : config.n_values) {
      if (s >= 4 && n != 500) continue;
      for (int r : config.r_values) table.cells.push_back(run_cell(s, r, n, config, progress));
    }
  }
  return table;
}

}  // namespace lmselect
