#include "lmselect/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lmselect/criteria.hpp"
#include "lmselect/em.hpp"
#include "lmselect/errors.hpp"
#include "lmselect/harness.hpp"
#include "lmselect/io.hpp"
#include "lmselect/simulate.hpp"

#ifndef LMSELECT_VERSION
#define LMSELECT_VERSION "0.0.0"
#endif

namespace lmselect::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string version() { return LMSELECT_VERSION; }

json RunManifest::to_json() const {
  return json{{"command", command}, {"config", config},     {"version", version},
              {"seed", seed},       {"started", started},   {"finished", finished},
              {"outputs", outputs}};
}

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos, 0);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size() || text[0] == '-') {
    throw UsageError(source + ": expected a non-negative integer seed, got '" + text + "'");
  }
  return v;
}

std::uint64_t resolve_seed(const std::optional<std::string>& flag) {
  if (flag) return parse_seed(*flag, "--seed");
  if (const char* env = std::getenv("LMSELECT_SEED"); env && *env) return parse_seed(env, "LMSELECT_SEED");
  return kDefaultMasterSeed;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  return f;
}

CLI::Validator at_least(long long lo) {
  return CLI::Validator(
      [lo](std::string& text) -> std::string {
        long long v = 0;
        if (!CLI::detail::lexical_cast(text, v) || v < lo) return "must be an integer >= " + std::to_string(lo);
        return {};
      },
      ">=" + std::to_string(lo));
}

const CLI::Validator kPositive = at_least(1);
const CLI::Validator kPositiveReal(
    [](std::string& text) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(text, v) || !(v > 0.0)) return "must be a number > 0";
      return {};
    },
    ">0");
const CLI::Validator kNonNegative = at_least(0);

// Flags shared by every command that runs EM.
struct EmFlags {
  int max_iter = 5000;
  double tol = 1e-8;
  int starts = 4;
  int screen = 0;

  void add_to(CLI::App* app) {
    app->add_option("--max-iter", max_iter, "EM iteration cap per start")->check(kNonNegative);
    app->add_option("--tol", tol, "relative log-likelihood convergence tolerance")->check(kPositiveReal);
    app->add_option("--starts", starts, "random starts in addition to the deterministic one")
        ->check(kNonNegative);
    app->add_option("--screen-iterations", screen,
                    "run every start for this many iterations and continue only the best (0 = off)")
        ->check(kNonNegative);
  }

  FitOptions options(std::uint64_t seed) const {
    FitOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    o.random_starts = starts;
    o.screen_iterations = screen;
    o.seed = seed;
    return o;
  }

  json to_json() const {
    return json{{"max_iter", max_iter}, {"tol", tol}, {"starts", starts}, {"screen_iterations", screen}};
  }
};

struct DataFlags {
  std::string data;
  std::optional<int> occasions;
  std::optional<int> responses;
  bool tv_transitions = false;
  bool tv_emissions = false;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "dataset CSV (id,y<j>_t<t>)")->required();
    app->add_option("--T", occasions, "expected number of occasions")->check(kPositive);
    app->add_option("--r", responses, "expected number of responses")->check(kPositive);
    app->add_flag("--time-varying-transitions", tv_transitions, "one transition matrix per occasion");
    app->add_flag("--time-varying-emissions", tv_emissions, "one emission set per occasion");
  }

  // Loads the dataset and builds the matching spec (states left at 1).
  std::pair<Dataset, ModelSpec> load() const {
    const auto table = io::read_dataset_csv_file(data);
    if (occasions && *occasions != table.occasions) {
      throw DataError("dataset has " + std::to_string(table.occasions) + " occasions, --T says " +
                      std::to_string(*occasions));
    }
    if (responses && *responses != table.responses) {
      throw DataError("dataset has " + std::to_string(table.responses) + " responses, --r says " +
                      std::to_string(*responses));
    }
    Dataset d = table.aggregate();
    ModelSpec spec;
    spec.states = 1;
    spec.occasions = d.occasions();
    spec.categories = d.inferred_categories();
    spec.transition_homogeneous = !tv_transitions;
    spec.emission_homogeneous = !tv_emissions;
    return {std::move(d), spec};
  }

  json to_json() const {
    json j{{"data", data}, {"time_varying_transitions", tv_transitions}, {"time_varying_emissions", tv_emissions}};
    if (occasions) j["T"] = *occasions;
    if (responses) j["r"] = *responses;
    return j;
  }
};

// ---------------------------------------------------------------------------

int cmd_fit(const DataFlags& df, int k, const EmFlags& ef, const std::optional<std::string>& seed_flag,
            const std::string& out_path, std::ostream& out, std::ostream& err) {
  RunManifest m;
  m.command = "fit";
  m.started = utc_now();
  m.version = version();
  m.seed = resolve_seed(seed_flag);

  auto [data, spec] = df.load();
  spec.states = k;
  const FitResult result = canonicalize_states(fit(spec, data, ef.options(m.seed)));

  m.config = df.to_json();
  m.config["k"] = k;
  m.config["em"] = ef.to_json();
  if (!out_path.empty()) m.outputs.push_back(out_path);
  m.finished = utc_now();

  json doc = io::fit_result_to_json(result);
  doc["manifest"] = m.to_json();
  std::ostream& summary = out_path.empty() ? err : out;
  summary << "loglik " << io::format_double(result.log_likelihood) << '\n'
          << "n_params " << count_free_parameters(result.spec) << '\n'
          << "iterations " << result.iterations << (result.converged ? "" : " (not converged)") << '\n';
  if (out_path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json_file(out_path, doc);
  }
  return kOk;
}

int cmd_select(const DataFlags& df, int k_max, const std::string& rule_text, const EmFlags& ef,
               const std::optional<std::string>& seed_flag, const std::string& out_prefix, std::ostream& out,
               std::ostream& err) {
  RunManifest m;
  m.command = "select";
  m.started = utc_now();
  m.version = version();
  m.seed = resolve_seed(seed_flag);
  const auto rule = parse_rule(rule_text);
  if (!rule) throw UsageError("--rule must be first-increase or global-minimum");

  const auto [data, spec] = df.load();
  const ReplicateRecord rec = analyze_dataset(data, spec, k_max, ef.options(m.seed), *rule, m.seed);
  const SelectionReport report = select_k(rec.values, *rule);

  m.config = df.to_json();
  m.config["k_max"] = k_max;
  m.config["rule"] = rule_text;
  m.config["em"] = ef.to_json();

  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    (out_prefix.empty() ? err : out) << criterion_name(kAllCriteria[c]) << " k=" << report.selected[c].k
                                     << (report.selected[c].boundary ? " (boundary)" : "") << '\n';
  }
  if (out_prefix.empty()) {
    io::write_selection_csv(out, report);
    return kOk;
  }
  const std::string csv_path = out_prefix + ".csv";
  const std::string json_path = out_prefix + ".json";
  {
    auto f = open_out(csv_path);
    io::write_selection_csv(f, report);
  }
  m.outputs = {csv_path, json_path};
  m.finished = utc_now();
  json doc = io::selection_to_json(report, data.size());
  doc["manifest"] = m.to_json();
  write_json_file(json_path, doc);
  return kOk;
}

std::string sidecar_path(const std::string& csv_path) {
  fs::path p(csv_path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string() + ".params.json";
}

int cmd_simulate(std::optional<int> scenario_id, int responses, std::optional<std::int64_t> n_flag,
                 const std::string& params_path, const std::optional<std::string>& seed_flag,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  RunManifest m;
  m.command = "simulate";
  m.started = utc_now();
  m.version = version();
  m.seed = resolve_seed(seed_flag);

  if (scenario_id.has_value() == !params_path.empty()) {
    throw UsageError("give exactly one of --scenario or --params");
  }
  Scenario sc;
  if (scenario_id) {
    // Presets fix n; any other n reuses the preset parameters.
    sc = scenario_preset(*scenario_id, responses, *scenario_id >= 4 ? 500 : 250);
    if (n_flag) sc.n = *n_flag;
    sc.name = "scenario" + std::to_string(*scenario_id) + "-r" + std::to_string(responses) + "-n" +
              std::to_string(sc.n);
    m.config = json{{"scenario", *scenario_id}, {"r", responses}, {"n", sc.n}};
  } else {
    if (!n_flag) throw UsageError("--n is required with --params");
    auto pf = io::read_params_file(params_path);
    sc.spec = pf.spec;
    sc.params = pf.params;
    sc.n = *n_flag;
    sc.name = "params:" + fs::path(params_path).filename().string() + "-n" + std::to_string(sc.n);
    m.config = json{{"params", params_path}, {"n", sc.n}};
  }

  Rng rng(replicate_seed(sc, 0, m.seed));
  io::UnitTable table;
  table.responses = sc.spec.responses();
  table.occasions = sc.spec.occasions;
  table.units = draw_unit_list(sc.params, sc.spec, sc.n, rng);
  for (std::int64_t i = 1; i <= sc.n; ++i) table.ids.push_back(std::to_string(i));

  if (out_path.empty()) {
    io::write_dataset_csv(out, table);
    return kOk;
  }
  const std::string side = sidecar_path(out_path);
  {
    auto f = open_out(out_path);
    io::write_dataset_csv(f, table);
  }
  m.outputs = {out_path, side};
  m.finished = utc_now();
  json doc{{"scenario", sc.name}, {"n", sc.n}, {"parameters", io::params_to_json(sc.spec, sc.params)}};
  doc["manifest"] = m.to_json();
  write_json_file(side, doc);
  err << "wrote " << sc.n << " units to " << out_path << '\n';
  return kOk;
}

struct ReplicateFlags {
  std::string config;
  std::optional<std::vector<int>> scenarios;
  std::optional<std::vector<int>> r_values;
  std::optional<std::vector<std::int64_t>> n_values;
  std::optional<int> k_max;
  std::optional<int> replicates;
  std::optional<int> threads;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::optional<int> starts;
  std::optional<int> screen;
  std::string out_dir = ".";
  bool quiet = false;
};

int cmd_replicate(const ReplicateFlags& rf, const std::optional<std::string>& seed_flag, std::ostream& out,
                  std::ostream& err) {
  RunManifest m;
  m.command = "replicate";
  m.started = utc_now();
  m.version = version();

  StudyConfig cfg;
  if (!rf.config.empty()) {
    std::ifstream in(rf.config);
    if (!in) throw DataError("cannot open '" + rf.config + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DataError("invalid JSON in '" + rf.config + "': " + e.what());
    }
    cfg = io::study_config_from_json(j);
  }
  if (seed_flag || rf.config.empty()) {
    cfg.master_seed = resolve_seed(seed_flag);
  }
  if (rf.scenarios) cfg.scenarios = *rf.scenarios;
  if (rf.r_values) cfg.r_values = *rf.r_values;
  if (rf.n_values) cfg.n_values = *rf.n_values;
  if (rf.k_max) cfg.k_max = *rf.k_max;
  if (rf.replicates) cfg.replicates = *rf.replicates;
  if (rf.threads) cfg.threads = *rf.threads;
  if (rf.max_iter) cfg.em.max_iter = *rf.max_iter;
  if (rf.tol) cfg.em.tol = *rf.tol;
  if (rf.starts) cfg.em.random_starts = *rf.starts;
  if (rf.screen) cfg.em.screen_iterations = *rf.screen;
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  m.seed = cfg.master_seed;
  m.config = io::study_config_to_json(cfg);

  ProgressFn progress;
  if (!rf.quiet) {
    progress = [&err](const Progress& p) {
      if (p.done == p.total || p.done % 10 == 0) err << p.cell << ": " << p.done << "/" << p.total << '\n';
    };
  }
  const FrequencyTable table = run_study(cfg, progress);

  fs::create_directories(rf.out_dir);
  const fs::path dir(rf.out_dir);
  std::vector<std::pair<int, std::int64_t>> written;
  for (const auto& cell : table.cells) {
    const std::pair<int, std::int64_t> key{cell.scenario, cell.n};
    if (std::find(written.begin(), written.end(), key) != written.end()) continue;
    written.push_back(key);
    const auto path =
        (dir / ("table_scenario" + std::to_string(cell.scenario) + "_n" + std::to_string(cell.n) + ".csv")).string();
    auto f = open_out(path);
    io::write_frequency_csv(f, table, cell.scenario, cell.n);
    m.outputs.push_back(path);
    out << path << '\n';
  }
  const auto audit_path = (dir / "audit.json").string();
  const auto manifest_path = (dir / "manifest.json").string();
  m.outputs.push_back(audit_path);
  m.outputs.push_back(manifest_path);

  json audit = io::study_to_json(table);
  audit["manifest"] = "manifest.json";
  write_json_file(audit_path, audit);
  m.finished = utc_now();
  write_json_file(manifest_path, m.to_json());
  out << audit_path << '\n' << manifest_path << '\n';
  if (const int f = table.total_failures(); f > 0) err << f << " replicate(s) failed; see audit.json\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent Markov model fitting and latent-state selection", "lmselect"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::optional<std::string> seed_flag;
  auto add_seed = [&seed_flag](CLI::App* sub) {
    sub->add_option("--seed", seed_flag, "master seed (default: $LMSELECT_SEED, else built-in)");
  };

  DataFlags data_flags;
  EmFlags em_flags;
  std::string out_path;

  auto* fit_cmd = app.add_subcommand("fit", "fit a latent Markov model with k states");
  int k = 0;
  data_flags.add_to(fit_cmd);
  fit_cmd->add_option("--k", k, "number of latent states")->required()->check(kPositive);
  em_flags.add_to(fit_cmd);
  add_seed(fit_cmd);
  fit_cmd->add_option("--out", out_path, "output JSON (default: stdout)");

  auto* sel_cmd = app.add_subcommand("select", "fit k = 1..k_max and report every selection criterion");
  int k_max = 5;
  std::string rule = "first-increase";
  data_flags.add_to(sel_cmd);
  sel_cmd->add_option("--k-max", k_max, "largest number of states")->check(kPositive);
  sel_cmd->add_option("--rule", rule, "first-increase or global-minimum");
  em_flags.add_to(sel_cmd);
  add_seed(sel_cmd);
  sel_cmd->add_option("--out", out_path, "output prefix; writes <prefix>.csv and <prefix>.json");

  auto* sim_cmd = app.add_subcommand("simulate", "draw a dataset from a scenario or a parameters file");
  std::optional<int> scenario;
  int responses = 1;
  std::optional<std::int64_t> n;
  std::string params_path;
  sim_cmd->add_option("--scenario", scenario, "benchmark scenario 1-5")->check(CLI::Range(1, 5));
  sim_cmd->add_option("--r", responses, "number of responses (scenarios only)")->check(kPositive);
  sim_cmd->add_option("--n", n, "number of units")->check(kPositive);
  sim_cmd->add_option("--params", params_path, "parameters JSON");
  int sim_T = 0;
  sim_cmd->add_option("--T", sim_T, "number of occasions (must match the scenario or parameters)")
      ->check(kPositive);
  add_seed(sim_cmd);
  sim_cmd->add_option("--out", out_path, "output CSV (default: stdout); parameters go to <stem>.params.json");

  auto* rep_cmd = app.add_subcommand("replicate", "run the Monte Carlo study");
  ReplicateFlags rf;
  rep_cmd->add_option("--config", rf.config, "study config JSON");
  rep_cmd->add_option("--scenario", rf.scenarios, "scenarios to run")->check(CLI::Range(1, 5));
  rep_cmd->add_option("--r", rf.r_values, "numbers of responses")->check(kPositive);
  rep_cmd->add_option("--n", rf.n_values, "sample sizes (250 or 500)")->check(kPositive);
  rep_cmd->add_option("--k-max", rf.k_max, "largest number of states")->check(kPositive);
  rep_cmd->add_option("--replicates", rf.replicates, "replicates per cell")->check(kPositive);
  rep_cmd->add_option("--threads", rf.threads, "worker threads (0 = all cores)")->check(kNonNegative);
  rep_cmd->add_option("--max-iter", rf.max_iter, "EM iteration cap per start")->check(kNonNegative);
  rep_cmd->add_option("--tol", rf.tol, "relative log-likelihood convergence tolerance")->check(kPositiveReal);
  rep_cmd->add_option("--starts", rf.starts, "random starts per fit")->check(kNonNegative);
  rep_cmd->add_option("--screen-iterations", rf.screen, "screening iterations per start (0 = off)")
      ->check(kNonNegative);
  rep_cmd->add_option("--out", rf.out_dir, "output directory");
  rep_cmd->add_flag("--quiet", rf.quiet, "no progress output");
  add_seed(rep_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(data_flags, k, em_flags, seed_flag, out_path, out, err);
    if (sel_cmd->parsed()) return cmd_select(data_flags, k_max, rule, em_flags, seed_flag, out_path, out, err);
    if (sim_cmd->parsed()) {
      if (sim_T > 0) {
        const int expected = scenario ? 5 : io::read_params_file(params_path).spec.occasions;
        if (sim_T != expected) throw UsageError("--T " + std::to_string(sim_T) + " does not match the model's T = " +
                                                std::to_string(expected));
      }
      return cmd_simulate(scenario, responses, n, params_path, seed_flag, out_path, out, err);
    }
    if (rep_cmd->parsed()) return cmd_replicate(rf, seed_flag, out, err);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lmselect::cli
