#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lmselect/criteria.hpp"
#include "lmselect/em.hpp"
#include "lmselect/errors.hpp"
#include "lmselect/harness.hpp"
#include "lmselect/inference.hpp"
#include "lmselect/io.hpp"
#include "lmselect/model.hpp"
#include "lmselect/simulate.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace lmselect;

namespace {

py::dict values_to_dict(const CriterionValues& v) {
  py::dict d;
  d["k"] = v.k;
  d["loglik"] = v.loglik;
  d["n_params"] = v.n_params;
  d["EN"] = v.en;
  d["EN1"] = v.en1;
  d["EN2"] = v.en2;
  for (Criterion c : kAllCriteria) d[py::str(std::string(criterion_name(c)))] = v.get(c);
  return d;
}

SelectionRule rule_from(const std::string& name) {
  const auto rule = parse_rule(name);
  if (!rule) throw std::invalid_argument("rule must be 'first-increase' or 'global-minimum'");
  return *rule;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = R"pbdoc(
        Latent Markov models for longitudinal categorical data
        ------------------------------------------------------

        .. currentmodule:: lmselect

        .. autosummary::
           :toctree: _generate

           fit
           select
           log_manifest_probability
           posteriors
           dataset_entropies
           scenario
           simulate
    )pbdoc";

  auto base = py::register_exception<Error>(m, "LMError");
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<ZeroProbabilityPattern>(m, "ZeroProbabilityPattern", base);
  py::register_exception<FitFailure>(m, "FitFailure", base);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](int states, int occasions, std::vector<int> categories, bool transition_homogeneous,
                       bool emission_homogeneous) {
             ModelSpec s{states, occasions, std::move(categories), transition_homogeneous, emission_homogeneous};
             s.check();
             return s;
           }),
           py::arg("states"), py::arg("occasions"), py::arg("categories"), py::arg("transition_homogeneous") = true,
           py::arg("emission_homogeneous") = true)
      .def_readwrite("states", &ModelSpec::states)
      .def_readwrite("occasions", &ModelSpec::occasions)
      .def_readwrite("categories", &ModelSpec::categories)
      .def_readwrite("transition_homogeneous", &ModelSpec::transition_homogeneous)
      .def_readwrite("emission_homogeneous", &ModelSpec::emission_homogeneous)
      .def_property_readonly("responses", &ModelSpec::responses)
      .def_property_readonly("n_free_parameters", [](const ModelSpec& s) { return count_free_parameters(s); })
      .def("__repr__", [](const ModelSpec& s) {
        std::ostringstream o;
        o << "ModelSpec(states=" << s.states << ", occasions=" << s.occasions << ", responses=" << s.responses()
          << ")";
        return o.str();
      });

  py::class_<LMParameters>(m, "Parameters")
      .def(py::init<>())
      .def(py::init([](Eigen::VectorXd initial, std::vector<Eigen::MatrixXd> transitions,
                       std::vector<std::vector<Eigen::MatrixXd>> emissions) {
             return LMParameters{std::move(initial), std::move(transitions), std::move(emissions)};
           }),
           py::arg("initial"), py::arg("transitions"), py::arg("emissions"))
      .def_readwrite("initial", &LMParameters::initial)
      .def_readwrite("transitions", &LMParameters::transitions)
      .def_readwrite("emissions", &LMParameters::emissions)
      .def("validate",
           [](const LMParameters& p, const ModelSpec& s) {
             std::vector<std::string> out;
             for (const auto& v : validate(p, s)) out.push_back(v.where + ": " + v.message);
             return out;
           })
      .def("to_json", [](const LMParameters& p, const ModelSpec& s) { return io::params_to_json(s, p).dump(); },
           py::arg("spec"));

  m.def(
      "parameters_from_json",
      [](const std::string& text) {
        const auto pf = io::params_from_json(nlohmann::json::parse(text));
        return py::make_tuple(pf.spec, pf.params);
      },
      "Parses a parameters JSON document into (ModelSpec, Parameters).");
  m.def("uniform_parameters", &uniform_parameters, py::arg("spec"));

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<int, int>(), py::arg("responses"), py::arg("occasions"))
      .def("add", &Dataset::add, py::arg("pattern"), py::arg("count") = 1,
           "Adds units with a pattern laid out occasion-major: index t * r + j.")
      .def_property_readonly("responses", &Dataset::responses)
      .def_property_readonly("occasions", &Dataset::occasions)
      .def_property_readonly("size", &Dataset::size)
      .def("entries",
           [](const Dataset& d) {
             std::vector<std::pair<Pattern, std::int64_t>> out;
             for (const auto& e : d.entries()) out.emplace_back(e.pattern, e.count);
             return out;
           })
      .def("inferred_categories", &Dataset::inferred_categories)
      .def("__len__", [](const Dataset& d) { return d.size(); });

  m.def(
      "read_dataset",
      [](const std::string& path) { return io::read_dataset_csv_file(path).aggregate(); }, py::arg("path"),
      "Reads a wide dataset CSV (id,y<j>_t<t>).");

  m.def("count_free_parameters", &count_free_parameters, py::arg("spec"));
  m.def("log_manifest_probability", &log_manifest_probability, py::arg("params"), py::arg("spec"),
        py::arg("pattern"));
  m.def(
      "log_likelihood",
      [](const LMParameters& p, const ModelSpec& s, const Dataset& d) { return log_likelihood(p, s, d).value; },
      py::arg("params"), py::arg("spec"), py::arg("data"));
  m.def(
      "posteriors",
      [](const LMParameters& p, const ModelSpec& s, const Pattern& y) {
        const auto post = posteriors(p, s, y);
        return py::make_tuple(post.marginal, post.conditional);
      },
      py::arg("params"), py::arg("spec"), py::arg("pattern"),
      "Returns (marginal k x T, [conditional k x k for t = 2..T]).");
  m.def(
      "entropy",
      [](const LMParameters& p, const ModelSpec& s, const Pattern& y, const std::string& kind) {
        if (kind == "EN") return entropy_exact(p, s, y);
        if (kind == "EN-enumerate") return entropy_exact(p, s, y, EntropyEvaluator::kEnumeration);
        if (kind == "EN1") return entropy_marginal(p, s, y);
        if (kind == "EN2") return entropy_normalized(p, s, y);
        throw std::invalid_argument("kind must be EN, EN-enumerate, EN1 or EN2");
      },
      py::arg("params"), py::arg("spec"), py::arg("pattern"), py::arg("kind") = "EN");
  m.def(
      "dataset_entropies",
      [](const LMParameters& p, const ModelSpec& s, const Dataset& d) {
        const auto e = dataset_entropies(p, s, d);
        py::dict out;
        out["EN"] = e.exact;
        out["EN1"] = e.marginal;
        out["EN2"] = e.normalized;
        return out;
      },
      py::arg("params"), py::arg("spec"), py::arg("data"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("spec", &FitResult::spec)
      .def_readonly("params", &FitResult::params)
      .def_readonly("log_likelihood", &FitResult::log_likelihood)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("trace", &FitResult::trace)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("start_index", &FitResult::start_index)
      .def_readonly("start_log_likelihoods", &FitResult::start_log_likelihoods)
      .def_readonly("n", &FitResult::n)
      .def_property_readonly("start_type", [](const FitResult& r) { return to_string(r.start_type); });

  m.def(
      "fit",
      [](const ModelSpec& spec, const Dataset& data, int max_iter, double tol, int starts, int screen_iterations,
         std::uint64_t seed, bool canonical) {
        FitOptions o;
        o.max_iter = max_iter;
        o.tol = tol;
        o.random_starts = starts;
        o.screen_iterations = screen_iterations;
        o.seed = seed;
        py::gil_scoped_release release;
        FitResult r = fit(spec, data, o);
        return canonical ? canonicalize_states(r) : r;
      },
      py::arg("spec"), py::arg("data"), py::arg("max_iter") = 5000, py::arg("tol") = 1e-8, py::arg("starts") = 4,
      py::arg("screen_iterations") = 0, py::arg("seed") = kDefaultMasterSeed, py::arg("canonical") = true,
      "Maximum likelihood fit by EM with multiple starts.");

  m.def(
      "criteria",
      [](int k, double loglik, std::int64_t n_params, std::int64_t n, double en, double en1, double en2,
         double loglik_1) {
        return values_to_dict(make_criterion_values(k, loglik, n_params, n, en, en1, en2, loglik_1));
      },
      py::arg("k"), py::arg("loglik"), py::arg("n_params"), py::arg("n"), py::arg("en") = 0.0, py::arg("en1") = 0.0,
      py::arg("en2") = 0.0, py::arg("loglik_1") = 0.0);

  m.def(
      "select",
      [](const Dataset& data, const ModelSpec& base, int k_max, int starts, int screen_iterations, std::uint64_t seed,
         const std::string& rule) {
        FitOptions o;
        o.random_starts = starts;
        o.screen_iterations = screen_iterations;
        const auto r = rule_from(rule);
        ReplicateRecord rec;
        {
          py::gil_scoped_release release;
          rec = analyze_dataset(data, base, k_max, o, r, seed);
        }
        py::dict selected;
        for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
          selected[py::str(std::string(criterion_name(kAllCriteria[c])))] = rec.selection[c].k;
        }
        py::list values;
        for (const auto& v : rec.values) values.append(values_to_dict(v));
        py::dict out;
        out["selected"] = selected;
        out["values"] = values;
        return out;
      },
      py::arg("data"), py::arg("spec"), py::arg("k_max") = 5, py::arg("starts") = 4,
      py::arg("screen_iterations") = 0, py::arg("seed") = kDefaultMasterSeed, py::arg("rule") = "first-increase",
      "Fits k = 1..k_max (the state count of `spec` is ignored) and applies every criterion.");

  m.def(
      "scenario",
      [](int id, int responses, std::int64_t n) {
        const auto s = scenario_preset(id, responses, n);
        return py::make_tuple(s.spec, s.params);
      },
      py::arg("id"), py::arg("responses") = 1, py::arg("n") = 250, "Returns (ModelSpec, Parameters) of a preset.");
  m.def(
      "simulate",
      [](int id, int responses, std::int64_t n, int replicate, std::uint64_t seed) {
        return draw_dataset(scenario_preset(id, responses, n), replicate, seed);
      },
      py::arg("id"), py::arg("responses") = 1, py::arg("n") = 250, py::arg("replicate") = 0,
      py::arg("seed") = kDefaultMasterSeed, "Draws one replicate dataset of a preset scenario.");
  m.def(
      "simulate_from",
      [](const LMParameters& p, const ModelSpec& s, std::int64_t n, std::uint64_t seed) {
        Rng rng(seed);
        return draw_units(p, s, n, rng);
      },
      py::arg("params"), py::arg("spec"), py::arg("n"), py::arg("seed") = kDefaultMasterSeed);

  m.attr("criterion_names") = [] {
    std::vector<std::string> names;
    for (Criterion c : kAllCriteria) names.emplace_back(criterion_name(c));
    return names;
  }();

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
