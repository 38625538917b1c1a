#include "lmselect/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lmselect/errors.hpp"

namespace lmselect::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

json number_or_string(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double parse_double_field(const std::string& s, std::size_t line, std::size_t column) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("expected a number, got '" + s + "'", line, column);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

// Parses "y<j>_t<t>" into 1-based (j, t); false when the name does not match.
bool parse_cell_name(const std::string& name, int& j, int& t) {
  if (name.size() < 5 || name[0] != 'y') return false;
  const auto us = name.find("_t");
  if (us == std::string::npos) return false;
  const char* b = name.data();
  auto r1 = std::from_chars(b + 1, b + us, j);
  auto r2 = std::from_chars(b + us + 2, b + name.size(), t);
  return r1.ec == std::errc() && r1.ptr == b + us && r2.ec == std::errc() && r2.ptr == b + name.size() && j >= 1 &&
         t >= 1;
}

}  // namespace

Dataset UnitTable::aggregate() const {
  Dataset data(responses, occasions);
  for (const auto& u : units) data.add(u);
  return data;
}

std::string dataset_header(int responses, int occasions) {
  std::string h = "id";
  for (int j = 1; j <= responses; ++j) {
    for (int t = 1; t <= occasions; ++t) h += ",y" + std::to_string(j) + "_t" + std::to_string(t);
  }
  return h;
}

UnitTable read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw DataError("empty dataset file");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "id") throw DataError("first column must be 'id'", line_no, 1);

  std::vector<std::pair<int, int>> cells;  // 0-based (j, t) per column after id
  int r = 0;
  int T = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    int j = 0;
    int t = 0;
    if (!parse_cell_name(header[c], j, t)) {
      throw DataError("column name '" + header[c] + "' is not of the form y<j>_t<t>", line_no, c + 1);
    }
    cells.emplace_back(j - 1, t - 1);
    r = std::max(r, j);
    T = std::max(T, t);
  }
  if (cells.empty()) throw DataError("no response columns", line_no, 1);
  if (static_cast<std::size_t>(r * T) != cells.size()) {
    throw DataError("header must contain every y<j>_t<t> for j = 1.." + std::to_string(r) +
                        ", t = 1.." + std::to_string(T) + " exactly once",
                    line_no);
  }
  std::vector<int> seen(static_cast<std::size_t>(r * T), 0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto idx = static_cast<std::size_t>(cells[c].second * r + cells[c].first);
    if (seen[idx]++) throw DataError("duplicate column '" + header[c + 1] + "'", line_no, c + 2);
  }

  UnitTable table;
  table.responses = r;
  table.occasions = T;
  while (next_line(in, line, line_no)) {
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("row has " + std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(header.size()),
                      line_no);
    }
    Pattern p(static_cast<std::size_t>(r * T));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& f = fields[c + 1];
      int y = 0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), y);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw DataError("expected an integer category label, got '" + f + "'", line_no, c + 2);
      }
      if (y < 0) throw DataError("category labels must be >= 0, got " + f, line_no, c + 2);
      p[static_cast<std::size_t>(cells[c].second * r + cells[c].first)] = y;
    }
    table.ids.push_back(fields[0]);
    table.units.push_back(std::move(p));
  }
  if (table.units.empty()) throw DataError("dataset has no rows");
  return table;
}

UnitTable read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const UnitTable& table) {
  const int r = table.responses;
  const int T = table.occasions;
  out << dataset_header(r, T) << '\n';
  for (std::size_t i = 0; i < table.units.size(); ++i) {
    out << (i < table.ids.size() ? table.ids[i] : std::to_string(i + 1));
    for (int j = 0; j < r; ++j) {
      for (int t = 0; t < T; ++t) out << ',' << label_at(table.units[i], r, t, j);
    }
    out << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  UnitTable table;
  table.responses = data.responses();
  table.occasions = data.occasions();
  for (const auto& e : data.entries()) {
    for (std::int64_t c = 0; c < e.count; ++c) table.units.push_back(e.pattern);
  }
  write_dataset_csv(out, table);
}

// ---------------------------------------------------------------------------

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json emission_set(const std::vector<Eigen::MatrixXd>& set) {
  json out = json::array();
  for (const auto& m : set) out.push_back(matrix_rows(m));
  return out;
}

const json& field(const json& j, const char* name, const std::string& path) {
  if (!j.is_object() || !j.contains(name)) throw DataError("missing field '" + path + name + "'");
  return j.at(name);
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw DataError("'" + path + "' must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("'" + path + "' row " + std::to_string(i) + " is ragged or not an array");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw DataError("'" + path + "' row " + std::to_string(i) + " has a non-numeric entry");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

std::vector<Eigen::MatrixXd> emission_set_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw DataError("'" + path + "' must be an array with one matrix per response");
  std::vector<Eigen::MatrixXd> set;
  for (std::size_t r = 0; r < j.size(); ++r) set.push_back(matrix_from(j[r], path + "[" + std::to_string(r) + "]"));
  return set;
}

template <typename T>
T typed(const json& j, const std::string& name) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw DataError("field '" + name + "' has the wrong type");
  }
}

}  // namespace

json spec_to_json(const ModelSpec& spec) {
  return json{{"states", spec.states},
              {"occasions", spec.occasions},
              {"categories", spec.categories},
              {"transition_homogeneous", spec.transition_homogeneous},
              {"emission_homogeneous", spec.emission_homogeneous}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.states = typed<int>(field(j, "states", ""), "states");
  spec.occasions = typed<int>(field(j, "occasions", ""), "occasions");
  spec.categories = typed<std::vector<int>>(field(j, "categories", ""), "categories");
  if (j.contains("transition_homogeneous")) {
    spec.transition_homogeneous = typed<bool>(j.at("transition_homogeneous"), "transition_homogeneous");
  }
  if (j.contains("emission_homogeneous")) {
    spec.emission_homogeneous = typed<bool>(j.at("emission_homogeneous"), "emission_homogeneous");
  }
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return spec;
}

json params_to_json(const ModelSpec& spec, const LMParameters& params) {
  json j = spec_to_json(spec);
  j["initial"] = std::vector<double>(params.initial.data(), params.initial.data() + params.initial.size());
  if (spec.transition_homogeneous) {
    j["transitions"] = params.transitions.empty() ? json::array() : matrix_rows(params.transitions.front());
  } else {
    json all = json::array();
    for (const auto& m : params.transitions) all.push_back(matrix_rows(m));
    j["transitions"] = all;
  }
  if (spec.emission_homogeneous) {
    j["emissions"] = emission_set(params.emissions.front());
  } else {
    json all = json::array();
    for (const auto& set : params.emissions) all.push_back(emission_set(set));
    j["emissions"] = all;
  }
  return j;
}

ParameterFile params_from_json(const json& doc) {
  const json& j = doc.contains("parameters") ? doc.at("parameters") : doc;
  ParameterFile pf;
  pf.spec = spec_from_json(j);
  const auto& spec = pf.spec;

  const auto init = typed<std::vector<double>>(field(j, "initial", ""), "initial");
  pf.params.initial = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));

  const auto& tr = field(j, "transitions", "");
  if (spec.occasions > 1) {
    if (spec.transition_homogeneous) {
      pf.params.transitions.push_back(matrix_from(tr, "transitions"));
    } else {
      if (!tr.is_array()) throw DataError("'transitions' must be an array of matrices");
      for (std::size_t s = 0; s < tr.size(); ++s) {
        pf.params.transitions.push_back(matrix_from(tr[s], "transitions[" + std::to_string(s) + "]"));
      }
    }
  }

  const auto& em = field(j, "emissions", "");
  if (spec.emission_homogeneous) {
    pf.params.emissions.push_back(emission_set_from(em, "emissions"));
  } else {
    if (!em.is_array()) throw DataError("'emissions' must be an array with one set per occasion");
    for (std::size_t t = 0; t < em.size(); ++t) {
      pf.params.emissions.push_back(emission_set_from(em[t], "emissions[" + std::to_string(t) + "]"));
    }
  }
  require_valid(pf.params, pf.spec);
  return pf;
}

ParameterFile read_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return params_from_json(j);
}

// ---------------------------------------------------------------------------

json fit_result_to_json(const FitResult& r) {
  json j;
  j["log_likelihood"] = r.log_likelihood;
  j["n_parameters"] = count_free_parameters(r.spec);
  j["n"] = r.n;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["start_index"] = r.start_index;
  j["start_type"] = to_string(r.start_type);
  json starts = json::array();
  for (double x : r.start_log_likelihoods) starts.push_back(number_or_string(x));
  j["start_log_likelihoods"] = starts;
  j["failed_starts"] = r.failed_starts;
  j["degenerate_rows"] = r.degenerate_rows;
  j["trace"] = r.trace;
  j["parameters"] = params_to_json(r.spec, r.params);
  return j;
}

std::string selection_csv_header() {
  std::string h = "k,loglik,n_params,EN,EN1,EN2";
  for (Criterion c : kAllCriteria) h += "," + std::string(criterion_name(c));
  return h;
}

void write_selection_csv(std::ostream& out, const SelectionReport& report) {
  out << selection_csv_header() << '\n';
  for (const auto& v : report.values) {
    out << v.k << ',' << format_double(v.loglik) << ',' << v.n_params << ',' << format_double(v.en) << ','
        << format_double(v.en1) << ',' << format_double(v.en2);
    for (Criterion c : kAllCriteria) out << ',' << format_double(v.get(c));
    out << '\n';
  }
}

std::vector<CriterionValues> read_selection_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no) || line != selection_csv_header()) {
    throw DataError("unexpected selection report header", line_no);
  }
  std::vector<CriterionValues> out;
  while (next_line(in, line, line_no)) {
    const auto f = split_csv_line(line);
    if (f.size() != 15) throw DataError("expected 15 fields", line_no);
    CriterionValues v;
    v.k = static_cast<int>(parse_double_field(f[0], line_no, 1));
    v.loglik = parse_double_field(f[1], line_no, 2);
    v.n_params = static_cast<std::int64_t>(parse_double_field(f[2], line_no, 3));
    v.en = parse_double_field(f[3], line_no, 4);
    v.en1 = parse_double_field(f[4], line_no, 5);
    v.en2 = parse_double_field(f[5], line_no, 6);
    v.bic = parse_double_field(f[6], line_no, 7);
    v.aic = parse_double_field(f[7], line_no, 8);
    v.aic3 = parse_double_field(f[8], line_no, 9);
    v.caic = parse_double_field(f[9], line_no, 10);
    v.nec = parse_double_field(f[10], line_no, 11);
    v.nec1 = parse_double_field(f[11], line_no, 12);
    v.nec2 = parse_double_field(f[12], line_no, 13);
    v.clc = parse_double_field(f[13], line_no, 14);
    v.icl_bic = parse_double_field(f[14], line_no, 15);
    out.push_back(v);
  }
  return out;
}

json selection_to_json(const SelectionReport& report, std::int64_t n) {
  json j;
  j["n"] = n;
  j["rule"] = std::string(rule_name(report.rule));
  j["k_range"] = {report.k_min, report.k_max};
  json sel = json::object();
  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    sel[std::string(criterion_name(kAllCriteria[c]))] = {{"k", report.selected[c].k},
                                                          {"boundary", report.selected[c].boundary}};
  }
  j["selected"] = sel;
  json rows = json::array();
  for (const auto& v : report.values) {
    json row{{"k", v.k},
             {"loglik", number_or_string(v.loglik)},
             {"n_params", v.n_params},
             {"EN", number_or_string(v.en)},
             {"EN1", number_or_string(v.en1)},
             {"EN2", number_or_string(v.en2)}};
    for (Criterion c : kAllCriteria) row[std::string(criterion_name(c))] = number_or_string(v.get(c));
    rows.push_back(std::move(row));
  }
  j["values"] = rows;
  return j;
}

void write_frequency_csv(std::ostream& out, const FrequencyTable& table, int scenario, std::int64_t n) {
  out << "r,k";
  for (Criterion c : kAllCriteria) out << ',' << criterion_name(c);
  out << '\n';
  char buf[32];
  for (const auto& cell : table.cells) {
    if (cell.scenario != scenario || cell.n != n) continue;
    for (int k = 1; k <= table.k_max; ++k) {
      out << cell.responses << ',' << k;
      for (Criterion c : kAllCriteria) {
        std::snprintf(buf, sizeof(buf), "%.4f", cell.freq(c, k));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

std::vector<FrequencyRow> read_frequency_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw DataError("empty frequency table");
  const auto header = split_csv_line(line);
  if (header.size() != 2 + kAllCriteria.size() || header[0] != "r" || header[1] != "k") {
    throw DataError("unexpected frequency table header", line_no);
  }
  std::vector<FrequencyRow> rows;
  while (next_line(in, line, line_no)) {
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw DataError("ragged frequency row", line_no);
    FrequencyRow row;
    row.responses = static_cast<int>(parse_double_field(f[0], line_no, 1));
    row.k = static_cast<int>(parse_double_field(f[1], line_no, 2));
    for (std::size_t c = 2; c < f.size(); ++c) row.values.push_back(parse_double_field(f[c], line_no, c + 1));
    rows.push_back(std::move(row));
  }
  return rows;
}

json study_to_json(const FrequencyTable& table) {
  json cells = json::array();
  for (const auto& cell : table.cells) {
    json c;
    c["scenario"] = cell.scenario;
    c["r"] = cell.responses;
    c["n"] = cell.n;
    c["name"] = cell.name;
    c["replicates"] = cell.replicates;
    c["failures"] = cell.failures;
    c["worst_loglik_decrease"] = cell.worst_decrease;
    json freq = json::object();
    json boundary = json::object();
    for (std::size_t i = 0; i < kAllCriteria.size(); ++i) {
      freq[std::string(criterion_name(kAllCriteria[i]))] = cell.frequency[i];
      boundary[std::string(criterion_name(kAllCriteria[i]))] = cell.boundary[i];
    }
    c["frequency"] = freq;
    c["boundary_selections"] = boundary;
    json reps = json::array();
    for (const auto& rec : cell.records) {
      json r;
      r["index"] = rec.index;
      if (rec.failed) {
        r["failed"] = true;
        r["error"] = rec.error;
      } else {
        json sel = json::object();
        for (std::size_t i = 0; i < kAllCriteria.size(); ++i) {
          sel[std::string(criterion_name(kAllCriteria[i]))] = rec.selection[i].k;
        }
        r["selected"] = sel;
        r["iterations"] = rec.iterations;
        json ll = json::array();
        json en = json::array();
        for (const auto& v : rec.values) {
          ll.push_back(v.loglik);
          en.push_back(v.en);
        }
        r["loglik"] = ll;
        r["EN"] = en;
      }
      reps.push_back(std::move(r));
    }
    c["replicates_detail"] = reps;
    cells.push_back(std::move(c));
  }
  return json{{"k_max", table.k_max}, {"cells", cells}};
}

StudyConfig study_config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("study config must be a JSON object");
  static const char* known[] = {"scenarios", "r_values", "n_values", "k_max", "replicates",
                                "seed",      "em",       "selection", "threads"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw DataError("unknown config field '" + key + "'");
  }
  StudyConfig c;
  if (j.contains("scenarios")) c.scenarios = typed<std::vector<int>>(j.at("scenarios"), "scenarios");
  if (j.contains("r_values")) c.r_values = typed<std::vector<int>>(j.at("r_values"), "r_values");
  if (j.contains("n_values")) c.n_values = typed<std::vector<std::int64_t>>(j.at("n_values"), "n_values");
  if (j.contains("k_max")) c.k_max = typed<int>(j.at("k_max"), "k_max");
  if (j.contains("replicates")) c.replicates = typed<int>(j.at("replicates"), "replicates");
  if (j.contains("seed")) c.master_seed = typed<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("threads")) c.threads = typed<int>(j.at("threads"), "threads");
  if (j.contains("selection")) {
    const auto name = typed<std::string>(j.at("selection"), "selection");
    const auto rule = parse_rule(name);
    if (!rule) throw DataError("field 'selection' must be \"first-increase\" or \"global-minimum\"");
    c.rule = *rule;
  }
  if (j.contains("em")) {
    const auto& em = j.at("em");
    if (!em.is_object()) throw DataError("field 'em' must be an object");
    for (const auto& [key, value] : em.items()) {
      if (key != "max_iter" && key != "tol" && key != "starts" && key != "screen_iterations") {
        throw DataError("unknown config field 'em." + key + "'");
      }
    }
    if (em.contains("max_iter")) c.em.max_iter = typed<int>(em.at("max_iter"), "em.max_iter");
    if (em.contains("tol")) c.em.tol = typed<double>(em.at("tol"), "em.tol");
    if (em.contains("starts")) c.em.random_starts = typed<int>(em.at("starts"), "em.starts");
    if (em.contains("screen_iterations")) {
      c.em.screen_iterations = typed<int>(em.at("screen_iterations"), "em.screen_iterations");
    }
  }
  try {
    c.check();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return c;
}

json study_config_to_json(const StudyConfig& c) {
  return json{{"scenarios", c.scenarios},
              {"r_values", c.r_values},
              {"n_values", c.n_values},
              {"k_max", c.k_max},
              {"replicates", c.replicates},
              {"seed", c.master_seed},
              {"threads", c.threads},
              {"selection", std::string(rule_name(c.rule))},
              {"em",
               {{"max_iter", c.em.max_iter},
                {"tol", c.em.tol},
                {"starts", c.em.random_starts},
                {"screen_iterations", c.em.screen_iterations}}}};
}

}  // namespace lmselect::io
