#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmselect/criteria.hpp"
#include "lmselect/em.hpp"
#include "lmselect/harness.hpp"
#include "lmselect/model.hpp"

namespace lmselect::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Dataset CSV: one row per unit, header `id,y<j>_t<t>` (j = 1..r outer,
// t = 1..T inner), 0-based integer category labels.

struct UnitTable {
  int responses = 0;
  int occasions = 0;
  std::vector<std::string> ids;
  std::vector<Pattern> units;

  Dataset aggregate() const;
};

std::string dataset_header(int responses, int occasions);

/// Parses a dataset CSV. Columns may appear in any order after `id`; every
/// (j, t) pair must be present exactly once. Throws DataError with the line
/// and column of the first problem.
UnitTable read_dataset_csv(std::istream& in);
UnitTable read_dataset_csv_file(const std::string& path);

void write_dataset_csv(std::ostream& out, const UnitTable& table);
/// Writes the units of an aggregated dataset, in pattern order, ids 1..n.
void write_dataset_csv(std::ostream& out, const Dataset& data);

// ---------------------------------------------------------------------------
// Parameters JSON:
//   {"states", "occasions", "categories", "transition_homogeneous",
//    "emission_homogeneous", "initial": [..],
//    "transitions": [[row], ..]            (homogeneous)
//                 | [[[row], ..], ..]      (one matrix per occasion 2..T),
//    "emissions":   [[[row per state], ..] per response]      (homogeneous)
//                 | [[[[row per state]] per response] per occasion]}

json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const json& j);

json params_to_json(const ModelSpec& spec, const LMParameters& params);

struct ParameterFile {
  ModelSpec spec;
  LMParameters params;
};

/// Accepts a bare parameters object or any document carrying one under
/// "parameters" (fit results, simulation sidecars). Throws DataError with the
/// offending field on schema problems and std::invalid_argument when the
/// probabilities fail validation.
ParameterFile params_from_json(const json& j);
ParameterFile read_params_file(const std::string& path);

// ---------------------------------------------------------------------------
// Results.

json fit_result_to_json(const FitResult& result);

/// Per-k criterion table: k,loglik,n_params,EN,EN1,EN2 followed by the nine
/// criteria in kAllCriteria order. Doubles are written with 17 significant digits.
std::string selection_csv_header();
void write_selection_csv(std::ostream& out, const SelectionReport& report);
std::vector<CriterionValues> read_selection_csv(std::istream& in);
json selection_to_json(const SelectionReport& report, std::int64_t n);

/// One table per (scenario, n): header `r,k,<criteria...>`, then k_max rows
/// per r block. Frequencies are written with 4 decimals.
void write_frequency_csv(std::ostream& out, const FrequencyTable& table, int scenario, std::int64_t n);

struct FrequencyRow {
  int responses = 0;
  int k = 0;
  std::vector<double> values;  // kAllCriteria order
};
std::vector<FrequencyRow> read_frequency_csv(std::istream& in);

json study_to_json(const FrequencyTable& table);

StudyConfig study_config_from_json(const json& j);
json study_config_to_json(const StudyConfig& config);

/// Shortest round-trip representation; "inf" / "-inf" / "nan" for non-finite values.
std::string format_double(double x);

}  // namespace lmselect::io
