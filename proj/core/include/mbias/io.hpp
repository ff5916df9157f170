#pragma once

// JSON and CSV formats for tables, error models, moments and results.

#include <cstddef>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mbias/binary_restore.hpp"
#include "mbias/dist_core.hpp"
#include "mbias/dsep_test.hpp"
#include "mbias/linear_sem.hpp"
#include "mbias/matrix_restore.hpp"
#include "mbias/simulate.hpp"

namespace mbias::io {

using nlohmann::json;

/// {"cards": [cx, cy, cv], "cells": [...row-major...], "axis": "Z" | "W"}
json to_json(const JointTable& table);
JointTable joint_table_from_json(const json& j);

/// {"n_w", "n_z", "entries": [column-major], "factors": [nested, optional]}
json to_json(const ErrorMatrix& m);
ErrorMatrix error_matrix_from_json(const json& j);

/// [{"eps", "delta"}, ...]; a single object is read as a one-element list.
json to_json(const ComponentErrorList& errs);
ComponentErrorList error_list_from_json(const json& j);

json to_json(const RestorationResult& r);
json to_json(const CovStats& s);
CovStats cov_stats_from_json(const json& j);
json to_json(const LinearSemSpec& spec);
LinearSemSpec linear_spec_from_json(const json& j);
json to_json(const DiscreteModelSpec& spec);
DiscreteModelSpec discrete_spec_from_json(const json& j);
/// {"method", "statistic", "stderr", "p_value", "level", "decision"}
json to_json(const TestResult& r);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position by name; throws InvalidArgument when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

/// Columns x, y and either w or w1..wK (all 0/1).
std::vector<BinarySample> binary_samples_from_csv(const CsvTable& csv,
                                                  const std::string& prefix = "w");
CsvTable binary_samples_to_csv(const std::vector<BinarySample>& samples,
                               const std::string& prefix);

/// Columns x, y, w[, v] as reals.
LinearData linear_data_from_csv(const CsvTable& csv);
CsvTable linear_data_to_csv(const LinearData& data);

/// Columns x, y, w with non-negative integer categories.
std::vector<DiscreteSample> discrete_samples_from_csv(const CsvTable& csv);
CsvTable discrete_samples_to_csv(const std::vector<DiscreteSample>& samples);

}  // namespace mbias::io
