#include "mbias/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mbias/errors.hpp"

namespace mbias::io {
namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw InvalidArgument(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return field<T>(j, name);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

std::uint8_t as_bit(double v, const std::string& col) {
  if (v != 0.0 && v != 1.0) {
    throw InvalidArgument("column '" + col + "' must hold 0/1 values");
  }
  return static_cast<std::uint8_t>(v);
}

std::size_t as_category(double v, const std::string& col) {
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw InvalidArgument("column '" + col + "' must hold non-negative integers");
  }
  return static_cast<std::size_t>(v);
}

// Indexed component columns prefix1..prefixK, or a bare `prefix` column.
std::vector<std::size_t> component_columns(const CsvTable& csv, const std::string& prefix) {
  std::vector<std::size_t> cols;
  for (std::size_t k = 1; csv.has_column(prefix + std::to_string(k)); ++k) {
    cols.push_back(csv.column(prefix + std::to_string(k)));
  }
  if (cols.empty() && csv.has_column(prefix)) cols.push_back(csv.column(prefix));
  if (cols.empty()) {
    throw InvalidArgument("CSV needs a '" + prefix + "' or '" + prefix + "1..K' columns");
  }
  return cols;
}

}  // namespace

json to_json(const JointTable& t) {
  return json{{"cards", {t.card_x(), t.card_y(), t.card_v()}},
              {"cells", std::vector<double>(t.cells().begin(), t.cells().end())},
              {"axis", to_string(t.kind())}};
}

JointTable joint_table_from_json(const json& j) {
  const auto cards = field<std::vector<std::size_t>>(j, "cards");
  if (cards.size() != 3) throw InvalidArgument("'cards' must list three cardinalities");
  return JointTable(cards[0], cards[1], cards[2], field<std::vector<double>>(j, "cells"),
                    vkind_from_string(field<std::string>(j, "axis")));
}

json to_json(const ErrorMatrix& m) {
  json j{{"n_w", m.n_w()}, {"n_z", m.n_z()}};
  if (m.is_factored()) {
    j["entries"] = json::array();
    json factors = json::array();
    for (const auto& f : m.factors()) factors.push_back(to_json(f));
    j["factors"] = std::move(factors);
  } else {
    j["entries"] = std::vector<double>(m.entries().begin(), m.entries().end());
  }
  return j;
}

ErrorMatrix error_matrix_from_json(const json& j) {
  if (j.contains("factors") && j.at("factors").is_array() && !j.at("factors").empty()) {
    std::vector<ErrorMatrix> factors;
    for (const auto& f : j.at("factors")) factors.push_back(error_matrix_from_json(f));
    ErrorMatrix m = ErrorMatrix::factored(std::move(factors));
    if (j.contains("n_w") && field<std::size_t>(j, "n_w") != m.n_w()) {
      throw InvalidArgument("n_w disagrees with the product of factor sizes");
    }
    if (j.contains("n_z") && field<std::size_t>(j, "n_z") != m.n_z()) {
      throw InvalidArgument("n_z disagrees with the product of factor sizes");
    }
    return m;
  }
  return ErrorMatrix(field<std::size_t>(j, "n_w"), field<std::size_t>(j, "n_z"),
                     field<std::vector<double>>(j, "entries"));
}

json to_json(const ComponentErrorList& errs) {
  json out = json::array();
  for (const auto& e : errs) out.push_back({{"eps", e.eps}, {"delta", e.delta}});
  return out;
}

ComponentErrorList error_list_from_json(const json& j) {
  ComponentErrorList out;
  auto one = [](const json& e) {
    return BinaryErrorParams{field<double>(e, "eps"), field<double>(e, "delta")};
  };
  if (j.is_object()) {
    out.push_back(one(j));
  } else if (j.is_array()) {
    for (const auto& e : j) out.push_back(one(e));
  } else {
    throw InvalidArgument("error parameters must be an object or an array of objects");
  }
  if (out.empty()) throw InvalidArgument("empty error parameter list");
  return out;
}

json to_json(const RestorationResult& r) {
  return json{{"restored", to_json(r.restored)},
              {"condition_estimate", r.condition_estimate},
              {"negative_mass", r.negative_mass},
              {"clipped", r.clipped}};
}

json to_json(const CovStats& s) {
  json j{{"var_x", s.var_x},   {"var_y", s.var_y},   {"var_w", s.var_w},
         {"cov_xy", s.cov_xy}, {"cov_xw", s.cov_xw}, {"cov_yw", s.cov_yw},
         {"n", s.n}};
  if (s.has_v()) {
    j["var_v"] = *s.var_v;
    j["cov_xv"] = *s.cov_xv;
    j["cov_yv"] = *s.cov_yv;
    j["cov_wv"] = *s.cov_wv;
  }
  return j;
}

CovStats cov_stats_from_json(const json& j) {
  CovStats s;
  s.var_x = field<double>(j, "var_x");
  s.var_y = field<double>(j, "var_y");
  s.var_w = field<double>(j, "var_w");
  s.cov_xy = field<double>(j, "cov_xy");
  s.cov_xw = field<double>(j, "cov_xw");
  s.cov_yw = field<double>(j, "cov_yw");
  s.var_v = optional_field<double>(j, "var_v");
  s.cov_xv = optional_field<double>(j, "cov_xv");
  s.cov_yv = optional_field<double>(j, "cov_yv");
  s.cov_wv = optional_field<double>(j, "cov_wv");
  s.n = optional_field<std::size_t>(j, "n").value_or(0);
  s.validate();
  return s;
}

json to_json(const LinearSemSpec& spec) {
  json j{{"c0", spec.c0},         {"c1", spec.c1},         {"c2", spec.c2},
         {"c3", spec.c3},         {"var_z", spec.var_z},   {"var_ex", spec.var_ex},
         {"var_ey", spec.var_ey}, {"var_ew", spec.var_ew}};
  if (spec.has_v()) {
    j["c_v"] = *spec.c_v;
    j["var_ev"] = *spec.var_ev;
  }
  return j;
}

LinearSemSpec linear_spec_from_json(const json& j) {
  LinearSemSpec spec;
  spec.c0 = field<double>(j, "c0");
  spec.c1 = field<double>(j, "c1");
  spec.c2 = field<double>(j, "c2");
  spec.c3 = field<double>(j, "c3");
  spec.c_v = optional_field<double>(j, "c_v");
  spec.var_z = field<double>(j, "var_z");
  spec.var_ex = field<double>(j, "var_ex");
  spec.var_ey = field<double>(j, "var_ey");
  spec.var_ew = field<double>(j, "var_ew");
  spec.var_ev = optional_field<double>(j, "var_ev");
  spec.validate();
  return spec;
}

json to_json(const DiscreteModelSpec& spec) {
  json j{{"p_z", spec.p_z},
         {"p_x_given_z", spec.p_x_given_z},
         {"p_y_given_xz", spec.p_y_given_xz}};
  if (const auto* list = std::get_if<ComponentErrorList>(&spec.error)) {
    j["error"] = to_json(*list);
  } else {
    j["error"] = to_json(std::get<ErrorMatrix>(spec.error));
  }
  return j;
}

DiscreteModelSpec discrete_spec_from_json(const json& j) {
  DiscreteModelSpec spec;
  spec.p_z = field<std::vector<double>>(j, "p_z");
  spec.p_x_given_z = field<std::vector<std::vector<double>>>(j, "p_x_given_z");
  spec.p_y_given_xz = field<std::vector<std::vector<std::vector<double>>>>(j, "p_y_given_xz");
  if (!j.contains("error")) throw InvalidArgument("missing field 'error'");
  const json& e = j.at("error");
  if (e.is_array() || (e.is_object() && e.contains("eps"))) {
    spec.error = error_list_from_json(e);
  } else {
    spec.error = error_matrix_from_json(e);
  }
  spec.validate();
  return spec;
}

json to_json(const TestResult& r) {
  return json{{"method", to_string(r.method)},
              {"statistic", r.statistic},
              {"stderr", r.std_error},
              {"p_value", r.p_value},
              {"level", r.level},
              {"decision", r.reject ? "reject" : "accept"}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidArgument("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw InvalidArgument("CSV is empty (no header row)");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  out.precision(17);
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, table);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<BinarySample> binary_samples_from_csv(const CsvTable& csv,
                                                  const std::string& prefix) {
  const std::size_t cx = csv.column("x");
  const std::size_t cy = csv.column("y");
  const auto comps = component_columns(csv, prefix);
  std::vector<BinarySample> out;
  out.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    BinarySample s{as_bit(row[cx], "x"), as_bit(row[cy], "y"), {}};
    for (std::size_t c : comps) s.v.push_back(as_bit(row[c], csv.header[c]));
    out.push_back(std::move(s));
  }
  return out;
}

CsvTable binary_samples_to_csv(const std::vector<BinarySample>& samples,
                               const std::string& prefix) {
  const std::size_t k = samples.empty() ? 1 : samples.front().v.size();
  CsvTable t;
  t.header = {"x", "y"};
  for (std::size_t i = 1; i <= k; ++i) t.header.push_back(prefix + std::to_string(i));
  for (const auto& s : samples) {
    std::vector<double> row{static_cast<double>(s.x), static_cast<double>(s.y)};
    for (auto b : s.v) row.push_back(b);
    t.rows.push_back(std::move(row));
  }
  return t;
}

LinearData linear_data_from_csv(const CsvTable& csv) {
  const std::size_t cx = csv.column("x");
  const std::size_t cy = csv.column("y");
  const std::size_t cw = csv.column("w");
  const bool with_v = csv.has_column("v");
  const std::size_t cv = with_v ? csv.column("v") : 0;
  LinearData d;
  for (const auto& row : csv.rows) {
    d.x.push_back(row[cx]);
    d.y.push_back(row[cy]);
    d.w.push_back(row[cw]);
    if (with_v) d.v.push_back(row[cv]);
  }
  return d;
}

CsvTable linear_data_to_csv(const LinearData& d) {
  CsvTable t;
  t.header = {"x", "y", "w"};
  if (d.has_v()) t.header.push_back("v");
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<double> row{d.x[i], d.y[i], d.w[i]};
    if (d.has_v()) row.push_back(d.v[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<DiscreteSample> discrete_samples_from_csv(const CsvTable& csv) {
  const std::size_t cx = csv.column("x");
  const std::size_t cy = csv.column("y");
  std::vector<DiscreteSample> out;
  out.reserve(csv.rows.size());
  if (csv.has_column("w")) {
    const std::size_t cw = csv.column("w");
    for (const auto& row : csv.rows) {
      out.push_back({as_category(row[cx], "x"), as_category(row[cy], "y"),
                     as_category(row[cw], "w")});
    }
    return out;
  }
  // Binary components w1..wK form the flat index, first most significant.
  const auto comps = component_columns(csv, "w");
  for (const auto& row : csv.rows) {
    std::size_t w = 0;
    for (std::size_t c : comps) w = (w << 1) | as_bit(row[c], csv.header[c]);
    out.push_back({as_category(row[cx], "x"), as_category(row[cy], "y"), w});
  }
  return out;
}

CsvTable discrete_samples_to_csv(const std::vector<DiscreteSample>& samples) {
  CsvTable t;
  t.header = {"x", "y", "w"};
  for (const auto& s : samples) {
    t.rows.push_back({static_cast<double>(s.x), static_cast<double>(s.y),
                      static_cast<double>(s.w)});
  }
  return t;
}

}  // namespace mbias::io
