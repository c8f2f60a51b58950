#include "subshrink/dataset.hpp"

#include "subshrink/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace subshrink {

SubgroupSchema::SubgroupSchema(std::vector<SubgroupVariable> variables)
    : variables_(std::move(variables)) {
  std::set<std::string> names;
  std::size_t offset = 0;
  for (const auto& v : variables_) {
    if (v.name.empty()) throw ConfigError("schema: variable with empty name");
    if (!names.insert(v.name).second)
      throw ConfigError("schema: duplicate variable '" + v.name + "'");
    if (v.levels.size() < 2)
      throw ConfigError("schema: variable '" + v.name +
                        "' needs at least two levels");
    std::set<std::string> seen;
    for (const auto& level : v.levels) {
      if (!seen.insert(level).second)
        throw ConfigError("schema: duplicate level '" + level +
                          "' in variable '" + v.name + "'");
    }
    offsets_.push_back(offset);
    offset += v.levels.size();
    for (const auto& level : v.levels) labels_.push_back(v.name + "=" + level);
  }
  std::set<std::string> unique_labels(labels_.begin(), labels_.end());
  if (unique_labels.size() != labels_.size())
    throw ConfigError("schema: subgroup labels are not unique");
}

SubgroupSchema SubgroupSchema::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("variables") ||
      !doc["variables"].is_array())
    throw ConfigError("schema: expected an object with a 'variables' array");
  std::vector<SubgroupVariable> vars;
  for (const auto& item : doc["variables"]) {
    if (!item.is_object() || !item.contains("name") ||
        !item.contains("levels") || !item["name"].is_string() ||
        !item["levels"].is_array())
      throw ConfigError("schema: each variable needs 'name' and 'levels'");
    SubgroupVariable v;
    v.name = item["name"].get<std::string>();
    for (const auto& level : item["levels"]) {
      if (!level.is_string())
        throw ConfigError("schema: level labels must be strings");
      v.levels.push_back(level.get<std::string>());
    }
    vars.push_back(std::move(v));
  }
  return SubgroupSchema(std::move(vars));
}

std::string SubgroupSchema::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variables_)
    vars.push_back({{"name", v.name}, {"levels", v.levels}});
  return nlohmann::json{{"variables", vars}}.dump(2) + "\n";
}

std::pair<std::size_t, std::size_t> SubgroupSchema::locate(
    std::size_t k) const {
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
  const auto j = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {j, k - offsets_[j]};
}

std::optional<std::size_t> SubgroupSchema::level_index(
    std::size_t variable, std::string_view label) const {
  const auto& levels = variables_[variable].levels;
  auto it = std::find(levels.begin(), levels.end(), label);
  if (it == levels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels.begin());
}

SubgroupSchema SubgroupSchema::select(
    std::span<const std::size_t> variables) const {
  std::vector<SubgroupVariable> vars;
  for (auto j : variables) vars.push_back(variables_.at(j));
  return SubgroupSchema(std::move(vars));
}

CovariateTable::CovariateTable(std::size_t num_variables,
                               std::vector<int> levels)
    : p_(num_variables), levels_(std::move(levels)) {
  if (p_ == 0) {
    if (!levels_.empty())
      throw DataError("covariate table: levels given without variables");
    return;
  }
  if (levels_.size() % p_ != 0)
    throw DataError("covariate table: size is not a multiple of p");
  n_ = levels_.size() / p_;
}

void CovariateTable::validate(const SubgroupSchema& schema) const {
  if (p_ != schema.num_variables())
    throw DataError("covariates: expected " +
                    std::to_string(schema.num_variables()) +
                    " variables, got " + std::to_string(p_));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < p_; ++j) {
      const int l = level(i, j);
      if (l < 0 || static_cast<std::size_t>(l) >= schema.num_levels(j))
        throw DataError("covariates: invalid level index " +
                        std::to_string(l) + ", row " + std::to_string(i + 1) +
                        ", column " + schema.variables()[j].name);
    }
  }
}

CovariateTable CovariateTable::subset(
    std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size() * p_);
  for (auto r : rows) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  CovariateTable t(p_, std::move(out));
  t.n_ = rows.size();
  return t;
}

CovariateTable CovariateTable::select(
    std::span<const std::size_t> variables) const {
  std::vector<int> out;
  out.reserve(n_ * variables.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (auto j : variables) out.push_back(level(i, j));
  CovariateTable t(variables.size(), std::move(out));
  t.n_ = n_;
  return t;
}

bool CovariateTable::in_subgroup(std::size_t subject,
                                 const SubgroupSchema& schema,
                                 std::size_t k) const {
  const auto [j, l] = schema.locate(k);
  return level(subject, j) == static_cast<int>(l);
}

namespace {

void check_binary(const std::vector<int>& values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != 0 && values[i] != 1)
      throw DataError(std::string("invalid ") + what + " value, row " +
                      std::to_string(i + 1) + ", column " + what);
}

}  // namespace

TrialDataset::TrialDataset(std::vector<double> time, std::vector<int> event,
                           std::vector<int> treatment,
                           CovariateTable covariates,
                           const SubgroupSchema& schema)
    : time_(std::move(time)),
      event_(std::move(event)),
      treatment_(std::move(treatment)),
      covariates_(std::move(covariates)) {
  const auto n = time_.size();
  if (event_.size() != n || treatment_.size() != n ||
      covariates_.size() != n)
    throw DataError("dataset: column lengths disagree");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(time_[i]) || time_[i] <= 0.0)
      throw DataError("nonpositive time, row " + std::to_string(i + 1) +
                      ", column time");
  }
  check_binary(event_, "event");
  check_binary(treatment_, "treatment");
  covariates_.validate(schema);
}

std::size_t TrialDataset::num_events() const {
  return static_cast<std::size_t>(
      std::count(event_.begin(), event_.end(), 1));
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> rows) const {
  TrialDataset out;
  out.time_.reserve(rows.size());
  out.event_.reserve(rows.size());
  out.treatment_.reserve(rows.size());
  for (auto r : rows) {
    out.time_.push_back(time_[r]);
    out.event_.push_back(event_[r]);
    out.treatment_.push_back(treatment_[r]);
  }
  out.covariates_ = covariates_.subset(rows);
  return out;
}

BinaryDataset::BinaryDataset(std::vector<int> outcome,
                             std::vector<int> treatment,
                             CovariateTable covariates,
                             const SubgroupSchema& schema)
    : outcome_(std::move(outcome)),
      treatment_(std::move(treatment)),
      covariates_(std::move(covariates)) {
  if (treatment_.size() != outcome_.size() ||
      covariates_.size() != outcome_.size())
    throw DataError("dataset: column lengths disagree");
  check_binary(outcome_, "outcome");
  check_binary(treatment_, "treatment");
  covariates_.validate(schema);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos
                                        ? std::string_view::npos
                                        : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
      field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
      field.remove_suffix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF")
    text.remove_prefix(3);
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos
                                       ? std::string_view::npos
                                       : pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") ==
                               std::string_view::npos)
    lines.pop_back();
  return lines;
}

std::string where(std::size_t row, std::string_view column) {
  return ", row " + std::to_string(row) + ", column " + std::string(column);
}

struct ParsedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw DataError("missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

ParsedTable read_table(std::string_view csv_text) {
  auto lines = split_lines(csv_text);
  if (lines.empty()) throw DataError("empty file");
  ParsedTable table;
  table.header = split_fields(lines[0]);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != table.header.size())
      throw DataError("expected " + std::to_string(table.header.size()) +
                      " fields, got " + std::to_string(fields.size()) +
                      ", row " + std::to_string(r));
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (fields[c].empty())
        throw DataError("missing value" + where(r, table.header[c]));
    table.rows.push_back(std::move(fields));
  }
  if (table.rows.empty()) throw DataError("empty file: no data rows");
  return table;
}

double parse_real(const std::string& s, std::size_t row,
                  std::string_view column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("non-numeric " + std::string(column) + where(row, column));
  return v;
}

int parse_flag(const std::string& s, std::size_t row,
               std::string_view column) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw DataError("invalid " + std::string(column) + " value '" + s + "'" +
                  where(row, column));
}

CovariateTable read_covariates(const ParsedTable& table,
                               const SubgroupSchema& schema) {
  const auto p = schema.num_variables();
  std::vector<std::size_t> cols;
  for (const auto& v : schema.variables()) cols.push_back(table.column(v.name));
  std::vector<int> levels;
  levels.reserve(table.rows.size() * p);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto& label = table.rows[r][cols[j]];
      auto idx = schema.level_index(j, label);
      if (!idx)
        throw DataError("unknown level label '" + label + "'" +
                        where(r + 1, schema.variables()[j].name));
      levels.push_back(static_cast<int>(*idx));
    }
  }
  return CovariateTable(p, std::move(levels));
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void append_levels(std::ostringstream& out, const CovariateTable& cov,
                   const SubgroupSchema& schema, std::size_t i) {
  for (std::size_t j = 0; j < schema.num_variables(); ++j)
    out << ',' << schema.variables()[j].levels[cov.level(i, j)];
}

}  // namespace

TrialDataset parse_dataset(std::string_view csv_text,
                           const SubgroupSchema& schema) {
  auto table = read_table(csv_text);
  const auto c_time = table.column("time");
  const auto c_event = table.column("event");
  const auto c_treat = table.column("treatment");
  const auto n = table.rows.size();
  std::vector<double> time(n);
  std::vector<int> event(n), treatment(n);
  for (std::size_t r = 0; r < n; ++r) {
    time[r] = parse_real(table.rows[r][c_time], r + 1, "time");
    if (!std::isfinite(time[r]) || time[r] <= 0.0)
      throw DataError("nonpositive time, row " + std::to_string(r + 1) +
                      ", column time");
    event[r] = parse_flag(table.rows[r][c_event], r + 1, "event");
    treatment[r] = parse_flag(table.rows[r][c_treat], r + 1, "treatment");
  }
  return TrialDataset(std::move(time), std::move(event), std::move(treatment),
                      read_covariates(table, schema), schema);
}

std::string serialize_dataset(const TrialDataset& dataset,
                              const SubgroupSchema& schema) {
  std::ostringstream out;
  out << "time,event,treatment";
  for (const auto& v : schema.variables()) out << ',' << v.name;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << format_real(dataset.time()[i]) << ',' << dataset.event()[i] << ','
        << dataset.treatment()[i];
    append_levels(out, dataset.covariates(), schema, i);
    out << '\n';
  }
  return out.str();
}

BinaryDataset parse_binary_dataset(std::string_view csv_text,
                                   const SubgroupSchema& schema) {
  auto table = read_table(csv_text);
  const auto c_out = table.column("outcome");
  const auto c_treat = table.column("treatment");
  const auto n = table.rows.size();
  std::vector<int> outcome(n), treatment(n);
  for (std::size_t r = 0; r < n; ++r) {
    outcome[r] = parse_flag(table.rows[r][c_out], r + 1, "outcome");
    treatment[r] = parse_flag(table.rows[r][c_treat], r + 1, "treatment");
  }
  return BinaryDataset(std::move(outcome), std::move(treatment),
                       read_covariates(table, schema), schema);
}

std::string serialize_binary_dataset(const BinaryDataset& dataset,
                                     const SubgroupSchema& schema) {
  std::ostringstream out;
  out << "outcome,treatment";
  for (const auto& v : schema.variables()) out << ',' << v.name;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.outcome()[i] << ',' << dataset.treatment()[i];
    append_levels(out, dataset.covariates(), schema, i);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Design

DesignMatrix build_design(const CovariateTable& covariates,
                          std::span<const int> treatment,
                          const SubgroupSchema& schema) {
  const auto n = covariates.size();
  const auto K = schema.num_subgroups();
  DesignMatrix d;
  d.num_subgroups = K;
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                              static_cast<Eigen::Index>(1 + 2 * K));
  d.roles.assign(1 + 2 * K, ColumnRole::main);
  d.roles[0] = ColumnRole::treatment;
  for (std::size_t k = 0; k < K; ++k)
    d.roles[d.interaction_col(k)] = ColumnRole::interaction;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double z = treatment[i];
    d.x(row, 0) = z;
    for (std::size_t j = 0; j < schema.num_variables(); ++j) {
      const auto k = schema.subgroup_index(
          j, static_cast<std::size_t>(covariates.level(i, j)));
      d.x(row, static_cast<Eigen::Index>(d.main_col(k))) = 1.0;
      d.x(row, static_cast<Eigen::Index>(d.interaction_col(k))) = z;
    }
  }
  return d;
}

DesignMatrix build_design(const TrialDataset& dataset,
                          const SubgroupSchema& schema) {
  return build_design(dataset.covariates(), dataset.treatment(), schema);
}

Eigen::VectorXd ReducedDesign::expand(const Eigen::VectorXd& reduced,
                                      std::size_t full_cols) const {
  Eigen::VectorXd full =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(full_cols));
  for (std::size_t j = 0; j < full_column.size(); ++j)
    full(static_cast<Eigen::Index>(full_column[j])) =
        reduced(static_cast<Eigen::Index>(j));
  return full;
}

ReducedDesign reduce_design(const DesignMatrix& design,
                            const SubgroupSchema& schema,
                            bool include_interactions) {
  ReducedDesign r;
  r.full_column.push_back(DesignMatrix::treatment_col());
  auto keep = [&](std::size_t k) {
    return schema.locate(k).second != 0;
  };
  const auto K = design.num_subgroups;
  for (std::size_t k = 0; k < K; ++k)
    if (keep(k)) r.full_column.push_back(design.main_col(k));
  if (include_interactions)
    for (std::size_t k = 0; k < K; ++k)
      if (keep(k)) r.full_column.push_back(design.interaction_col(k));
  r.x.resize(design.x.rows(), static_cast<Eigen::Index>(r.full_column.size()));
  for (std::size_t j = 0; j < r.full_column.size(); ++j)
    r.x.col(static_cast<Eigen::Index>(j)) =
        design.x.col(static_cast<Eigen::Index>(r.full_column[j]));
  return r;
}

}  // namespace subshrink
