#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace subshrink {

struct SubgroupVariable {
  std::string name;
  std::vector<std::string> levels;
};

// Maps p categorical variables onto K = sum(l_j) subgroups. Subgroup k is
// addressed in schema order: variables as declared, levels as declared.
class SubgroupSchema {
 public:
  SubgroupSchema() = default;
  explicit SubgroupSchema(std::vector<SubgroupVariable> variables);

  static SubgroupSchema from_json(std::string_view json_text);
  std::string to_json() const;

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_subgroups() const { return labels_.size(); }
  const std::vector<SubgroupVariable>& variables() const { return variables_; }
  std::size_t num_levels(std::size_t variable) const {
    return variables_[variable].levels.size();
  }

  // Index of the first subgroup belonging to `variable`.
  std::size_t offset(std::size_t variable) const { return offsets_[variable]; }
  std::size_t subgroup_index(std::size_t variable, std::size_t level) const {
    return offsets_[variable] + level;
  }
  // (variable, level) of subgroup k.
  std::pair<std::size_t, std::size_t> locate(std::size_t k) const;
  // "<name>=<level>"
  const std::string& subgroup_label(std::size_t k) const { return labels_[k]; }
  const std::vector<std::string>& subgroup_labels() const { return labels_; }

  std::optional<std::size_t> level_index(std::size_t variable,
                                         std::string_view label) const;

  // Drops every variable not listed, keeping declared order.
  SubgroupSchema select(std::span<const std::size_t> variables) const;

 private:
  std::vector<SubgroupVariable> variables_;
  std::vector<std::size_t> offsets_;
  std::vector<std::string> labels_;
};

// n x p matrix of level indices, row-major.
class CovariateTable {
 public:
  CovariateTable() = default;
  CovariateTable(std::size_t num_variables, std::vector<int> levels);

  std::size_t size() const { return n_; }
  std::size_t num_variables() const { return p_; }
  int level(std::size_t subject, std::size_t variable) const {
    return levels_[subject * p_ + variable];
  }
  std::span<const int> row(std::size_t subject) const {
    return {levels_.data() + subject * p_, p_};
  }
  const std::vector<int>& raw() const { return levels_; }
  bool operator==(const CovariateTable&) const = default;

  void validate(const SubgroupSchema& schema) const;
  CovariateTable subset(std::span<const std::size_t> rows) const;
  CovariateTable select(std::span<const std::size_t> variables) const;
  bool in_subgroup(std::size_t subject, const SubgroupSchema& schema,
                   std::size_t k) const;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<int> levels_;
};

class TrialDataset {
 public:
  TrialDataset() = default;
  // Throws DataError when an invariant is violated.
  TrialDataset(std::vector<double> time, std::vector<int> event,
               std::vector<int> treatment, CovariateTable covariates,
               const SubgroupSchema& schema);

  std::size_t size() const { return time_.size(); }
  const std::vector<double>& time() const { return time_; }
  const std::vector<int>& event() const { return event_; }
  const std::vector<int>& treatment() const { return treatment_; }
  const CovariateTable& covariates() const { return covariates_; }
  std::size_t num_events() const;

  TrialDataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const TrialDataset&) const = default;

 private:
  std::vector<double> time_;
  std::vector<int> event_;
  std::vector<int> treatment_;
  CovariateTable covariates_;
};

class BinaryDataset {
 public:
  BinaryDataset() = default;
  BinaryDataset(std::vector<int> outcome, std::vector<int> treatment,
                CovariateTable covariates, const SubgroupSchema& schema);

  std::size_t size() const { return outcome_.size(); }
  const std::vector<int>& outcome() const { return outcome_; }
  const std::vector<int>& treatment() const { return treatment_; }
  const CovariateTable& covariates() const { return covariates_; }

  bool operator==(const BinaryDataset&) const = default;

 private:
  std::vector<int> outcome_;
  std::vector<int> treatment_;
  CovariateTable covariates_;
};

TrialDataset parse_dataset(std::string_view csv_text,
                           const SubgroupSchema& schema);
std::string serialize_dataset(const TrialDataset& dataset,
                              const SubgroupSchema& schema);

BinaryDataset parse_binary_dataset(std::string_view csv_text,
                                   const SubgroupSchema& schema);
std::string serialize_binary_dataset(const BinaryDataset& dataset,
                                     const SubgroupSchema& schema);

enum class ColumnRole { treatment, main, interaction };

// Columns: [treatment] ++ [K main indicators] ++ [K interactions].
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<ColumnRole> roles;
  std::size_t num_subgroups = 0;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  static constexpr std::size_t treatment_col() { return 0; }
  std::size_t main_col(std::size_t k) const { return 1 + k; }
  std::size_t interaction_col(std::size_t k) const {
    return 1 + num_subgroups + k;
  }
};

DesignMatrix build_design(const CovariateTable& covariates,
                          std::span<const int> treatment,
                          const SubgroupSchema& schema);
DesignMatrix build_design(const TrialDataset& dataset,
                          const SubgroupSchema& schema);

// Full-rank reparameterization obtained by dropping the first level of
// every variable from both the main and interaction blocks. `full_column[j]`
// is the overparameterized column that reduced column j stands for.
struct ReducedDesign {
  Eigen::MatrixXd x;
  std::vector<std::size_t> full_column;

  // Coefficients on the overparameterized layout (dropped levels get 0).
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced,
                         std::size_t full_cols) const;
};

ReducedDesign reduce_design(const DesignMatrix& design,
                            const SubgroupSchema& schema,
                            bool include_interactions = true);

}  // namespace subshrink
