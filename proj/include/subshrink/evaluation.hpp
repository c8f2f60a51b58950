#pragma once

#include "subshrink/estimators.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace subshrink {

// Estimates are n_sim x K matrices on the log scale; NaN marks a missing
// entry, which is excluded pairwise.
struct RmseResult {
  double rmse = 0.0;
  std::size_t used = 0;
  std::size_t missing = 0;
};

RmseResult rmse_overall(const Eigen::MatrixXd& estimates,
                        const Eigen::VectorXd& truths);

struct SubgroupMetric {
  double rmse = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance of the estimates
  std::optional<double> coverage;
  std::size_t used = 0;
  std::size_t missing = 0;
};

// lower/upper may be empty (no intervals).
std::vector<SubgroupMetric> subgroup_metrics(const Eigen::MatrixXd& estimates,
                                             const Eigen::VectorXd& truths,
                                             const Eigen::MatrixXd& lower = {},
                                             const Eigen::MatrixXd& upper = {});

// |theta_k - theta_pop| > log(1.1), both on the log scale.
std::vector<bool> classify_heterogeneous(const Eigen::VectorXd& truths,
                                         double overall_truth);

// Fraction of runs whose extreme estimate lies on the null subgroup:
// the maximal log effect (weakest effect) by default, or the minimal one.
// Ties with another subgroup count as failures; missing entries never win.
double identification_probability(const Eigen::MatrixXd& estimates,
                                  std::size_t null_subgroup,
                                  bool use_maximum = true);

struct EstimatorRuns {
  EstimatorTag tag = EstimatorTag::naive;
  Eigen::MatrixXd log_effect;
  Eigen::MatrixXd lower;  // empty when the estimator has no interval
  Eigen::MatrixXd upper;
};

// Collects per-run results into matrices (missing -> NaN).
EstimatorRuns collect_runs(EstimatorTag tag,
                           const std::vector<EstimatorResult>& runs,
                           std::size_t num_subgroups);

struct EstimatorEval {
  EstimatorTag tag = EstimatorTag::naive;
  RmseResult overall;
  std::vector<SubgroupMetric> subgroups;
  std::optional<double> identification_max;
  std::optional<double> identification_min;
};

struct EvalReport {
  std::size_t n_sim = 0;
  Eigen::VectorXd truths;
  double overall_truth = 0.0;
  std::vector<bool> heterogeneous;
  std::optional<std::size_t> null_subgroup;
  std::vector<EstimatorEval> estimators;
};

EvalReport evaluate(const std::vector<EstimatorRuns>& runs,
                    const Eigen::VectorXd& truths, double overall_truth,
                    std::optional<std::size_t> null_subgroup = std::nullopt);

}  // namespace subshrink
