#pragma once

#include "subshrink/cox.hpp"
#include "subshrink/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace subshrink {

struct LogisticOptions {
  double gradient_tolerance = 1e-10;
  double tolerance = 1e-10;  // max coefficient change per outer iteration
  int max_iterations = 200;
  double divergence_bound = 30.0;
  double epsilon_ridge = 1e-8;
};

struct LogisticFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // design layout
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

// Negative log-likelihood of a logistic model and its gradient with respect
// to (intercept, coefficients).
double logistic_negloglik(const Eigen::MatrixXd& x, std::span<const int> y,
                          double intercept, const Eigen::VectorXd& beta,
                          Eigen::VectorXd* gradient = nullptr);

// Unpenalized fits use Newton-Raphson on the full-rank reduced design and
// map back to the design layout; penalized fits run proximal Newton with
// coordinate descent on the overparameterized design, penalizing the
// interaction block only (epsilon ridge elsewhere, intercept free).
// Throws MonotoneLikelihoodError on separation.
LogisticFit fit_global_logistic(const DesignMatrix& design,
                                const SubgroupSchema& schema,
                                const BinaryDataset& dataset, PenaltyKind kind,
                                double lambda,
                                const LogisticOptions& options = {});

struct BinaryEffect {
  std::size_t subgroup = 0;
  double p_control = 0.0;
  double p_intervention = 0.0;
  double risk_difference = 0.0;
  std::optional<double> odds_ratio;
  std::optional<double> risk_ratio;
};

std::vector<BinaryEffect> standardize_binary(const LogisticFit& fit,
                                             const DesignMatrix& design,
                                             const BinaryDataset& dataset,
                                             const SubgroupSchema& schema);

// Max over (subgroup, arm) cells of |mean fitted probability - observed
// proportion| using the subjects actually in the cell.
double check_equivalence(const LogisticFit& fit, const DesignMatrix& design,
                         const BinaryDataset& dataset,
                         const SubgroupSchema& schema);

}  // namespace subshrink
