#pragma once

#include "subshrink/cox.hpp"
#include "subshrink/dataset.hpp"
#include "subshrink/hmc.hpp"
#include "subshrink/horseshoe.hpp"
#include "subshrink/marginal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace subshrink {

enum class EstimatorTag {
  naive,
  population,
  lasso,
  ridge,
  horseshoe,
  model_averaging
};

const char* to_string(EstimatorTag tag);
// Accepts the tags above and "avg" for model averaging.
EstimatorTag estimator_from_string(std::string_view name);
std::vector<EstimatorTag> parse_estimator_list(std::string_view comma_list);

enum class IntervalKind { none, wald, credible, mixture };
const char* to_string(IntervalKind kind);

struct SubgroupEstimate {
  std::size_t subgroup = 0;
  bool missing = false;
  std::string note;
  double log_effect = 0.0;
  // Log scale.
  std::optional<std::pair<double, double>> interval;
  IntervalKind interval_kind = IntervalKind::none;
};

struct McmcDiagnostics {
  double max_rhat_main = 0.0;  // beta0 and main effects
  double max_rhat = 0.0;       // every sampled coordinate
  int divergences = 0;
  double mean_accept = 0.0;
  std::vector<double> step_size;
  bool rhat_gate_passed = false;
  int ahr_draws = 0;
};

struct EstimatorResult {
  EstimatorTag tag = EstimatorTag::naive;
  std::vector<SubgroupEstimate> subgroups;
  double limit = 0.0;  // AHR integration limit, when used
  std::optional<CvResult> cv;
  std::optional<double> lambda;
  int iterations = 0;
  std::optional<McmcDiagnostics> mcmc;
  std::vector<double> model_weights;
  std::vector<std::string> warnings;

  std::size_t missing_count() const;
};

struct PenalizedConfig {
  CvConfig cv;
  // Skips cross-validation when set.
  std::optional<double> lambda;
  // AHR integration limit; largest uncensored event time when unset.
  std::optional<double> limit;
};

struct BayesConfig {
  HmcConfig hmc;
  HorseshoePrior prior;
  int spline_degree = 3;
  int grid_points = 1000;
  // Retained draws (evenly thinned) that are standardized into AHRs.
  int ahr_draws = 400;
  double rhat_gate = 1.05;
  std::optional<double> limit;
};

struct EstimatorConfig {
  PenalizedConfig penalized;
  BayesConfig bayes;
  std::uint64_t seed = 1;
  std::uint64_t run_index = 0;
};

// Indices of the subjects in each subgroup.
std::vector<std::vector<std::size_t>> subgroup_members(
    const TrialDataset& dataset, const SubgroupSchema& schema);

// Largest uncensored event time.
double default_limit(const TrialDataset& dataset);

EstimatorResult estimate_naive(const TrialDataset& dataset,
                               const SubgroupSchema& schema);
EstimatorResult estimate_population(const TrialDataset& dataset,
                                    const SubgroupSchema& schema);
EstimatorResult estimate_penalized(const TrialDataset& dataset,
                                   const SubgroupSchema& schema,
                                   PenaltyKind kind,
                                   const PenalizedConfig& config);

// Subgroup AHRs of a fitted global Cox model via standardization of the
// Breslow predictions.
std::vector<SubgroupEstimate> standardized_cox_effects(
    const CoxFit& fit, const DesignMatrix& design, const TrialDataset& dataset,
    const SubgroupSchema& schema, double limit);

struct HorseshoeFit {
  PosteriorDraws draws;  // unconstrained theta, not the sampler coordinates
  McmcDiagnostics diagnostics;
};

HorseshoeFit fit_horseshoe(const HorseshoeModel& model,
                           const BayesConfig& config);
// Per-draw subgroup AHRs on the uniform grid; rows are draws.
Eigen::MatrixXd horseshoe_ahr_draws(const HorseshoeModel& model,
                                    const TrialDataset& dataset,
                                    const SubgroupSchema& schema,
                                    const Eigen::MatrixXd& theta_draws,
                                    double limit, int grid_points);
EstimatorResult estimate_horseshoe(const TrialDataset& dataset,
                                   const SubgroupSchema& schema,
                                   const BayesConfig& config);

struct CandidateModel {
  bool converged = false;
  double beta0 = 0.0;
  double beta_p = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double bic = 0.0;
  double weight = 0.0;
};

struct ModelAveragingFit {
  std::vector<CandidateModel> models;
  Eigen::MatrixXd overlap;  // w_kp = |S_k n S_p| / |S_p|
};

ModelAveragingFit fit_model_averaging(const TrialDataset& dataset,
                                      const SubgroupSchema& schema);
// Quantile of the normal mixture  sum_p w_p N(mean_p, sd_p^2).
double mixture_quantile(std::span<const double> weights,
                        std::span<const double> means,
                        std::span<const double> sds, double prob);
EstimatorResult estimate_model_averaging(const TrialDataset& dataset,
                                         const SubgroupSchema& schema);

// Dispatch with sub-seeds derived from (seed, run_index, tag).
EstimatorResult run_estimator(EstimatorTag tag, const TrialDataset& dataset,
                              const SubgroupSchema& schema,
                              const EstimatorConfig& config);

}  // namespace subshrink
