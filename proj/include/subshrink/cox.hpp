#pragma once

#include "subshrink/dataset.hpp"
#include "subshrink/step_survival.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string_view>
#include <optional>
#include <span>
#include <vector>

namespace subshrink {

enum class PenaltyKind { none, lasso, ridge };

const char* to_string(PenaltyKind kind);
PenaltyKind penalty_from_string(std::string_view name);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;
  std::vector<bool> penalized_mask;
};

struct CoxFit {
  Eigen::VectorXd coefficients;
  PenaltySpec penalty;
  struct Convergence {
    int iterations = 0;
    double final_gradient_norm = 0.0;
  } convergence;
  double loglik = 0.0;
  // Inverse observed information; Newton-Raphson fits only.
  std::optional<Eigen::MatrixXd> covariance;

  double standard_error(Eigen::Index j) const {
    return std::sqrt((*covariance)(j, j));
  }
};

// Breslow cumulative baseline hazard. Jumps only at uncensored event times.
struct StepCumHazard {
  std::vector<double> jump_times;
  std::vector<double> increments;

  std::vector<double> cumulative() const;
  double operator()(double t) const;
};

// Survival response ordered for risk-set accumulation (descending time).
// Ties use the Breslow convention: every subject with time >= t is at risk.
class RiskSetIndex {
 public:
  RiskSetIndex(std::span<const double> time, std::span<const int> event);

  std::size_t size() const { return order_.size(); }
  // Subject at sorted position pos.
  std::size_t subject(std::size_t pos) const { return order_[pos]; }
  const std::vector<std::size_t>& order() const { return order_; }
  // For each distinct event time (descending): risk set = positions [0, end).
  const std::vector<std::size_t>& event_end() const { return event_end_; }
  const std::vector<double>& event_count() const { return event_count_; }
  const std::vector<double>& event_time() const { return event_time_; }
  std::size_t num_events() const { return num_events_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> event_end_;
  std::vector<double> event_count_;
  std::vector<double> event_time_;
  std::size_t num_events_ = 0;
};

struct LoglikResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd diagonal_hessian;
};

// Breslow partial log-likelihood with gradient and Hessian diagonal.
LoglikResult cox_partial_loglik(const Eigen::MatrixXd& x,
                                std::span<const double> time,
                                std::span<const int> event,
                                const Eigen::VectorXd& coefficients);
LoglikResult cox_partial_loglik(const DesignMatrix& design,
                                const TrialDataset& dataset,
                                const Eigen::VectorXd& coefficients);
// Value only; cheaper.
double cox_loglik_value(const RiskSetIndex& index, std::span<const int> event,
                        std::span<const double> linear_predictor);

struct NrOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-9;
  double divergence_bound = 20.0;
};

// Unpenalized Newton-Raphson fit for a full-rank design. Throws
// MonotoneLikelihoodError when a coefficient exceeds the divergence bound and
// NumericalError on non-convergence.
CoxFit cox_nr_fit(const Eigen::MatrixXd& x, std::span<const double> time,
                  std::span<const int> event, const NrOptions& options = {});
CoxFit cox_nr_fit(const Eigen::MatrixXd& x, const TrialDataset& dataset,
                  const NrOptions& options = {});

struct CdOptions {
  double tolerance = 1e-7;  // max absolute coordinate change per sweep
  int max_sweeps = 100000;
  double inner_tolerance = 1e-9;
  double epsilon_ridge = 1e-8;
  bool record_objective = false;
};

struct CdTrace {
  std::vector<double> objective;  // penalized objective after each sweep
};

// Penalty mask used for the global model: interactions only.
std::vector<bool> interaction_mask(const DesignMatrix& design);

// Coordinate descent on  -loglik + penalty  where the penalty is
// lambda*sum|b| (lasso) or lambda*sum b^2 (ridge) over masked columns, and
// epsilon*b^2 on every other column. Each outer iteration forms the
// quadratic model of -loglik at the current point, runs cyclic coordinate
// descent on model + penalty (soft-threshold updates for lasso columns,
// shrunken Newton updates otherwise) and backtracks along the result until
// the penalized objective does not increase.
class CoxCoordinateDescent {
 public:
  CoxCoordinateDescent(const Eigen::MatrixXd& x, std::span<const double> time,
                       std::span<const int> event,
                       std::vector<bool> penalized_mask,
                       CdOptions options = {});

  // Runs to convergence from `start` (zeros if empty).
  CoxFit fit(PenaltyKind kind, double lambda,
             const Eigen::VectorXd& start = {}, CdTrace* trace = nullptr);

  // Warm-started path over a decreasing lambda sequence.
  std::vector<CoxFit> path(PenaltyKind kind, std::span<const double> lambdas);

  double penalized_objective(PenaltyKind kind, double lambda,
                             const Eigen::VectorXd& beta) const;
  // Score (d loglik / d beta) at beta.
  Eigen::VectorXd score(const Eigen::VectorXd& beta) const;
  // Score and observed information (-Hessian of loglik) at beta.
  void derivatives(const Eigen::VectorXd& beta, Eigen::VectorXd& score,
                   Eigen::MatrixXd& information) const;

  std::size_t num_columns() const { return p_; }

 private:
  struct Entry {
    std::uint32_t column;
    double value;
  };

  void penalty_weights(PenaltyKind kind, double lambda, Eigen::VectorXd& l1,
                       Eigen::VectorXd& l2) const;
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta) const;
  double loglik(const Eigen::VectorXd& beta) const;
  void compute(const Eigen::VectorXd& beta, Eigen::VectorXd& score,
               Eigen::MatrixXd* information) const;

  RiskSetIndex index_;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::span<const Entry> row(std::size_t pos) const {
    return {entries_.data() + row_start_[pos],
            row_start_[pos + 1] - row_start_[pos]};
  }

  // Nonzero entries of x by row, rows in risk-set order.
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_start_;
  std::vector<int> event_sorted_;
  Eigen::VectorXd event_x_sum_;             // sum of x over events
  std::vector<bool> mask_;
  CdOptions options_;
  // Information from the latest evaluation; reused while Newton steps keep
  // contracting, which is the common case along a warm-started path.
  Eigen::MatrixXd cached_information_;
};

// Minimizer over b of  h/2 (b - b0)^2 + u (b - b0) + l2 b^2 + l1 |b|.
double coordinate_update(double h, double b0, double u, double l1, double l2);

CoxFit cox_cd_fit(const DesignMatrix& design, const TrialDataset& dataset,
                  PenaltyKind kind, double lambda,
                  const CdOptions& options = {});

// Smallest lambda at which every penalized coefficient is zero (lasso), or
// the conventional ridge start max|score| / (2 * 1e-3). Unpenalized columns
// are profiled out first.
double lambda_max(const Eigen::MatrixXd& x, std::span<const double> time,
                  std::span<const int> event,
                  const std::vector<bool>& penalized_mask, PenaltyKind kind,
                  const CdOptions& options = {});

std::vector<double> lambda_grid(double lambda_max, int n_lambda,
                                double min_ratio);

struct CvConfig {
  int n_folds = 10;
  std::uint64_t seed = 1;
  int n_lambda = 100;
  double min_ratio = 1e-3;
  CdOptions cd;
};

struct CvPoint {
  double lambda = 0.0;
  double cv_deviance = 0.0;
};

struct CvResult {
  double lambda_star = 0.0;
  double lambda_max = 0.0;
  std::vector<CvPoint> path;
  const char* selection_rule = "min_deviance";
};

// Fold labels in [0, n_folds), stratified by the event indicator.
std::vector<int> cv_folds(std::span<const int> event, int n_folds,
                          std::uint64_t seed);

// Verweij-van Houwelingen cross-validated partial-likelihood deviance.
CvResult cv_lambda(const Eigen::MatrixXd& x, std::span<const double> time,
                   std::span<const int> event,
                   const std::vector<bool>& penalized_mask, PenaltyKind kind,
                   const CvConfig& config);
CvResult cv_lambda(const DesignMatrix& design, const TrialDataset& dataset,
                   PenaltyKind kind, const CvConfig& config);

StepCumHazard breslow_baseline(std::span<const double> linear_predictor,
                               std::span<const double> time,
                               std::span<const int> event);
StepCumHazard breslow_baseline(const CoxFit& fit, const DesignMatrix& design,
                               const TrialDataset& dataset);

// Linear predictor of a design row with the treatment column and the
// interaction block overwritten as if the subject had received
// `forced_treatment`.
double forced_linear_predictor(const CoxFit& fit, const DesignMatrix& design,
                               Eigen::Index row, int forced_treatment);

StepSurvival predict_survival(const CoxFit& fit, const StepCumHazard& baseline,
                              const DesignMatrix& design, Eigen::Index row,
                              int forced_treatment);

}  // namespace subshrink
