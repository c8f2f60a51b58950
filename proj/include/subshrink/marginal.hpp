#pragma once

#include "subshrink/cox.hpp"
#include "subshrink/step_survival.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace subshrink {

struct AhrEstimate {
  std::size_t subgroup = 0;
  double gamma = 1.0;
  double limit = 0.0;  // L
  bool missing = false;
  double point = 0.0;
  double log_point = 0.0;
  std::optional<std::pair<double, double>> interval;
};

// Pointwise mean of the member curves on the union of their jump times.
// Throws DataError for an empty subgroup.
StepSurvival standardize_subgroup(std::span<const StepSurvival> curves,
                                  std::span<const std::size_t> members);

// Same for Cox predictions sharing one Breslow baseline: the member curves
// are exp(-Lambda0(t) exp(lp_i)).
StepSurvival standardize_cox(const StepCumHazard& baseline,
                             std::span<const double> member_lp);

// Rows are subjects, columns grid points.
Eigen::VectorXd standardize_grid(const Eigen::MatrixXd& curves,
                                 std::span<const std::size_t> members);

// Left endpoints of `cells` uniform cells on [0, limit].
std::vector<double> uniform_grid(double limit, int cells);

// Ratio of the step sums  -int S_C^g dS_I^g  /  -int S_I^g dS_C^g  over
// (0, limit]. Empty when either sum vanishes.
std::optional<double> ahr_step(const StepSurvival& control,
                               const StepSurvival& intervention, double limit,
                               double gamma = 1.0);

// Left Riemann sums of S_C^g S_I^g h_I and S_I^g S_C^g h_C on a uniform grid
// of surv_control.size() cells over [0, limit]. Empty when either vanishes.
std::optional<double> ahr_grid(std::span<const double> surv_control,
                               std::span<const double> surv_intervention,
                               std::span<const double> hazard_control,
                               std::span<const double> hazard_intervention,
                               double limit, double gamma = 1.0);

// Median and 2.5% / 97.5% type-7 quantiles of at least 100 finite draws.
AhrEstimate summarize_ahr_draws(std::span<const double> draws);

}  // namespace subshrink
