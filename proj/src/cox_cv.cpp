#include "subshrink/cox.hpp"

#include "subshrink/error.hpp"
#include "subshrink/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace subshrink {

double lambda_max(const Eigen::MatrixXd& x, std::span<const double> time,
                  std::span<const int> event,
                  const std::vector<bool>& penalized_mask, PenaltyKind kind,
                  const CdOptions& options) {
  if (kind == PenaltyKind::none)
    throw std::invalid_argument("lambda_max: penalty kind is none");
  CdOptions tight = options;
  tight.tolerance = std::min(options.tolerance, 1e-10);
  tight.record_objective = false;
  CoxCoordinateDescent solver(x, time, event, penalized_mask, tight);
  // An infinite lasso weight keeps every penalized coordinate at 0 while the
  // rest are profiled out.
  const auto null_fit = solver.fit(PenaltyKind::lasso,
                                   std::numeric_limits<double>::infinity());
  const Eigen::VectorXd g = solver.score(null_fit.coefficients);
  double top = 0.0;
  for (std::size_t j = 0; j < penalized_mask.size(); ++j)
    if (penalized_mask[j])
      top = std::max(top, std::abs(g(static_cast<Eigen::Index>(j))));
  if (kind == PenaltyKind::ridge) return top / (2.0 * 1e-3);
  // Relative slack so that a fit at exactly lambda_max lands on the zero side
  // of every kink despite rounding in the profiled score.
  return top * (1.0 + 1e-6);
}

std::vector<double> lambda_grid(double lambda_max, int n_lambda,
                                double min_ratio) {
  if (n_lambda < 1 || !(min_ratio > 0.0) || !(lambda_max > 0.0))
    throw std::invalid_argument("lambda_grid: invalid arguments");
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  if (n_lambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double step = std::log(min_ratio) / (n_lambda - 1);
  for (int i = 0; i < n_lambda; ++i)
    grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * i);
  return grid;
}

std::vector<int> cv_folds(std::span<const int> event, int n_folds,
                          std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("cv: n_folds must be at least 2");
  const std::size_t n = event.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<int> fold(n, 0);
  std::size_t slot = 0;
  for (int pass = 1; pass >= 0; --pass)
    for (auto i : perm)
      if ((event[i] != 0) == (pass == 1))
        fold[i] = static_cast<int>(slot++ % static_cast<std::size_t>(n_folds));
  return fold;
}

CvResult cv_lambda(const Eigen::MatrixXd& x, std::span<const double> time,
                   std::span<const int> event,
                   const std::vector<bool>& penalized_mask, PenaltyKind kind,
                   const CvConfig& config) {
  if (kind == PenaltyKind::none)
    throw ConfigError("cv: penalty kind is none");
  const std::size_t n = time.size();
  if (config.n_folds < 2 || static_cast<std::size_t>(config.n_folds) > n)
    throw ConfigError("cv: n_folds must be in [2, N]");
  const auto fold = cv_folds(event, config.n_folds, config.seed);
  for (int f = 0; f < config.n_folds; ++f) {
    bool has_event = false;
    for (std::size_t i = 0; i < n; ++i)
      if (fold[i] == f && event[i]) has_event = true;
    if (!has_event)
      throw DataError("cv: fold " + std::to_string(f) + " has no events");
  }

  CvResult result;
  result.lambda_max =
      lambda_max(x, time, event, penalized_mask, kind, config.cd);
  const auto grid =
      lambda_grid(result.lambda_max, config.n_lambda, config.min_ratio);
  std::vector<double> deviance(grid.size(), 0.0);

  const RiskSetIndex full_index(time, event);
  for (int f = 0; f < config.n_folds; ++f) {
    std::vector<Eigen::Index> train;
    for (std::size_t i = 0; i < n; ++i)
      if (fold[i] != f) train.push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd x_train = x(train, Eigen::all);
    std::vector<double> t_train(train.size());
    std::vector<int> e_train(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      t_train[r] = time[static_cast<std::size_t>(train[r])];
      e_train[r] = event[static_cast<std::size_t>(train[r])];
    }
    const RiskSetIndex train_index(t_train, e_train);
    CoxCoordinateDescent solver(x_train, t_train, e_train, penalized_mask,
                                config.cd);
    Eigen::VectorXd start;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto fit = solver.fit(kind, grid[g], start);
      start = fit.coefficients;
      const Eigen::VectorXd lp_full = x * fit.coefficients;
      const Eigen::VectorXd lp_train = x_train * fit.coefficients;
      const double full = cox_loglik_value(
          full_index, event,
          std::span<const double>(lp_full.data(), lp_full.size()));
      const double part = cox_loglik_value(
          train_index, e_train,
          std::span<const double>(lp_train.data(), lp_train.size()));
      deviance[g] += -2.0 * (full - part);
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.path.push_back({grid[g], deviance[g]});
    if (deviance[g] < deviance[best]) best = g;
  }
  result.lambda_star = grid[best];
  return result;
}

CvResult cv_lambda(const DesignMatrix& design, const TrialDataset& dataset,
                   PenaltyKind kind, const CvConfig& config) {
  return cv_lambda(design.x, dataset.time(), dataset.event(),
                   interaction_mask(design), kind, config);
}

}  // namespace subshrink
