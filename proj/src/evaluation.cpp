#include "subshrink/evaluation.hpp"

#include "subshrink/error.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace subshrink {

RmseResult rmse_overall(const Eigen::MatrixXd& estimates,
                        const Eigen::VectorXd& truths) {
  if (estimates.cols() != truths.size())
    throw std::invalid_argument("rmse_overall: dimension mismatch");
  RmseResult r;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < estimates.rows(); ++i)
    for (Eigen::Index k = 0; k < estimates.cols(); ++k) {
      const double e = estimates(i, k);
      if (std::isnan(e)) {
        ++r.missing;
        continue;
      }
      const double d = e - truths(k);
      sum += d * d;
      ++r.used;
    }
  if (r.used == 0) throw DataError("rmse_overall: every entry is missing");
  r.rmse = std::sqrt(sum / static_cast<double>(r.used));
  return r;
}

std::vector<SubgroupMetric> subgroup_metrics(const Eigen::MatrixXd& estimates,
                                             const Eigen::VectorXd& truths,
                                             const Eigen::MatrixXd& lower,
                                             const Eigen::MatrixXd& upper) {
  if (estimates.cols() != truths.size())
    throw std::invalid_argument("subgroup_metrics: dimension mismatch");
  const bool intervals = lower.size() > 0;
  if (intervals && (lower.rows() != estimates.rows() ||
                    lower.cols() != estimates.cols() ||
                    upper.rows() != estimates.rows() ||
                    upper.cols() != estimates.cols()))
    throw std::invalid_argument("subgroup_metrics: interval shape mismatch");
  std::vector<SubgroupMetric> out(static_cast<std::size_t>(truths.size()));
  for (Eigen::Index k = 0; k < estimates.cols(); ++k) {
    auto& m = out[static_cast<std::size_t>(k)];
    double sum = 0.0, sq = 0.0;
    std::size_t covered = 0, with_interval = 0;
    for (Eigen::Index i = 0; i < estimates.rows(); ++i) {
      const double e = estimates(i, k);
      if (std::isnan(e)) {
        ++m.missing;
        continue;
      }
      ++m.used;
      sum += e;
      sq += (e - truths(k)) * (e - truths(k));
      if (intervals && !std::isnan(lower(i, k)) && !std::isnan(upper(i, k))) {
        ++with_interval;
        if (lower(i, k) <= truths(k) && truths(k) <= upper(i, k)) ++covered;
      }
    }
    if (m.used == 0) {
      m.rmse = m.bias = m.variance = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double n = static_cast<double>(m.used);
    const double mean = sum / n;
    m.bias = mean - truths(k);
    m.rmse = std::sqrt(sq / n);
    double var = 0.0;
    for (Eigen::Index i = 0; i < estimates.rows(); ++i)
      if (!std::isnan(estimates(i, k)))
        var += (estimates(i, k) - mean) * (estimates(i, k) - mean);
    m.variance = var / n;
    if (with_interval > 0)
      m.coverage = static_cast<double>(covered) / static_cast<double>(with_interval);
  }
  return out;
}

std::vector<bool> classify_heterogeneous(const Eigen::VectorXd& truths,
                                         double overall_truth) {
  std::vector<bool> flags(static_cast<std::size_t>(truths.size()));
  const double bound = std::log(1.1);
  for (Eigen::Index k = 0; k < truths.size(); ++k)
    flags[static_cast<std::size_t>(k)] =
        std::abs(truths(k) - overall_truth) > bound;
  return flags;
}

double identification_probability(const Eigen::MatrixXd& estimates,
                                  std::size_t null_subgroup, bool use_maximum) {
  if (estimates.rows() == 0) throw DataError("identification: no runs");
  const auto target = static_cast<Eigen::Index>(null_subgroup);
  if (target >= estimates.cols())
    throw std::invalid_argument("identification: subgroup out of range");
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < estimates.rows(); ++i) {
    const double v = estimates(i, target);
    if (std::isnan(v)) continue;
    bool wins = true;
    for (Eigen::Index k = 0; k < estimates.cols() && wins; ++k) {
      if (k == target || std::isnan(estimates(i, k))) continue;
      const double o = estimates(i, k);
      wins = use_maximum ? v > o : v < o;
    }
    if (wins) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(estimates.rows());
}

EstimatorRuns collect_runs(EstimatorTag tag,
                           const std::vector<EstimatorResult>& runs,
                           std::size_t num_subgroups) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<Eigen::Index>(runs.size());
  const auto K = static_cast<Eigen::Index>(num_subgroups);
  EstimatorRuns r;
  r.tag = tag;
  r.log_effect = Eigen::MatrixXd::Constant(n, K, nan);
  bool any_interval = false;
  for (const auto& run : runs)
    for (const auto& e : run.subgroups)
      if (e.interval) any_interval = true;
  if (any_interval) {
    r.lower = Eigen::MatrixXd::Constant(n, K, nan);
    r.upper = Eigen::MatrixXd::Constant(n, K, nan);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto& e : runs[static_cast<std::size_t>(i)].subgroups) {
      const auto k = static_cast<Eigen::Index>(e.subgroup);
      if (e.missing) continue;
      r.log_effect(i, k) = e.log_effect;
      if (any_interval && e.interval) {
        r.lower(i, k) = e.interval->first;
        r.upper(i, k) = e.interval->second;
      }
    }
  return r;
}

EvalReport evaluate(const std::vector<EstimatorRuns>& runs,
                    const Eigen::VectorXd& truths, double overall_truth,
                    std::optional<std::size_t> null_subgroup) {
  EvalReport report;
  report.truths = truths;
  report.overall_truth = overall_truth;
  report.heterogeneous = classify_heterogeneous(truths, overall_truth);
  report.null_subgroup = null_subgroup;
  for (const auto& r : runs) {
    report.n_sim = std::max<std::size_t>(report.n_sim,
                                         static_cast<std::size_t>(r.log_effect.rows()));
    EstimatorEval e;
    e.tag = r.tag;
    e.overall = rmse_overall(r.log_effect, truths);
    e.subgroups = subgroup_metrics(r.log_effect, truths, r.lower, r.upper);
    if (null_subgroup) {
      e.identification_max =
          identification_probability(r.log_effect, *null_subgroup, true);
      e.identification_min =
          identification_probability(r.log_effect, *null_subgroup, false);
    }
    report.estimators.push_back(std::move(e));
  }
  return report;
}

}  // namespace subshrink
