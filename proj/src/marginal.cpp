#include "subshrink/marginal.hpp"

#include "subshrink/error.hpp"
#include "subshrink/mspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subshrink {

StepSurvival standardize_subgroup(std::span<const StepSurvival> curves,
                                  std::span<const std::size_t> members) {
  if (members.empty()) throw DataError("standardize: empty subgroup");
  std::vector<StepSurvival> chosen;
  chosen.reserve(members.size());
  for (auto i : members) chosen.push_back(curves[i]);
  const auto times = union_jump_times(chosen);
  std::vector<double> mean(times.size(), 0.0);
  for (const auto& c : chosen) {
    const auto v = c.evaluate_sorted(times);
    for (std::size_t j = 0; j < times.size(); ++j) mean[j] += v[j];
  }
  for (auto& m : mean) m /= static_cast<double>(chosen.size());
  return StepSurvival(times, std::move(mean));
}

StepSurvival standardize_cox(const StepCumHazard& baseline,
                             std::span<const double> member_lp) {
  if (member_lp.empty()) throw DataError("standardize: empty subgroup");
  const auto cum = baseline.cumulative();
  std::vector<double> risk(member_lp.size());
  for (std::size_t i = 0; i < member_lp.size(); ++i)
    risk[i] = std::exp(member_lp[i]);
  std::vector<double> mean(cum.size(), 0.0);
  for (std::size_t j = 0; j < cum.size(); ++j) {
    double s = 0.0;
    for (double r : risk) s += std::exp(-cum[j] * r);
    mean[j] = s / static_cast<double>(risk.size());
  }
  return StepSurvival(baseline.jump_times, std::move(mean));
}

Eigen::VectorXd standardize_grid(const Eigen::MatrixXd& curves,
                                 std::span<const std::size_t> members) {
  if (members.empty()) throw DataError("standardize: empty subgroup");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(curves.cols());
  for (auto i : members) mean += curves.row(static_cast<Eigen::Index>(i)).transpose();
  return mean / static_cast<double>(members.size());
}

std::vector<double> uniform_grid(double limit, int cells) {
  if (cells < 1 || !(limit > 0.0))
    throw std::invalid_argument("uniform_grid: invalid arguments");
  std::vector<double> g(static_cast<std::size_t>(cells));
  const double h = limit / cells;
  for (int i = 0; i < cells; ++i) g[static_cast<std::size_t>(i)] = h * i;
  return g;
}

namespace {

StepSurvival powered(const StepSurvival& s, double gamma) {
  if (gamma == 1.0) return s;
  std::vector<double> v = s.values();
  for (auto& x : v) x = std::pow(x, gamma);
  return StepSurvival(s.jump_times(), std::move(v));
}

}  // namespace

std::optional<double> ahr_step(const StepSurvival& control,
                               const StepSurvival& intervention, double limit,
                               double gamma) {
  const auto c = powered(control, gamma);
  const auto i = powered(intervention, gamma);
  const double num = -step_integral(c, i, limit);
  const double den = -step_integral(i, c, limit);
  if (!(num > 0.0) || !(den > 0.0)) return std::nullopt;
  return num / den;
}

std::optional<double> ahr_grid(std::span<const double> surv_control,
                               std::span<const double> surv_intervention,
                               std::span<const double> hazard_control,
                               std::span<const double> hazard_intervention,
                               double limit, double gamma) {
  const std::size_t g = surv_control.size();
  if (g == 0 || surv_intervention.size() != g || hazard_control.size() != g ||
      hazard_intervention.size() != g)
    throw std::invalid_argument("ahr_grid: misaligned grids");
  if (!(limit > 0.0)) throw std::invalid_argument("ahr_grid: limit <= 0");
  const double h = limit / static_cast<double>(g);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < g; ++j) {
    const double both = std::pow(surv_control[j] * surv_intervention[j], gamma);
    num += both * hazard_intervention[j];
    den += both * hazard_control[j];
  }
  num *= gamma * h;
  den *= gamma * h;
  if (!(num > 0.0) || !(den > 0.0)) return std::nullopt;
  return num / den;
}

AhrEstimate summarize_ahr_draws(std::span<const double> draws) {
  if (draws.size() < 100)
    throw std::invalid_argument("summarize_ahr_draws: fewer than 100 draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  for (double d : sorted)
    if (!std::isfinite(d)) throw NumericalError("summarize_ahr_draws: non-finite draw");
  std::sort(sorted.begin(), sorted.end());
  AhrEstimate e;
  e.point = quantile_sorted(sorted, 0.5);
  e.log_point = std::log(e.point);
  e.interval = std::make_pair(quantile_sorted(sorted, 0.025),
                              quantile_sorted(sorted, 0.975));
  return e;
}

}  // namespace subshrink
