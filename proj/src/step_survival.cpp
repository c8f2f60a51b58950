#include "subshrink/step_survival.hpp"

#include "subshrink/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace subshrink {

StepSurvival::StepSurvival(std::vector<double> jump_times,
                           std::vector<double> values)
    : jump_times_(std::move(jump_times)), values_(std::move(values)) {
  if (jump_times_.size() != values_.size())
    throw std::invalid_argument("StepSurvival: size mismatch");
  double prev_t = -INFINITY;
  double prev_v = 1.0;
  for (std::size_t s = 0; s < values_.size(); ++s) {
    if (!(jump_times_[s] > prev_t))
      throw std::invalid_argument("StepSurvival: jump times not increasing");
    // Tolerate rounding from averaging many curves.
    if (values_[s] > prev_v + 1e-12 || values_[s] < -1e-12)
      throw std::invalid_argument("StepSurvival: values must be non-increasing in [0,1]");
    values_[s] = std::clamp(std::min(values_[s], prev_v), 0.0, 1.0);
    prev_t = jump_times_[s];
    prev_v = values_[s];
  }
}

double StepSurvival::operator()(double t) const {
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepSurvival::left_limit(double t) const {
  auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

std::vector<double> StepSurvival::evaluate_sorted(
    std::span<const double> times) const {
  std::vector<double> out(times.size());
  std::size_t s = 0;
  double current = 1.0;
  for (std::size_t g = 0; g < times.size(); ++g) {
    while (s < jump_times_.size() && jump_times_[s] <= times[g]) {
      current = values_[s];
      ++s;
    }
    out[g] = current;
  }
  return out;
}

StepSurvival kaplan_meier(std::span<const double> times,
                          std::span<const int> events) {
  if (times.empty()) throw DataError("kaplan_meier: empty input");
  if (times.size() != events.size())
    throw std::invalid_argument("kaplan_meier: size mismatch");
  const auto n = times.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> jumps, values;
  double surv = 1.0;
  std::size_t at_risk = n;
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    std::size_t deaths = 0, leaving = 0;
    while (i < n && times[order[i]] == t) {
      deaths += static_cast<std::size_t>(events[order[i]] != 0);
      ++leaving;
      ++i;
    }
    // Censorings tied with events stay in the risk set for those events.
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      jumps.push_back(t);
      values.push_back(surv);
    }
    at_risk -= leaving;
  }
  return StepSurvival(std::move(jumps), std::move(values));
}

double step_integral(const StepSurvival& integrand,
                     const StepSurvival& integrator, double limit) {
  if (!(limit > 0.0))
    throw std::invalid_argument("step_integral: limit must be positive");
  const auto& t = integrator.jump_times();
  const auto& v = integrator.values();
  const auto& ti = integrand.jump_times();
  const auto& vi = integrand.values();
  double sum = 0.0;
  double prev = 1.0;
  double current_integrand = 1.0;
  std::size_t r = 0;
  for (std::size_t s = 0; s < t.size() && t[s] <= limit; ++s) {
    while (r < ti.size() && ti[r] <= t[s]) current_integrand = vi[r++];
    sum += current_integrand * (v[s] - prev);
    prev = v[s];
  }
  return sum;
}

std::vector<double> union_jump_times(std::span<const StepSurvival> curves) {
  std::vector<double> all;
  for (const auto& c : curves)
    all.insert(all.end(), c.jump_times().begin(), c.jump_times().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace subshrink
