#pragma once

#include <span>
#include <vector>

namespace subshrink {

// Right-continuous, non-increasing survival step function. Equals 1 before
// the first jump and keeps its last value after the final jump.
class StepSurvival {
 public:
  StepSurvival() = default;
  StepSurvival(std::vector<double> jump_times, std::vector<double> values);

  double operator()(double t) const;
  // Value just before t.
  double left_limit(double t) const;
  // Evaluates at ascending times with a single forward pass.
  std::vector<double> evaluate_sorted(std::span<const double> times) const;

  const std::vector<double>& jump_times() const { return jump_times_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return jump_times_.size(); }

 private:
  std::vector<double> jump_times_;
  std::vector<double> values_;
};

StepSurvival kaplan_meier(std::span<const double> times,
                          std::span<const int> events);

// Sum over the integrator's jumps t_s <= limit of
//   integrand(t_s) * (integrator(t_s) - integrator(t_s-)).
// Non-positive for a survival integrator.
double step_integral(const StepSurvival& integrand,
                     const StepSurvival& integrator, double limit);

// Sorted union of the jump times of all curves.
std::vector<double> union_jump_times(std::span<const StepSurvival> curves);

}  // namespace subshrink
