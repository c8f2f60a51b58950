#pragma once

#include "subshrink/dataset.hpp"

#include <span>
#include <utility>
#include <vector>

namespace subshrink {

// M-spline basis normalized so every element integrates to 1 over
// [low, high], together with the integrated (I-spline) basis. Both vanish
// below `low`; above `high` the M-splines are 0 and the I-splines are 1.
class MsplineBasis {
 public:
  MsplineBasis() = default;
  MsplineBasis(int degree, std::vector<double> interior_knots, double low,
               double high);

  int degree() const { return degree_; }
  std::size_t size() const { return size_; }
  const std::vector<double>& interior_knots() const { return interior_; }
  std::pair<double, double> boundary_knots() const { return {low_, high_}; }

  // Writes size() values each.
  void mspline(double t, std::span<double> out) const;
  void ispline(double t, std::span<double> out) const;

 private:
  // B-splines of `order` on knots_ padded to that order.
  void bspline(double t, int order, const std::vector<double>& knots,
               std::span<double> out) const;
  std::vector<double> padded_knots(int order) const;

  int degree_ = 3;
  std::vector<double> interior_;
  double low_ = 0.0;
  double high_ = 1.0;
  std::size_t size_ = 0;
  std::vector<double> knots_m_;  // order degree+1
  std::vector<double> knots_i_;  // order degree+2
};

// Type-7 sample quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double p);

// Cubic basis with interior knots at the quartiles of the uncensored event
// times and boundaries at the extreme event times widened by the smallest
// gap between distinct event times. The lower boundary is clipped at half
// the smallest event time. Coinciding interior knots are collapsed.
MsplineBasis build_mspline_basis(std::span<const double> time,
                                 std::span<const int> event, int degree = 3);
MsplineBasis build_mspline_basis(const TrialDataset& dataset, int degree = 3);

}  // namespace subshrink
