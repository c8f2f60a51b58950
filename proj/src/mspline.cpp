#include "subshrink/mspline.hpp"

#include "subshrink/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subshrink {

MsplineBasis::MsplineBasis(int degree, std::vector<double> interior_knots,
                           double low, double high)
    : degree_(degree), interior_(std::move(interior_knots)), low_(low),
      high_(high) {
  if (degree < 0) throw std::invalid_argument("mspline: negative degree");
  if (!(low < high)) throw std::invalid_argument("mspline: low >= high");
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    if (!(interior_[i] > low_ && interior_[i] < high_))
      throw std::invalid_argument("mspline: interior knot outside boundary");
    if (i > 0 && !(interior_[i] > interior_[i - 1]))
      throw std::invalid_argument("mspline: interior knots not increasing");
  }
  size_ = interior_.size() + static_cast<std::size_t>(degree_) + 1;
  knots_m_ = padded_knots(degree_ + 1);
  knots_i_ = padded_knots(degree_ + 2);
}

std::vector<double> MsplineBasis::padded_knots(int order) const {
  std::vector<double> k(static_cast<std::size_t>(order), low_);
  k.insert(k.end(), interior_.begin(), interior_.end());
  k.insert(k.end(), static_cast<std::size_t>(order), high_);
  return k;
}

void MsplineBasis::bspline(double t, int order, const std::vector<double>& knots,
                           std::span<double> out) const {
  const std::size_t nk = knots.size();
  std::vector<double> b(nk - 1, 0.0);
  // Order-1 indicator of the half-open span containing t; t == high falls
  // into the last non-empty span so the basis is left-continuous there.
  for (std::size_t j = 0; j + 1 < nk; ++j) {
    if (knots[j] < knots[j + 1] &&
        ((t >= knots[j] && t < knots[j + 1]) ||
         (t == high_ && knots[j + 1] == high_))) {
      b[j] = 1.0;
      break;
    }
  }
  for (int k = 2; k <= order; ++k) {
    for (std::size_t j = 0; j + static_cast<std::size_t>(k) < nk; ++j) {
      double v = 0.0;
      const double d1 = knots[j + k - 1] - knots[j];
      const double d2 = knots[j + k] - knots[j + 1];
      if (d1 > 0.0) v += (t - knots[j]) / d1 * b[j];
      if (d2 > 0.0) v += (knots[j + k] - t) / d2 * b[j + 1];
      b[j] = v;
    }
  }
  const std::size_t count = nk - static_cast<std::size_t>(order);
  for (std::size_t j = 0; j < count; ++j) out[j] = b[j];
}

void MsplineBasis::mspline(double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (t < low_ || t > high_) return;
  const int order = degree_ + 1;
  const auto& knots = knots_m_;
  bspline(t, order, knots, out);
  for (std::size_t i = 0; i < size_; ++i)
    out[i] *= order / (knots[i + order] - knots[i]);
}

void MsplineBasis::ispline(double t, std::span<double> out) const {
  if (t <= low_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (t >= high_) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  // I_i = sum_{j > i} B_{j, order+1} on the knot vector padded once more.
  const auto& knots = knots_i_;
  std::vector<double> b(size_ + 1);
  bspline(t, degree_ + 2, knots, b);
  double tail = 0.0;
  for (std::size_t i = size_; i-- > 0;) {
    tail += b[i + 1];
    out[i] = tail;
  }
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MsplineBasis build_mspline_basis(std::span<const double> time,
                                 std::span<const int> event, int degree) {
  std::vector<double> ev;
  for (std::size_t i = 0; i < time.size(); ++i)
    if (event[i]) ev.push_back(time[i]);
  std::sort(ev.begin(), ev.end());
  std::vector<double> distinct = ev;
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (distinct.size() < 5)
    throw DataError("mspline: fewer than 5 distinct event times");
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < distinct.size(); ++i)
    gap = std::min(gap, distinct[i] - distinct[i - 1]);
  const double low = std::max(distinct.front() - gap, 0.5 * distinct.front());
  const double high = distinct.back() + gap;
  std::vector<double> interior;
  for (double p : {0.25, 0.5, 0.75}) {
    const double q = quantile_sorted(ev, p);
    if (interior.empty() || q > interior.back()) interior.push_back(q);
  }
  return MsplineBasis(degree, std::move(interior), low, high);
}

MsplineBasis build_mspline_basis(const TrialDataset& dataset, int degree) {
  return build_mspline_basis(dataset.time(), dataset.event(), degree);
}

}  // namespace subshrink
