#include "subshrink/cox.hpp"

#include "subshrink/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace subshrink {

const char* to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::lasso: return "lasso";
    case PenaltyKind::ridge: return "ridge";
  }
  return "none";
}

PenaltyKind penalty_from_string(std::string_view name) {
  if (name == "none") return PenaltyKind::none;
  if (name == "lasso") return PenaltyKind::lasso;
  if (name == "ridge") return PenaltyKind::ridge;
  throw ConfigError("unknown penalty '" + std::string(name) + "'");
}

std::vector<double> StepCumHazard::cumulative() const {
  std::vector<double> out(increments.size());
  std::partial_sum(increments.begin(), increments.end(), out.begin());
  return out;
}

double StepCumHazard::operator()(double t) const {
  double sum = 0.0;
  for (std::size_t s = 0; s < jump_times.size() && jump_times[s] <= t; ++s)
    sum += increments[s];
  return sum;
}

RiskSetIndex::RiskSetIndex(std::span<const double> time,
                           std::span<const int> event) {
  if (time.size() != event.size())
    throw std::invalid_argument("RiskSetIndex: size mismatch");
  const auto n = time.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
  std::size_t pos = 0;
  while (pos < n) {
    const double t = time[order_[pos]];
    std::size_t end = pos;
    double deaths = 0.0;
    while (end < n && time[order_[end]] == t) {
      deaths += event[order_[end]] != 0 ? 1.0 : 0.0;
      ++end;
    }
    if (deaths > 0.0) {
      event_end_.push_back(end);
      event_count_.push_back(deaths);
      event_time_.push_back(t);
      num_events_ += static_cast<std::size_t>(deaths);
    }
    pos = end;
  }
}

namespace {

void check_finite(const Eigen::VectorXd& eta) {
  if (!eta.allFinite())
    throw NumericalError("cox: non-finite linear predictor");
}

struct FullDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;  // -Hessian
};

// One descending pass accumulating S0, S1 and (optionally) S2.
FullDerivatives cox_derivatives(const Eigen::MatrixXd& x,
                                const RiskSetIndex& index,
                                std::span<const int> event,
                                const Eigen::VectorXd& beta, bool full_hessian,
                                Eigen::VectorXd* diagonal) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd eta = x * beta;
  check_finite(eta);
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;

  FullDerivatives out;
  out.gradient = Eigen::VectorXd::Zero(p);
  if (full_hessian) out.information = Eigen::MatrixXd::Zero(p, p);
  if (diagonal) *diagonal = Eigen::VectorXd::Zero(p);

  for (std::size_t i = 0; i < event.size(); ++i) {
    if (event[i]) {
      out.value += eta(static_cast<Eigen::Index>(i));
      out.gradient += x.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s2d = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2;
  if (full_hessian) s2 = Eigen::MatrixXd::Zero(p, p);
  std::size_t pos = 0;
  const auto& ends = index.event_end();
  for (std::size_t e = 0; e < ends.size(); ++e) {
    for (; pos < ends[e]; ++pos) {
      const auto i = static_cast<Eigen::Index>(index.subject(pos));
      const double w = std::exp(eta(i) - shift);
      s0 += w;
      s1.noalias() += w * x.row(i).transpose();
      s2d.array() += w * x.row(i).transpose().array().square();
      if (full_hessian)
        s2.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(), w);
    }
    const double d = index.event_count()[e];
    out.value -= d * (std::log(s0) + shift);
    const Eigen::VectorXd mean = s1 / s0;
    out.gradient -= d * mean;
    if (diagonal)
      diagonal->array() -= d * (s2d.array() / s0 - mean.array().square());
    if (full_hessian) {
      Eigen::MatrixXd cov = s2.selfadjointView<Eigen::Lower>();
      cov /= s0;
      cov.noalias() -= mean * mean.transpose();
      out.information += d * cov;
    }
  }
  return out;
}

}  // namespace

LoglikResult cox_partial_loglik(const Eigen::MatrixXd& x,
                                std::span<const double> time,
                                std::span<const int> event,
                                const Eigen::VectorXd& coefficients) {
  if (x.cols() != coefficients.size() ||
      static_cast<std::size_t>(x.rows()) != time.size())
    throw std::invalid_argument("cox_partial_loglik: dimension mismatch");
  RiskSetIndex index(time, event);
  LoglikResult r;
  auto d = cox_derivatives(x, index, event, coefficients, false,
                           &r.diagonal_hessian);
  r.value = d.value;
  r.gradient = std::move(d.gradient);
  return r;
}

LoglikResult cox_partial_loglik(const DesignMatrix& design,
                                const TrialDataset& dataset,
                                const Eigen::VectorXd& coefficients) {
  return cox_partial_loglik(design.x, dataset.time(), dataset.event(),
                            coefficients);
}

double cox_loglik_value(const RiskSetIndex& index, std::span<const int> event,
                        std::span<const double> linear_predictor) {
  double shift = -std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (std::size_t i = 0; i < linear_predictor.size(); ++i) {
    if (!std::isfinite(linear_predictor[i]))
      throw NumericalError("cox: non-finite linear predictor");
    shift = std::max(shift, linear_predictor[i]);
    if (event[i]) value += linear_predictor[i];
  }
  double s0 = 0.0;
  std::size_t pos = 0;
  const auto& ends = index.event_end();
  for (std::size_t e = 0; e < ends.size(); ++e) {
    for (; pos < ends[e]; ++pos)
      s0 += std::exp(linear_predictor[index.subject(pos)] - shift);
    value -= index.event_count()[e] * (std::log(s0) + shift);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Newton-Raphson

CoxFit cox_nr_fit(const Eigen::MatrixXd& x, std::span<const double> time,
                  std::span<const int> event, const NrOptions& options) {
  RiskSetIndex index(time, event);
  if (index.num_events() == 0)
    throw MonotoneLikelihoodError("cox_nr_fit: no events");
  const Eigen::Index p = x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto d = cox_derivatives(x, index, event, beta, true, nullptr);
  CoxFit fit;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (d.gradient.norm() < options.gradient_tolerance) break;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(d.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0)
      throw NumericalError("cox_nr_fit: information matrix is singular");
    Eigen::VectorXd step = ldlt.solve(d.gradient);
    FullDerivatives next;
    for (int halving = 0;; ++halving) {
      Eigen::VectorXd candidate = beta + step;
      if (candidate.cwiseAbs().maxCoeff() > options.divergence_bound)
        throw MonotoneLikelihoodError(
            "cox_nr_fit: coefficient diverges (monotone likelihood)");
      next = cox_derivatives(x, index, event, candidate, true, nullptr);
      if (next.value >= d.value - 1e-10 * (1.0 + std::abs(d.value)) ||
          halving >= 30) {
        beta = candidate;
        break;
      }
      step *= 0.5;
    }
    d = std::move(next);
  }
  if (d.gradient.norm() >= options.gradient_tolerance)
    throw NumericalError("cox_nr_fit: no convergence after " +
                         std::to_string(options.max_iterations) +
                         " iterations");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(d.information);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    throw NumericalError("cox_nr_fit: information matrix is singular");
  fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.coefficients = beta;
  fit.loglik = d.value;
  fit.convergence.iterations = iter;
  fit.convergence.final_gradient_norm = d.gradient.norm();
  fit.penalty.penalized_mask.assign(static_cast<std::size_t>(p), false);
  return fit;
}

CoxFit cox_nr_fit(const Eigen::MatrixXd& x, const TrialDataset& dataset,
                  const NrOptions& options) {
  return cox_nr_fit(x, dataset.time(), dataset.event(), options);
}

// ---------------------------------------------------------------------------
// Coordinate descent

std::vector<bool> interaction_mask(const DesignMatrix& design) {
  std::vector<bool> mask(design.cols(), false);
  for (std::size_t j = 0; j < design.cols(); ++j)
    mask[j] = design.roles[j] == ColumnRole::interaction;
  return mask;
}

double coordinate_update(double h, double b0, double u, double l1, double l2) {
  const double denom = h + 2.0 * l2;
  if (!(denom > 0.0)) return 0.0;
  const double z = h * b0 - u;
  if (l1 > 0.0) {
    if (std::abs(z) <= l1) return 0.0;
    return (z > 0.0 ? z - l1 : z + l1) / denom;
  }
  return z / denom;
}

CoxCoordinateDescent::CoxCoordinateDescent(const Eigen::MatrixXd& x,
                                           std::span<const double> time,
                                           std::span<const int> event,
                                           std::vector<bool> penalized_mask,
                                           CdOptions options)
    : index_(time, event),
      n_(time.size()),
      p_(static_cast<std::size_t>(x.cols())),
      mask_(std::move(penalized_mask)),
      options_(options) {
  if (static_cast<std::size_t>(x.rows()) != n_ || mask_.size() != p_)
    throw std::invalid_argument("CoxCoordinateDescent: dimension mismatch");
  row_start_.assign(n_ + 1, 0);
  event_sorted_.resize(n_);
  event_x_sum_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_));
  for (std::size_t pos = 0; pos < n_; ++pos) {
    const auto i = static_cast<Eigen::Index>(index_.subject(pos));
    event_sorted_[pos] = event[index_.subject(pos)];
    if (event_sorted_[pos]) event_x_sum_ += x.row(i).transpose();
    for (std::size_t j = 0; j < p_; ++j) {
      const double v = x(i, static_cast<Eigen::Index>(j));
      if (v != 0.0) entries_.push_back({static_cast<std::uint32_t>(j), v});
    }
    row_start_[pos + 1] = entries_.size();
  }
}

void CoxCoordinateDescent::penalty_weights(PenaltyKind kind, double lambda,
                                           Eigen::VectorXd& l1,
                                           Eigen::VectorXd& l2) const {
  const auto p = static_cast<Eigen::Index>(p_);
  l1 = Eigen::VectorXd::Zero(p);
  l2 = Eigen::VectorXd::Constant(p, options_.epsilon_ridge);
  if (kind == PenaltyKind::none || lambda == 0.0) return;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!mask_[static_cast<std::size_t>(j)]) continue;
    if (kind == PenaltyKind::lasso) {
      l1(j) = lambda;
      l2(j) = 0.0;
    } else {
      l2(j) = lambda;
    }
  }
}

Eigen::VectorXd CoxCoordinateDescent::linear_predictor(
    const Eigen::VectorXd& beta) const {
  Eigen::VectorXd eta(static_cast<Eigen::Index>(n_));
  for (std::size_t pos = 0; pos < n_; ++pos) {
    double v = 0.0;
    for (const auto& nz : row(pos)) v += nz.value * beta(nz.column);
    eta(static_cast<Eigen::Index>(pos)) = v;
  }
  return eta;
}

double CoxCoordinateDescent::loglik(const Eigen::VectorXd& beta) const {
  const Eigen::VectorXd eta = linear_predictor(beta);
  if (!eta.allFinite()) return -std::numeric_limits<double>::infinity();
  const double shift = eta.maxCoeff();
  double value = event_x_sum_.dot(beta);
  const auto& ends = index_.event_end();
  double s0 = 0.0;
  std::size_t pos = 0;
  for (std::size_t e = 0; e < ends.size(); ++e) {
    for (; pos < ends[e]; ++pos)
      s0 += std::exp(eta(static_cast<Eigen::Index>(pos)) - shift);
    value -= index_.event_count()[e] * (std::log(s0) + shift);
  }
  return value;
}

double CoxCoordinateDescent::penalized_objective(
    PenaltyKind kind, double lambda, const Eigen::VectorXd& beta) const {
  Eigen::VectorXd l1, l2;
  penalty_weights(kind, lambda, l1, l2);
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (l1(j) > 0.0 && beta(j) != 0.0) penalty += l1(j) * std::abs(beta(j));
    if (l2(j) > 0.0) penalty += l2(j) * beta(j) * beta(j);
  }
  return -loglik(beta) + penalty;
}

void CoxCoordinateDescent::derivatives(const Eigen::VectorXd& beta,
                                       Eigen::VectorXd& score,
                                       Eigen::MatrixXd& information) const {
  compute(beta, score, &information);
}

void CoxCoordinateDescent::compute(const Eigen::VectorXd& beta,
                                   Eigen::VectorXd& score,
                                   Eigen::MatrixXd* information) const {
  const auto p = static_cast<Eigen::Index>(p_);
  const Eigen::VectorXd eta = linear_predictor(beta);
  check_finite(eta);
  const double shift = eta.maxCoeff();
  const auto& ends = index_.event_end();
  const auto& counts = index_.event_count();
  const std::size_t m = ends.size();

  Eigen::VectorXd w(static_cast<Eigen::Index>(n_));
  for (std::size_t pos = 0; pos < n_; ++pos) {
    const auto r = static_cast<Eigen::Index>(pos);
    w(r) = std::exp(eta(r) - shift);
  }
  // Risk-set means, one row per event time, scaled by sqrt(d).
  Eigen::MatrixXd means(static_cast<Eigen::Index>(m), p);
  std::vector<double> s0(m);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  double acc = 0.0;
  std::size_t pos = 0;
  for (std::size_t e = 0; e < m; ++e) {
    for (; pos < ends[e]; ++pos) {
      const double wi = w(static_cast<Eigen::Index>(pos));
      acc += wi;
      for (const auto& nz : row(pos)) s1(nz.column) += wi * nz.value;
    }
    s0[e] = acc;
    means.row(static_cast<Eigen::Index>(e)) =
        (std::sqrt(counts[e]) / acc) * s1.transpose();
  }
  score = event_x_sum_;
  for (std::size_t e = 0; e < m; ++e)
    score -= std::sqrt(counts[e]) *
             means.row(static_cast<Eigen::Index>(e)).transpose();
  if (!information) return;

  // Second moments: sum_e d_e/S0_e * sum_{i in R_e} w_i x_i x_i^T. Subject
  // at position pos belongs to every risk set e with ends[e] > pos, which is
  // a suffix of the event sequence.
  std::vector<double> suffix(m + 1, 0.0);
  for (std::size_t e = m; e-- > 0;) suffix[e] = suffix[e + 1] + counts[e] / s0[e];
  Eigen::MatrixXd& info = *information;
  info = Eigen::MatrixXd::Zero(p, p);
  std::size_t first = 0;
  for (pos = 0; pos < n_; ++pos) {
    while (first < m && ends[first] <= pos) ++first;
    const double c = w(static_cast<Eigen::Index>(pos)) * suffix[first];
    if (c == 0.0) continue;
    const auto entries = row(pos);
    for (std::size_t a = 0; a < entries.size(); ++a) {
      const double ca = c * entries[a].value;
      double* column = &info(0, entries[a].column);
      for (std::size_t b = a; b < entries.size(); ++b)
        column[entries[b].column] += ca * entries[b].value;
    }
  }
  info.selfadjointView<Eigen::Lower>().rankUpdate(means.transpose(), -1.0);
  info.triangularView<Eigen::StrictlyUpper>() =
      info.transpose().triangularView<Eigen::StrictlyUpper>();
}

Eigen::VectorXd CoxCoordinateDescent::score(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd g;
  compute(beta, g, nullptr);
  return g;
}

namespace {

// Exact minimizer of the quadratic model plus penalty restricted to the
// coordinates that are nonzero (or unpenalized) in `target`, keeping their
// signs. Returns false, leaving `target` untouched, when the result changes
// a sign or violates the optimality condition of a zero coordinate.
bool polish_model(const Eigen::MatrixXd& h, const Eigen::VectorXd& score,
                  const Eigen::VectorXd& beta, const Eigen::VectorXd& l1,
                  const Eigen::VectorXd& l2, Eigen::VectorXd& target) {
  const Eigen::Index p = h.rows();
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < p; ++j)
    if (l1(j) == 0.0 || target(j) != 0.0) free.push_back(j);
  const auto f = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd a(f, f);
  Eigen::VectorXd rhs(f);
  // Zero coordinates sit at 0, i.e. moved by -beta_j from the expansion point.
  Eigen::VectorXd fixed_move = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (l1(j) > 0.0 && target(j) == 0.0) fixed_move(j) = -beta(j);
  const Eigen::VectorXd fixed_term = h * fixed_move;
  for (Eigen::Index r = 0; r < f; ++r) {
    const Eigen::Index j = free[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < f; ++c)
      a(r, c) = h(j, free[static_cast<std::size_t>(c)]);
    a(r, r) += 2.0 * l2(j);
    double sign = 0.0;
    if (l1(j) > 0.0) sign = target(j) > 0.0 ? 1.0 : -1.0;
    // Stationarity in the free move d_F (b_F = beta_F + d_F).
    rhs(r) = score(j) - fixed_term(j) - 2.0 * l2(j) * beta(j) - l1(j) * sign;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.solve(rhs);
  if (!d.allFinite()) return false;
  Eigen::VectorXd candidate = beta + fixed_move;
  for (Eigen::Index r = 0; r < f; ++r) {
    const Eigen::Index j = free[static_cast<std::size_t>(r)];
    candidate(j) = beta(j) + d(r);
    if (l1(j) > 0.0 && (candidate(j) > 0.0) != (target(j) > 0.0)) return false;
  }
  const Eigen::VectorXd model_grad = -score + h * (candidate - beta);
  for (Eigen::Index j = 0; j < p; ++j)
    if (l1(j) > 0.0 && candidate(j) == 0.0 &&
        std::abs(model_grad(j)) > l1(j) * (1.0 + 1e-9))
      return false;
  target = candidate;
  return true;
}

}  // namespace

CoxFit CoxCoordinateDescent::fit(PenaltyKind kind, double lambda,
                                 const Eigen::VectorXd& start,
                                 CdTrace* trace) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("cox_cd_fit: lambda must be nonnegative");
  if (index_.num_events() == 0) throw NumericalError("cox_cd_fit: no events");
  const auto p = static_cast<Eigen::Index>(p_);
  Eigen::VectorXd beta = start.size() == p ? start : Eigen::VectorXd::Zero(p);
  Eigen::VectorXd l1, l2;
  penalty_weights(kind, lambda, l1, l2);
  auto objective = [&](const Eigen::VectorXd& b) {
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (l1(j) > 0.0 && b(j) != 0.0) penalty += l1(j) * std::abs(b(j));
      if (l2(j) > 0.0) penalty += l2(j) * b(j) * b(j);
    }
    return -loglik(b) + penalty;
  };

  double current = objective(beta);
  if (!std::isfinite(current))
    throw NumericalError("cox_cd_fit: non-finite objective at start");
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  Eigen::VectorXd target(p), r(p);
  int sweeps = 0;
  int outer = 0;
  double max_change = std::numeric_limits<double>::infinity();
  double previous_change = max_change;
  bool fresh = cached_information_.rows() != p;
  if (!fresh) h = cached_information_;
  while (true) {
    if (fresh) {
      derivatives(beta, g, h);
      cached_information_ = h;
    } else {
      compute(beta, g, nullptr);
    }
    ++outer;
    // Inner cyclic coordinate descent on the quadratic model in target = b.
    target = beta;
    r.setZero();  // h * (target - beta)
    auto inner_sweep = [&] {
      if (++sweeps > options_.max_sweeps)
        throw NumericalError("cox_cd_fit: no convergence after " +
                             std::to_string(options_.max_sweeps) + " sweeps");
      double change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double hjj = h(j, j);
        const double u = -g(j) + r(j) - hjj * (target(j) - beta(j));
        const double b = coordinate_update(hjj, beta(j), u, l1(j), l2(j));
        const double delta = b - target(j);
        if (delta == 0.0) continue;
        r.noalias() += delta * h.col(j);
        target(j) = b;
        change = std::max(change, std::abs(delta));
      }
      return change;
    };
    // The model's near-null directions (the overparameterized blocks carry
    // only the epsilon ridge) make plain cycling creep; once the zero pattern
    // has settled, solve the model exactly on the free coordinates. Without
    // lasso columns the pattern is trivial and the solve is the whole step.
    if (l1.maxCoeff() > 0.0 || !polish_model(h, g, beta, l1, l2, target)) {
      int batch = 0;
      while (inner_sweep() > options_.inner_tolerance && ++batch < 1000) {
      }
      polish_model(h, g, beta, l1, l2, target);
    }

    // Backtrack until the penalized objective does not increase.
    const Eigen::VectorXd direction = target - beta;
    double step = 1.0;
    Eigen::VectorXd next = target;
    double value = objective(next);
    while (!(value <= current) && step > 1e-10) {
      step *= 0.5;
      next = beta + step * direction;
      value = objective(next);
    }
    if (!(value <= current)) {
      if (!fresh) {
        fresh = true;
        continue;
      }
      next = beta;
      value = current;
    }
    max_change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    current = value;
    if (trace) trace->objective.push_back(current);
    if (max_change < options_.tolerance) break;
    fresh = !(max_change <= 0.25 * previous_change);
    previous_change = max_change;
  }

  CoxFit fit;
  fit.coefficients = beta;
  fit.penalty.kind = kind;
  fit.penalty.lambda = lambda;
  fit.penalty.penalized_mask = mask_;
  fit.loglik = loglik(beta);
  fit.convergence.iterations = outer;
  compute(beta, g, nullptr);
  double norm2 = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (l1(j) > 0.0) continue;
    const double gj = g(j) - 2.0 * l2(j) * beta(j);
    norm2 += gj * gj;
  }
  fit.convergence.final_gradient_norm = std::sqrt(norm2);
  return fit;
}

std::vector<CoxFit> CoxCoordinateDescent::path(
    PenaltyKind kind, std::span<const double> lambdas) {
  std::vector<CoxFit> fits;
  fits.reserve(lambdas.size());
  Eigen::VectorXd start;
  for (double lambda : lambdas) {
    fits.push_back(fit(kind, lambda, start));
    start = fits.back().coefficients;
  }
  return fits;
}

CoxFit cox_cd_fit(const DesignMatrix& design, const TrialDataset& dataset,
                  PenaltyKind kind, double lambda, const CdOptions& options) {
  CoxCoordinateDescent solver(design.x, dataset.time(), dataset.event(),
                              interaction_mask(design), options);
  return solver.fit(kind, lambda);
}

// ---------------------------------------------------------------------------
// Baseline and prediction

StepCumHazard breslow_baseline(std::span<const double> linear_predictor,
                               std::span<const double> time,
                               std::span<const int> event) {
  RiskSetIndex index(time, event);
  const auto& ends = index.event_end();
  std::vector<double> s0(ends.size());
  double acc = 0.0;
  std::size_t pos = 0;
  for (std::size_t e = 0; e < ends.size(); ++e) {
    for (; pos < ends[e]; ++pos)
      acc += std::exp(linear_predictor[index.subject(pos)]);
    s0[e] = acc;
  }
  StepCumHazard h;
  for (std::size_t e = ends.size(); e-- > 0;) {
    h.jump_times.push_back(index.event_time()[e]);
    h.increments.push_back(index.event_count()[e] / s0[e]);
  }
  return h;
}

StepCumHazard breslow_baseline(const CoxFit& fit, const DesignMatrix& design,
                               const TrialDataset& dataset) {
  const Eigen::VectorXd lp = design.x * fit.coefficients;
  return breslow_baseline(std::span<const double>(lp.data(), lp.size()),
                          dataset.time(), dataset.event());
}

double forced_linear_predictor(const CoxFit& fit, const DesignMatrix& design,
                               Eigen::Index row, int forced_treatment) {
  const auto& b = fit.coefficients;
  const double a = forced_treatment;
  double lp = a * b(0);
  for (std::size_t k = 0; k < design.num_subgroups; ++k) {
    const double s = design.x(row, static_cast<Eigen::Index>(design.main_col(k)));
    if (s == 0.0) continue;
    lp += s * (b(static_cast<Eigen::Index>(design.main_col(k))) +
               a * b(static_cast<Eigen::Index>(design.interaction_col(k))));
  }
  return lp;
}

StepSurvival predict_survival(const CoxFit& fit, const StepCumHazard& baseline,
                              const DesignMatrix& design, Eigen::Index row,
                              int forced_treatment) {
  const double risk =
      std::exp(forced_linear_predictor(fit, design, row, forced_treatment));
  auto cum = baseline.cumulative();
  std::vector<double> values(cum.size());
  for (std::size_t s = 0; s < cum.size(); ++s)
    values[s] = std::exp(-cum[s] * risk);
  return StepSurvival(baseline.jump_times, std::move(values));
}

}  // namespace subshrink
