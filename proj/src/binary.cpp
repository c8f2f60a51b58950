#include "subshrink/binary.hpp"

#include "subshrink/error.hpp"

#include <algorithm>
#include <cmath>

namespace subshrink {

namespace {

double expit(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

LogisticFit fit_unpenalized(const DesignMatrix& design,
                            const SubgroupSchema& schema,
                            std::span<const int> y,
                            const LogisticOptions& options) {
  const auto reduced = reduce_design(design, schema, true);
  const auto n = reduced.x.rows();
  const auto q = reduced.x.cols();
  Eigen::MatrixXd x(n, q + 1);
  x.col(0).setOnes();
  x.rightCols(q) = reduced.x;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q + 1);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  auto value = [&](const Eigen::VectorXd& c) {
    const Eigen::VectorXd eta = x * c;
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) v += log1pexp(eta(i)) - yv(i) * eta(i);
    return v;
  };
  double f = value(b);
  int it = 0;
  double gnorm = 0.0;
  for (;; ++it) {
    const Eigen::VectorXd eta = x * b;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = expit(eta(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd g = x.transpose() * (yv - p);
    gnorm = g.norm();
    if (gnorm < options.gradient_tolerance) break;
    if (it >= options.max_iterations)
      throw NumericalError("logistic: no convergence");
    const Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
      throw MonotoneLikelihoodError("logistic: singular information (separation)");
    Eigen::VectorXd step = ldlt.solve(g);
    for (int halving = 0;; ++halving) {
      const Eigen::VectorXd c = b + step;
      if (c.cwiseAbs().maxCoeff() > options.divergence_bound)
        throw MonotoneLikelihoodError("logistic: coefficient diverges (separation)");
      const double fc = value(c);
      if (fc <= f + 1e-12 * (1.0 + std::abs(f)) || halving >= 30) {
        b = c;
        f = fc;
        break;
      }
      step *= 0.5;
    }
  }
  LogisticFit fit;
  fit.intercept = b(0);
  fit.coefficients = reduced.expand(b.tail(q), design.cols());
  fit.iterations = it;
  fit.gradient_norm = gnorm;
  return fit;
}

}  // namespace

double logistic_negloglik(const Eigen::MatrixXd& x, std::span<const int> y,
                          double intercept, const Eigen::VectorXd& beta,
                          Eigen::VectorXd* gradient) {
  const Eigen::VectorXd eta = (x * beta).array() + intercept;
  double v = 0.0;
  Eigen::VectorXd r(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    v += log1pexp(eta(i)) - yi * eta(i);
    r(i) = expit(eta(i)) - yi;
  }
  if (gradient) {
    gradient->resize(x.cols() + 1);
    (*gradient)(0) = r.sum();
    gradient->tail(x.cols()) = x.transpose() * r;
  }
  return v;
}

LogisticFit fit_global_logistic(const DesignMatrix& design,
                                const SubgroupSchema& schema,
                                const BinaryDataset& dataset, PenaltyKind kind,
                                double lambda,
                                const LogisticOptions& options) {
  const auto& y = dataset.outcome();
  const auto events = std::count(y.begin(), y.end(), 1);
  if (events == 0 || events == static_cast<std::ptrdiff_t>(y.size()))
    throw DataError("logistic: both outcome classes are required");
  if (kind == PenaltyKind::none) {
    auto fit = fit_unpenalized(design, schema, y, options);
    return fit;
  }
  if (!(lambda >= 0.0)) throw ConfigError("logistic: lambda must be >= 0");

  const auto& x = design.x;
  const auto n = x.rows();
  const auto p = x.cols();
  const auto mask = interaction_mask(design);
  Eigen::VectorXd l1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd l2 = Eigen::VectorXd::Constant(p, options.epsilon_ridge);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!mask[static_cast<std::size_t>(j)] || lambda == 0.0) continue;
    if (kind == PenaltyKind::lasso) {
      l1(j) = lambda;
      l2(j) = 0.0;
    } else {
      l2(j) = lambda;
    }
  }
  auto objective = [&](double a, const Eigen::VectorXd& b) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      pen += l2(j) * b(j) * b(j);
      if (b(j) != 0.0) pen += l1(j) * std::abs(b(j));
    }
    return logistic_negloglik(x, y, a, b) + pen;
  };

  double a = 0.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double f = objective(a, b);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::VectorXd eta = (x * b).array() + a;
    Eigen::VectorXd w(n), r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = expit(eta(i));
      w(i) = std::max(pi * (1.0 - pi), 1e-10);
      r(i) = y[static_cast<std::size_t>(i)] - pi;
    }
    // Quadratic model in (a, b) around the current point; CD on it.
    double na = a;
    Eigen::VectorXd nb = b;
    Eigen::VectorXd resid = r;  // w * (z - eta_new) with z the working response
    const Eigen::VectorXd xw_diag = (x.array().square().colwise() * w.array()).colwise().sum();
    const double wsum = w.sum();
    for (int sweep = 0; sweep < 200; ++sweep) {
      double change = 0.0;
      {
        const double delta = resid.sum() / wsum;
        na += delta;
        resid -= delta * w;
        change = std::max(change, std::abs(delta));
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        const double h = xw_diag(j);
        if (h <= 0.0) continue;
        const double u = -x.col(j).dot(resid);
        const double nj = coordinate_update(h, nb(j), u, l1(j), l2(j));
        const double delta = nj - nb(j);
        if (delta == 0.0) continue;
        nb(j) = nj;
        resid -= delta * x.col(j).cwiseProduct(w);
        change = std::max(change, std::abs(delta));
      }
      if (change < 0.1 * options.tolerance) break;
    }
    // Exact minimizer of the quadratic model on the free set with the signs
    // found by the sweeps; the near-flat intercept/main-effect direction makes
    // plain coordinate descent crawl.
    {
      std::vector<Eigen::Index> free{-1};
      for (Eigen::Index j = 0; j < p; ++j)
        if (nb(j) != 0.0 || l1(j) == 0.0) free.push_back(j);
      const auto m = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd xf(n, m);
      Eigen::VectorXd c0(m), sign(m), l1f(m), l2f(m);
      for (Eigen::Index c = 0; c < m; ++c) {
        const auto j = free[static_cast<std::size_t>(c)];
        if (j < 0) {
          xf.col(c).setOnes();
          c0(c) = a;
          sign(c) = l1f(c) = l2f(c) = 0.0;
        } else {
          xf.col(c) = x.col(j);
          c0(c) = b(j);
          sign(c) = nb(j) > 0.0 ? 1.0 : (nb(j) < 0.0 ? -1.0 : 0.0);
          l1f(c) = l1(j);
          l2f(c) = l2(j);
        }
      }
      const Eigen::MatrixXd h = xf.transpose() * w.asDiagonal() * xf;
      // Coordinates outside the free set move from b to 0.
      Eigen::VectorXd fixed_shift = Eigen::VectorXd::Zero(n);
      for (Eigen::Index j = 0; j < p; ++j)
        if (!(nb(j) != 0.0 || l1(j) == 0.0) && b(j) != 0.0) fixed_shift -= b(j) * x.col(j);
      Eigen::MatrixXd lhs = h;
      lhs.diagonal() += 2.0 * l2f;
      const Eigen::VectorXd rhs = h * c0 + xf.transpose() * (r - w.cwiseProduct(fixed_shift)) -
                                  l1f.cwiseProduct(sign);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd sol = ldlt.solve(rhs);
        bool consistent = sol.allFinite();
        for (Eigen::Index c = 0; c < m && consistent; ++c)
          if (l1f(c) > 0.0 && sol(c) * sign(c) <= 0.0) consistent = false;
        if (consistent) {
          na = a;
          nb.setZero();
          for (Eigen::Index c = 0; c < m; ++c) {
            const auto j = free[static_cast<std::size_t>(c)];
            if (j < 0)
              na = sol(c);
            else
              nb(j) = sol(c);
          }
        }
      }
    }
    // Backtrack so the penalized objective never increases.
    double step = 1.0;
    double fa = f;
    double ta = a;
    Eigen::VectorXd tb = b;
    for (int halving = 0; halving < 40; ++halving) {
      ta = a + step * (na - a);
      tb = b + step * (nb - b);
      fa = objective(ta, tb);
      if (fa <= f + 1e-12 * (1.0 + std::abs(f))) break;
      step *= 0.5;
    }
    // Progress is judged on the linear predictor: the design does not
    // identify every coefficient direction.
    const double move = ((x * (tb - b)).array() + (ta - a)).abs().maxCoeff();
    const double gain = f - fa;
    a = ta;
    b = tb;
    f = fa;
    if (gain <= 1e-13 * (1.0 + std::abs(f)) && it > 0) break;
    if (b.cwiseAbs().maxCoeff() > options.divergence_bound)
      throw MonotoneLikelihoodError("logistic: coefficient diverges (separation)");
    if (move < options.tolerance) break;
  }
  if (it >= options.max_iterations)
    throw NumericalError("logistic: no convergence");
  LogisticFit fit;
  fit.intercept = a;
  fit.coefficients = b;
  fit.kind = kind;
  fit.lambda = lambda;
  fit.iterations = it + 1;
  Eigen::VectorXd g;
  logistic_negloglik(x, y, a, b, &g);
  fit.gradient_norm = g.norm();
  return fit;
}

namespace {

double forced_eta(const LogisticFit& fit, const DesignMatrix& design,
                  Eigen::Index row, int arm) {
  CoxFit tmp;
  tmp.coefficients = fit.coefficients;
  return fit.intercept + forced_linear_predictor(tmp, design, row, arm);
}

}  // namespace

std::vector<BinaryEffect> standardize_binary(const LogisticFit& fit,
                                             const DesignMatrix& design,
                                             const BinaryDataset& dataset,
                                             const SubgroupSchema& schema) {
  std::vector<BinaryEffect> out;
  for (std::size_t k = 0; k < schema.num_subgroups(); ++k) {
    BinaryEffect e;
    e.subgroup = k;
    std::size_t count = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!dataset.covariates().in_subgroup(i, schema, k)) continue;
      const auto row = static_cast<Eigen::Index>(i);
      e.p_control += expit(forced_eta(fit, design, row, 0));
      e.p_intervention += expit(forced_eta(fit, design, row, 1));
      ++count;
    }
    if (count == 0) throw DataError("standardize_binary: empty subgroup");
    e.p_control /= static_cast<double>(count);
    e.p_intervention /= static_cast<double>(count);
    e.risk_difference = e.p_intervention - e.p_control;
    const bool interior = e.p_control > 0.0 && e.p_control < 1.0 &&
                          e.p_intervention > 0.0 && e.p_intervention < 1.0;
    if (interior) {
      e.odds_ratio = (e.p_intervention / (1.0 - e.p_intervention)) /
                     (e.p_control / (1.0 - e.p_control));
      e.risk_ratio = e.p_intervention / e.p_control;
    }
    out.push_back(e);
  }
  return out;
}

double check_equivalence(const LogisticFit& fit, const DesignMatrix& design,
                         const BinaryDataset& dataset,
                         const SubgroupSchema& schema) {
  double worst = 0.0;
  for (std::size_t k = 0; k < schema.num_subgroups(); ++k)
    for (int arm = 0; arm < 2; ++arm) {
      double pred = 0.0, obs = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.treatment()[i] != arm ||
            !dataset.covariates().in_subgroup(i, schema, k))
          continue;
        pred += expit(forced_eta(fit, design, static_cast<Eigen::Index>(i), arm));
        obs += dataset.outcome()[i];
        ++count;
      }
      if (count == 0) continue;
      worst = std::max(worst, std::abs(pred - obs) / static_cast<double>(count));
    }
  return worst;
}

}  // namespace subshrink
