#include "subshrink/estimators.hpp"

#include "subshrink/error.hpp"
#include "subshrink/rng.hpp"

#include <Eigen/Sparse>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace subshrink {

namespace {

constexpr double kZ975 = 1.959963984540054;

}  // namespace

const char* to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::naive: return "naive";
    case EstimatorTag::population: return "population";
    case EstimatorTag::lasso: return "lasso";
    case EstimatorTag::ridge: return "ridge";
    case EstimatorTag::horseshoe: return "horseshoe";
    case EstimatorTag::model_averaging: return "model_averaging";
  }
  return "unknown";
}

EstimatorTag estimator_from_string(std::string_view name) {
  for (auto t : {EstimatorTag::naive, EstimatorTag::population,
                 EstimatorTag::lasso, EstimatorTag::ridge,
                 EstimatorTag::horseshoe, EstimatorTag::model_averaging})
    if (name == to_string(t)) return t;
  if (name == "avg") return EstimatorTag::model_averaging;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::vector<EstimatorTag> parse_estimator_list(std::string_view list) {
  std::vector<EstimatorTag> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto item = list.substr(0, comma);
    if (!item.empty()) {
      const auto tag = estimator_from_string(item);
      if (std::find(out.begin(), out.end(), tag) == out.end())
        out.push_back(tag);
    }
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty estimator list");
  return out;
}

const char* to_string(IntervalKind kind) {
  switch (kind) {
    case IntervalKind::none: return "none";
    case IntervalKind::wald: return "wald";
    case IntervalKind::credible: return "credible";
    case IntervalKind::mixture: return "mixture";
  }
  return "unknown";
}

std::size_t EstimatorResult::missing_count() const {
  return static_cast<std::size_t>(std::count_if(
      subgroups.begin(), subgroups.end(),
      [](const SubgroupEstimate& e) { return e.missing; }));
}

std::vector<std::vector<std::size_t>> subgroup_members(
    const TrialDataset& dataset, const SubgroupSchema& schema) {
  std::vector<std::vector<std::size_t>> members(schema.num_subgroups());
  const auto& cov = dataset.covariates();
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (std::size_t v = 0; v < schema.num_variables(); ++v)
      members[schema.subgroup_index(
                  v, static_cast<std::size_t>(cov.level(i, v)))]
          .push_back(i);
  return members;
}

double default_limit(const TrialDataset& dataset) {
  double top = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.event()[i]) top = std::max(top, dataset.time()[i]);
  if (!(top > 0.0)) throw DataError("no uncensored event times");
  return top;
}

// ---------------------------------------------------------------------------
// Naive and population

namespace {

SubgroupEstimate treatment_only_fit(const TrialDataset& data, std::size_t k) {
  SubgroupEstimate e;
  e.subgroup = k;
  bool events[2] = {false, false};
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.event()[i]) events[data.treatment()[i] != 0] = true;
  if (!events[0] || !events[1]) {
    e.missing = true;
    e.note = "no events in one arm";
    return e;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), 1);
  for (std::size_t i = 0; i < data.size(); ++i)
    x(static_cast<Eigen::Index>(i), 0) = data.treatment()[i];
  try {
    const auto fit = cox_nr_fit(x, data);
    e.log_effect = fit.coefficients(0);
    const double se = fit.standard_error(0);
    e.interval = std::make_pair(e.log_effect - kZ975 * se,
                                e.log_effect + kZ975 * se);
    e.interval_kind = IntervalKind::wald;
  } catch (const MonotoneLikelihoodError& err) {
    e.missing = true;
    e.note = std::string("monotone likelihood: ") + err.what();
  } catch (const NumericalError& err) {
    e.missing = true;
    e.note = err.what();
  }
  return e;
}

}  // namespace

EstimatorResult estimate_naive(const TrialDataset& dataset,
                               const SubgroupSchema& schema) {
  EstimatorResult r;
  r.tag = EstimatorTag::naive;
  const auto members = subgroup_members(dataset, schema);
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) {
      SubgroupEstimate e;
      e.subgroup = k;
      e.missing = true;
      e.note = "empty subgroup";
      r.subgroups.push_back(e);
      continue;
    }
    r.subgroups.push_back(treatment_only_fit(dataset.subset(members[k]), k));
  }
  return r;
}

EstimatorResult estimate_population(const TrialDataset& dataset,
                                    const SubgroupSchema& schema) {
  EstimatorResult r;
  r.tag = EstimatorTag::population;
  const auto overall = treatment_only_fit(dataset, 0);
  for (std::size_t k = 0; k < schema.num_subgroups(); ++k) {
    auto e = overall;
    e.subgroup = k;
    r.subgroups.push_back(e);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Penalized

std::vector<SubgroupEstimate> standardized_cox_effects(
    const CoxFit& fit, const DesignMatrix& design, const TrialDataset& dataset,
    const SubgroupSchema& schema, double limit) {
  const auto baseline = breslow_baseline(fit, design, dataset);
  const auto members = subgroup_members(dataset, schema);
  std::vector<SubgroupEstimate> out;
  for (std::size_t k = 0; k < members.size(); ++k) {
    SubgroupEstimate e;
    e.subgroup = k;
    if (members[k].empty()) {
      e.missing = true;
      e.note = "empty subgroup";
      out.push_back(e);
      continue;
    }
    std::vector<double> lp0, lp1;
    for (auto i : members[k]) {
      const auto row = static_cast<Eigen::Index>(i);
      lp0.push_back(forced_linear_predictor(fit, design, row, 0));
      lp1.push_back(forced_linear_predictor(fit, design, row, 1));
    }
    const auto ahr = ahr_step(standardize_cox(baseline, lp0),
                              standardize_cox(baseline, lp1), limit);
    if (ahr) {
      e.log_effect = std::log(*ahr);
    } else {
      e.missing = true;
      e.note = "zero AHR denominator";
    }
    out.push_back(e);
  }
  return out;
}

EstimatorResult estimate_penalized(const TrialDataset& dataset,
                                   const SubgroupSchema& schema,
                                   PenaltyKind kind,
                                   const PenalizedConfig& config) {
  if (kind == PenaltyKind::none)
    throw ConfigError("estimate_penalized: penalty kind is none");
  EstimatorResult r;
  r.tag = kind == PenaltyKind::lasso ? EstimatorTag::lasso : EstimatorTag::ridge;
  const auto design = build_design(dataset, schema);
  double lambda;
  if (config.lambda) {
    lambda = *config.lambda;
  } else {
    r.cv = cv_lambda(design, dataset, kind, config.cv);
    lambda = r.cv->lambda_star;
  }
  r.lambda = lambda;
  CoxCoordinateDescent solver(design.x, dataset.time(), dataset.event(),
                              interaction_mask(design), config.cv.cd);
  const auto fit = solver.fit(kind, lambda);
  r.iterations = fit.convergence.iterations;
  r.limit = config.limit ? *config.limit : default_limit(dataset);
  r.subgroups = standardized_cox_effects(fit, design, dataset, schema, r.limit);
  return r;
}

// ---------------------------------------------------------------------------
// Horseshoe

HorseshoeFit fit_horseshoe(const HorseshoeModel& model,
                           const BayesConfig& config) {
  const Eigen::MatrixXd a = model.sampler_transform();
  const auto dim = static_cast<Eigen::Index>(model.dim());
  LogDensity density = [&](const Eigen::VectorXd& phi, Eigen::VectorXd& g) {
    Eigen::VectorXd gt;
    const double v = model.log_posterior(a * phi, gt);
    g = a.transpose() * gt;
    return v;
  };
  HorseshoeFit out;
  auto sampled = hmc_sample(density, dim, config.hmc);
  out.draws = sampled;
  out.draws.samples = sampled.samples * a.transpose();
  out.draws.rhat.clear();
  auto& d = out.diagnostics;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double rh = config.hmc.chains >= 2 ? split_rhat(out.draws, j) : 1.0;
    out.draws.rhat.push_back(rh);
    d.max_rhat = std::max(d.max_rhat, rh);
    if (j <= static_cast<Eigen::Index>(model.num_subgroups()))
      d.max_rhat_main = std::max(d.max_rhat_main, rh);
  }
  d.divergences = sampled.total_divergences;
  d.mean_accept = sampled.mean_accept;
  d.step_size = sampled.step_size;
  d.rhat_gate_passed = config.hmc.chains >= 2 && d.max_rhat_main < config.rhat_gate;
  return out;
}

Eigen::MatrixXd horseshoe_ahr_draws(const HorseshoeModel& model,
                                    const TrialDataset& dataset,
                                    const SubgroupSchema& schema,
                                    const Eigen::MatrixXd& theta_draws,
                                    double limit, int grid_points) {
  const auto grid = uniform_grid(limit, grid_points);
  const auto G = static_cast<Eigen::Index>(grid.size());
  const auto& basis = model.basis();
  const auto M = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd mgrid(G, M), igrid(G, M);
  std::vector<double> buf(basis.size());
  for (Eigen::Index g = 0; g < G; ++g) {
    basis.mspline(grid[static_cast<std::size_t>(g)], buf);
    for (Eigen::Index m = 0; m < M; ++m) mgrid(g, m) = buf[static_cast<std::size_t>(m)];
    basis.ispline(grid[static_cast<std::size_t>(g)], buf);
    for (Eigen::Index m = 0; m < M; ++m) igrid(g, m) = buf[static_cast<std::size_t>(m)];
  }
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto K = static_cast<Eigen::Index>(schema.num_subgroups());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd count = Eigen::VectorXd::Zero(K);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (auto k : model.memberships(i)) {
      trip.emplace_back(static_cast<int>(k), static_cast<int>(i), 1.0);
      count(static_cast<Eigen::Index>(k)) += 1.0;
    }
  Eigen::SparseMatrix<double> member(K, n);
  member.setFromTriplets(trip.begin(), trip.end());

  Eigen::MatrixXd out(theta_draws.rows(), K);
  Eigen::MatrixXd surv(n, G);
  Eigen::MatrixXd sbar[2], fbar[2];
  for (Eigen::Index d = 0; d < theta_draws.rows(); ++d) {
    const auto s = model.reconstruct(theta_draws.row(d).transpose());
    const Eigen::VectorXd h0 = std::exp(s.eta0) * (mgrid * s.weights);
    const Eigen::VectorXd cum0 = std::exp(s.eta0) * (igrid * s.weights);
    Eigen::VectorXd base(n), shift(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double a = 0.0, b = s.beta0;
      for (auto k : model.memberships(static_cast<std::size_t>(i))) {
        a += s.alpha(static_cast<Eigen::Index>(k));
        b += s.beta(static_cast<Eigen::Index>(k));
      }
      base(i) = a;
      shift(i) = b;
    }
    for (int arm = 0; arm < 2; ++arm) {
      const Eigen::VectorXd risk = (base + arm * shift).array().exp();
      surv.noalias() = -risk * cum0.transpose();
      surv = surv.array().exp();
      sbar[arm] = member * surv;
      // sum_i h0 r_i S_i(t): density mass of the member curves.
      fbar[arm] = member * (risk.asDiagonal() * surv);
      fbar[arm] = fbar[arm] * h0.asDiagonal();
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      if (count(k) == 0.0) {
        out(d, k) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      // With S and f both summed over members, S_C * h_I * S_I reduces to
      // Sbar_C * fbar_I (counts cancel in the ratio).
      std::vector<double> sc(static_cast<std::size_t>(G)), si(sc.size()),
          hc(sc.size()), hi(sc.size());
      for (Eigen::Index g = 0; g < G; ++g) {
        const auto gg = static_cast<std::size_t>(g);
        sc[gg] = sbar[0](k, g) / count(k);
        si[gg] = sbar[1](k, g) / count(k);
        hc[gg] = sc[gg] > 0.0 ? fbar[0](k, g) / count(k) / sc[gg] : 0.0;
        hi[gg] = si[gg] > 0.0 ? fbar[1](k, g) / count(k) / si[gg] : 0.0;
      }
      const auto ahr = ahr_grid(sc, si, hc, hi, limit);
      out(d, k) = ahr ? *ahr : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

EstimatorResult estimate_horseshoe(const TrialDataset& dataset,
                                   const SubgroupSchema& schema,
                                   const BayesConfig& config) {
  EstimatorResult r;
  r.tag = EstimatorTag::horseshoe;
  HorseshoeModel model(dataset, schema,
                       build_mspline_basis(dataset, config.spline_degree),
                       config.prior);
  const auto fit = fit_horseshoe(model, config);
  r.mcmc = fit.diagnostics;
  if (!fit.diagnostics.rhat_gate_passed)
    r.warnings.push_back("R-hat gate failed: max R-hat of main effects " +
                         std::to_string(fit.diagnostics.max_rhat_main));
  const auto total = fit.draws.samples.rows();
  const Eigen::Index keep =
      std::min<Eigen::Index>(total, std::max(config.ahr_draws, 1));
  Eigen::MatrixXd thinned(keep, fit.draws.samples.cols());
  for (Eigen::Index j = 0; j < keep; ++j) {
    const Eigen::Index src =
        keep == 1 ? 0 : static_cast<Eigen::Index>(std::llround(
                            static_cast<double>(j) * (total - 1) / (keep - 1)));
    thinned.row(j) = fit.draws.samples.row(src);
  }
  r.mcmc->ahr_draws = static_cast<int>(keep);
  r.limit = config.limit ? *config.limit : default_limit(dataset);
  const auto ahr = horseshoe_ahr_draws(model, dataset, schema, thinned, r.limit,
                                       config.grid_points);
  for (Eigen::Index k = 0; k < ahr.cols(); ++k) {
    SubgroupEstimate e;
    e.subgroup = static_cast<std::size_t>(k);
    std::vector<double> col(ahr.col(k).data(), ahr.col(k).data() + ahr.rows());
    if (!std::all_of(col.begin(), col.end(),
                     [](double v) { return std::isfinite(v) && v > 0.0; })) {
      e.missing = true;
      e.note = "degenerate subgroup";
    } else if (col.size() < 100) {
      e.missing = true;
      e.note = "fewer than 100 posterior draws";
    } else {
      const auto s = summarize_ahr_draws(col);
      e.log_effect = s.log_point;
      e.interval = std::make_pair(std::log(s.interval->first),
                                  std::log(s.interval->second));
      e.interval_kind = IntervalKind::credible;
    }
    r.subgroups.push_back(e);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Model averaging

ModelAveragingFit fit_model_averaging(const TrialDataset& dataset,
                                      const SubgroupSchema& schema) {
  const auto design = build_design(dataset, schema);
  const auto reduced = reduce_design(design, schema, false);
  const auto K = schema.num_subgroups();
  const auto members = subgroup_members(dataset, schema);
  const double events = static_cast<double>(dataset.num_events());
  ModelAveragingFit out;
  out.models.resize(K);
  out.overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K),
                                      static_cast<Eigen::Index>(K));
  const auto n = reduced.x.rows();
  const auto q = reduced.x.cols();
  Eigen::MatrixXd x(n, q + 1);
  x.leftCols(q) = reduced.x;
  for (std::size_t p = 0; p < K; ++p) {
    x.col(q) = design.x.col(static_cast<Eigen::Index>(design.interaction_col(p)));
    auto& m = out.models[p];
    try {
      const auto fit = cox_nr_fit(x, dataset);
      m.converged = true;
      m.beta0 = fit.coefficients(0);
      m.beta_p = fit.coefficients(q);
      const auto& cov = *fit.covariance;
      m.covariance << cov(0, 0), cov(0, q), cov(q, 0), cov(q, q);
      m.bic = -2.0 * fit.loglik + static_cast<double>(q + 1) * std::log(events);
    } catch (const NumericalError&) {
      m.converged = false;
    }
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t both = 0;
      std::size_t a = 0, b = 0;
      while (a < members[k].size() && b < members[p].size()) {
        if (members[k][a] == members[p][b]) {
          ++both, ++a, ++b;
        } else if (members[k][a] < members[p][b]) {
          ++a;
        } else {
          ++b;
        }
      }
      out.overlap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)) =
          members[p].empty() ? 0.0
                             : static_cast<double>(both) / members[p].size();
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : out.models)
    if (m.converged) best = std::min(best, m.bic);
  if (!std::isfinite(best))
    throw NumericalError("model averaging: no candidate model converged");
  double total = 0.0;
  for (auto& m : out.models) {
    m.weight = m.converged ? std::exp(-0.5 * (m.bic - best)) : 0.0;
    total += m.weight;
  }
  for (auto& m : out.models) m.weight /= total;
  return out;
}

double mixture_quantile(std::span<const double> weights,
                        std::span<const double> means,
                        std::span<const double> sds, double prob) {
  const boost::math::normal_distribution<double> std_normal;
  auto cdf = [&](double x) {
    double c = 0.0;
    for (std::size_t p = 0; p < weights.size(); ++p) {
      if (weights[p] == 0.0) continue;
      c += weights[p] * (sds[p] > 0.0
                             ? boost::math::cdf(std_normal, (x - means[p]) / sds[p])
                             : (x >= means[p] ? 1.0 : 0.0));
    }
    return c;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    if (weights[p] == 0.0) continue;
    lo = std::min(lo, means[p] - 10.0 * sds[p]);
    hi = std::max(hi, means[p] + 10.0 * sds[p]);
  }
  if (!(lo <= hi)) throw std::invalid_argument("mixture_quantile: no weight");
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EstimatorResult estimate_model_averaging(const TrialDataset& dataset,
                                         const SubgroupSchema& schema) {
  EstimatorResult r;
  r.tag = EstimatorTag::model_averaging;
  const auto fit = fit_model_averaging(dataset, schema);
  const auto K = schema.num_subgroups();
  std::vector<double> w(K), mean(K), sd(K);
  for (std::size_t p = 0; p < K; ++p) {
    w[p] = fit.models[p].weight;
    r.model_weights.push_back(w[p]);
    if (!fit.models[p].converged)
      r.warnings.push_back("candidate model " + schema.subgroup_label(p) +
                           " did not converge; weight 0");
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t p = 0; p < K; ++p) {
      const auto& m = fit.models[p];
      const double o =
          fit.overlap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
      mean[p] = m.beta0 + o * m.beta_p;
      const double var = m.covariance(0, 0) + 2.0 * o * m.covariance(0, 1) +
                         o * o * m.covariance(1, 1);
      sd[p] = std::sqrt(std::max(var, 0.0));
    }
    SubgroupEstimate e;
    e.subgroup = k;
    e.log_effect = mixture_quantile(w, mean, sd, 0.5);
    e.interval = std::make_pair(mixture_quantile(w, mean, sd, 0.025),
                                mixture_quantile(w, mean, sd, 0.975));
    e.interval_kind = IntervalKind::mixture;
    r.subgroups.push_back(e);
  }
  return r;
}

EstimatorResult run_estimator(EstimatorTag tag, const TrialDataset& dataset,
                              const SubgroupSchema& schema,
                              const EstimatorConfig& config) {
  const auto seed = derive_seed(config.seed, config.run_index, to_string(tag));
  switch (tag) {
    case EstimatorTag::naive: return estimate_naive(dataset, schema);
    case EstimatorTag::population: return estimate_population(dataset, schema);
    case EstimatorTag::lasso:
    case EstimatorTag::ridge: {
      auto pc = config.penalized;
      pc.cv.seed = seed;
      return estimate_penalized(
          dataset, schema,
          tag == EstimatorTag::lasso ? PenaltyKind::lasso : PenaltyKind::ridge,
          pc);
    }
    case EstimatorTag::horseshoe: {
      auto bc = config.bayes;
      bc.hmc.seed = seed;
      return estimate_horseshoe(dataset, schema, bc);
    }
    case EstimatorTag::model_averaging:
      return estimate_model_averaging(dataset, schema);
  }
  throw ConfigError("unknown estimator");
}

}  // namespace subshrink
