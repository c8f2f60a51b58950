#include "subshrink/simulation.hpp"

#include "subshrink/error.hpp"
#include "subshrink/marginal.hpp"
#include "subshrink/mspline.hpp"
#include "subshrink/parallel.hpp"
#include "subshrink/rng.hpp"
#include "subshrink/step_survival.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace subshrink {

SubgroupSchema simulation_schema() {
  const std::vector<std::size_t> levels = {2, 2, 2, 3, 4, 2, 2, 3, 2, 3};
  std::vector<SubgroupVariable> vars;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    SubgroupVariable v;
    v.name = "X" + std::to_string(j + 1);
    for (std::size_t l = 0; l < levels[j]; ++l)
      v.levels.push_back(std::string(1, static_cast<char>('a' + l)));
    vars.push_back(v);
  }
  return SubgroupSchema(vars);
}

std::vector<std::vector<double>> simulation_proportions() {
  return {{0.5, 0.5},  {0.4, 0.6},  {0.2, 0.8},
          {0.3, 0.3, 0.4},          {0.15, 0.15, 0.3, 0.4},
          {0.4, 0.6},  {0.4, 0.6},  {0.2, 0.3, 0.5},
          {0.2, 0.8},  {0.2, 0.3, 0.5}};
}

Eigen::MatrixXd simulation_latent_correlation() {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(10, 10);
  for (int a = 5; a <= 7; ++a)
    for (int b = 5; b <= 7; ++b)
      if (a != b) c(a, b) = 0.25;
  c(8, 9) = c(9, 8) = 0.5;
  return c;
}

ScenarioSpec scenario_coeffs(int id, std::uint64_t master_seed,
                             bool literal_scenario45_formula) {
  if (id < 1 || id > 6)
    throw ConfigError("unknown scenario " + std::to_string(id));
  const auto schema = simulation_schema();
  const auto K = static_cast<Eigen::Index>(schema.num_subgroups());
  ScenarioSpec s;
  s.id = id;
  s.master_seed = master_seed;
  s.literal_scenario45_formula = literal_scenario45_formula;
  s.latent_correlation = simulation_latent_correlation();
  s.proportions = simulation_proportions();
  s.alpha = Eigen::VectorXd::Zero(K);
  s.beta = Eigen::VectorXd::Zero(K);
  const double sg = s.sigma;
  auto at = [&](std::size_t var, std::size_t level) {
    return static_cast<Eigen::Index>(schema.subgroup_index(var, level));
  };
  s.alpha(at(3, 2)) = -std::log(0.7) * sg;
  s.alpha(at(5, 1)) = -std::log(1.5) * sg;
  switch (id) {
    case 1:
      s.beta0 = -std::log(0.66) * sg;
      break;
    case 2:
      s.beta0 = -std::log(0.66) * sg;
      s.beta(at(3, 0)) = std::log(0.66) * sg;
      s.beta(at(3, 1)) = -std::log(0.8) * sg;
      s.beta(at(3, 2)) = -std::log(0.8) * sg;
      break;
    case 3:
      s.beta0 = 0.0;
      s.beta(at(3, 0)) = -std::log(0.5) * sg;
      s.beta(at(3, 1)) = -std::log(1.25) * sg;
      s.beta(at(3, 2)) = -std::log(1.25) * sg;
      break;
    case 4:
    case 5: {
      s.beta0 = 0.0;
      s.heterogeneity_sd = id == 4 ? 0.15 : 0.3;
      Rng rng(derive_seed(master_seed, 0, "heterogeneity"));
      std::normal_distribution<double> normal;
      const double factor =
          literal_scenario45_formula ? -std::log(sg) : -sg;
      for (Eigen::Index k = 0; k < K; ++k)
        s.beta(k) = factor * s.heterogeneity_sd * normal(rng);
      break;
    }
    case 6:
      s.beta0 = -std::log(0.66) * sg;
      s.has_triple = true;
      s.triple = {-std::log(1.5) * sg, -std::log(0.92) * sg,
                  -std::log(0.5) * sg, -std::log(1.07) * sg};
      break;
  }
  return s;
}

Eigen::MatrixXd gen_latent(std::size_t n, std::uint64_t seed) {
  const Eigen::MatrixXd chol = simulation_latent_correlation().llt().matrixL();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), 10);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < 10; ++j) z(i, j) = normal(rng);
  return z * chol.transpose();
}

CovariateTable categorize_latent(
    const Eigen::MatrixXd& latent,
    const std::vector<std::vector<double>>& proportions) {
  const boost::math::normal_distribution<double> std_normal;
  std::vector<std::vector<double>> cuts(proportions.size());
  for (std::size_t j = 0; j < proportions.size(); ++j) {
    double acc = 0.0;
    for (std::size_t l = 0; l + 1 < proportions[j].size(); ++l) {
      acc += proportions[j][l];
      cuts[j].push_back(boost::math::quantile(std_normal, acc));
    }
  }
  const auto n = static_cast<std::size_t>(latent.rows());
  const auto p = proportions.size();
  std::vector<int> levels(n * p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double v = latent(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j));
      levels[i * p + j] = static_cast<int>(
          std::upper_bound(cuts[j].begin(), cuts[j].end(), v) - cuts[j].begin());
    }
  return CovariateTable(p, std::move(levels));
}

CovariateTable gen_covariates(std::size_t n, std::uint64_t seed) {
  return categorize_latent(gen_latent(n, seed), simulation_proportions());
}

std::vector<int> alternating_treatment(std::size_t n) {
  std::vector<int> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = static_cast<int>(i % 2);
  return z;
}

std::vector<double> gen_outcomes(const CovariateTable& covariates,
                                 const ScenarioSpec& spec,
                                 const std::vector<int>& treatment,
                                 std::uint64_t seed) {
  const auto schema = simulation_schema();
  Rng rng(seed);
  std::exponential_distribution<double> exponential(1.0);
  std::vector<double> t(covariates.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double z = treatment[i];
    double lp = spec.alpha0 + spec.beta0 * z;
    for (std::size_t v = 0; v < schema.num_variables(); ++v) {
      const auto k = static_cast<Eigen::Index>(schema.subgroup_index(
          v, static_cast<std::size_t>(covariates.level(i, v))));
      lp += spec.alpha(k) + spec.beta(k) * z;
    }
    if (spec.has_triple)
      lp += z * spec.triple[static_cast<std::size_t>(
                    2 * covariates.level(i, 0) + covariates.level(i, 1))];
    const double w = exponential(rng);
    t[i] = std::exp(lp + spec.sigma * std::log(w));
  }
  return t;
}

CensoredSample apply_censoring(const std::vector<double>& event_times,
                               std::size_t n_target, std::uint64_t seed,
                               const CensoringConfig& config) {
  const std::size_t n = event_times.size();
  if (n_target > n)
    throw DataError("censoring: target events exceed number of subjects");
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, config.recruitment_years);
  std::exponential_distribution<double> dropout(
      config.dropout_rate > 0.0 ? config.dropout_rate : 1.0);
  std::vector<double> recruit(n), follow(n);
  std::vector<int> event(n);
  for (std::size_t i = 0; i < n; ++i) {
    recruit[i] = uniform(rng);
    const double d = config.dropout_rate > 0.0
                         ? dropout(rng)
                         : std::numeric_limits<double>::infinity();
    event[i] = event_times[i] <= d;
    follow[i] = std::min(event_times[i], d);
  }
  CensoredSample out;
  out.cutoff = std::numeric_limits<double>::infinity();
  if (n_target > 0) {
    std::vector<double> calendar;
    for (std::size_t i = 0; i < n; ++i)
      if (event[i]) calendar.push_back(recruit[i] + follow[i]);
    if (calendar.size() < n_target)
      throw DataError("censoring: fewer than the target number of events");
    std::nth_element(calendar.begin(),
                     calendar.begin() + static_cast<std::ptrdiff_t>(n_target - 1),
                     calendar.end());
    out.cutoff = calendar[n_target - 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (recruit[i] > out.cutoff) continue;
    out.subjects.push_back(i);
    if (recruit[i] + follow[i] <= out.cutoff) {
      out.time.push_back(follow[i]);
      out.event.push_back(event[i]);
    } else {
      out.time.push_back(out.cutoff - recruit[i]);
      out.event.push_back(0);
    }
  }
  return out;
}

TrialDataset simulate_trial(const ScenarioSpec& spec, std::size_t n,
                            std::size_t n_target, std::uint64_t seed,
                            const CensoringConfig& censoring) {
  const auto schema = simulation_schema();
  const auto cov = gen_covariates(n, derive_seed(seed, 0, "covariates"));
  const auto z = alternating_treatment(n);
  const auto t = gen_outcomes(cov, spec, z, derive_seed(seed, 0, "outcomes"));
  auto c = apply_censoring(t, n_target, derive_seed(seed, 0, "censoring"),
                           censoring);
  std::vector<int> zs;
  for (auto i : c.subjects) zs.push_back(z[i]);
  return TrialDataset(std::move(c.time), std::move(c.event), std::move(zs),
                      cov.subset(c.subjects), schema);
}

double TrueAhrTable::overall() const { return std::exp(overall_log); }
double TrueAhrTable::subgroup(std::size_t k) const {
  return std::exp(subgroup_log[k]);
}

TrueAhrTable true_ahr_oracle(const ScenarioSpec& spec, std::size_t n_large,
                             int repetitions, std::uint64_t seed, int jobs) {
  if (n_large < 10000) throw ConfigError("oracle: n_large must be >= 1e4");
  if (repetitions < 1) throw ConfigError("oracle: repetitions must be >= 1");
  const auto schema = simulation_schema();
  const auto K = schema.num_subgroups();
  const auto n_target = static_cast<std::size_t>(
      std::llround(0.247 * static_cast<double>(n_large)));
  std::vector<std::vector<double>> logs(static_cast<std::size_t>(repetitions));
  parallel_for(logs.size(), jobs, [&](std::size_t r) {
    const auto data = simulate_trial(spec, n_large, n_target,
                                     derive_seed(seed, r, "oracle"));
    std::vector<double> ev;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.event()[i]) ev.push_back(data.time()[i]);
    std::sort(ev.begin(), ev.end());
    const double limit = quantile_sorted(ev, 0.95);
    auto ahr_of = [&](const std::vector<std::size_t>& rows) {
      std::vector<double> t[2];
      std::vector<int> e[2];
      for (auto i : rows) {
        const int a = data.treatment()[i];
        t[a].push_back(data.time()[i]);
        e[a].push_back(data.event()[i]);
      }
      const auto v = ahr_step(kaplan_meier(t[0], e[0]),
                              kaplan_meier(t[1], e[1]), limit);
      if (!v) throw DataError("oracle: degenerate subgroup");
      return std::log(*v);
    };
    std::vector<std::vector<std::size_t>> members(K);
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t v = 0; v < schema.num_variables(); ++v)
        members[schema.subgroup_index(
                    v, static_cast<std::size_t>(data.covariates().level(i, v)))]
            .push_back(i);
    auto& out = logs[r];
    out.push_back(ahr_of(all));
    for (std::size_t k = 0; k < K; ++k) out.push_back(ahr_of(members[k]));
  });
  TrueAhrTable table;
  table.scenario = spec.id;
  table.n_large = n_large;
  table.repetitions = repetitions;
  table.seed = seed;
  table.labels = schema.subgroup_labels();
  table.subgroup_log.assign(K, 0.0);
  for (const auto& l : logs) {
    table.overall_log += l[0] / repetitions;
    for (std::size_t k = 0; k < K; ++k)
      table.subgroup_log[k] += l[k + 1] / repetitions;
  }
  return table;
}

}  // namespace subshrink
