#include "subshrink/cox.hpp"
#include "subshrink/estimators.hpp"
#include "subshrink/simulation.hpp"
#include "test_util.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <cmath>

using namespace subshrink;

TEST_SUITE("estimators") {

TEST_CASE("naive estimate equals a Cox fit within the subgroup") {
  const auto d = simulate_trial(scenario_coeffs(1), 600, 150, 3);
  const auto schema = simulation_schema();
  const auto naive = estimate_naive(d, schema);
  const auto members = subgroup_members(d, schema);
  for (std::size_t k : {0, 7, 24}) {
    const auto sub = d.subset(members[k]);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(sub.size()), 1);
    for (std::size_t i = 0; i < sub.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = sub.treatment()[i];
    const auto fit = cox_nr_fit(x, sub);
    const auto& e = naive.subgroups[k];
    REQUIRE(!e.missing);
    CHECK(e.log_effect == doctest::Approx(fit.coefficients(0)).epsilon(1e-8));
    const double se = fit.standard_error(0);
    CHECK(e.interval->first == doctest::Approx(fit.coefficients(0) - 1.959963984540054 * se));
  }
}

TEST_CASE("population estimate is replicated") {
  const auto d = simulate_trial(scenario_coeffs(1), 400, 100, 4);
  const auto schema = simulation_schema();
  const auto pop = estimate_population(d, schema);
  REQUIRE(pop.subgroups.size() == 25);
  for (const auto& e : pop.subgroups) CHECK(e.log_effect == pop.subgroups[0].log_effect);
}

TEST_CASE("a subgroup without events in one arm is missing") {
  const auto schema = binary_schema(1);
  const auto d = parse_dataset(
      "time,event,treatment,V1\n1,1,0,a\n2,1,1,a\n3,0,1,b\n4,1,0,b\n5,1,0,a\n6,0,1,b\n",
      schema);
  const auto r = estimate_naive(d, schema);
  CHECK(!r.subgroups[0].missing);
  CHECK(r.subgroups[1].missing);
  CHECK(r.missing_count() == 1);
}

TEST_CASE("infinite penalty collapses to the zero-interaction model") {
  const auto d = simulate_trial(scenario_coeffs(3), 500, 130, 9);
  const auto schema = simulation_schema();
  PenalizedConfig c;
  c.lambda = 1e9;
  const auto lasso = estimate_penalized(d, schema, PenaltyKind::lasso, c);
  const auto design = build_design(d, schema);
  const auto zero = cox_cd_fit(design, d, PenaltyKind::lasso, 1e9);
  const auto effects = standardized_cox_effects(zero, design, d, schema, lasso.limit);
  for (std::size_t k = 0; k < 25; ++k)
    CHECK(lasso.subgroups[k].log_effect == doctest::Approx(effects[k].log_effect));
  // Standardization over different covariate mixes still moves AHRs a little,
  // but all sit close to the treatment coefficient.
  for (const auto& e : lasso.subgroups)
    CHECK(std::abs(e.log_effect - zero.coefficients(0)) < 0.15);
}

TEST_CASE("model averaging with null interactions stays near the population") {
  auto spec = scenario_coeffs(1);
  const auto d = simulate_trial(spec, 2000, 600, 10);
  const auto schema = simulation_schema();
  const auto avg = estimate_model_averaging(d, schema);
  const auto pop = estimate_population(d, schema);
  double sum = 0.0;
  for (double w : avg.model_weights) sum += w;
  CHECK(sum == doctest::Approx(1.0));
  for (const auto& e : avg.subgroups)
    CHECK(std::abs(e.log_effect - pop.subgroups[0].log_effect) < 0.15);
}

TEST_CASE("mixture quantile") {
  const std::vector<double> w{1.0}, m{0.3}, s{0.2};
  const boost::math::normal z;
  CHECK(mixture_quantile(w, m, s, 0.975) ==
        doctest::Approx(0.3 + 0.2 * boost::math::quantile(z, 0.975)).epsilon(1e-9));
  const std::vector<double> w2{0.5, 0.5}, m2{-1.0, 1.0}, s2{0.5, 0.5};
  CHECK(mixture_quantile(w2, m2, s2, 0.5) == doctest::Approx(0.0).epsilon(1e-9));
  const double q = mixture_quantile(w2, m2, s2, 0.9);
  const double cdf = 0.5 * boost::math::cdf(boost::math::normal(-1.0, 0.5), q) +
                     0.5 * boost::math::cdf(boost::math::normal(1.0, 0.5), q);
  CHECK(cdf == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("estimator names") {
  CHECK(parse_estimator_list("naive,avg,horseshoe") ==
        std::vector<EstimatorTag>{EstimatorTag::naive, EstimatorTag::model_averaging,
                                  EstimatorTag::horseshoe});
  CHECK_THROWS(parse_estimator_list("naive,bogus"));
}

TEST_CASE("small horseshoe fit runs end to end") {
  const auto d = simulate_trial(scenario_coeffs(1), 300, 100, 21);
  const auto schema = simulation_schema();
  BayesConfig c;
  c.hmc.chains = 2;
  c.hmc.warmup = 150;
  c.hmc.draws = 100;
  c.hmc.seed = 4;
  c.ahr_draws = 100;
  c.grid_points = 200;
  const auto r = estimate_horseshoe(d, schema, c);
  REQUIRE(r.subgroups.size() == 25);
  REQUIRE(r.mcmc);
  for (const auto& e : r.subgroups) {
    REQUIRE(!e.missing);
    CHECK(e.interval->first <= e.log_effect);
    CHECK(e.log_effect <= e.interval->second);
  }
}

}
