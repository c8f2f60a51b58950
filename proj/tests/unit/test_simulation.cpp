#include "subshrink/cox.hpp"
#include "subshrink/simulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace subshrink;

TEST_SUITE("simulation") {

TEST_CASE("covariate proportions") {
  const std::size_t n = 100000;
  const auto cov = gen_covariates(n, 1);
  std::vector<double> x1(2, 0.0), x5(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    x1[static_cast<std::size_t>(cov.level(i, 0))] += 1.0 / n;
    x5[static_cast<std::size_t>(cov.level(i, 4))] += 1.0 / n;
  }
  CHECK(std::abs(x1[0] - 0.5) < 0.01);
  const double expect[] = {0.15, 0.15, 0.3, 0.4};
  for (int l = 0; l < 4; ++l) CHECK(std::abs(x5[static_cast<std::size_t>(l)] - expect[l]) < 0.01);
}

TEST_CASE("latent correlation") {
  const auto z = gen_latent(100000, 2);
  auto corr = [&](int a, int b) {
    const Eigen::VectorXd u = z.col(a).array() - z.col(a).mean();
    const Eigen::VectorXd v = z.col(b).array() - z.col(b).mean();
    return u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm());
  };
  CHECK(std::abs(corr(8, 9) - 0.5) < 0.02);
  CHECK(std::abs(corr(5, 6) - 0.25) < 0.02);
  CHECK(std::abs(corr(0, 1)) < 0.02);
}

TEST_CASE("scenario coefficients") {
  const auto s1 = scenario_coeffs(1);
  CHECK(std::exp(-s1.beta0 / s1.sigma) == doctest::Approx(0.66));
  const auto s3 = scenario_coeffs(3);
  const auto schema = simulation_schema();
  const auto k4a = schema.subgroup_index(3, 0);
  CHECK(std::exp(-(s3.beta0 + s3.beta(static_cast<Eigen::Index>(k4a))) / s3.sigma) ==
        doctest::Approx(0.5));
  CHECK(scenario_coeffs(4).beta == scenario_coeffs(4).beta);
  CHECK(!(scenario_coeffs(4).beta == scenario_coeffs(5).beta));
  CHECK(scenario_coeffs(6).has_triple);
}

TEST_CASE("Weibull medians") {
  const std::size_t n = 100000;
  const auto cov = gen_covariates(n, 3);
  const auto arm = alternating_treatment(n);
  auto null_spec = scenario_coeffs(1);
  null_spec.alpha.setZero();
  const auto t0 = gen_outcomes(cov, null_spec, arm, 4);
  std::vector<double> control;
  for (std::size_t i = 0; i < n; ++i)
    if (!arm[i]) control.push_back(t0[i]);
  std::nth_element(control.begin(), control.begin() + control.size() / 2, control.end());
  const double closed = std::exp(2.0) * std::pow(std::log(2.0), 0.85);
  CHECK(std::abs(control[control.size() / 2] - closed) < 0.1);

  const auto t1 = gen_outcomes(cov, scenario_coeffs(1), arm, 4);
  control.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (!arm[i]) control.push_back(t1[i]);
  std::nth_element(control.begin(), control.begin() + control.size() / 2, control.end());
  CHECK(std::abs(control[control.size() / 2] - 4.93) < 0.1);
}

TEST_CASE("conditional hazard ratio for null-covariate subjects") {
  const std::size_t n = 100000;
  const auto cov = gen_covariates(n, 8);
  const auto arm = alternating_treatment(n);
  auto spec = scenario_coeffs(1);
  spec.alpha.setZero();
  const auto t = gen_outcomes(cov, spec, arm, 9);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), 0) = arm[i];
  const std::vector<int> e(n, 1);
  const auto fit = cox_nr_fit(x, t, e);
  CHECK(std::abs(std::exp(fit.coefficients(0)) - 0.66) < 0.01);
}

TEST_CASE("administrative cutoff at the target event count") {
  const auto d = simulate_trial(scenario_coeffs(1), 1000, 247, 13);
  CHECK(d.num_events() == 247);
  CHECK(d.size() <= 1000);

  const std::vector<double> times{0.5, 1.0, 2.0, 8.0};
  CensoringConfig none;
  none.dropout_rate = 0.0;
  const auto all = apply_censoring(times, 0, 1, none);
  CHECK(std::count(all.event.begin(), all.event.end(), 1) == 4);
}

TEST_CASE("dropout rate in the first year") {
  const std::size_t n = 100000;
  std::vector<double> never(n, 1e9);
  const auto c = apply_censoring(never, 0, 5);
  std::size_t dropped = 0;
  for (double t : c.time) dropped += t < 1.0;
  CHECK(std::abs(static_cast<double>(dropped) / n - 0.02) < 0.002);
}

TEST_CASE("simulation is deterministic per seed") {
  const auto spec = scenario_coeffs(2);
  CHECK(simulate_trial(spec, 300, 80, 5) == simulate_trial(spec, 300, 80, 5));
  CHECK(!(simulate_trial(spec, 300, 80, 5) == simulate_trial(spec, 300, 80, 6)));
}

}
