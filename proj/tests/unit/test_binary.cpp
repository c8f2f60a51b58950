#include "subshrink/binary.hpp"
#include "subshrink/rng.hpp"
#include "subshrink/simulation.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace subshrink;

namespace {

double logit(double p) { return std::log(p / (1 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

BinaryDataset table_2x2x2() {
  // (level, arm) -> events / totals
  const int events[2][2] = {{10, 30}, {5, 12}};
  const int totals[2][2] = {{20, 40}, {25, 16}};
  std::vector<int> y, arm, lev;
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < totals[l][a]; ++i) {
        y.push_back(i < events[l][a]);
        arm.push_back(a);
        lev.push_back(l);
      }
  return BinaryDataset(y, arm, CovariateTable(1, lev), binary_schema(1));
}

BinaryDataset random_binary(std::size_t n, std::uint64_t seed) {
  const auto schema = simulation_schema();
  const auto cov = gen_covariates(n, seed);
  const auto arm = alternating_treatment(n);
  Rng rng(seed + 1);
  std::uniform_real_distribution<double> ud;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = ud(rng) < expit(-0.4 + 0.5 * arm[i] + 0.3 * cov.level(i, 0) - 0.2 * cov.level(i, 4));
  return BinaryDataset(y, arm, cov, schema);
}

}  // namespace

TEST_SUITE("binary-ext") {

TEST_CASE("saturated 2x2 table matches closed-form log-odds") {
  const auto schema = binary_schema(1);
  const auto d = table_2x2x2();
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  const auto fit = fit_global_logistic(design, schema, d, PenaltyKind::none, 0.0);
  const double cells[2][2] = {{10.0 / 20, 30.0 / 40}, {5.0 / 25, 12.0 / 16}};
  for (Eigen::Index i = 0; i < design.x.rows(); ++i) {
    const double eta = fit.intercept + design.x.row(i).dot(fit.coefficients);
    const auto l = d.covariates().level(static_cast<std::size_t>(i), 0);
    const auto a = d.treatment()[static_cast<std::size_t>(i)];
    CHECK(std::abs(eta - logit(cells[l][a])) < 1e-8);
  }
  const auto effects = standardize_binary(fit, design, d, schema);
  CHECK(std::abs(std::log(*effects[0].odds_ratio) - (logit(0.75) - logit(0.5))) < 1e-8);
  CHECK(std::abs(effects[1].risk_difference - (0.75 - 0.2)) < 1e-8);
}

TEST_CASE("negative log-likelihood gradient") {
  const auto d = random_binary(300, 3);
  const auto schema = simulation_schema();
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  Rng rng(2);
  std::normal_distribution<double> nd(0.0, 0.3);
  Eigen::VectorXd beta(static_cast<Eigen::Index>(design.cols()));
  for (auto& b : beta) b = nd(rng);
  Eigen::VectorXd g;
  logistic_negloglik(design.x, d.outcome(), 0.1, beta, &g);
  for (Eigen::Index j = 0; j < beta.size(); j += 5) {
    const double h = 1e-5;
    Eigen::VectorXd up = beta, dn = beta;
    up(j) += h;
    dn(j) -= h;
    const double fd = (logistic_negloglik(design.x, d.outcome(), 0.1, up) -
                       logistic_negloglik(design.x, d.outcome(), 0.1, dn)) / (2 * h);
    CHECK(std::abs(g(j + 1) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("a huge penalty zeroes interactions") {
  const auto d = random_binary(400, 5);
  const auto schema = simulation_schema();
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  const auto fit = fit_global_logistic(design, schema, d, PenaltyKind::lasso, 1e6);
  for (std::size_t k = 0; k < 25; ++k)
    CHECK(fit.coefficients(static_cast<Eigen::Index>(design.interaction_col(k))) == 0.0);
}

TEST_CASE("null model and hand fixture standardization") {
  const auto schema = binary_schema(1);
  const BinaryDataset d({1, 0, 1, 0}, {0, 1, 1, 0}, CovariateTable(1, {0, 0, 1, 1}), schema);
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  LogisticFit fit;
  fit.intercept = 0.2;
  fit.coefficients = Eigen::VectorXd::Zero(5);
  for (const auto& e : standardize_binary(fit, design, d, schema)) {
    CHECK(e.risk_difference == 0.0);
    CHECK(*e.odds_ratio == doctest::Approx(1.0));
    CHECK(*e.risk_ratio == doctest::Approx(1.0));
  }
  // Columns: treatment, a, b, a*z, b*z.
  fit.coefficients << 0.5, 0.0, -1.0, 0.3, 0.0;
  const auto e = standardize_binary(fit, design, d, schema);
  CHECK(e[0].p_control == doctest::Approx(expit(0.2)));
  CHECK(e[0].p_intervention == doctest::Approx(expit(1.0)));
  CHECK(e[1].p_control == doctest::Approx(expit(-0.8)));
  CHECK(e[1].p_intervention == doctest::Approx(expit(-0.3)));
}

TEST_CASE("swapping arms negates differences and inverts odds ratios") {
  const auto d = random_binary(800, 9);
  const auto schema = simulation_schema();
  std::vector<int> swapped = d.treatment();
  for (auto& a : swapped) a = 1 - a;
  const BinaryDataset s(d.outcome(), swapped, d.covariates(), schema);
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  const auto design_s = build_design(s.covariates(), s.treatment(), schema);
  const auto e = standardize_binary(fit_global_logistic(design, schema, d, PenaltyKind::none, 0.0),
                                    design, d, schema);
  const auto es = standardize_binary(
      fit_global_logistic(design_s, schema, s, PenaltyKind::none, 0.0), design_s, s, schema);
  for (std::size_t k = 0; k < e.size(); ++k) {
    CHECK(es[k].risk_difference == doctest::Approx(-e[k].risk_difference).epsilon(1e-7));
    CHECK(*es[k].odds_ratio == doctest::Approx(1.0 / *e[k].odds_ratio).epsilon(1e-7));
  }
}

TEST_CASE("equivalence holds for unpenalized fits only") {
  const auto d = random_binary(1000, 12);
  const auto schema = simulation_schema();
  const auto design = build_design(d.covariates(), d.treatment(), schema);
  const auto fit = fit_global_logistic(design, schema, d, PenaltyKind::none, 0.0);
  CHECK(check_equivalence(fit, design, d, schema) < 1e-8);
  const auto ridge = fit_global_logistic(design, schema, d, PenaltyKind::ridge, 5.0);
  CHECK(check_equivalence(ridge, design, d, schema) > 1e-6);
}

TEST_CASE("binary CSV round trip") {
  const auto d = random_binary(50, 1);
  const auto schema = simulation_schema();
  CHECK(parse_binary_dataset(serialize_binary_dataset(d, schema), schema) == d);
}

}
