#pragma once

#include "subshrink/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace subshrink {

inline constexpr std::uint64_t kScenarioMasterSeed = 20240321;

struct ScenarioSpec {
  int id = 1;
  double alpha0 = 2.0;
  double sigma = 0.85;
  double beta0 = 0.0;
  // AFT coefficients per subgroup (schema order).
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  // Treatment-by-X1-by-X2 terms for (1a,2a), (1a,2b), (1b,2a), (1b,2b).
  bool has_triple = false;
  std::array<double, 4> triple{};
  Eigen::MatrixXd latent_correlation;
  std::vector<std::vector<double>> proportions;
  double heterogeneity_sd = 0.0;
  std::uint64_t master_seed = kScenarioMasterSeed;
  bool literal_scenario45_formula = false;
};

// X1..X10 with levels a, b, c, d per the simulation design.
SubgroupSchema simulation_schema();
std::vector<std::vector<double>> simulation_proportions();
Eigen::MatrixXd simulation_latent_correlation();

// Scenario 4/5 interactions are beta = -sigma * gamma with gamma drawn once
// from the master seed (shared standard-normal draws scaled by the sd).
// The literal flag switches to beta = -log(sigma) * gamma.
ScenarioSpec scenario_coeffs(int id,
                             std::uint64_t master_seed = kScenarioMasterSeed,
                             bool literal_scenario45_formula = false);

// Latent 10-dimensional normal draws, n x 10.
Eigen::MatrixXd gen_latent(std::size_t n, std::uint64_t seed);
CovariateTable categorize_latent(const Eigen::MatrixXd& latent,
                                 const std::vector<std::vector<double>>& proportions);
CovariateTable gen_covariates(std::size_t n, std::uint64_t seed);

// Alternating assignment: even index control, odd index intervention.
std::vector<int> alternating_treatment(std::size_t n);

// Uncensored Weibull AFT event times.
std::vector<double> gen_outcomes(const CovariateTable& covariates,
                                 const ScenarioSpec& spec,
                                 const std::vector<int>& treatment,
                                 std::uint64_t seed);

struct CensoringConfig {
  double recruitment_years = 3.0;
  double dropout_rate = 0.020202707317519466;  // -log(0.98)
};

struct CensoredSample {
  std::vector<std::size_t> subjects;  // analysis set, ascending
  std::vector<double> time;
  std::vector<int> event;
  double cutoff = 0.0;  // calendar time
};

// Uniform recruitment, exponential dropout and administrative censoring at
// the calendar time of the n_target-th event. Subjects recruited after the
// cutoff are excluded. n_target = 0 disables the cutoff.
CensoredSample apply_censoring(const std::vector<double>& event_times,
                               std::size_t n_target, std::uint64_t seed,
                               const CensoringConfig& config = {});

TrialDataset simulate_trial(const ScenarioSpec& spec, std::size_t n,
                            std::size_t n_target, std::uint64_t seed,
                            const CensoringConfig& censoring = {});

struct TrueAhrTable {
  int scenario = 0;
  std::size_t n_large = 0;
  int repetitions = 0;
  double quantile = 0.95;
  std::uint64_t seed = 0;
  double overall_log = 0.0;
  std::vector<double> subgroup_log;
  std::vector<std::string> labels;

  double overall() const;
  double subgroup(std::size_t k) const;
};

// Event fraction 247/1000 is kept at every n_large.
TrueAhrTable true_ahr_oracle(const ScenarioSpec& spec, std::size_t n_large,
                             int repetitions, std::uint64_t seed, int jobs = 1);

}  // namespace subshrink
