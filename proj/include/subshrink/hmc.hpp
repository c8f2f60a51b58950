#pragma once

#include "subshrink/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace subshrink {

// Log density with gradient; must be safe to call concurrently.
using LogDensity =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct HmcConfig {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double target_accept = 0.8;
  int leapfrog = 32;
  double jitter = 0.2;  // leapfrog count drawn uniformly in L*(1 -+ jitter)
  double max_energy_error = 1000.0;
  double init_radius = 2.0;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct PosteriorDraws {
  // Rows: chain-major retained draws (chain c, draw d at c*draws + d).
  Eigen::MatrixXd samples;
  int chains = 0;
  int draws = 0;
  std::vector<double> step_size;     // per chain, after adaptation
  std::vector<double> accept_rate;   // per chain, mean over retained draws
  std::vector<int> divergences;      // per chain, retained draws
  std::vector<double> rhat;          // split R-hat per parameter
  double mean_accept = 0.0;
  int total_divergences = 0;

  Eigen::VectorXd chain_draws(int chain, Eigen::Index param) const;
};

// Static-length HMC with jittered leapfrog count, per-chain dual-averaging
// step-size adaptation over the whole warmup and a diagonal metric set from
// the draws in [warmup/4, warmup/2). Throws NumericalError if a chain's
// post-warmup acceptance is below 0.1.
PosteriorDraws hmc_sample(const LogDensity& log_density, Eigen::Index dim,
                          const HmcConfig& config);

// Split R-hat of one parameter across chains (requires >= 2 chains).
double split_rhat(const PosteriorDraws& draws, Eigen::Index param);

// Multi-chain effective sample size from initial positive sequences of the
// pooled autocorrelation.
double effective_sample_size(const PosteriorDraws& draws, Eigen::Index param);

}  // namespace subshrink
