#pragma once

#include "subshrink/dataset.hpp"
#include "subshrink/mspline.hpp"

#include <Eigen/Dense>

#include <vector>

namespace subshrink {

struct HorseshoePrior {
  double main_sd = 5.0;
  double local_df = 1.0;
  double global_df = 1.0;
  double global_scale = 1.0;
  double slab_df = 4.0;
  double slab_scale = 2.0;
  double dirichlet_concentration = 1.0;
  // Replaces the interaction prior by a point mass at 0.
  bool interactions_fixed_zero = false;
};

// Constrained quantities reconstructed from an unconstrained point.
struct HorseshoeState {
  double beta0 = 0.0;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double tau = 0.0;
  Eigen::VectorXd local;  // lambda_k
  double slab2 = 0.0;     // c^2
  double eta0 = 0.0;
  Eigen::VectorXd weights;  // spline simplex
};

// Bayesian global Cox model with hazard
//   h_i(t) = exp(eta0) * sum_m w_m M_m(t) * exp(lp_i)
// and unconstrained parameter layout
//   [beta0, alpha (K), z (K), log lambda (K), log tau, log c^2, eta0,
//    simplex logits (M)].
class HorseshoeModel {
 public:
  HorseshoeModel(const TrialDataset& dataset, const SubgroupSchema& schema,
                 MsplineBasis basis, HorseshoePrior prior = {});

  std::size_t dim() const { return 3 * k_ + 4 + m_; }
  std::size_t num_subgroups() const { return k_; }
  const MsplineBasis& basis() const { return basis_; }
  const HorseshoePrior& prior() const { return prior_; }

  std::size_t beta0_index() const { return 0; }
  std::size_t alpha_index(std::size_t k) const { return 1 + k; }
  std::size_t z_index(std::size_t k) const { return 1 + k_ + k; }
  std::size_t log_local_index(std::size_t k) const { return 1 + 2 * k_ + k; }
  std::size_t log_tau_index() const { return 1 + 3 * k_; }
  std::size_t log_slab_index() const { return 2 + 3 * k_; }
  std::size_t eta0_index() const { return 3 + 3 * k_; }
  std::size_t logit_index(std::size_t m) const { return 4 + 3 * k_ + m; }

  // Log posterior (up to a constant) and its gradient. Returns -infinity
  // for points where the density is not finite.
  double log_posterior(const Eigen::VectorXd& theta,
                       Eigen::VectorXd& gradient) const;
  double log_posterior(const Eigen::VectorXd& theta) const;

  HorseshoeState reconstruct(const Eigen::VectorXd& theta) const;

  // Linear map theta = A phi used by the sampler. Within each variable the
  // main effects become a mean plus orthonormal contrasts, and the baseline
  // intercept slot carries eta0 + sum of the means, the only combination the
  // likelihood sees. Identity on every other coordinate.
  Eigen::MatrixXd sampler_transform() const;

  // Subgroup memberships of subject i, one per variable.
  std::span<const std::size_t> memberships(std::size_t i) const {
    return {member_.data() + i * p_, p_};
  }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::size_t k_ = 0;
  std::size_t m_ = 0;
  std::vector<std::size_t> var_offset_;
  std::vector<std::size_t> var_levels_;
  std::vector<std::size_t> member_;
  std::vector<double> treatment_;
  std::vector<int> event_;
  Eigen::MatrixXd mval_;  // M_m(t_i), n x M
  Eigen::MatrixXd ival_;  // I_m(t_i), n x M
  MsplineBasis basis_;
  HorseshoePrior prior_;
};

}  // namespace subshrink
