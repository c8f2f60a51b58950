#include "subshrink/horseshoe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace subshrink {

namespace {

// log density of a half Student-t(df, scale) at x = e^u plus the log
// Jacobian u, with its derivative in u.
double log_half_t(double u, double df, double scale, double& du) {
  const double r = std::exp(2.0 * u) / (df * scale * scale);
  du = -(df + 1.0) * r / (1.0 + r) + 1.0;
  return -0.5 * (df + 1.0) * std::log1p(r) + u;
}

}  // namespace

HorseshoeModel::HorseshoeModel(const TrialDataset& dataset,
                               const SubgroupSchema& schema,
                               MsplineBasis basis, HorseshoePrior prior)
    : n_(dataset.size()),
      p_(schema.num_variables()),
      k_(schema.num_subgroups()),
      m_(basis.size()),
      basis_(std::move(basis)),
      prior_(prior) {
  for (std::size_t v = 0; v < p_; ++v) {
    var_offset_.push_back(schema.offset(v));
    var_levels_.push_back(schema.num_levels(v));
  }
  member_.resize(n_ * p_);
  treatment_.resize(n_);
  event_ = dataset.event();
  mval_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
  ival_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
  std::vector<double> buf(m_);
  for (std::size_t i = 0; i < n_; ++i) {
    treatment_[i] = dataset.treatment()[i];
    for (std::size_t v = 0; v < p_; ++v)
      member_[i * p_ + v] = schema.subgroup_index(
          v, static_cast<std::size_t>(dataset.covariates().level(i, v)));
    const double t = dataset.time()[i];
    basis_.mspline(t, buf);
    for (std::size_t m = 0; m < m_; ++m)
      mval_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          buf[m];
    basis_.ispline(t, buf);
    for (std::size_t m = 0; m < m_; ++m)
      ival_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          buf[m];
  }
}

Eigen::MatrixXd HorseshoeModel::sampler_transform() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
  const auto eta = static_cast<Eigen::Index>(eta0_index());
  for (std::size_t v = 0; v < p_; ++v) {
    const auto o = static_cast<Eigen::Index>(alpha_index(var_offset_[v]));
    const auto l = static_cast<Eigen::Index>(var_levels_[v]);
    a.block(o, o, l, l).setZero();
    a.block(o, o, l, 1).setOnes();
    // Normalized Helmert contrasts.
    for (Eigen::Index c = 1; c < l; ++c) {
      const double s = 1.0 / std::sqrt(static_cast<double>(c * (c + 1)));
      for (Eigen::Index r = 0; r < c; ++r) a(o + r, o + c) = s;
      a(o + c, o + c) = -static_cast<double>(c) * s;
    }
    a(eta, o) = -1.0;
  }
  return a;
}

HorseshoeState HorseshoeModel::reconstruct(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim())
    throw std::invalid_argument("horseshoe: parameter size mismatch");
  HorseshoeState s;
  const auto K = static_cast<Eigen::Index>(k_);
  s.beta0 = theta(0);
  s.alpha = theta.segment(1, K);
  s.tau = std::exp(theta(static_cast<Eigen::Index>(log_tau_index())));
  s.slab2 = std::exp(theta(static_cast<Eigen::Index>(log_slab_index())));
  s.local = theta.segment(1 + 2 * K, K).array().exp();
  s.beta = Eigen::VectorXd::Zero(K);
  if (!prior_.interactions_fixed_zero) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const double l2 = s.local(k) * s.local(k);
      const double lt2 = s.slab2 * l2 / (s.slab2 + s.tau * s.tau * l2);
      s.beta(k) = theta(1 + K + k) * s.tau * std::sqrt(lt2);
    }
  }
  s.eta0 = theta(static_cast<Eigen::Index>(eta0_index()));
  const auto logits =
      theta.segment(static_cast<Eigen::Index>(logit_index(0)),
                    static_cast<Eigen::Index>(m_));
  const double top = logits.maxCoeff();
  s.weights = (logits.array() - top).exp();
  s.weights /= s.weights.sum();
  return s;
}

double HorseshoeModel::log_posterior(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g;
  return log_posterior(theta, g);
}

double HorseshoeModel::log_posterior(const Eigen::VectorXd& theta,
                                     Eigen::VectorXd& grad) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  grad.setZero(static_cast<Eigen::Index>(dim()));
  if (!theta.allFinite()) return kNegInf;
  const HorseshoeState s = reconstruct(theta);
  const auto K = static_cast<Eigen::Index>(k_);
  const auto M = static_cast<Eigen::Index>(m_);

  // Likelihood.
  double value = 0.0;
  Eigen::VectorXd g_alpha = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd g_beta = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd g_w = Eigen::VectorXd::Zero(M);
  double g_beta0 = 0.0, g_eta0 = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double z = treatment_[i];
    double lp = s.beta0 * z;
    for (std::size_t v = 0; v < p_; ++v) {
      const auto k = static_cast<Eigen::Index>(member_[i * p_ + v]);
      lp += s.alpha(k) + s.beta(k) * z;
    }
    const double scale = std::exp(s.eta0 + lp);
    const double cum = ival_.row(ii).dot(s.weights);
    double r = -scale * cum;
    value += r;
    g_w.noalias() -= scale * ival_.row(ii).transpose();
    if (event_[i]) {
      const double haz = mval_.row(ii).dot(s.weights);
      value += s.eta0 + lp + std::log(haz);
      g_w.noalias() += mval_.row(ii).transpose() / haz;
      r += 1.0;
    }
    g_eta0 += r;
    g_beta0 += r * z;
    for (std::size_t v = 0; v < p_; ++v) {
      const auto k = static_cast<Eigen::Index>(member_[i * p_ + v]);
      g_alpha(k) += r;
      g_beta(k) += r * z;
    }
  }
  if (!std::isfinite(value)) return kNegInf;

  // Normal priors on mains and the baseline intercept.
  const double prec = 1.0 / (prior_.main_sd * prior_.main_sd);
  value -= 0.5 * prec * (s.beta0 * s.beta0 + s.alpha.squaredNorm() +
                         s.eta0 * s.eta0);
  grad(0) = g_beta0 - prec * s.beta0;
  grad.segment(1, K) = g_alpha - prec * s.alpha;
  grad(static_cast<Eigen::Index>(eta0_index())) = g_eta0 - prec * s.eta0;

  // Regularized horseshoe.
  const Eigen::Index i_tau = static_cast<Eigen::Index>(log_tau_index());
  const Eigen::Index i_slab = static_cast<Eigen::Index>(log_slab_index());
  double d;
  value += log_half_t(theta(i_tau), prior_.global_df, prior_.global_scale, d);
  grad(i_tau) += d;
  const double a = 0.5 * prior_.slab_df;
  const double b = 0.5 * prior_.slab_df * prior_.slab_scale * prior_.slab_scale;
  value += -a * theta(i_slab) - b / s.slab2;
  grad(i_slab) += -a + b / s.slab2;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double zk = theta(1 + K + k);
    value -= 0.5 * zk * zk;
    grad(1 + K + k) -= zk;
    value += log_half_t(theta(1 + 2 * K + k), prior_.local_df, 1.0, d);
    grad(1 + 2 * K + k) += d;
    if (prior_.interactions_fixed_zero) continue;
    // beta = z tau lt with lt^2 = c^2 l^2 / (c^2 + tau^2 l^2).
    const double l2 = s.local(k) * s.local(k);
    const double q = s.tau * s.tau * l2 / (s.slab2 + s.tau * s.tau * l2);
    const double gb = g_beta(k);
    const double lt = std::sqrt(s.slab2 * l2 / (s.slab2 + s.tau * s.tau * l2));
    grad(1 + K + k) += gb * s.tau * lt;
    grad(1 + 2 * K + k) += gb * s.beta(k) * (1.0 - q);
    grad(i_tau) += gb * s.beta(k) * (1.0 - q);
    grad(i_slab) += gb * s.beta(k) * 0.5 * q;
  }

  // Dirichlet simplex through softmax: Jacobian prod w_m, plus a standard
  // normal on the mean logit, which the softmax leaves unidentified.
  const Eigen::Index i_logit = static_cast<Eigen::Index>(logit_index(0));
  const double conc = prior_.dirichlet_concentration;
  const auto logits = theta.segment(i_logit, M);
  const double mean_logit = logits.mean();
  value += conc * s.weights.array().log().sum() - 0.5 * mean_logit * mean_logit;
  const double wg = s.weights.dot(g_w);
  for (Eigen::Index m = 0; m < M; ++m)
    grad(i_logit + m) = s.weights(m) * (g_w(m) - wg) +
                        conc * (1.0 - static_cast<double>(M) * s.weights(m)) -
                        mean_logit / static_cast<double>(M);

  if (!std::isfinite(value) || !grad.allFinite()) return kNegInf;
  return value;
}

}  // namespace subshrink
