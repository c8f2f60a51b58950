#include "subshrink/hmc.hpp"

#include "subshrink/error.hpp"
#include "subshrink/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace subshrink {

namespace {

struct ChainResult {
  Eigen::MatrixXd samples;
  double step = 0.0;
  double accept = 0.0;
  int divergences = 0;
};

class Chain {
 public:
  Chain(const LogDensity& f, Eigen::Index dim, const HmcConfig& config,
        std::uint64_t seed)
      : f_(f), dim_(dim), config_(config), rng_(seed),
        inv_metric_(Eigen::VectorXd::Ones(dim)) {}

  ChainResult run() {
    initialize();
    const int warmup = config_.warmup;
    const int window_begin = warmup / 4;
    const int window_end = warmup / 2;
    const bool adapt_metric = warmup >= 20;
    std::vector<Eigen::VectorXd> window;
    find_step();
    start_adaptation();

    ChainResult out;
    out.samples.resize(config_.draws, dim_);
    double accept_sum = 0.0;
    for (int it = 0; it < warmup + config_.draws; ++it) {
      bool divergent = false;
      const double a = transition(divergent);
      if (it < warmup) {
        adapt(a);
        if (adapt_metric && it >= window_begin && it < window_end)
          window.push_back(x_);
        if (adapt_metric && it == window_end - 1 && window.size() >= 2) {
          set_metric(window);
          find_step();
          start_adaptation();
        }
        if (it == warmup - 1) step_ = std::exp(log_step_bar_);
      } else {
        const int d = it - warmup;
        out.samples.row(d) = x_.transpose();
        accept_sum += a;
        if (divergent) ++out.divergences;
      }
    }
    if (warmup == 0) step_ = std::exp(log_step_bar_);
    out.step = step_;
    out.accept = config_.draws > 0 ? accept_sum / config_.draws : 0.0;
    return out;
  }

 private:
  void initialize() {
    std::uniform_real_distribution<double> u(-config_.init_radius,
                                             config_.init_radius);
    for (int attempt = 0; attempt < 100; ++attempt) {
      x_.resize(dim_);
      for (Eigen::Index j = 0; j < dim_; ++j) x_(j) = u(rng_);
      lp_ = f_(x_, grad_);
      if (std::isfinite(lp_) && grad_.allFinite()) return;
    }
    throw NumericalError("hmc: no finite initial point after 100 attempts");
  }

  double kinetic(const Eigen::VectorXd& p) const {
    return 0.5 * (p.array().square() * inv_metric_.array()).sum();
  }

  // One leapfrog trajectory of n steps from the current state. Returns the
  // Hamiltonian at the end (infinity on a non-finite density).
  double trajectory(int n, double eps, Eigen::VectorXd& x, Eigen::VectorXd& p,
                    double& lp, Eigen::VectorXd& g, double h0,
                    bool& divergent) const {
    divergent = false;
    for (int s = 0; s < n; ++s) {
      p.noalias() += 0.5 * eps * g;
      x.noalias() += eps * inv_metric_.cwiseProduct(p);
      lp = f_(x, g);
      if (!std::isfinite(lp)) {
        divergent = true;
        return std::numeric_limits<double>::infinity();
      }
      p.noalias() += 0.5 * eps * g;
      const double h = -lp + kinetic(p);
      if (h - h0 > config_.max_energy_error) {
        divergent = true;
        return h;
      }
    }
    return -lp + kinetic(p);
  }

  Eigen::VectorXd draw_momentum() {
    Eigen::VectorXd p(dim_);
    for (Eigen::Index j = 0; j < dim_; ++j)
      p(j) = normal_(rng_) / std::sqrt(inv_metric_(j));
    return p;
  }

  double transition(bool& divergent) {
    const int base = config_.leapfrog;
    const int lo = std::max(1, static_cast<int>(std::lround(base * (1.0 - config_.jitter))));
    const int hi = std::max(lo, static_cast<int>(std::lround(base * (1.0 + config_.jitter))));
    const int n = std::uniform_int_distribution<int>(lo, hi)(rng_);
    Eigen::VectorXd p = draw_momentum();
    const double h0 = -lp_ + kinetic(p);
    Eigen::VectorXd x = x_, g = grad_;
    double lp = lp_;
    const double h = trajectory(n, step_, x, p, lp, g, h0, divergent);
    const double a = divergent ? 0.0 : std::min(1.0, std::exp(h0 - h));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    if (u < a) {
      x_ = std::move(x);
      grad_ = std::move(g);
      lp_ = lp;
    }
    return std::isfinite(a) ? a : 0.0;
  }

  // Doubles or halves the step until a single leapfrog step's acceptance
  // crosses 0.5.
  void find_step() {
    if (step_ <= 0.0) step_ = 1.0;
    auto accept_of = [&](double eps) {
      Eigen::VectorXd p = draw_momentum();
      const double h0 = -lp_ + kinetic(p);
      Eigen::VectorXd x = x_, g = grad_;
      double lp = lp_;
      bool div = false;
      const double h = trajectory(1, eps, x, p, lp, g, h0, div);
      return div ? 0.0 : std::exp(std::min(0.0, h0 - h));
    };
    const double first = accept_of(step_);
    const double dir = first > 0.5 ? 1.0 : -1.0;
    for (int i = 0; i < 50; ++i) {
      const double next = step_ * std::pow(2.0, dir);
      const double a = accept_of(next);
      if ((dir > 0 && !(a > 0.5)) || (dir < 0 && a > 0.5)) {
        if (dir < 0) step_ = next;
        break;
      }
      step_ = next;
    }
  }

  void start_adaptation() {
    mu_ = std::log(10.0 * step_);
    hbar_ = 0.0;
    log_step_bar_ = std::log(step_);
    t_ = 0;
  }

  void adapt(double accept) {
    constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;
    ++t_;
    const double eta = 1.0 / (t_ + kT0);
    hbar_ = (1.0 - eta) * hbar_ + eta * (config_.target_accept - accept);
    const double log_step = mu_ - std::sqrt(static_cast<double>(t_)) / kGamma * hbar_;
    const double w = std::pow(static_cast<double>(t_), -kKappa);
    log_step_bar_ = w * log_step + (1.0 - w) * log_step_bar_;
    step_ = std::exp(log_step);
  }

  void set_metric(const std::vector<Eigen::VectorXd>& window) {
    const double n = static_cast<double>(window.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_);
    for (const auto& w : window) mean += w;
    mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim_);
    for (const auto& w : window) var += (w - mean).array().square().matrix();
    var /= (n - 1.0);
    // Shrink toward a small multiple of the identity.
    inv_metric_ = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

  const LogDensity& f_;
  Eigen::Index dim_;
  HmcConfig config_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  Eigen::VectorXd inv_metric_;
  Eigen::VectorXd x_, grad_;
  double lp_ = 0.0;
  double step_ = 1.0;
  double mu_ = 0.0, hbar_ = 0.0, log_step_bar_ = 0.0;
  long t_ = 0;
};

}  // namespace

Eigen::VectorXd PosteriorDraws::chain_draws(int chain, Eigen::Index param) const {
  return samples.col(param).segment(static_cast<Eigen::Index>(chain) * draws,
                                    draws);
}

PosteriorDraws hmc_sample(const LogDensity& log_density, Eigen::Index dim,
                          const HmcConfig& config) {
  if (config.chains < 1 || config.warmup < 0 || config.draws < 1 ||
      config.leapfrog < 1 || !(config.target_accept > 0.0) ||
      !(config.target_accept < 1.0) || dim < 1)
    throw ConfigError("hmc: invalid configuration");
  std::vector<ChainResult> results(static_cast<std::size_t>(config.chains));
  parallel_for(results.size(), config.jobs, [&](std::size_t c) {
    Chain chain(log_density, dim, config, derive_seed(config.seed, c, "hmc"));
    results[c] = chain.run();
  });

  PosteriorDraws out;
  out.chains = config.chains;
  out.draws = config.draws;
  out.samples.resize(static_cast<Eigen::Index>(config.chains) * config.draws,
                     dim);
  double accept_sum = 0.0;
  for (int c = 0; c < config.chains; ++c) {
    const auto& r = results[static_cast<std::size_t>(c)];
    out.samples.middleRows(static_cast<Eigen::Index>(c) * config.draws,
                           config.draws) = r.samples;
    out.step_size.push_back(r.step);
    out.accept_rate.push_back(r.accept);
    out.divergences.push_back(r.divergences);
    out.total_divergences += r.divergences;
    accept_sum += r.accept;
  }
  out.mean_accept = accept_sum / config.chains;
  for (int c = 0; c < config.chains; ++c) {
    if (out.accept_rate[static_cast<std::size_t>(c)] < 0.1) {
      std::ostringstream msg;
      msg << "hmc: chain " << c << " acceptance "
          << out.accept_rate[static_cast<std::size_t>(c)] << " after warmup"
          << " (step " << out.step_size[static_cast<std::size_t>(c)]
          << ", divergences " << out.divergences[static_cast<std::size_t>(c)]
          << ")";
      throw NumericalError(msg.str());
    }
  }
  if (config.chains >= 2)
    for (Eigen::Index j = 0; j < dim; ++j) out.rhat.push_back(split_rhat(out, j));
  return out;
}

double split_rhat(const PosteriorDraws& draws, Eigen::Index param) {
  if (draws.chains < 2 || draws.draws < 4)
    throw std::invalid_argument("split_rhat: need >= 2 chains, >= 4 draws");
  const Eigen::Index half = draws.draws / 2;
  std::vector<Eigen::VectorXd> parts;
  for (int c = 0; c < draws.chains; ++c) {
    const Eigen::VectorXd x = draws.chain_draws(c, param);
    parts.push_back(x.head(half));
    parts.push_back(x.tail(half));
  }
  const double n = static_cast<double>(half);
  const double m = static_cast<double>(parts.size());
  Eigen::VectorXd means(parts.size());
  double within = 0.0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    means(static_cast<Eigen::Index>(j)) = parts[j].mean();
    within += (parts[j].array() - parts[j].mean()).square().sum() / (n - 1.0);
  }
  within /= m;
  const double between =
      n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

double effective_sample_size(const PosteriorDraws& draws, Eigen::Index param) {
  const int m = draws.chains;
  const Eigen::Index n = draws.draws;
  if (n < 4) throw std::invalid_argument("ess: need >= 4 draws");
  std::vector<Eigen::VectorXd> centered;
  Eigen::VectorXd means(m);
  double within = 0.0;
  for (int c = 0; c < m; ++c) {
    const Eigen::VectorXd x = draws.chain_draws(c, param);
    means(c) = x.mean();
    centered.push_back(x.array() - x.mean());
    within += centered.back().squaredNorm() / (static_cast<double>(n) - 1.0);
  }
  within /= m;
  const double dn = static_cast<double>(n);
  const double between =
      m > 1 ? dn * (means.array() - means.mean()).square().sum() / (m - 1.0)
            : 0.0;
  const double var_plus = (dn - 1.0) / dn * within + between / dn;
  if (!(var_plus > 0.0)) return static_cast<double>(m) * dn;
  auto rho = [&](Eigen::Index lag) {
    double acov = 0.0;
    for (int c = 0; c < m; ++c) {
      const auto& x = centered[static_cast<std::size_t>(c)];
      acov += x.head(n - lag).dot(x.tail(n - lag)) / dn;
    }
    acov /= m;
    return 1.0 - (within - acov) / var_plus;
  };
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(dn * m));
  return static_cast<double>(m) * dn / tau;
}

}  // namespace subshrink
