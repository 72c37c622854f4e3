#include "coldbound/bounds.hpp"

#include <limits>
#include <string>

#include "coldbound/random.hpp"

namespace coldbound {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be positive and finite");
  }
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
}

McEstimate mean_and_se(const Eigen::VectorXd& v) {
  McEstimate est;
  est.samples = static_cast<int>(v.size());
  est.value = v.mean();
  if (v.size() > 1) {
    const double var = (v.array() - est.value).square().sum() / static_cast<double>(v.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(v.size()));
  }
  return est;
}

}  // namespace

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::approximate: return "approximate";
    case BoundKind::mixed: return "mixed";
    case BoundKind::original: return "original";
  }
  return "?";
}

const char* to_string(MomentForm form) {
  return form == MomentForm::derived ? "derived" : "headline";
}

BoundBreakdown assemble_bound(BoundKind kind, double lambda, double prior_var, double delta,
                              double empirical_risk, double kl_term, double moment_term) {
  BoundBreakdown b;
  b.kind = kind;
  b.lambda = lambda;
  b.prior_var = prior_var;
  b.delta = delta;
  b.empirical_risk = empirical_risk;
  b.kl_term = kl_term;
  b.moment_term = moment_term;
  b.total = empirical_risk + kl_term + moment_term;
  return b;
}

double kl_gaussian_iso(const IsotropicGaussian& post, const IsotropicGaussian& prior) {
  if (post.dim() != prior.dim()) throw ShapeError("KL between Gaussians of different dimension");
  const double gap = (post.mean().values() - prior.mean().values()).squaredNorm();
  return kl_gaussian_iso<double>(static_cast<double>(post.dim()), post.variance(), prior.variance(), gap);
}

double moment_closed(double lambda, const MomentConfig& cfg, double prior_var, Eigen::Index d,
                     MomentForm form) {
  require_lambda(lambda);
  const double c = moment_constraint(static_cast<double>(cfg.n), cfg.sigma_x2, prior_var);
  const double slack = 1.0 - lambda * c;
  if (!(slack > 0.0)) {
    throw DomainError("closed-form moment needs lambda < 1/c = " + std::to_string(1.0 / c), c);
  }
  const double spread = cfg.sigma_x2 * (prior_var * static_cast<double>(d) + cfg.w_star_norm2);
  if (form == MomentForm::headline) return spread / slack + cfg.sigma_eps2;
  return spread / (2.0 - 2.0 * lambda * static_cast<double>(cfg.n) * 2.0 * cfg.sigma_x2 * prior_var) +
         cfg.sigma_eps2 / 2.0;
}

McEstimate empirical_risk_mc(const IsotropicGaussian& post, const Batch& data,
                             const Eigen::MatrixXd& standard_noise) {
  if (data.size() == 0) throw std::invalid_argument("empirical risk needs data");
  if (standard_noise.cols() < 1) throw std::invalid_argument("need at least one posterior draw");
  Eigen::VectorXd per_draw(standard_noise.cols());
  for (Eigen::Index i = 0; i < standard_noise.cols(); ++i) {
    per_draw[i] = mean_nll(post.draw(standard_noise.col(i)), data);
  }
  return mean_and_se(per_draw);
}

McEstimate empirical_risk_mc(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                             std::uint64_t rng_seed) {
  if (m < 1) throw std::invalid_argument("need at least one posterior draw");
  Rng rng(rng_seed);
  Eigen::MatrixXd noise(post.dim(), m);
  for (int i = 0; i < m; ++i) noise.col(i) = standard_normal_vector(post.dim(), rng);
  return empirical_risk_mc(post, pack(data), noise);
}

PriorLossTable build_prior_loss_table(const IsotropicGaussian& prior, Eigen::Index n,
                                      const TrueRiskFn& true_risk, const DataSampler& sampler,
                                      int m_prior, int m_data, std::uint64_t rng_seed,
                                      Eigen::Index true_set_size) {
  if (m_prior < 1 || m_data < 1) throw std::invalid_argument("moment budgets must be positive");
  PriorLossTable t;
  t.n = n;
  t.true_set_size = true_set_size;
  t.true_risk.resize(m_prior);
  t.empirical.resize(m_prior, m_data);
  for (int i = 0; i < m_prior; ++i) {
    Rng rng(derive_seed(rng_seed, {0, std::uint64_t(i)}));
    const FlatParams w = prior.sample(rng);
    t.true_risk[i] = true_risk(w);
    for (int j = 0; j < m_data; ++j) {
      const SampleList fresh = sampler(derive_seed(rng_seed, {1, std::uint64_t(i), std::uint64_t(j)}));
      if (static_cast<Eigen::Index>(fresh.size()) != n) {
        throw std::invalid_argument("data sampler returned " + std::to_string(fresh.size()) +
                                    " samples, expected " + std::to_string(n));
      }
      t.empirical(i, j) = mean_nll(w, pack(fresh));
    }
  }
  return t;
}

McEstimate moment_mc(double lambda, const PriorLossTable& table) {
  require_lambda(lambda);
  const double scale = lambda * static_cast<double>(table.n);
  Eigen::MatrixXd expo = scale * (table.true_risk.replicate(1, table.m_data()) - table.empirical);
  const double top = expo.maxCoeff();
  const Eigen::ArrayXXd e = (expo.array() - top).exp();
  const double m = static_cast<double>(e.size());
  const double mean_e = e.mean();

  McEstimate est;
  est.samples = static_cast<int>(e.size());
  est.value = (top + std::log(mean_e)) / scale;
  if (e.size() > 1) {
    const double var_e = (e - mean_e).square().sum() / (m - 1.0);
    // delta method for ln(mean)
    est.std_error = std::sqrt(var_e / m) / mean_e / scale;
  }
  return est;
}

McEstimate moment_mc(double lambda, Eigen::Index n, const IsotropicGaussian& prior,
                     const TrueRiskFn& true_risk, const DataSampler& sampler, int m_prior,
                     int m_data, std::uint64_t rng_seed) {
  return moment_mc(lambda, build_prior_loss_table(prior, n, true_risk, sampler, m_prior, m_data, rng_seed));
}

namespace {

double kl_term_of(const IsotropicGaussian& post, const IsotropicGaussian& prior, double lambda,
                  double delta, double n) {
  return (kl_gaussian_iso(post, prior) + std::log(1.0 / delta)) / (lambda * n);
}

void check_moment_table(const PriorLossTable& moments, Eigen::Index n) {
  if (moments.n != n) {
    throw std::invalid_argument("moment table was built for n = " + std::to_string(moments.n) +
                                " but the bound uses n = " + std::to_string(n));
  }
}

}  // namespace

BoundBreakdown bound_original(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                              double lambda, double delta, const Batch& data,
                              const Eigen::MatrixXd& posterior_noise, const PriorLossTable& moments) {
  require_lambda(lambda);
  require_delta(delta);
  const Eigen::Index n = data.size();
  check_moment_table(moments, n);
  const McEstimate er = empirical_risk_mc(post, data, posterior_noise);
  const McEstimate mom = moment_mc(lambda, moments);
  BoundBreakdown b = assemble_bound(BoundKind::original, lambda, prior.variance(), delta, er.value,
                                    kl_term_of(post, prior, lambda, delta, double(n)), mom.value);
  b.empirical_risk_se = er.std_error;
  b.moment_se = mom.std_error;
  b.meta = {er.samples, moments.m_prior(), moments.m_data(), moments.true_set_size};
  return b;
}

BoundBreakdown bound_original(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                              double lambda, double delta, std::span<const Sample> data,
                              int m_posterior, std::uint64_t rng_seed, const PriorLossTable& moments) {
  if (m_posterior < 1) throw std::invalid_argument("need at least one posterior draw");
  Rng rng(rng_seed);
  Eigen::MatrixXd noise(post.dim(), m_posterior);
  for (int i = 0; i < m_posterior; ++i) noise.col(i) = standard_normal_vector(post.dim(), rng);
  return bound_original(post, prior, lambda, delta, pack(data), noise, moments);
}

BoundBreakdown bound_mixed(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                           double lambda, double delta, const Batch& data,
                           const CurvatureSummary& curv, const PriorLossTable& moments) {
  require_lambda(lambda);
  require_delta(delta);
  const Eigen::Index n = data.size();
  if (n == 0) throw std::invalid_argument("bound needs data");
  check_moment_table(moments, n);
  if (curv.n_samples != n) throw std::invalid_argument("curvature was computed on a different set");

  const FlatParams& mean = post.mean();
  const Eigen::MatrixXd raw = forward_raw_batch(mean, data.x);
  double er = 0.0;
  if (mean.arch().head == OutputHead::identity) {
    const double mse_sum = (data.y.transpose() - raw.row(0)).squaredNorm();
    er = empirical_risk_closed<double>(mse_sum, double(n), post.variance(), curv.h);
  } else {
    er = nll_from_raw(mean.arch().head, raw, data.y).mean() + post.variance() * curv.h / (2.0 * double(n));
  }
  const McEstimate mom = moment_mc(lambda, moments);
  BoundBreakdown b = assemble_bound(BoundKind::mixed, lambda, prior.variance(), delta, er,
                                    kl_term_of(post, prior, lambda, delta, double(n)), mom.value);
  b.moment_se = mom.std_error;
  b.meta = {0, moments.m_prior(), moments.m_data(), moments.true_set_size};
  return b;
}

BoundBreakdown bound_approximate(const ApproximateBoundInputs& in) {
  require_lambda(in.lambda);
  require_delta(in.delta);
  MomentConfig cfg;
  cfg.n = static_cast<Eigen::Index>(in.n);
  cfg.sigma_x2 = in.sigma_x2;
  cfg.sigma_eps2 = in.sigma_eps2;
  cfg.w_star_norm2 = in.w_star_norm2;
  const double moment = moment_closed(in.lambda, cfg, in.prior_var, static_cast<Eigen::Index>(in.d), in.form);

  const double post_var = posterior_variance<double>(in.lambda, in.h, in.d, in.prior_var);
  const double er = empirical_risk_closed<double>(in.map_mse_sum, in.n, post_var, in.h);
  const double kl = kl_gaussian_iso<double>(in.d, post_var, in.prior_var, in.w_gap_norm2);
  const double kl_term = (kl + std::log(1.0 / in.delta)) / (in.lambda * in.n);
  return assemble_bound(BoundKind::approximate, in.lambda, in.prior_var, in.delta, er, kl_term, moment);
}

CorollaryPoint corollary1_point(double lambda, double delta) {
  require_delta(delta);
  if (!(lambda > 0.0 && lambda < 0.5)) {
    throw DomainError("simplified bound needs lambda in (0, 0.5), got " + std::to_string(lambda), 2.0);
  }
  const double post_var = 1.0 / (lambda + 1.0);
  CorollaryPoint p;
  p.lambda = lambda;
  p.empirical_risk = 0.5 * post_var;
  p.moment = 2.0 / (1.0 - 2.0 * lambda);
  p.kl = (0.5 * (post_var - std::log(post_var)) + std::log(1.0 / delta)) / lambda;
  p.total = p.empirical_risk + p.moment + p.kl;
  return p;
}

std::vector<CorollaryPoint> corollary1_curve(std::span<const double> lambda_grid, double delta) {
  std::vector<CorollaryPoint> out;
  out.reserve(lambda_grid.size());
  for (double l : lambda_grid) out.push_back(corollary1_point(l, delta));
  return out;
}

double elbo(const IsotropicGaussian& post, const IsotropicGaussian& prior,
            std::span<const Sample> data, double lambda, int m, std::uint64_t rng_seed) {
  require_lambda(lambda);
  const double er = empirical_risk_mc(post, data, m, rng_seed).value;
  return -er - kl_gaussian_iso(post, prior) / (lambda * static_cast<double>(data.size()));
}

}  // namespace coldbound
