#pragma once

// PAC-Bayes bound evaluators for tempered isotropic-Gaussian posteriors.
//
// Every bound splits into three additive terms:
//   empirical risk   E_post L_hat
//   KL term          (KL(post || prior) + ln(1/delta)) / (lambda n)
//   moment term      Psi(lambda, n) / (lambda n)
// where Psi = ln E_prior E_data exp[lambda n (L_D - L_hat)].
//
// Three evaluators share these terms:
//   original     empirical risk and Psi both by Monte Carlo
//   mixed        empirical risk from the Gauss-Newton expansion, Psi by Monte Carlo
//   approximate  everything in closed form, valid only for lambda < 1/c with
//                c = 2 n sigma_x^2 sigma_prior^2

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "coldbound/errors.hpp"
#include "coldbound/laplace.hpp"
#include "coldbound/nnet.hpp"

namespace coldbound {

enum class BoundKind { approximate, mixed, original };

const char* to_string(BoundKind kind);

/// Which closed-form moment expression to use. `derived` is the form that
/// falls out of the noncentral chi-square derivation,
///   sigma_x^2 (sigma_p^2 d + ||w* - w_p||^2) / (2 - 4 lambda n sigma_x^2 sigma_p^2) + sigma_eps^2 / 2,
/// `headline` the variant without the factors of two,
///   sigma_x^2 (sigma_p^2 d + ||w*||^2) / (1 - 2 lambda n sigma_x^2 sigma_p^2) + sigma_eps^2.
/// Both share the pole at lambda = 1/c.
enum class MomentForm { derived, headline };

const char* to_string(MomentForm form);

struct EstimatorMeta {
  int posterior_samples = 0;  // draws behind the empirical-risk term
  int prior_samples = 0;      // prior draws behind the moment term
  int data_samples = 0;       // datasets per prior draw
  Eigen::Index true_set_size = 0;  // samples approximating L_D, 0 if analytic
};

struct BoundBreakdown {
  double empirical_risk = 0.0;
  double kl_term = 0.0;
  double moment_term = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  double prior_var = 0.0;
  double delta = 1.0;
  BoundKind kind = BoundKind::original;
  EstimatorMeta meta;
  double empirical_risk_se = 0.0;  // Monte Carlo standard errors, 0 when closed form
  double moment_se = 0.0;
};

/// Builds a breakdown from already-scaled terms; total is their exact sum.
BoundBreakdown assemble_bound(BoundKind kind, double lambda, double prior_var, double delta,
                              double empirical_risk, double kl_term, double moment_term);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// ---------------------------------------------------------------------------
// Closed-form terms

/// KL(N(m_q, v_q I) || N(m_p, v_p I)) in d dimensions, ||m_q - m_p||^2 = gap.
template <typename Scalar>
Scalar kl_gaussian_iso(Scalar d, Scalar post_var, Scalar prior_var, Scalar mean_gap_norm2) {
  using std::log;
  const Scalar ratio = post_var / prior_var;
  return Scalar(0.5) * (d * ratio + mean_gap_norm2 / prior_var - d - d * log(ratio));
}

double kl_gaussian_iso(const IsotropicGaussian& post, const IsotropicGaussian& prior);

/// ||y - f||^2 / (2n) + post_var h / (2n) + ln(2 pi) / 2
template <typename Scalar>
Scalar empirical_risk_closed(Scalar map_mse_sum, Scalar n, Scalar post_var, Scalar h) {
  return map_mse_sum / (Scalar(2) * n) + post_var * h / (Scalar(2) * n) + Scalar(kHalfLog2Pi);
}

struct MomentConfig {
  Eigen::Index n = 1;
  int m_prior = 10;
  int m_data = 10;
  double sigma_x2 = 0.0;
  double sigma_eps2 = 0.0;
  double w_star_norm2 = 0.0;  // ||w* - w_prior||^2, or ||w*||^2 for the headline form
};

/// c = 2 n sigma_x^2 sigma_prior^2
inline double moment_constraint(double n, double sigma_x2, double prior_var) {
  return 2.0 * n * sigma_x2 * prior_var;
}

/// Closed-form upper bound on Psi / (lambda n). Throws DomainError when
/// lambda * c >= 1.
double moment_closed(double lambda, const MomentConfig& cfg, double prior_var, Eigen::Index d,
                     MomentForm form = MomentForm::derived);

// ---------------------------------------------------------------------------
// Monte Carlo terms

/// Average over posterior draws of the mean per-sample NLL on `data`.
McEstimate empirical_risk_mc(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                             std::uint64_t rng_seed);

/// Same estimator with caller-provided standard-normal noise, one column per
/// draw. Reusing the noise across posteriors gives common random numbers.
McEstimate empirical_risk_mc(const IsotropicGaussian& post, const Batch& data,
                             const Eigen::MatrixXd& standard_noise);

/// L_D(f) for a network f, e.g. the mean loss on a large held-out set.
using TrueRiskFn = std::function<double(const FlatParams&)>;
/// Fresh i.i.d. dataset of the bound's sample size, keyed by a seed.
using DataSampler = std::function<SampleList(std::uint64_t seed)>;

/// Losses of prior draws that the moment estimator exponentiates. They do not
/// depend on lambda, so one table serves a whole lambda grid.
struct PriorLossTable {
  Eigen::VectorXd true_risk;  // m_prior
  Eigen::MatrixXd empirical;  // m_prior x m_data
  Eigen::Index n = 0;
  Eigen::Index true_set_size = 0;

  int m_prior() const { return static_cast<int>(empirical.rows()); }
  int m_data() const { return static_cast<int>(empirical.cols()); }
};

PriorLossTable build_prior_loss_table(const IsotropicGaussian& prior, Eigen::Index n,
                                      const TrueRiskFn& true_risk, const DataSampler& sampler,
                                      int m_prior, int m_data, std::uint64_t rng_seed,
                                      Eigen::Index true_set_size = 0);

/// (1 / lambda n) ln[(1/m) sum exp(lambda n (L_D - L_hat))] via log-sum-exp.
McEstimate moment_mc(double lambda, const PriorLossTable& table);

McEstimate moment_mc(double lambda, Eigen::Index n, const IsotropicGaussian& prior,
                     const TrueRiskFn& true_risk, const DataSampler& sampler, int m_prior,
                     int m_data, std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Bounds

BoundBreakdown bound_original(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                              double lambda, double delta, const Batch& data,
                              const Eigen::MatrixXd& posterior_noise, const PriorLossTable& moments);

BoundBreakdown bound_original(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                              double lambda, double delta, std::span<const Sample> data,
                              int m_posterior, std::uint64_t rng_seed, const PriorLossTable& moments);

/// Empirical risk from the second-order expansion at the posterior mean,
///   L_hat(mean) + post_var h / (2n),
/// which for the Gaussian likelihood equals empirical_risk_closed.
BoundBreakdown bound_mixed(const IsotropicGaussian& post, const IsotropicGaussian& prior,
                           double lambda, double delta, const Batch& data,
                           const CurvatureSummary& curv, const PriorLossTable& moments);

struct ApproximateBoundInputs {
  double lambda = 1.0;
  double n = 1.0;
  double d = 1.0;
  double h = 0.0;
  double prior_var = 1.0;
  double map_mse_sum = 0.0;
  double sigma_x2 = 0.0;
  double sigma_eps2 = 0.0;
  double w_star_norm2 = 0.0;
  double w_gap_norm2 = 0.0;  // ||w_post - w_prior||^2
  double delta = 0.05;
  MomentForm form = MomentForm::derived;
};

/// Fully closed-form bound with the posterior variance set to its optimum.
BoundBreakdown bound_approximate(const ApproximateBoundInputs& in);

struct CorollaryPoint {
  double lambda;
  double empirical_risk;
  double moment;
  double kl;
  double total;
};

/// Closed-form lambda dependence with every scale parameter set to one and
/// additive constants dropped:
///   1/(2(lambda+1)) + 2/(1-2 lambda) + [ (1/(lambda+1) - ln(1/(lambda+1)))/2 + ln(1/delta) ] / lambda
/// Throws DomainError (c = 2) when a grid point leaves (0, 1/2).
std::vector<CorollaryPoint> corollary1_curve(std::span<const double> lambda_grid, double delta);

CorollaryPoint corollary1_point(double lambda, double delta);

/// -E_post L_hat - KL / (lambda n), with the expectation by Monte Carlo.
double elbo(const IsotropicGaussian& post, const IsotropicGaussian& prior,
            std::span<const Sample> data, double lambda, int m, std::uint64_t rng_seed);

}  // namespace coldbound
