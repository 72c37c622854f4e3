#pragma once

// Isotropic Laplace approximation: Gauss-Newton curvature trace, tempered
// posterior variance and the per-weight gradient variance.

#include <span>

#include "coldbound/nnet.hpp"
#include "coldbound/random.hpp"

namespace coldbound {

struct CurvatureSummary {
  double h = 0.0;  // Gauss-Newton trace, no 1/n scaling
  Eigen::Index n_samples = 0;
  Eigen::Index d = 0;
  Task task = Task::regression;
};

/// N(mean, variance * I).
class IsotropicGaussian {
public:
  IsotropicGaussian(FlatParams mean, double variance);

  const FlatParams& mean() const { return mean_; }
  double variance() const { return variance_; }
  Eigen::Index dim() const { return mean_.size(); }

  /// mean + sqrt(variance) * noise
  FlatParams draw(const Eigen::VectorXd& standard_noise) const;
  FlatParams sample(Rng& rng) const;

private:
  FlatParams mean_;
  double variance_;
};

/// h = sum_i ||grad_w f(x_i)||^2 for a scalar-output regression network.
CurvatureSummary curvature_regression(const FlatParams& params, std::span<const Sample> data);

/// h = sum_i sum_k p_ik (1 - p_ik) ||grad_w z_k(x_i)||^2 with z the logits and
/// p the softmax probabilities: the diagonal of the softmax GGN block.
CurvatureSummary curvature_classification(const FlatParams& params, std::span<const Sample> data);

/// Dispatches on the output head.
CurvatureSummary curvature(const FlatParams& params, std::span<const Sample> data);

/// 1 / (lambda * h / d + 1 / prior_var)
template <typename Scalar>
Scalar posterior_variance(Scalar lambda, Scalar h, Scalar d, Scalar prior_var) {
  return Scalar(1) / (lambda * h / d + Scalar(1) / prior_var);
}

inline double posterior_variance(double lambda, const CurvatureSummary& curv, double prior_var) {
  return posterior_variance<double>(lambda, curv.h, static_cast<double>(curv.d), prior_var);
}

/// Mean squared raw-output gradient per sample and per weight. For several
/// outputs the squared gradients of every output are summed.
double gradient_variance(const FlatParams& params, std::span<const Sample> z_true);

}  // namespace coldbound
