#include "coldbound/laplace.hpp"

#include <cmath>

#include "coldbound/errors.hpp"

namespace coldbound {

IsotropicGaussian::IsotropicGaussian(FlatParams mean, double variance)
    : mean_(std::move(mean)), variance_(variance) {
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) {
    throw std::invalid_argument("Gaussian variance must be positive and finite");
  }
}

FlatParams IsotropicGaussian::draw(const Eigen::VectorXd& standard_noise) const {
  if (standard_noise.size() != dim()) throw ShapeError("noise length does not match dimension");
  return mean_.with_values(mean_.values() + std::sqrt(variance_) * standard_noise);
}

FlatParams IsotropicGaussian::sample(Rng& rng) const {
  return draw(standard_normal_vector(dim(), rng));
}

CurvatureSummary curvature_regression(const FlatParams& params, std::span<const Sample> data) {
  const ArchSpec& arch = params.arch();
  if (arch.head != OutputHead::identity || arch.output_dim() != 1) {
    throw ShapeError("regression curvature needs a scalar identity-head network");
  }
  if (data.empty()) throw std::invalid_argument("curvature needs at least one sample");
  double h = 0.0;
  for (const Sample& s : data) {
    h += per_sample_gradient(params, s, GradientTarget::raw_output(0)).squaredNorm();
  }
  return {h, static_cast<Eigen::Index>(data.size()), arch.param_count(), Task::regression};
}

CurvatureSummary curvature_classification(const FlatParams& params, std::span<const Sample> data) {
  const ArchSpec& arch = params.arch();
  if (arch.head != OutputHead::softmax) throw ShapeError("classification curvature needs a softmax head");
  if (data.empty()) throw std::invalid_argument("curvature needs at least one sample");
  double h = 0.0;
  for (const Sample& s : data) {
    const Eigen::MatrixXd jac = output_jacobian(params, s.x);
    const Eigen::VectorXd p = softmax(forward_raw(params, s.x));
    const Eigen::VectorXd row_norms = jac.rowwise().squaredNorm();
    h += (p.array() * (1.0 - p.array()) * row_norms.array()).sum();
  }
  return {h, static_cast<Eigen::Index>(data.size()), arch.param_count(), Task::classification};
}

CurvatureSummary curvature(const FlatParams& params, std::span<const Sample> data) {
  return params.arch().head == OutputHead::softmax ? curvature_classification(params, data)
                                                   : curvature_regression(params, data);
}

double gradient_variance(const FlatParams& params, std::span<const Sample> z_true) {
  if (z_true.empty()) throw std::invalid_argument("gradient variance needs a non-empty set");
  double total = 0.0;
  for (const Sample& s : z_true) total += output_jacobian(params, s.x).squaredNorm();
  return total / (static_cast<double>(z_true.size()) * static_cast<double>(params.size()));
}

}  // namespace coldbound
