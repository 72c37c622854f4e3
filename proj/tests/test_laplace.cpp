#include <gtest/gtest.h>

#include <algorithm>

#include "coldbound/bounds.hpp"
#include "coldbound/laplace.hpp"
#include "test_util.hpp"

using namespace coldbound;
using coldbound::testing::finite_difference;
using coldbound::testing::linear_arch;
using coldbound::testing::make_arch;
using coldbound::testing::random_params;
using coldbound::testing::random_sample;

namespace {

// Exact GGN trace: sum_i trace(J_i^T H_i J_i) with H = diag(p) - p p^T.
double exact_ggn_trace(const FlatParams& p, std::span<const Sample> data) {
  double t = 0.0;
  for (const Sample& s : data) {
    const Eigen::MatrixXd J = output_jacobian(p, s.x);
    const Eigen::VectorXd prob = forward(p, s.x);
    const Eigen::MatrixXd H = Eigen::MatrixXd(prob.asDiagonal()) - prob * prob.transpose();
    t += (J.transpose() * H * J).trace();
  }
  return t;
}

}  // namespace

TEST(Curvature, LinearModelExamples) {
  Rng rng(1);
  const FlatParams p = random_params(linear_arch(2), rng);
  const SampleList one{{Eigen::Vector2d(1, 2), 0.0}};
  EXPECT_DOUBLE_EQ(curvature_regression(p, one).h, 5.0);
  const SampleList two{{Eigen::Vector2d(1, 2), 0.0}, {Eigen::Vector2d(0, 3), 1.0}};
  const CurvatureSummary c = curvature_regression(p, two);
  EXPECT_DOUBLE_EQ(c.h, 14.0);
  EXPECT_EQ(c.n_samples, 2);
  EXPECT_EQ(c.d, 2);
}

TEST(Curvature, EmptyDataRejected) {
  const FlatParams p = FlatParams::zeros(linear_arch(2));
  EXPECT_THROW(curvature_regression(p, SampleList{}), std::invalid_argument);
  const FlatParams q = FlatParams::zeros(make_arch({2, 3}, OutputHead::softmax));
  EXPECT_THROW(curvature_classification(q, SampleList{}), std::invalid_argument);
  EXPECT_THROW(gradient_variance(p, SampleList{}), std::invalid_argument);
}

TEST(Curvature, AdditiveAndPermutationInvariant) {
  Rng rng(2);
  const ArchSpec a = make_arch({3, 4, 1});
  const FlatParams p = random_params(a, rng);
  SampleList data;
  for (int i = 0; i < 7; ++i) data.push_back(random_sample(a, rng));
  SampleList doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const double h = curvature_regression(p, data).h;
  EXPECT_NEAR(curvature_regression(p, doubled).h, 2.0 * h, 1e-12 * h);
  SampleList shuffled = data;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_NEAR(curvature_regression(p, shuffled).h, h, 1e-12 * h);
  EXPECT_NEAR(gradient_variance(p, shuffled), gradient_variance(p, data), 1e-14);
  const std::span<const Sample> all(data);
  EXPECT_NEAR(curvature_regression(p, all.first(3)).h + curvature_regression(p, all.subspan(3)).h, h, 1e-12 * h);
}

TEST(Curvature, RegressionMatchesFiniteDifferences) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const ArchSpec a = make_arch({2, 3, 1});
    const FlatParams p = random_params(a, rng);
    SampleList data;
    for (int i = 0; i < 4; ++i) data.push_back(random_sample(a, rng));
    double brute = 0.0;
    for (const Sample& s : data) {
      brute += finite_difference(p, [&](const FlatParams& q) { return forward_raw(q, s.x)[0]; }).squaredNorm();
    }
    EXPECT_NEAR(curvature_regression(p, data).h, brute, 1e-3 * brute);
  }
}

TEST(Curvature, UniformSoftmaxWeights) {
  // Zero weights give uniform probabilities, so every output carries weight (1/K)(1 - 1/K).
  const int K = 4;
  const FlatParams p = FlatParams::zeros(make_arch({3, K}, OutputHead::softmax));
  const SampleList data{{Eigen::Vector3d(1, 2, 3), 0.0}};
  const double raw = output_jacobian(p, data[0].x).squaredNorm();
  EXPECT_NEAR(curvature_classification(p, data).h, raw * (1.0 / K) * (1.0 - 1.0 / K), 1e-12);
}

TEST(Curvature, TwoClassLinearLogitsMatchExactTrace) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const ArchSpec a = make_arch({3, 2}, OutputHead::softmax);
    const FlatParams p = random_params(a, rng);
    const SampleList data{random_sample(a, rng)};
    const double exact = exact_ggn_trace(p, data);
    EXPECT_NEAR(curvature_classification(p, data).h, exact, 1e-6 * exact);
  }
}

TEST(Curvature, SaturatedClassContributesNothing) {
  // Logits (0, 800): p = (0, 1) up to the probability floor.
  const FlatParams p(make_arch({1, 2}, OutputHead::softmax), Eigen::Vector4d(0, 800, 0, 0));
  EXPECT_LT(curvature_classification(p, SampleList{{Eigen::VectorXd::Constant(1, 1.0), 1.0}}).h, 1e-300);
}

TEST(PosteriorVariance, Examples) {
  EXPECT_NEAR(posterior_variance(2.0, 10.0, 5.0, 0.5), 1.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(posterior_variance(1.0, 3.0, 3.0, 1.0), 0.5);
  EXPECT_NEAR(posterior_variance(1e-12, 10.0, 5.0, 0.5), 0.5, 1e-11);
}

TEST(PosteriorVariance, MonotoneDecreasing) {
  double prev = INFINITY;
  for (double l = 1e-3; l < 1e5; l *= 1.5) {
    const double v = posterior_variance(l, 7.0, 3.0, 0.1);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_GT(posterior_variance(1.0, 1.0, 3.0, 0.1), posterior_variance(1.0, 2.0, 3.0, 0.1));
}

TEST(PosteriorVariance, TemplatedOnScalar) {
  const float v = posterior_variance<float>(2.0f, 10.0f, 5.0f, 0.5f);
  EXPECT_NEAR(v, 1.0f / 6.0f, 1e-7f);
}

TEST(PosteriorVariance, StationaryPointOfLaplaceObjective) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const double lambda = std::pow(10.0, u(rng));
    const double h = std::pow(10.0, u(rng) + 1.0);
    const double d = std::floor(std::pow(10.0, 1.0 + std::abs(u(rng))));
    const double prior_var = std::pow(10.0, u(rng) - 1.0);
    const double n = 50.0;
    const auto objective = [&](double v) {
      return empirical_risk_closed(1.0, n, v, h) + kl_gaussian_iso(d, v, prior_var, 0.0) / (lambda * n);
    };
    const double v = posterior_variance(lambda, h, d, prior_var);
    EXPECT_GT(objective(v * 1.01), objective(v));
    EXPECT_GT(objective(v * 0.99), objective(v));
  }
}

TEST(GradientVariance, Examples) {
  Rng rng(6);
  const FlatParams p = random_params(linear_arch(2), rng);
  EXPECT_DOUBLE_EQ(gradient_variance(p, SampleList{{Eigen::Vector2d(1, 2), 0.0}}), 2.5);
  const SampleList zeros{{Eigen::Vector2d(0, 0), 0.0}, {Eigen::Vector2d(0, 0), 1.0}};
  EXPECT_EQ(gradient_variance(p, zeros), 0.0);
  const SampleList twice{{Eigen::Vector2d(1, 2), 0.0}, {Eigen::Vector2d(1, 2), 0.0}};
  EXPECT_DOUBLE_EQ(gradient_variance(p, twice), 2.5);
}

TEST(IsotropicGaussian, DrawAndValidation) {
  const FlatParams m(linear_arch(2), Eigen::Vector2d(1, -1));
  const IsotropicGaussian g(m, 4.0);
  EXPECT_EQ(g.draw(Eigen::Vector2d(0.5, 1.0)).values(), Eigen::Vector2d(2, 1));
  EXPECT_THROW(IsotropicGaussian(m, 0.0), std::invalid_argument);
  EXPECT_THROW(IsotropicGaussian(m, INFINITY), std::invalid_argument);
}
