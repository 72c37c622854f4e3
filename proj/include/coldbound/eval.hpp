#pragma once

// MAP training by plain SGD and posterior-predictive test metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coldbound/bounds.hpp"
#include "coldbound/laplace.hpp"
#include "coldbound/nnet.hpp"

namespace coldbound {

enum class InitScheme {
  uniform_fan_in,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
  gaussian,        // N(0, init_scale^2)
};

struct TrainConfig {
  double step_size = 1e-3;
  int epochs = 10;
  int batch_size = 32;
  InitScheme init = InitScheme::uniform_fan_in;
  double init_scale = 0.1;  // used by the gaussian scheme
  std::uint64_t seed = 0;
};

FlatParams initialize(const ArchSpec& arch, InitScheme scheme, double init_scale, std::uint64_t seed);

struct TrainResult {
  FlatParams params;
  std::vector<double> epoch_loss;  // mean training NLL before training, then after each epoch
};

/// Mini-batch SGD on the mean NLL, batches drawn from a per-epoch shuffle.
/// Throws TrainingDiverged when the loss or parameters become non-finite.
TrainResult train_map_with_history(const ArchSpec& arch, std::span<const Sample> train_data,
                                   const TrainConfig& cfg);

FlatParams train_map(const ArchSpec& arch, std::span<const Sample> train_data, const TrainConfig& cfg);

/// Per-draw log-likelihoods and averaged predictive probabilities for one
/// set of posterior draws.
struct PredictiveDraws {
  Eigen::MatrixXd log_likelihood;  // m x N
  Eigen::MatrixXd mean_probability;  // K x N, classification only
};

PredictiveDraws predictive_draws(const IsotropicGaussian& post, const Batch& data,
                                 const Eigen::MatrixXd& standard_noise);

Eigen::MatrixXd posterior_noise(Eigen::Index d, int m, std::uint64_t rng_seed);

/// mean_i -ln[(1/m) sum_s p(y_i | x_i, w_s)]
double predictive_nll(const PredictiveDraws& draws);
double predictive_nll(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                      std::uint64_t rng_seed);

/// Gibbs NLL, mean over draws and samples of -ln p(y | x, w_s), with the
/// standard error across draws.
McEstimate gibbs_nll(const PredictiveDraws& draws);
McEstimate gibbs_nll(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                     std::uint64_t rng_seed);

inline constexpr int kDefaultEceBins = 15;

/// Binned ECE over equal-width confidence bins on [0, 1]; a confidence of
/// exactly 1 falls in the last bin.
double ece_from_confidences(std::span<const double> confidence, std::span<const int> correct, int bins);

/// Argmax with ties broken towards the lowest class index.
int predicted_class(const Eigen::Ref<const Eigen::VectorXd>& probabilities);

double ece(const PredictiveDraws& draws, const Eigen::VectorXd& labels, int bins);
double ece(const IsotropicGaussian& post, std::span<const Sample> data, int m, int bins,
           std::uint64_t rng_seed);

/// Misclassification rate of the posterior-predictive argmax.
double zero_one(const PredictiveDraws& draws, const Eigen::VectorXd& labels);
double zero_one(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                std::uint64_t rng_seed);

struct MetricReport {
  double nll = 0.0;
  std::optional<double> ece;       // classification only
  std::optional<double> zero_one;  // classification only
  Eigen::Index n_eval = 0;
  int mc_samples = 0;
};

MetricReport evaluate_metrics(const IsotropicGaussian& post, const Batch& data,
                              const Eigen::MatrixXd& standard_noise, int bins = kDefaultEceBins);

}  // namespace coldbound
