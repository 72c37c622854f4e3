#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coldbound/laplace.hpp"
#include "coldbound/nnet.hpp"

namespace coldbound {

// ---------------------------------------------------------------------------
// CSV ingestion

struct LoadedData {
  SampleList samples;
  std::vector<std::string> feature_names;
  std::string target_name;
  /// Original target value of each class index (classification only).
  std::vector<double> class_values;
};

/// Reads a comma-separated file with a header row. An empty feature list
/// selects every column except the target. Classification targets are mapped
/// to contiguous indices in increasing order of their original value.
LoadedData load_csv(const std::filesystem::path& path, const std::string& target_column,
                    const std::vector<std::string>& feature_columns, Task task);

void write_csv(const std::filesystem::path& path, std::span<const Sample> samples,
               const std::vector<std::string>& feature_names, const std::string& target_name);

// ---------------------------------------------------------------------------
// Five-way split

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t validation = 0;
  std::size_t trainsuffix = 0;
  std::size_t z_true = 0;

  std::size_t total() const { return train + test + validation + trainsuffix + z_true; }
};

struct DatasetSplits {
  SampleList train;
  SampleList test;
  SampleList validation;
  SampleList trainsuffix;  // bound evaluation set, independent of the prior mean
  SampleList z_true;       // large sample standing in for the data distribution
  std::string source;
  std::uint64_t seed = 0;
  SplitCounts counts;
  std::vector<std::size_t> permutation;  // shuffled source indices, assigned in the order above
};

/// Shuffles by seed, then assigns contiguous runs in the order
/// train, test, validation, trainsuffix, z_true.
DatasetSplits split(std::span<const Sample> data, const SplitCounts& counts, std::uint64_t seed,
                    std::string source = {});

nlohmann::json split_manifest(const DatasetSplits& splits);

/// Rebuilds the splits recorded in a manifest from the same source data.
DatasetSplits split_from_manifest(std::span<const Sample> data, const nlohmann::json& manifest);

// ---------------------------------------------------------------------------
// Standardization

class Standardizer {
public:
  /// Fits per-feature mean/std (and target mean/std for regression).
  static Standardizer fit(std::span<const Sample> data, Task task);

  Sample apply(const Sample& s) const;
  SampleList apply(std::span<const Sample> data) const;

  const Eigen::VectorXd& feature_mean() const { return feature_mean_; }
  const Eigen::VectorXd& feature_std() const { return feature_std_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  /// Add to a standardized-unit Gaussian NLL to get the raw-unit NLL.
  double nll_offset() const { return std::log(target_std_); }

private:
  Eigen::VectorXd feature_mean_;
  Eigen::VectorXd feature_std_;  // zero-variance features carry std 1 and mean 0
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  Task task_ = Task::regression;
};

void standardize(DatasetSplits& splits, const Standardizer& t);

// ---------------------------------------------------------------------------
// Synthetic linear-Gaussian oracle: x ~ N(0, sigma_x2 I_d), y = x.w* + eps.

struct SyntheticOracleSpec {
  Eigen::Index d = 1;
  double sigma_x2 = 1.0;
  double sigma_eps2 = 0.0;
  Eigen::VectorXd w_star;
  Eigen::Index n_per_draw = 1;
  std::uint64_t seed = 0;

  void validate() const;
  /// Bias-free linear model with d weights.
  ArchSpec arch() const;
  FlatParams w_star_params() const;
};

SampleList synthetic_draw(const SyntheticOracleSpec& spec, std::uint64_t draw_index);

/// n samples from the oracle with an explicit seed.
SampleList synthetic_sample(const SyntheticOracleSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Population NLL of one linear predictor.
double synthetic_true_risk(const SyntheticOracleSpec& spec, const FlatParams& w);

/// Gibbs risk E_post L_D under the oracle, exact.
double synthetic_true_risk(const SyntheticOracleSpec& spec, const IsotropicGaussian& post);

// ---------------------------------------------------------------------------
// Desk-scale fixtures

/// Friedman #1 regression: x ~ U[0,1]^dim (dim >= 5),
/// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + noise.
SampleList friedman_regression(std::size_t n, int dim, double noise_std, std::uint64_t seed);

/// Unit-variance Gaussian class blobs around centers drawn from N(0, separation^2 I).
SampleList gaussian_blobs(std::size_t n, int dim, int classes, double separation, std::uint64_t seed);

}  // namespace coldbound
