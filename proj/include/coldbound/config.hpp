#pragma once

// Flat key-value configuration files with [sections]:
//
//   # comment
//   [sweep]
//   lambda_grid = log:1e-2:1e5:15
//   delta = 0.05

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldbound/bounds.hpp"
#include "coldbound/data.hpp"
#include "coldbound/eval.hpp"
#include "coldbound/nnet.hpp"

namespace coldbound {

class IniFile {
public:
  static IniFile parse(const std::string& text);
  static IniFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  /// Keys present in the file but never read, as "section.key".
  std::vector<std::string> unused_keys() const;

private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::map<std::string, bool> touched_;
};

/// Grid syntax: "log:lo:hi:count", "lin:lo:hi:count", or a comma list.
std::vector<double> parse_grid(const std::string& spec);
std::vector<int> parse_int_list(const std::string& spec);
std::string format_number(double v);

enum class DataSourceKind { csv, friedman, linear_oracle, blobs };

struct DataSourceConfig {
  DataSourceKind kind = DataSourceKind::friedman;
  Task task = Task::regression;
  std::string path;
  std::string target = "y";
  std::vector<std::string> features;
  std::size_t n = 5000;
  int dim = 5;
  int classes = 3;
  double noise = 1.0;       // Friedman noise std, blob separation
  double sigma_x2 = 1.0;    // linear oracle
  double sigma_eps2 = 0.25; // linear oracle
  double w_scale = 1.0;     // linear oracle w* ~ N(0, w_scale^2 / d)
  std::uint64_t seed = 1;
};

SampleList materialize(const DataSourceConfig& cfg, std::vector<std::string>* feature_names = nullptr);

struct SweepConfig {
  DataSourceConfig data;
  SplitCounts counts{400, 400, 200, 80, 2000};
  std::uint64_t split_seed = 7;
  std::vector<int> hidden{6, 6};
  bool bias = true;
  TrainConfig train;
  std::vector<double> lambda_grid;
  std::vector<double> prior_var_grid;
  double delta = 0.05;
  int n_seeds = 10;
  std::uint64_t base_seed = 0;
  std::vector<BoundKind> kinds{BoundKind::approximate, BoundKind::mixed, BoundKind::original};
  MomentForm moment_form = MomentForm::derived;
  std::optional<double> w_star_gap;  // unset: ||w_prior||^2
  double sigma_eps2 = 1.0;
  int m_posterior = 100;
  int m_prior = 10;
  int m_data = 10;
  int m_predictive = 100;
  int ece_bins = kDefaultEceBins;
  std::filesystem::path out_dir = "sweep_out";

  SweepConfig();
  void validate() const;
  ArchSpec arch(int input_dim, int output_dim) const;
  /// Every resolved setting, in the file format.
  std::string resolved() const;
};

SweepConfig sweep_config_from(const IniFile& ini);

struct ValidityConfig {
  SyntheticOracleSpec oracle;
  double w_scale = 1.0;
  double lambda = 1.0;
  double prior_var = 0.01;
  double delta = 0.05;
  int trials = 200;
  bool oracle_posterior_mean = false;  // true: centre the posterior on w*
  bool degenerate_posterior = false;   // true: posterior variance 1e-30
  int m_posterior = 100;
  int m_prior = 10;
  int m_data = 10;
  std::uint64_t base_seed = 0;
  std::filesystem::path out_dir = "validity_out";

  void validate() const;
  std::string resolved() const;
};

ValidityConfig validity_config_from(const IniFile& ini);

struct SynthGenConfig {
  DataSourceConfig data;
  std::filesystem::path out = "synthetic.csv";
  std::string resolved() const;
};

SynthGenConfig synth_gen_config_from(const IniFile& ini);

DataSourceConfig data_source_from(const IniFile& ini, const std::string& section);

}  // namespace coldbound
