#include "coldbound/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include "coldbound/errors.hpp"
#include "coldbound/random.hpp"

namespace coldbound {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

LoadedData load_csv(const std::filesystem::path& path, const std::string& target_column,
                    const std::vector<std::string>& feature_columns, Task task) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("data file '" + path.string() + "' is empty");
  const std::vector<std::string> header = split_fields(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in '" + path.string() + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  LoadedData out;
  out.target_name = target_column;
  const std::size_t target_idx = column_of(target_column);
  std::vector<std::size_t> feature_idx;
  if (feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != target_idx) {
        feature_idx.push_back(c);
        out.feature_names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : feature_columns) {
      feature_idx.push_back(column_of(name));
      out.feature_names.push_back(name);
    }
  }
  if (feature_idx.empty()) throw DataError("no feature columns selected");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    auto number = [&](std::size_t c) {
      const std::string& f = fields[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError("row " + std::to_string(row) + ", column '" + header[c] +
                        "': cannot parse '" + f + "' as a number");
      }
      return v;
    };
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(feature_idx.size()));
    for (std::size_t k = 0; k < feature_idx.size(); ++k) s.x[static_cast<Eigen::Index>(k)] = number(feature_idx[k]);
    s.y = number(target_idx);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw DataError("data file '" + path.string() + "' has no data rows");

  if (task == Task::classification) {
    std::map<double, int> index;
    for (const Sample& s : out.samples) index.emplace(s.y, 0);
    int next = 0;
    for (auto& [value, idx] : index) {
      idx = next++;
      out.class_values.push_back(value);
    }
    for (Sample& s : out.samples) s.y = index.at(s.y);
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const Sample> samples,
               const std::vector<std::string>& feature_names, const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& name : feature_names) out << name << ',';
  out << target_name << '\n';
  for (const Sample& s : samples) {
    if (static_cast<std::size_t>(s.x.size()) != feature_names.size()) {
      throw ShapeError("sample width does not match the feature names");
    }
    for (Eigen::Index k = 0; k < s.x.size(); ++k) out << format_double(s.x[k]) << ',';
    out << format_double(s.y) << '\n';
  }
}

DatasetSplits split(std::span<const Sample> data, const SplitCounts& counts, std::uint64_t seed,
                    std::string source) {
  if (counts.total() > data.size()) {
    throw DataError("split needs " + std::to_string(counts.total()) + " samples but only " +
                    std::to_string(data.size()) + " are available");
  }
  DatasetSplits s;
  s.source = std::move(source);
  s.seed = seed;
  s.counts = counts;
  s.permutation.resize(data.size());
  std::iota(s.permutation.begin(), s.permutation.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(s.permutation.begin(), s.permutation.end(), rng);

  std::size_t pos = 0;
  auto take = [&](SampleList& dst, std::size_t count) {
    dst.reserve(count);
    for (std::size_t k = 0; k < count; ++k) dst.push_back(data[s.permutation[pos++]]);
  };
  take(s.train, counts.train);
  take(s.test, counts.test);
  take(s.validation, counts.validation);
  take(s.trainsuffix, counts.trainsuffix);
  take(s.z_true, counts.z_true);
  s.permutation.resize(counts.total());
  return s;
}

nlohmann::json split_manifest(const DatasetSplits& s) {
  return {
      {"source", s.source},
      {"seed", s.seed},
      {"counts",
       {{"train", s.counts.train},
        {"test", s.counts.test},
        {"validation", s.counts.validation},
        {"trainsuffix", s.counts.trainsuffix},
        {"z_true", s.counts.z_true}}},
      {"order", {"train", "test", "validation", "trainsuffix", "z_true"}},
      {"permutation", s.permutation},
  };
}

DatasetSplits split_from_manifest(std::span<const Sample> data, const nlohmann::json& manifest) {
  SplitCounts counts;
  const auto& c = manifest.at("counts");
  counts.train = c.at("train").get<std::size_t>();
  counts.test = c.at("test").get<std::size_t>();
  counts.validation = c.at("validation").get<std::size_t>();
  counts.trainsuffix = c.at("trainsuffix").get<std::size_t>();
  counts.z_true = c.at("z_true").get<std::size_t>();
  const auto perm = manifest.at("permutation").get<std::vector<std::size_t>>();
  if (perm.size() != counts.total()) throw DataError("manifest permutation does not match its counts");

  DatasetSplits s;
  s.source = manifest.value("source", std::string{});
  s.seed = manifest.at("seed").get<std::uint64_t>();
  s.counts = counts;
  s.permutation = perm;
  std::size_t pos = 0;
  auto take = [&](SampleList& dst, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = perm[pos++];
      if (idx >= data.size()) throw DataError("manifest index out of range of the source data");
      dst.push_back(data[idx]);
    }
  };
  take(s.train, counts.train);
  take(s.test, counts.test);
  take(s.validation, counts.validation);
  take(s.trainsuffix, counts.trainsuffix);
  take(s.z_true, counts.z_true);
  return s;
}

Standardizer Standardizer::fit(std::span<const Sample> data, Task task) {
  if (data.empty()) throw DataError("cannot fit a standardizer on an empty set");
  const Batch b = pack(data);
  const double n = static_cast<double>(b.size());
  Standardizer t;
  t.task_ = task;
  t.feature_mean_ = b.x.rowwise().mean();
  t.feature_std_ = ((b.x.colwise() - t.feature_mean_).array().square().rowwise().sum() / n).sqrt();
  for (Eigen::Index k = 0; k < t.feature_std_.size(); ++k) {
    if (!(t.feature_std_[k] > 0.0)) {
      t.feature_mean_[k] = 0.0;
      t.feature_std_[k] = 1.0;
    }
  }
  if (task == Task::regression) {
    t.target_mean_ = b.y.mean();
    const double sd = std::sqrt((b.y.array() - t.target_mean_).square().sum() / n);
    t.target_std_ = sd > 0.0 ? sd : 1.0;
  }
  return t;
}

Sample Standardizer::apply(const Sample& s) const {
  if (s.x.size() != feature_mean_.size()) throw ShapeError("sample width does not match the standardizer");
  Sample out;
  out.x = ((s.x - feature_mean_).array() / feature_std_.array()).matrix();
  out.y = task_ == Task::regression ? (s.y - target_mean_) / target_std_ : s.y;
  return out;
}

SampleList Standardizer::apply(std::span<const Sample> data) const {
  SampleList out;
  out.reserve(data.size());
  for (const Sample& s : data) out.push_back(apply(s));
  return out;
}

void standardize(DatasetSplits& splits, const Standardizer& t) {
  for (SampleList* set : {&splits.train, &splits.test, &splits.validation, &splits.trainsuffix, &splits.z_true}) {
    *set = t.apply(*set);
  }
}

void SyntheticOracleSpec::validate() const {
  if (d < 1) throw std::invalid_argument("oracle dimension must be positive");
  if (!(sigma_x2 > 0.0)) throw std::invalid_argument("oracle feature variance must be positive");
  if (sigma_eps2 < 0.0) throw std::invalid_argument("oracle noise variance must be nonnegative");
  if (w_star.size() != d) throw ShapeError("oracle weight vector length must equal d");
  if (n_per_draw < 1) throw std::invalid_argument("oracle draws need at least one sample");
}

ArchSpec SyntheticOracleSpec::arch() const {
  ArchSpec a;
  a.widths = {static_cast<int>(d), 1};
  a.bias = false;
  return a;
}

FlatParams SyntheticOracleSpec::w_star_params() const { return FlatParams(arch(), w_star); }

SampleList synthetic_sample(const SyntheticOracleSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sx = std::sqrt(spec.sigma_x2);
  const double se = std::sqrt(spec.sigma_eps2);
  SampleList out(static_cast<std::size_t>(n));
  for (Sample& s : out) {
    s.x.resize(spec.d);
    for (Eigen::Index k = 0; k < spec.d; ++k) s.x[k] = sx * normal(rng);
    s.y = s.x.dot(spec.w_star) + se * normal(rng);
  }
  return out;
}

SampleList synthetic_draw(const SyntheticOracleSpec& spec, std::uint64_t draw_index) {
  return synthetic_sample(spec, spec.n_per_draw, derive_seed(spec.seed, {draw_index}));
}

double synthetic_true_risk(const SyntheticOracleSpec& spec, const FlatParams& w) {
  if (w.size() != spec.d) throw ShapeError("predictor dimension does not match the oracle");
  const double gap = (spec.w_star - w.values()).squaredNorm();
  return kHalfLog2Pi + 0.5 * (spec.sigma_x2 * gap + spec.sigma_eps2);
}

double synthetic_true_risk(const SyntheticOracleSpec& spec, const IsotropicGaussian& post) {
  if (post.dim() != spec.d) throw ShapeError("posterior dimension does not match the oracle");
  const double gap = (spec.w_star - post.mean().values()).squaredNorm();
  return kHalfLog2Pi +
         0.5 * (spec.sigma_x2 * (gap + static_cast<double>(spec.d) * post.variance()) + spec.sigma_eps2);
}

SampleList friedman_regression(std::size_t n, int dim, double noise_std, std::uint64_t seed) {
  if (dim < 5) throw std::invalid_argument("Friedman #1 needs at least five features");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleList out(n);
  for (Sample& s : out) {
    s.x.resize(dim);
    for (int k = 0; k < dim; ++k) s.x[k] = unif(rng);
    s.y = 10.0 * std::sin(std::numbers::pi * s.x[0] * s.x[1]) + 20.0 * (s.x[2] - 0.5) * (s.x[2] - 0.5) +
          10.0 * s.x[3] + 5.0 * s.x[4] + noise_std * normal(rng);
  }
  return out;
}

SampleList gaussian_blobs(std::size_t n, int dim, int classes, double separation, std::uint64_t seed) {
  if (classes < 2 || dim < 1) throw std::invalid_argument("blobs need two classes and one feature");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> centers;
  for (int k = 0; k < classes; ++k) centers.push_back(separation * standard_normal_vector(dim, rng));
  std::uniform_int_distribution<int> pick(0, classes - 1);
  SampleList out(n);
  for (Sample& s : out) {
    const int k = pick(rng);
    s.x = centers[static_cast<std::size_t>(k)] + standard_normal_vector(dim, rng);
    s.y = k;
  }
  return out;
}

}  // namespace coldbound
