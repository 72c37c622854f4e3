#include "coldbound/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coldbound/errors.hpp"
#include "coldbound/random.hpp"

namespace coldbound {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  return v;
}

long long to_int(const std::string& text, const std::string& what) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

const char* to_string(DataSourceKind k) {
  switch (k) {
    case DataSourceKind::csv: return "csv";
    case DataSourceKind::friedman: return "friedman";
    case DataSourceKind::linear_oracle: return "linear";
    case DataSourceKind::blobs: return "blobs";
  }
  return "?";
}

std::string resolved_data(const DataSourceConfig& d, const std::string& section) {
  std::ostringstream os;
  os << "[" << section << "]\n";
  os << "source = " << to_string(d.kind) << "\n";
  os << "task = " << (d.task == Task::regression ? "regression" : "classification") << "\n";
  if (d.kind == DataSourceKind::csv) {
    os << "path = " << d.path << "\n";
    os << "target = " << d.target << "\n";
    std::string f;
    for (std::size_t i = 0; i < d.features.size(); ++i) f += (i ? "," : "") + d.features[i];
    os << "features = " << f << "\n";
  } else {
    os << "n = " << d.n << "\n";
    os << "dim = " << d.dim << "\n";
    os << "seed = " << d.seed << "\n";
    if (d.kind == DataSourceKind::friedman) os << "noise = " << format_number(d.noise) << "\n";
    if (d.kind == DataSourceKind::blobs) {
      os << "classes = " << d.classes << "\n";
      os << "separation = " << format_number(d.noise) << "\n";
    }
    if (d.kind == DataSourceKind::linear_oracle) {
      os << "sigma_x2 = " << format_number(d.sigma_x2) << "\n";
      os << "sigma_eps2 = " << format_number(d.sigma_eps2) << "\n";
      os << "w_scale = " << format_number(d.w_scale) << "\n";
    }
  }
  return os.str();
}

Eigen::VectorXd oracle_weights(Eigen::Index d, double w_scale, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x3ea1}));
  return standard_normal_vector(d, rng) * (w_scale / std::sqrt(static_cast<double>(d)));
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

IniFile IniFile::parse(const std::string& text) {
  IniFile ini;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    ini.values_[section][key] = trim(line.substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

std::optional<std::string> IniFile::get(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  touched_[section + "." + key] = true;
  return k->second;
}

std::string IniFile::get_string(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double IniFile::get_double(const std::string& section, const std::string& key, double fallback) const {
  auto v = get(section, key);
  return v ? to_double(*v, section + "." + key) : fallback;
}

long long IniFile::get_int(const std::string& section, const std::string& key, long long fallback) const {
  auto v = get(section, key);
  return v ? to_int(*v, section + "." + key) : fallback;
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(section + "." + key + ": '" + *v + "' is not a boolean");
}

std::vector<std::string> IniFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [section, kv] : values_) {
    for (const auto& [key, value] : kv) {
      if (!touched_.count(section + "." + key)) out.push_back(section + "." + key);
    }
  }
  return out;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  const std::string s = trim(spec);
  if (s.rfind("log:", 0) == 0 || s.rfind("lin:", 0) == 0) {
    const auto parts = split_on(s, ':');
    if (parts.size() != 4) throw ConfigError("grid '" + s + "' must look like log:lo:hi:count");
    const double lo = to_double(parts[1], "grid lower end");
    const double hi = to_double(parts[2], "grid upper end");
    const long long count = to_int(parts[3], "grid count");
    if (count < 1) throw ConfigError("grid count must be positive");
    const bool logscale = parts[0] == "log";
    if (logscale && !(lo > 0.0 && hi > 0.0)) throw ConfigError("log grid ends must be positive");
    for (long long i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      grid.push_back(logscale ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                              : lo + t * (hi - lo));
    }
    if (count > 1) {
      grid.front() = lo;
      grid.back() = hi;
    }
  } else {
    for (const auto& item : split_on(s, ',')) grid.push_back(to_double(item, "grid value"));
  }
  if (grid.empty()) throw ConfigError("grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("grid '" + s + "' is not strictly increasing");
  }
  return grid;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  if (trim(spec).empty()) return out;
  for (const auto& item : split_on(spec, ',')) out.push_back(static_cast<int>(to_int(item, "integer list")));
  return out;
}

DataSourceConfig data_source_from(const IniFile& ini, const std::string& section) {
  DataSourceConfig d;
  const std::string source = ini.get_string(section, "source", "friedman");
  if (source == "csv") d.kind = DataSourceKind::csv;
  else if (source == "friedman") d.kind = DataSourceKind::friedman;
  else if (source == "linear") d.kind = DataSourceKind::linear_oracle;
  else if (source == "blobs") d.kind = DataSourceKind::blobs;
  else throw ConfigError(section + ".source: unknown source '" + source + "'");

  const std::string default_task = d.kind == DataSourceKind::blobs ? "classification" : "regression";
  const std::string task = ini.get_string(section, "task", default_task);
  if (task == "regression") d.task = Task::regression;
  else if (task == "classification") d.task = Task::classification;
  else throw ConfigError(section + ".task: unknown task '" + task + "'");

  d.path = ini.get_string(section, "path", "");
  d.target = ini.get_string(section, "target", "y");
  const std::string features = ini.get_string(section, "features", "");
  if (!trim(features).empty()) d.features = split_on(features, ',');
  d.n = static_cast<std::size_t>(ini.get_int(section, "n", 5000));
  d.dim = static_cast<int>(ini.get_int(section, "dim", d.kind == DataSourceKind::linear_oracle ? 20 : 5));
  d.classes = static_cast<int>(ini.get_int(section, "classes", 3));
  d.noise = d.kind == DataSourceKind::blobs ? ini.get_double(section, "separation", 2.0)
                                            : ini.get_double(section, "noise", 1.0);
  d.sigma_x2 = ini.get_double(section, "sigma_x2", 1.0);
  d.sigma_eps2 = ini.get_double(section, "sigma_eps2", 0.25);
  d.w_scale = ini.get_double(section, "w_scale", 1.0);
  d.seed = static_cast<std::uint64_t>(ini.get_int(section, "seed", 1));

  if (d.kind == DataSourceKind::csv && d.path.empty()) throw ConfigError(section + ".path is required for csv data");
  if (d.kind == DataSourceKind::blobs && d.task != Task::classification) {
    throw ConfigError(section + ": blobs data is a classification source");
  }
  if (d.kind != DataSourceKind::blobs && d.kind != DataSourceKind::csv && d.task != Task::regression) {
    throw ConfigError(section + ": synthetic regression sources cannot be used for classification");
  }
  return d;
}

SampleList materialize(const DataSourceConfig& cfg, std::vector<std::string>* feature_names) {
  SampleList samples;
  std::vector<std::string> names;
  try {
    switch (cfg.kind) {
      case DataSourceKind::csv: {
        LoadedData loaded = load_csv(cfg.path, cfg.target, cfg.features, cfg.task);
        samples = std::move(loaded.samples);
        names = std::move(loaded.feature_names);
        break;
      }
      case DataSourceKind::friedman:
        samples = friedman_regression(cfg.n, cfg.dim, cfg.noise, cfg.seed);
        break;
      case DataSourceKind::blobs:
        samples = gaussian_blobs(cfg.n, cfg.dim, cfg.classes, cfg.noise, cfg.seed);
        break;
      case DataSourceKind::linear_oracle: {
        SyntheticOracleSpec spec;
        spec.d = cfg.dim;
        spec.sigma_x2 = cfg.sigma_x2;
        spec.sigma_eps2 = cfg.sigma_eps2;
        spec.w_star = oracle_weights(cfg.dim, cfg.w_scale, cfg.seed);
        spec.n_per_draw = static_cast<Eigen::Index>(cfg.n);
        spec.seed = cfg.seed;
        samples = synthetic_draw(spec, 0);
        break;
      }
    }
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("data source: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data source: ") + e.what());
  }
  if (names.empty() && !samples.empty()) {
    for (Eigen::Index k = 0; k < samples.front().x.size(); ++k) names.push_back("x" + std::to_string(k + 1));
  }
  if (feature_names) *feature_names = std::move(names);
  return samples;
}

SweepConfig::SweepConfig()
    : lambda_grid(parse_grid("log:1e-2:1e5:15")), prior_var_grid(parse_grid("log:1e-5:1e-1:20")) {}

void SweepConfig::validate() const {
  if (lambda_grid.empty() || prior_var_grid.empty()) throw ConfigError("grids must be non-empty");
  for (double l : lambda_grid) {
    if (!(l > 0.0)) throw ConfigError("lambda grid values must be positive");
  }
  for (double v : prior_var_grid) {
    if (!(v > 0.0)) throw ConfigError("prior variance grid values must be positive");
  }
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (n_seeds < 1) throw ConfigError("need at least one seed");
  if (m_posterior < 1 || m_prior < 1 || m_data < 1 || m_predictive < 1) {
    throw ConfigError("Monte Carlo budgets must be positive");
  }
  if (ece_bins < 1) throw ConfigError("ECE needs at least one bin");
  if (counts.train == 0 || counts.test == 0 || counts.validation == 0 || counts.trainsuffix == 0 ||
      counts.z_true == 0) {
    throw ConfigError("all five split counts must be positive");
  }
  if (train.epochs < 0 || train.batch_size < 1 || !(train.step_size >= 0.0)) {
    throw ConfigError("invalid training settings");
  }
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden widths must be positive");
  }
  if (kinds.empty()) throw ConfigError("no bounds requested");
}

ArchSpec SweepConfig::arch(int input_dim, int output_dim) const {
  ArchSpec a;
  a.widths.push_back(input_dim);
  for (int h : hidden) a.widths.push_back(h);
  a.widths.push_back(output_dim);
  a.head = data.task == Task::classification ? OutputHead::softmax : OutputHead::identity;
  a.bias = bias;
  a.validate();
  return a;
}

std::string SweepConfig::resolved() const {
  std::ostringstream os;
  os << resolved_data(data, "data");
  os << "[split]\n";
  os << "counts = " << counts.train << "," << counts.test << "," << counts.validation << ","
     << counts.trainsuffix << "," << counts.z_true << "\n";
  os << "seed = " << split_seed << "\n";
  os << "[model]\n";
  std::string h;
  for (std::size_t i = 0; i < hidden.size(); ++i) h += (i ? "," : "") + std::to_string(hidden[i]);
  os << "hidden = " << h << "\n";
  os << "bias = " << (bias ? "true" : "false") << "\n";
  os << "[train]\n";
  os << "step_size = " << format_number(train.step_size) << "\n";
  os << "epochs = " << train.epochs << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "init = " << (train.init == InitScheme::gaussian ? "gaussian" : "uniform-fan-in") << "\n";
  os << "init_scale = " << format_number(train.init_scale) << "\n";
  os << "[sweep]\n";
  os << "lambda_grid = " << join_numbers(lambda_grid) << "\n";
  os << "prior_var_grid = " << join_numbers(prior_var_grid) << "\n";
  os << "delta = " << format_number(delta) << "\n";
  os << "seeds = " << n_seeds << "\n";
  os << "base_seed = " << base_seed << "\n";
  std::string k;
  for (std::size_t i = 0; i < kinds.size(); ++i) k += (i ? "," : "") + std::string(to_string(kinds[i]));
  os << "bounds = " << k << "\n";
  os << "moment_form = " << to_string(moment_form) << "\n";
  os << "w_star_gap = " << (w_star_gap ? format_number(*w_star_gap) : std::string("prior-mean-norm")) << "\n";
  os << "sigma_eps2 = " << format_number(sigma_eps2) << "\n";
  os << "[mc]\n";
  os << "m_posterior = " << m_posterior << "\n";
  os << "m_prior = " << m_prior << "\n";
  os << "m_data = " << m_data << "\n";
  os << "m_predictive = " << m_predictive << "\n";
  os << "ece_bins = " << ece_bins << "\n";
  os << "[output]\n";
  os << "dir = " << out_dir.string() << "\n";
  return os.str();
}

SweepConfig sweep_config_from(const IniFile& ini) {
  SweepConfig c;
  c.data = data_source_from(ini, "data");
  if (auto counts = ini.get("split", "counts")) {
    const auto v = split_on(*counts, ',');
    if (v.size() != 5) throw ConfigError("split.counts needs five values");
    c.counts = {static_cast<std::size_t>(to_int(v[0], "split.counts")),
                static_cast<std::size_t>(to_int(v[1], "split.counts")),
                static_cast<std::size_t>(to_int(v[2], "split.counts")),
                static_cast<std::size_t>(to_int(v[3], "split.counts")),
                static_cast<std::size_t>(to_int(v[4], "split.counts"))};
  }
  c.split_seed = static_cast<std::uint64_t>(ini.get_int("split", "seed", 7));
  if (auto hidden = ini.get("model", "hidden")) c.hidden = parse_int_list(*hidden);
  c.bias = ini.get_bool("model", "bias", true);

  c.train.step_size = ini.get_double("train", "step_size", 1e-3);
  c.train.epochs = static_cast<int>(ini.get_int("train", "epochs", 10));
  c.train.batch_size = static_cast<int>(ini.get_int("train", "batch_size", 32));
  const std::string init = ini.get_string("train", "init", "uniform-fan-in");
  if (init == "uniform-fan-in") c.train.init = InitScheme::uniform_fan_in;
  else if (init == "gaussian") c.train.init = InitScheme::gaussian;
  else throw ConfigError("train.init: unknown scheme '" + init + "'");
  c.train.init_scale = ini.get_double("train", "init_scale", 0.1);

  if (auto g = ini.get("sweep", "lambda_grid")) c.lambda_grid = parse_grid(*g);
  if (auto g = ini.get("sweep", "prior_var_grid")) c.prior_var_grid = parse_grid(*g);
  c.delta = ini.get_double("sweep", "delta", 0.05);
  c.n_seeds = static_cast<int>(ini.get_int("sweep", "seeds", 10));
  c.base_seed = static_cast<std::uint64_t>(ini.get_int("sweep", "base_seed", 0));
  if (auto kinds = ini.get("sweep", "bounds")) {
    c.kinds.clear();
    for (const auto& k : split_on(*kinds, ',')) {
      if (k == "approximate") c.kinds.push_back(BoundKind::approximate);
      else if (k == "mixed") c.kinds.push_back(BoundKind::mixed);
      else if (k == "original") c.kinds.push_back(BoundKind::original);
      else throw ConfigError("sweep.bounds: unknown bound '" + k + "'");
    }
  }
  const std::string form = ini.get_string("sweep", "moment_form", "derived");
  if (form == "derived") c.moment_form = MomentForm::derived;
  else if (form == "headline") c.moment_form = MomentForm::headline;
  else throw ConfigError("sweep.moment_form: unknown form '" + form + "'");
  const std::string gap = ini.get_string("sweep", "w_star_gap", "prior-mean-norm");
  if (gap != "prior-mean-norm") c.w_star_gap = to_double(gap, "sweep.w_star_gap");
  c.sigma_eps2 = ini.get_double("sweep", "sigma_eps2", 1.0);

  c.m_posterior = static_cast<int>(ini.get_int("mc", "m_posterior", 100));
  c.m_prior = static_cast<int>(ini.get_int("mc", "m_prior", 10));
  c.m_data = static_cast<int>(ini.get_int("mc", "m_data", 10));
  c.m_predictive = static_cast<int>(ini.get_int("mc", "m_predictive", 100));
  c.ece_bins = static_cast<int>(ini.get_int("mc", "ece_bins", kDefaultEceBins));
  c.out_dir = ini.get_string("output", "dir", "sweep_out");

  if (auto unused = ini.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  c.validate();
  return c;
}

void ValidityConfig::validate() const {
  try {
    oracle.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("oracle: ") + e.what());
  }
  if (!(lambda > 0.0)) throw ConfigError("validity.lambda must be positive");
  if (!(prior_var > 0.0)) throw ConfigError("validity.prior_var must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("validity.delta must lie in (0, 1]");
  if (trials < 1) throw ConfigError("validity.trials must be positive");
  if (m_posterior < 1 || m_prior < 1 || m_data < 1) throw ConfigError("Monte Carlo budgets must be positive");
}

std::string ValidityConfig::resolved() const {
  std::ostringstream os;
  os << "[oracle]\n";
  os << "d = " << oracle.d << "\n";
  os << "sigma_x2 = " << format_number(oracle.sigma_x2) << "\n";
  os << "sigma_eps2 = " << format_number(oracle.sigma_eps2) << "\n";
  os << "n = " << oracle.n_per_draw << "\n";
  os << "w_scale = " << format_number(w_scale) << "\n";
  os << "seed = " << oracle.seed << "\n";
  os << "[validity]\n";
  os << "lambda = " << format_number(lambda) << "\n";
  os << "prior_var = " << format_number(prior_var) << "\n";
  os << "delta = " << format_number(delta) << "\n";
  os << "trials = " << trials << "\n";
  os << "posterior_mean = " << (oracle_posterior_mean ? "oracle" : "tempered") << "\n";
  os << "degenerate_posterior = " << (degenerate_posterior ? "true" : "false") << "\n";
  os << "m_posterior = " << m_posterior << "\n";
  os << "m_prior = " << m_prior << "\n";
  os << "m_data = " << m_data << "\n";
  os << "base_seed = " << base_seed << "\n";
  os << "[output]\n";
  os << "dir = " << out_dir.string() << "\n";
  return os.str();
}

ValidityConfig validity_config_from(const IniFile& ini) {
  ValidityConfig c;
  c.oracle.d = ini.get_int("oracle", "d", 20);
  c.oracle.sigma_x2 = ini.get_double("oracle", "sigma_x2", 1.0);
  c.oracle.sigma_eps2 = ini.get_double("oracle", "sigma_eps2", 0.25);
  c.oracle.n_per_draw = ini.get_int("oracle", "n", 50);
  c.oracle.seed = static_cast<std::uint64_t>(ini.get_int("oracle", "seed", 1));
  c.w_scale = ini.get_double("oracle", "w_scale", 1.0);
  if (c.oracle.d < 1) throw ConfigError("oracle.d must be positive");
  c.oracle.w_star = oracle_weights(c.oracle.d, c.w_scale, c.oracle.seed);

  c.lambda = ini.get_double("validity", "lambda", 1.0);
  c.prior_var = ini.get_double("validity", "prior_var", 0.01);
  c.delta = ini.get_double("validity", "delta", 0.05);
  c.trials = static_cast<int>(ini.get_int("validity", "trials", 200));
  const std::string mean = ini.get_string("validity", "posterior_mean", "tempered");
  if (mean == "oracle") c.oracle_posterior_mean = true;
  else if (mean != "tempered") throw ConfigError("validity.posterior_mean: unknown choice '" + mean + "'");
  c.degenerate_posterior = ini.get_bool("validity", "degenerate_posterior", false);
  c.m_posterior = static_cast<int>(ini.get_int("validity", "m_posterior", 100));
  c.m_prior = static_cast<int>(ini.get_int("validity", "m_prior", 10));
  c.m_data = static_cast<int>(ini.get_int("validity", "m_data", 10));
  c.base_seed = static_cast<std::uint64_t>(ini.get_int("validity", "base_seed", 0));
  c.out_dir = ini.get_string("output", "dir", "validity_out");

  if (auto unused = ini.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  c.validate();
  return c;
}

std::string SynthGenConfig::resolved() const {
  return resolved_data(data, "data") + "[output]\npath = " + out.string() + "\n";
}

SynthGenConfig synth_gen_config_from(const IniFile& ini) {
  SynthGenConfig c;
  c.data = data_source_from(ini, "data");
  if (c.data.kind == DataSourceKind::csv) throw ConfigError("synth-gen needs a synthetic data source");
  c.out = ini.get_string("output", "path", "synthetic.csv");
  if (auto unused = ini.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  return c;
}

}  // namespace coldbound
