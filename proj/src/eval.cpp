#include "coldbound/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "coldbound/errors.hpp"
#include "coldbound/random.hpp"

namespace coldbound {

FlatParams initialize(const ArchSpec& arch, InitScheme scheme, double init_scale, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Eigen::VectorXd v(arch.param_count());
  if (scheme == InitScheme::gaussian) {
    std::normal_distribution<double> normal(0.0, init_scale);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  } else {
    for (int l = 0; l < arch.num_layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(arch.widths[l]));
      std::uniform_real_distribution<double> unif(-bound, bound);
      const Eigen::Index nw = Eigen::Index(arch.widths[l]) * arch.widths[l + 1];
      for (Eigen::Index i = 0; i < nw; ++i) v[arch.weight_offset(l) + i] = unif(rng);
      if (arch.bias) {
        for (int i = 0; i < arch.widths[l + 1]; ++i) v[arch.bias_offset(l) + i] = unif(rng);
      }
    }
  }
  return FlatParams(arch, std::move(v));
}

TrainResult train_map_with_history(const ArchSpec& arch, std::span<const Sample> train_data,
                                   const TrainConfig& cfg) {
  if (train_data.empty()) throw std::invalid_argument("training needs data");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.step_size < 0.0) {
    throw std::invalid_argument("invalid training configuration");
  }
  FlatParams params = initialize(arch, cfg.init, cfg.init_scale, cfg.seed);
  const Batch all = pack(train_data);
  TrainResult result{params, {}};
  result.epoch_loss.push_back(mean_nll(params, all));

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, {0x5eed}));
  Eigen::VectorXd w = params.values();
  Eigen::VectorXd grad(w.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.setZero();
      for (std::size_t k = start; k < stop; ++k) grad += per_sample_gradient(params, train_data[order[k]]);
      w -= cfg.step_size / static_cast<double>(stop - start) * grad;
      if (!w.allFinite()) {
        throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch), epoch);
      }
      params = params.with_values(w);
    }
    const double loss = mean_nll(params, all);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("training loss is not finite after epoch " + std::to_string(epoch), epoch);
    }
    result.epoch_loss.push_back(loss);
  }
  result.params = std::move(params);
  return result;
}

FlatParams train_map(const ArchSpec& arch, std::span<const Sample> train_data, const TrainConfig& cfg) {
  return train_map_with_history(arch, train_data, cfg).params;
}

Eigen::MatrixXd posterior_noise(Eigen::Index d, int m, std::uint64_t rng_seed) {
  if (m < 1) throw std::invalid_argument("need at least one posterior draw");
  Rng rng(rng_seed);
  Eigen::MatrixXd noise(d, m);
  for (int s = 0; s < m; ++s) noise.col(s) = standard_normal_vector(d, rng);
  return noise;
}

PredictiveDraws predictive_draws(const IsotropicGaussian& post, const Batch& data,
                                 const Eigen::MatrixXd& standard_noise) {
  if (data.size() == 0) throw std::invalid_argument("predictive metrics need data");
  const OutputHead head = post.mean().arch().head;
  const Eigen::Index m = standard_noise.cols();
  PredictiveDraws out;
  out.log_likelihood.resize(m, data.size());
  if (head == OutputHead::softmax) {
    out.mean_probability = Eigen::MatrixXd::Zero(post.mean().arch().output_dim(), data.size());
  }
  for (Eigen::Index s = 0; s < m; ++s) {
    const FlatParams w = post.draw(standard_noise.col(s));
    Eigen::MatrixXd raw = forward_raw_batch(w, data.x);
    out.log_likelihood.row(s) = -nll_from_raw(head, raw, data.y).transpose();
    if (head == OutputHead::softmax) {
      softmax_columns(raw);
      out.mean_probability += raw;
    }
  }
  if (head == OutputHead::softmax) out.mean_probability /= static_cast<double>(m);
  return out;
}

double predictive_nll(const PredictiveDraws& draws) {
  const Eigen::MatrixXd& ll = draws.log_likelihood;
  const double log_m = std::log(static_cast<double>(ll.rows()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < ll.cols(); ++i) {
    const double top = ll.col(i).maxCoeff();
    total += -(top + std::log((ll.col(i).array() - top).exp().sum()) - log_m);
  }
  return total / static_cast<double>(ll.cols());
}

double predictive_nll(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                      std::uint64_t rng_seed) {
  return predictive_nll(predictive_draws(post, pack(data), posterior_noise(post.dim(), m, rng_seed)));
}

McEstimate gibbs_nll(const PredictiveDraws& draws) {
  const Eigen::VectorXd per_draw = -draws.log_likelihood.rowwise().mean();
  McEstimate est;
  est.samples = static_cast<int>(per_draw.size());
  est.value = per_draw.mean();
  if (per_draw.size() > 1) {
    const double var = (per_draw.array() - est.value).square().sum() / double(per_draw.size() - 1);
    est.std_error = std::sqrt(var / double(per_draw.size()));
  }
  return est;
}

McEstimate gibbs_nll(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                     std::uint64_t rng_seed) {
  return gibbs_nll(predictive_draws(post, pack(data), posterior_noise(post.dim(), m, rng_seed)));
}

double ece_from_confidences(std::span<const double> confidence, std::span<const int> correct, int bins) {
  if (bins < 1) throw std::invalid_argument("ECE needs at least one bin");
  if (confidence.size() != correct.size()) throw std::invalid_argument("confidence/correctness length mismatch");
  if (confidence.empty()) throw std::invalid_argument("ECE needs predictions");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> acc_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = std::clamp(confidence[i], 0.0, 1.0);
    const auto b = static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(c * bins)));
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  double e = 0.0;
  const double n = static_cast<double>(confidence.size());
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) continue;
    e += std::abs(acc_sum[b] - conf_sum[b]) / n;  // (|b|/N) |acc - conf|
  }
  return e;
}

int predicted_class(const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
  int best = 0;
  for (int k = 1; k < probabilities.size(); ++k) {
    if (probabilities[k] > probabilities[best]) best = k;
  }
  return best;
}

namespace {

void require_classification(const PredictiveDraws& draws) {
  if (draws.mean_probability.size() == 0) {
    throw std::invalid_argument("metric is only defined for classification");
  }
}

}  // namespace

double ece(const PredictiveDraws& draws, const Eigen::VectorXd& labels, int bins) {
  require_classification(draws);
  const Eigen::MatrixXd& p = draws.mean_probability;
  std::vector<double> conf(static_cast<std::size_t>(p.cols()));
  std::vector<int> correct(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const int k = predicted_class(p.col(i));
    conf[static_cast<std::size_t>(i)] = p(k, i);
    correct[static_cast<std::size_t>(i)] = k == static_cast<int>(labels[i]);
  }
  return ece_from_confidences(conf, correct, bins);
}

double ece(const IsotropicGaussian& post, std::span<const Sample> data, int m, int bins,
           std::uint64_t rng_seed) {
  if (post.mean().arch().head != OutputHead::softmax) {
    throw std::invalid_argument("ECE is only defined for classification");
  }
  const Batch b = pack(data);
  return ece(predictive_draws(post, b, posterior_noise(post.dim(), m, rng_seed)), b.y, bins);
}

double zero_one(const PredictiveDraws& draws, const Eigen::VectorXd& labels) {
  require_classification(draws);
  const Eigen::MatrixXd& p = draws.mean_probability;
  double wrong = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    if (predicted_class(p.col(i)) != static_cast<int>(labels[i])) wrong += 1.0;
  }
  return wrong / static_cast<double>(p.cols());
}

double zero_one(const IsotropicGaussian& post, std::span<const Sample> data, int m,
                std::uint64_t rng_seed) {
  if (post.mean().arch().head != OutputHead::softmax) {
    throw std::invalid_argument("zero-one loss is only defined for classification");
  }
  const Batch b = pack(data);
  return zero_one(predictive_draws(post, b, posterior_noise(post.dim(), m, rng_seed)), b.y);
}

MetricReport evaluate_metrics(const IsotropicGaussian& post, const Batch& data,
                              const Eigen::MatrixXd& standard_noise, int bins) {
  const PredictiveDraws draws = predictive_draws(post, data, standard_noise);
  MetricReport r;
  r.nll = predictive_nll(draws);
  if (post.mean().arch().head == OutputHead::softmax) {
    r.ece = ece(draws, data.y, bins);
    r.zero_one = zero_one(draws, data.y);
  }
  r.n_eval = data.size();
  r.mc_samples = static_cast<int>(standard_noise.cols());
  return r;
}

}  // namespace coldbound
