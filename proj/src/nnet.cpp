#include "coldbound/nnet.hpp"

#include <cmath>
#include <string>

#include "coldbound/errors.hpp"

namespace coldbound {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_input(const ArchSpec& arch, Eigen::Index n) {
  if (n != arch.input_dim()) {
    throw ShapeError("input has " + std::to_string(n) + " features, network expects " +
                     std::to_string(arch.input_dim()));
  }
}

struct Trace {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
};

Trace run_forward(const FlatParams& params, const Eigen::VectorXd& x) {
  const ArchSpec& arch = params.arch();
  check_input(arch, x.size());
  const int L = arch.num_layers();
  Trace t;
  t.inputs.reserve(L);
  t.pre.reserve(L);
  Eigen::VectorXd a = x;
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = params.weights(l) * a;
    if (arch.bias) z += params.bias(l);
    t.inputs.push_back(std::move(a));
    a = (l + 1 < L) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    t.pre.push_back(std::move(z));
  }
  return t;
}

// Accumulates d(scalar)/d(params) given d(scalar)/d(raw output) = seed.
void backward(const FlatParams& params, const Trace& t, Eigen::VectorXd g,
              Eigen::Ref<Eigen::VectorXd> grad) {
  const ArchSpec& arch = params.arch();
  for (int l = arch.num_layers() - 1; l >= 0; --l) {
    const Eigen::VectorXd& a = t.inputs[l];
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
        grad.data() + arch.weight_offset(l), arch.widths[l + 1], arch.widths[l]);
    gw.noalias() = g * a.transpose();
    if (arch.bias) grad.segment(arch.bias_offset(l), arch.widths[l + 1]) = g;
    if (l > 0) {
      Eigen::VectorXd up = params.weights(l).transpose() * g;
      const Eigen::VectorXd& z = t.pre[l - 1];
      // ReLU subgradient at 0 is taken as 0.
      g = (z.array() > 0.0).select(up, 0.0);
    }
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void ArchSpec::validate() const {
  if (widths.size() < 2) throw ShapeError("architecture needs at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw ShapeError("layer widths must be positive");
  }
  if (head == OutputHead::softmax && output_dim() < 2) {
    throw ShapeError("softmax head needs at least two outputs");
  }
}

Eigen::Index ArchSpec::param_count() const {
  Eigen::Index d = 0;
  for (int l = 0; l + 1 < static_cast<int>(widths.size()); ++l) {
    d += Eigen::Index(widths[l]) * widths[l + 1] + (bias ? widths[l + 1] : 0);
  }
  return d;
}

Eigen::Index ArchSpec::weight_offset(int l) const {
  Eigen::Index off = 0;
  for (int k = 0; k < l; ++k) off += Eigen::Index(widths[k]) * widths[k + 1] + (bias ? widths[k + 1] : 0);
  return off;
}

Eigen::Index ArchSpec::bias_offset(int l) const {
  return weight_offset(l) + Eigen::Index(widths[l]) * widths[l + 1];
}

FlatParams::FlatParams(ArchSpec arch, Eigen::VectorXd values)
    : FlatParams(std::make_shared<const ArchSpec>(std::move(arch)), std::move(values)) {}

FlatParams::FlatParams(std::shared_ptr<const ArchSpec> arch, Eigen::VectorXd values)
    : arch_(std::move(arch)), values_(std::move(values)) {
  arch_->validate();
  if (values_.size() != arch_->param_count()) {
    throw ShapeError("parameter vector has length " + std::to_string(values_.size()) +
                     ", architecture needs " + std::to_string(arch_->param_count()));
  }
  if (!values_.allFinite()) throw ShapeError("parameter vector contains non-finite entries");
}

FlatParams FlatParams::zeros(ArchSpec arch) {
  const Eigen::Index d = arch.param_count();
  return FlatParams(std::move(arch), Eigen::VectorXd::Zero(d));
}

RowMajorMap FlatParams::weights(int layer) const {
  const ArchSpec& a = *arch_;
  return RowMajorMap(values_.data() + a.weight_offset(layer), a.widths[layer + 1], a.widths[layer]);
}

Eigen::Map<const Eigen::VectorXd> FlatParams::bias(int layer) const {
  const ArchSpec& a = *arch_;
  if (!a.bias) throw ShapeError("architecture has no bias terms");
  return Eigen::Map<const Eigen::VectorXd>(values_.data() + a.bias_offset(layer), a.widths[layer + 1]);
}

Batch pack(std::span<const Sample> samples) {
  Batch b;
  if (samples.empty()) return b;
  const Eigen::Index dim = samples.front().x.size();
  b.x.resize(dim, static_cast<Eigen::Index>(samples.size()));
  b.y.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != dim) throw ShapeError("samples have inconsistent feature lengths");
    b.x.col(static_cast<Eigen::Index>(i)) = samples[i].x;
    b.y[static_cast<Eigen::Index>(i)] = samples[i].y;
  }
  return b;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

void softmax_columns(Eigen::MatrixXd& logits) {
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto c = logits.col(j);
    c = (c.array() - c.maxCoeff()).exp();
    c /= c.sum();
  }
}

Eigen::VectorXd forward_raw(const FlatParams& params, const Eigen::VectorXd& x) {
  return run_forward(params, x).pre.back();
}

Eigen::VectorXd forward(const FlatParams& params, const Eigen::VectorXd& x) {
  Eigen::VectorXd raw = forward_raw(params, x);
  return params.arch().head == OutputHead::softmax ? softmax(raw) : raw;
}

Eigen::MatrixXd forward_raw_batch(const FlatParams& params, const Eigen::MatrixXd& x) {
  const ArchSpec& arch = params.arch();
  check_input(arch, x.rows());
  const int L = arch.num_layers();
  Eigen::MatrixXd a = x;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = params.weights(l) * a;
    if (arch.bias) z.colwise() += params.bias(l);
    if (l + 1 < L) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd per_sample_gradient(const FlatParams& params, const Sample& sample,
                                    GradientTarget target) {
  const ArchSpec& arch = params.arch();
  Trace t = run_forward(params, sample.x);
  const Eigen::VectorXd& raw = t.pre.back();
  Eigen::VectorXd seed = Eigen::VectorXd::Zero(arch.output_dim());
  if (target.kind == GradientTarget::Kind::raw_output) {
    if (target.output < 0 || target.output >= arch.output_dim()) {
      throw ShapeError("raw output index out of range");
    }
    seed[target.output] = 1.0;
  } else if (arch.head == OutputHead::identity) {
    if (arch.output_dim() != 1) throw ShapeError("Gaussian NLL needs a scalar output");
    seed[0] = raw[0] - sample.y;
  } else {
    const int label = sample.label();
    if (label < 0 || label >= arch.output_dim()) throw ShapeError("class label out of range");
    seed = softmax(raw);
    seed[label] -= 1.0;
  }
  Eigen::VectorXd grad(arch.param_count());
  backward(params, t, std::move(seed), grad);
  return grad;
}

Eigen::MatrixXd output_jacobian(const FlatParams& params, const Eigen::VectorXd& x) {
  const ArchSpec& arch = params.arch();
  Trace t = run_forward(params, x);
  const int K = arch.output_dim();
  Eigen::MatrixXd jac(K, arch.param_count());
  Eigen::VectorXd row(arch.param_count());
  for (int k = 0; k < K; ++k) {
    backward(params, t, Eigen::VectorXd::Unit(K, k), row);
    jac.row(k) = row.transpose();
  }
  return jac;
}

Eigen::VectorXd nll_from_raw(OutputHead head, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(raw.cols());
  if (head == OutputHead::identity) {
    for (Eigen::Index i = 0; i < raw.cols(); ++i) {
      const double r = y[i] - raw(0, i);
      out[i] = kHalfLog2Pi + 0.5 * r * r;
    }
  } else {
    for (Eigen::Index i = 0; i < raw.cols(); ++i) {
      const int label = static_cast<int>(y[i]);
      if (label < 0 || label >= raw.rows()) throw ShapeError("class label out of range");
      out[i] = log_sum_exp(raw.col(i)) - raw(label, i);
    }
  }
  return out;
}

double nll_loss(const FlatParams& params, const Sample& sample) {
  Eigen::MatrixXd raw = forward_raw(params, sample.x);
  Eigen::VectorXd y(1);
  y[0] = sample.y;
  return nll_from_raw(params.arch().head, raw, y)[0];
}

double mean_nll(const FlatParams& params, const Batch& batch) {
  return nll_from_raw(params.arch().head, forward_raw_batch(params, batch.x), batch.y).mean();
}

Eigen::VectorXd linearized_forward(const FlatParams& anchor, const FlatParams& query,
                                   const Eigen::VectorXd& x) {
  if (!(anchor.arch() == query.arch())) throw ShapeError("anchor and query architectures differ");
  Eigen::VectorXd raw = forward_raw(anchor, x) +
                        output_jacobian(anchor, x) * (query.values() - anchor.values());
  return anchor.arch().head == OutputHead::softmax ? softmax(raw) : raw;
}

}  // namespace coldbound
