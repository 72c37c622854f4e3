#pragma once

// Fully connected ReLU networks over a single flat parameter vector.
//
// Parameter layout is layer-major, and within a layer the weight matrix comes
// before the bias. Each weight matrix is stored row-major with shape
// (fan_out, fan_in), so row r holds the incoming weights of unit r.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace coldbound {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

enum class Activation { relu };
enum class OutputHead { identity, softmax };
enum class Task { regression, classification };

struct ArchSpec {
  std::vector<int> widths;  // input, hidden..., output
  Activation activation = Activation::relu;
  OutputHead head = OutputHead::identity;
  bool bias = true;

  /// Throws ShapeError when the widths are unusable.
  void validate() const;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
  Eigen::Index param_count() const;
  Task task() const { return head == OutputHead::softmax ? Task::classification : Task::regression; }

  /// Offset of the weight block of layer l in the flat vector.
  Eigen::Index weight_offset(int l) const;
  /// Offset of the bias block of layer l; only meaningful when bias is true.
  Eigen::Index bias_offset(int l) const;

  bool operator==(const ArchSpec&) const = default;
};

/// Immutable weight vector tied to an architecture. Copies share the
/// architecture descriptor.
class FlatParams {
public:
  FlatParams(ArchSpec arch, Eigen::VectorXd values);
  FlatParams(std::shared_ptr<const ArchSpec> arch, Eigen::VectorXd values);

  static FlatParams zeros(ArchSpec arch);

  const ArchSpec& arch() const { return *arch_; }
  const std::shared_ptr<const ArchSpec>& arch_ptr() const { return arch_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  /// Same architecture, new values.
  FlatParams with_values(Eigen::VectorXd values) const { return FlatParams(arch_, std::move(values)); }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  weights(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

private:
  std::shared_ptr<const ArchSpec> arch_;
  Eigen::VectorXd values_;
};

struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;  // regression target, or class index for classification

  int label() const { return static_cast<int>(y); }
};

using SampleList = std::vector<Sample>;

/// Column-per-sample packing of a sample list for batched evaluation.
struct Batch {
  Eigen::MatrixXd x;  // input_dim x n
  Eigen::VectorXd y;  // n

  Eigen::Index size() const { return y.size(); }
};

Batch pack(std::span<const Sample> samples);

/// What per_sample_gradient differentiates.
struct GradientTarget {
  enum class Kind { nll, raw_output };
  Kind kind = Kind::nll;
  int output = 0;

  static GradientTarget nll() { return {Kind::nll, 0}; }
  static GradientTarget raw_output(int k) { return {Kind::raw_output, k}; }
};

/// Network output: identity head returns the raw output, softmax head a
/// probability vector.
Eigen::VectorXd forward(const FlatParams& params, const Eigen::VectorXd& x);

/// Pre-head outputs (logits for a softmax head).
Eigen::VectorXd forward_raw(const FlatParams& params, const Eigen::VectorXd& x);

/// Raw outputs for every column of x; shape output_dim x n.
Eigen::MatrixXd forward_raw_batch(const FlatParams& params, const Eigen::MatrixXd& x);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
void softmax_columns(Eigen::MatrixXd& logits);

/// Exact gradient of the selected scalar with respect to all parameters.
Eigen::VectorXd per_sample_gradient(const FlatParams& params, const Sample& sample,
                                    GradientTarget target = GradientTarget::nll());

/// Jacobian of the raw outputs, shape output_dim x d.
Eigen::MatrixXd output_jacobian(const FlatParams& params, const Eigen::VectorXd& x);

/// Negative log-likelihood of one sample: Gaussian with unit noise for the
/// identity head, categorical cross-entropy for the softmax head.
double nll_loss(const FlatParams& params, const Sample& sample);

/// Per-sample NLL given raw outputs (one column per sample).
Eigen::VectorXd nll_from_raw(OutputHead head, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y);

/// Mean NLL over a packed batch.
double mean_nll(const FlatParams& params, const Batch& batch);

/// First-order expansion of the raw outputs around `anchor`, evaluated at
/// `query`, followed by the output head.
Eigen::VectorXd linearized_forward(const FlatParams& anchor, const FlatParams& query,
                                   const Eigen::VectorXd& x);

}  // namespace coldbound
