#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qnr/error.hpp"
#include "qnr/qstate.hpp"
#include "qnr/rng.hpp"

namespace qnr::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDegenerateNorm = 1e-12;
inline constexpr double kProbClip = 1e-12;

enum class HeadKind { linear, unit_norm, purity_rescale, softmax };

/// How a purity is turned into an output norm by the purity_rescale head.
/// exact_norm:    |r| = sqrt(2^n Tr[rho^2] - 1), the norm of the state itself.
/// sqrt_purity: |r| = sqrt(Tr[rho^2]).
enum class PurityMode { exact_norm, sqrt_purity };

/// Output head applied after the last affine layer.
struct HeadSpec {
  HeadKind kind = HeadKind::linear;
  double target_norm = 1.0;    // unit_norm
  double target_purity = 1.0;  // purity_rescale, used when no per-sample purity is given
  PurityMode purity_mode = PurityMode::exact_norm;
  int qubits = 1;              // purity_rescale

  static HeadSpec linear() { return {}; }

  static HeadSpec unit_norm(double norm) {
    if (!(norm > 0.0)) throw InvalidArgument("unit_norm head needs a positive target norm");
    HeadSpec h;
    h.kind = HeadKind::unit_norm;
    h.target_norm = norm;
    return h;
  }

  /// Unit norm head matching pure n-qubit states, |r| = sqrt(2^n - 1).
  static HeadSpec pure_state(int n) { return unit_norm(std::sqrt(max_bloch_norm2(n))); }

  static HeadSpec purity_rescale(int n, double target_purity = 1.0,
                                 PurityMode mode = PurityMode::exact_norm) {
    require_supported_qubits(n);
    if (!(target_purity > 1.0 / hilbert_dim(n) && target_purity <= 1.0)) {
      throw InvalidArgument("target purity must lie in (1/2^n, 1]");
    }
    HeadSpec h;
    h.kind = HeadKind::purity_rescale;
    h.qubits = n;
    h.target_purity = target_purity;
    h.purity_mode = mode;
    return h;
  }

  static HeadSpec softmax() {
    HeadSpec h;
    h.kind = HeadKind::softmax;
    return h;
  }

  double norm_for_purity(double purity) const {
    if (purity_mode == PurityMode::sqrt_purity) return std::sqrt(purity);
    return std::sqrt(std::max(0.0, hilbert_dim(qubits) * purity - 1.0));
  }
};

inline std::string_view to_string(HeadKind k) {
  switch (k) {
    case HeadKind::linear: return "linear";
    case HeadKind::unit_norm: return "unit_norm";
    case HeadKind::purity_rescale: return "purity_rescale";
    case HeadKind::softmax: return "softmax";
  }
  return "?";
}

inline HeadKind parse_head_kind(std::string_view s) {
  if (s == "linear") return HeadKind::linear;
  if (s == "unit_norm") return HeadKind::unit_norm;
  if (s == "purity_rescale") return HeadKind::purity_rescale;
  if (s == "softmax") return HeadKind::softmax;
  throw InvalidArgument("unknown head '" + std::string(s) + "'");
}

inline std::string_view to_string(PurityMode m) {
  return m == PurityMode::exact_norm ? "exact_norm" : "sqrt_purity";
}

inline PurityMode parse_purity_mode(std::string_view s) {
  if (s == "exact_norm") return PurityMode::exact_norm;
  if (s == "sqrt_purity") return PurityMode::sqrt_purity;
  throw InvalidArgument("unknown purity mode '" + std::string(s) + "'");
}

enum class LossKind { mse, infidelity_pure, infidelity_mixed, cce };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::mse: return "mse";
    case LossKind::infidelity_pure: return "infidelity_pure";
    case LossKind::infidelity_mixed: return "infidelity_mixed";
    case LossKind::cce: return "cce";
  }
  return "?";
}

/// Throws unless `loss` is meaningful for `head`: CCE pairs with softmax
/// only, the regression losses with every other head.
inline void require_compatible(LossKind loss, const HeadSpec& head) {
  const bool classifier = head.kind == HeadKind::softmax;
  if ((loss == LossKind::cce) != classifier) {
    throw InvalidArgument(std::string("loss/head mismatch: ") + std::string(to_string(loss)) +
                          " with " + std::string(to_string(head.kind)) + " head");
  }
}

/// Dense ReLU network. All weights and biases live in one flat parameter
/// vector, layer by layer: W (out x in, column-major) then b.
class MlpModel {
 public:
  MlpModel(std::vector<int> layer_dims, HeadSpec head)
      : dims_(std::move(layer_dims)), head_(head) {
    if (dims_.size() < 2) throw InvalidArgument("model needs at least input and output dimensions");
    for (const int d : dims_) {
      if (d <= 0) throw InvalidArgument("layer dimensions must be positive");
    }
    Eigen::Index offset = 0;
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
      offsets_.push_back(offset);
      offset += static_cast<Eigen::Index>(dims_[k + 1]) * (dims_[k] + 1);
    }
    theta_ = Vector::Zero(offset);
  }

  MlpModel(std::vector<int> layer_dims, HeadSpec head, Vector theta)
      : MlpModel(std::move(layer_dims), head) {
    if (theta.size() != theta_.size()) throw InvalidArgument("parameter vector has the wrong length");
    theta_ = std::move(theta);
  }

  const std::vector<int>& layer_dims() const noexcept { return dims_; }
  const HeadSpec& head() const noexcept { return head_; }
  std::size_t num_layers() const noexcept { return dims_.size() - 1; }
  int input_dim() const noexcept { return dims_.front(); }
  int output_dim() const noexcept { return dims_.back(); }
  Eigen::Index parameter_count() const noexcept { return theta_.size(); }

  const Vector& parameters() const noexcept { return theta_; }
  Vector& parameters() noexcept { return theta_; }

  Eigen::Map<const Matrix> weight(std::size_t k) const {
    return {theta_.data() + offsets_[k], dims_[k + 1], dims_[k]};
  }
  Eigen::Map<Matrix> weight(std::size_t k) { return {theta_.data() + offsets_[k], dims_[k + 1], dims_[k]}; }

  Eigen::Map<const Vector> bias(std::size_t k) const {
    return {theta_.data() + offsets_[k] + static_cast<Eigen::Index>(dims_[k + 1]) * dims_[k], dims_[k + 1]};
  }
  Eigen::Map<Vector> bias(std::size_t k) {
    return {theta_.data() + offsets_[k] + static_cast<Eigen::Index>(dims_[k + 1]) * dims_[k], dims_[k + 1]};
  }

  /// Offset of layer k's block inside the flat parameter vector.
  Eigen::Index layer_offset(std::size_t k) const { return offsets_[k]; }

 private:
  std::vector<int> dims_;
  HeadSpec head_;
  std::vector<Eigen::Index> offsets_;
  Vector theta_;
};

/// Glorot-uniform weights, zero biases.
inline MlpModel init_model(std::vector<int> layer_dims, HeadSpec head, Rng& rng) {
  MlpModel model(std::move(layer_dims), head);
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    const auto& d = model.layer_dims();
    const double limit = std::sqrt(6.0 / (d[k] + d[k + 1]));
    auto w = model.weight(k);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
  }
  return model;
}

namespace detail {

// Post-activation values of every layer; acts[0] is the input and the last
// entry is the pre-head output u.
struct ForwardTrace {
  std::vector<Matrix> acts;
  Vector scale;  // per-sample target norm for the normalization heads
};

inline Vector head_scales(const HeadSpec& head, Eigen::Index batch, std::span<const double> purities) {
  Vector scale(batch);
  if (head.kind == HeadKind::unit_norm) {
    scale.setConstant(head.target_norm);
  } else if (head.kind == HeadKind::purity_rescale) {
    if (!purities.empty() && static_cast<Eigen::Index>(purities.size()) != batch) {
      throw InvalidArgument("one purity per sample required");
    }
    for (Eigen::Index j = 0; j < batch; ++j) {
      scale[j] = head.norm_for_purity(purities.empty() ? head.target_purity
                                                       : purities[static_cast<std::size_t>(j)]);
    }
  } else {
    scale.setOnes();
  }
  return scale;
}

inline ForwardTrace run_layers(const MlpModel& model, const Matrix& x) {
  if (x.rows() != model.input_dim()) {
    throw InvalidArgument("input has length " + std::to_string(x.rows()) + ", model expects " +
                          std::to_string(model.input_dim()));
  }
  ForwardTrace tr;
  tr.acts.reserve(model.num_layers() + 1);
  tr.acts.push_back(x);
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    Matrix z = model.weight(k) * tr.acts.back();
    z.colwise() += model.bias(k);
    if (k + 1 < model.num_layers()) z = z.cwiseMax(0.0);
    tr.acts.push_back(std::move(z));
  }
  return tr;
}

inline Matrix apply_head(const HeadSpec& head, const Matrix& u, const Vector& scale) {
  switch (head.kind) {
    case HeadKind::linear:
      return u;
    case HeadKind::unit_norm:
    case HeadKind::purity_rescale: {
      Matrix y(u.rows(), u.cols());
      for (Eigen::Index j = 0; j < u.cols(); ++j) {
        const double norm = u.col(j).norm();
        if (norm < kDegenerateNorm) throw InvalidArgument("degenerate pre-normalization output");
        y.col(j) = u.col(j) * (scale[j] / norm);
      }
      return y;
    }
    case HeadKind::softmax: {
      Matrix y(u.rows(), u.cols());
      for (Eigen::Index j = 0; j < u.cols(); ++j) {
        const Vector e = (u.col(j).array() - u.col(j).maxCoeff()).exp();
        y.col(j) = e / e.sum();
      }
      return y;
    }
  }
  return u;
}

}  // namespace detail

/// Network outputs for a batch stored column-wise. `purities` (one per
/// column) drives the purity_rescale head; when empty the head's own
/// target purity is used.
inline Matrix forward_batch(const MlpModel& model, const Matrix& inputs,
                            std::span<const double> purities = {}) {
  const auto tr = detail::run_layers(model, inputs);
  return detail::apply_head(model.head(), tr.acts.back(),
                            detail::head_scales(model.head(), inputs.cols(), purities));
}

inline Vector forward(const MlpModel& model, const Vector& x, std::optional<double> purity = {}) {
  const double p = purity.value_or(0.0);
  return forward_batch(model, x, purity ? std::span<const double>(&p, 1) : std::span<const double>{});
}

/// (1/B) sum_i |r_i - r_hat_i|^2 over columns.
inline double loss_mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidArgument("loss_mse: shape mismatch");
  }
  return (pred - target).colwise().squaredNorm().mean();
}

/// Mean infidelity with Bloch-form fidelities:
///   infidelity_pure:  F = (1 + r.s) / 2^n
///   infidelity_mixed: F = |1 + r.s| / sqrt((1 + |r|^2)(1 + |s|^2))
inline double loss_infidelity(const Matrix& pred, const Matrix& target, LossKind kind) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidArgument("loss_infidelity: shape mismatch");
  }
  const int n = qubits_from_bloch_dim(pred.rows());
  if (n == 0) throw InvalidArgument("loss_infidelity: output is not a Bloch vector");
  double total = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    const double dot = target.col(j).dot(pred.col(j));
    if (kind == LossKind::infidelity_pure) {
      total += 1.0 - (1.0 + dot) / hilbert_dim(n);
    } else if (kind == LossKind::infidelity_mixed) {
      total += 1.0 - std::abs(1.0 + dot) / std::sqrt((1.0 + target.col(j).squaredNorm()) *
                                                    (1.0 + pred.col(j).squaredNorm()));
    } else {
      throw InvalidArgument("loss_infidelity: not an infidelity loss");
    }
  }
  return total / static_cast<double>(pred.cols());
}

/// -sum_i sum_j y_ij log p_ij summed over the batch, probabilities clipped
/// to [1e-12, 1].
inline double loss_cce(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.cols()) throw InvalidArgument("loss_cce: one label per column");
  double total = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    if (c < 0 || c >= probs.rows()) throw InvalidArgument("loss_cce: label out of range");
    total -= std::log(std::clamp(probs(c, j), kProbClip, 1.0));
  }
  return total;
}

/// Column-major batch: inputs (d x B) with either regression targets
/// (p x B) or class labels. `purities` feeds the purity_rescale head.
struct Batch {
  Matrix inputs;
  Matrix targets;
  std::vector<int> labels;
  std::vector<double> purities;

  Eigen::Index size() const noexcept { return inputs.cols(); }
};

/// The training objective: batch mean of the selected loss (CCE divided by
/// the batch size).
inline double objective(const Matrix& outputs, const Batch& batch, LossKind loss) {
  switch (loss) {
    case LossKind::mse: return loss_mse(outputs, batch.targets);
    case LossKind::infidelity_pure:
    case LossKind::infidelity_mixed: return loss_infidelity(outputs, batch.targets, loss);
    case LossKind::cce: return loss_cce(outputs, batch.labels) / static_cast<double>(outputs.cols());
  }
  return 0.0;
}

inline double objective(const MlpModel& model, const Batch& batch, LossKind loss) {
  require_compatible(loss, model.head());
  return objective(forward_batch(model, batch.inputs, batch.purities), batch, loss);
}

struct LossGradient {
  double loss;
  Vector gradient;  // same layout as MlpModel::parameters()
  Matrix outputs;   // head outputs of the forward pass
};

/// Loss and its exact gradient with respect to every parameter.
inline LossGradient backward(const MlpModel& model, const Batch& batch, LossKind loss) {
  require_compatible(loss, model.head());
  const HeadSpec& head = model.head();
  const auto tr = detail::run_layers(model, batch.inputs);
  const Matrix& u = tr.acts.back();
  const Eigen::Index B = u.cols();
  const Vector scale = detail::head_scales(head, B, batch.purities);
  Matrix y = detail::apply_head(head, u, scale);
  const double value = objective(y, batch, loss);
  const double inv_b = 1.0 / static_cast<double>(B);

  // dL/du, the gradient at the pre-head output.
  Matrix delta(u.rows(), B);
  if (loss == LossKind::cce) {
    delta = y;
    for (Eigen::Index j = 0; j < B; ++j) delta(batch.labels[static_cast<std::size_t>(j)], j) -= 1.0;
    delta *= inv_b;
  } else {
    Matrix g(u.rows(), B);  // dL/dy
    if (loss == LossKind::mse) {
      g = 2.0 * inv_b * (y - batch.targets);
    } else if (loss == LossKind::infidelity_pure) {
      const int n = qubits_from_bloch_dim(u.rows());
      g = -(inv_b / hilbert_dim(n)) * batch.targets;
    } else {
      for (Eigen::Index j = 0; j < B; ++j) {
        const auto t = batch.targets.col(j);
        const auto s = y.col(j);
        const double a = 1.0 + t.dot(s);
        const double k = std::sqrt(1.0 + t.squaredNorm());
        const double q = 1.0 + s.squaredNorm();
        const double sign = a >= 0.0 ? 1.0 : -1.0;
        const Vector dfds = sign * t / (k * std::sqrt(q)) - std::abs(a) * s / (k * q * std::sqrt(q));
        g.col(j) = -inv_b * dfds;
      }
    }
    if (head.kind == HeadKind::linear) {
      delta = g;
    } else {
      // d/du of c u/|u| is (c/|u|)(I - d d^T) with d = u/|u|.
      for (Eigen::Index j = 0; j < B; ++j) {
        const double norm = u.col(j).norm();
        const Vector d = u.col(j) / norm;
        delta.col(j) = (scale[j] / norm) * (g.col(j) - d * d.dot(g.col(j)));
      }
    }
  }

  Vector grad(model.parameter_count());
  for (std::size_t k = model.num_layers(); k-- > 0;) {
    const Matrix& prev = tr.acts[k];
    const auto rows = model.layer_dims()[k + 1];
    const auto cols = model.layer_dims()[k];
    Eigen::Map<Matrix>(grad.data() + model.layer_offset(k), rows, cols).noalias() = delta * prev.transpose();
    Eigen::Map<Vector>(grad.data() + model.layer_offset(k) + static_cast<Eigen::Index>(rows) * cols, rows) =
        delta.rowwise().sum();
    if (k > 0) {
      Matrix next = model.weight(k).transpose() * delta;
      delta = next.cwiseProduct((prev.array() > 0.0).cast<double>().matrix());
    }
  }
  return {value, std::move(grad), std::move(y)};
}

/// Argmax of the class probabilities; ties go to the lowest index.
inline int predict_class(const Vector& probs) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best);
}

inline int predict_class(const MlpModel& model, const Vector& x) {
  if (model.head().kind != HeadKind::softmax) throw InvalidArgument("predict_class needs a softmax head");
  return predict_class(forward(model, x));
}

}  // namespace qnr::nn
