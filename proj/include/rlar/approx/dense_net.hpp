#pragma once

#include <rlar/types.hpp>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace rlar::approx {

enum class Activation { relu, tanh, identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

/// Per-layer post-activation values recorded by a batched forward pass.
/// activations[0] is the input batch, activations[L] the output.
template <typename Scalar>
struct Tape {
  std::vector<Mat<Scalar>> activations;
};

/// Fully connected feed-forward network over a flat parameter vector.
///
/// Parameter layout, per layer in order: the weight matrix (n_out x n_in,
/// row-major) followed by the bias (n_out). Batches are column-major with
/// one sample per column. The ReLU derivative at a zero pre-activation is 0.
template <typename Scalar>
class DenseNet {
 public:
  using Vector = Vec<Scalar>;
  using Matrix = Mat<Scalar>;
  using ConstWeights = Eigen::Map<const RowMajorMat<Scalar>>;
  using Weights = Eigen::Map<RowMajorMat<Scalar>>;

  DenseNet() = default;

  DenseNet(std::vector<int> layer_sizes, std::vector<Activation> activations)
      : sizes_(std::move(layer_sizes)), acts_(std::move(activations)) {
    if (sizes_.size() < 2) throw ConfigError("DenseNet needs at least an input and an output layer");
    if (acts_.size() != sizes_.size() - 1)
      throw ConfigError("DenseNet needs one activation per layer");
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw ConfigError("DenseNet layer sizes must be positive");
      offsets_.push_back(offsets_.back() + sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
    }
    params_ = Vector::Zero(offsets_.back());
  }

  /// in -> hidden... -> out with one activation shared by all hidden layers.
  static DenseNet mlp(int in, const std::vector<int>& hidden, int out, Activation hidden_act,
                      Activation out_act = Activation::identity) {
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    std::vector<Activation> acts(hidden.size(), hidden_act);
    acts.push_back(out_act);
    return DenseNet(std::move(sizes), std::move(acts));
  }

  /// Uniform fan-in initialization, weights and biases in +-1/sqrt(n_in).
  void init_fan_in(Rng& rng) {
    for (int l = 0; l < layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = offsets_[l]; i < offsets_[l + 1]; ++i) params_[i] = static_cast<Scalar>(dist(rng));
    }
  }

  int layers() const { return static_cast<int>(acts_.size()); }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index param_count() const { return params_.size(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  const std::vector<Activation>& activations() const { return acts_; }

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  void set_params(const Vector& p) {
    if (p.size() != params_.size()) throw ConfigError("DenseNet parameter count mismatch");
    params_ = p;
  }

  ConstWeights weights(int l) const {
    return ConstWeights(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  auto bias(int l) const {
    return params_.segment(offsets_[l] + sizes_[l] * sizes_[l + 1], sizes_[l + 1]);
  }

  /// Batched forward pass. Records activations into `tape` when given.
  Matrix forward(const Matrix& x, Tape<Scalar>* tape = nullptr) const {
    if (x.rows() != input_size())
      throw ConfigError("DenseNet input has " + std::to_string(x.rows()) + " rows, expected " +
                        std::to_string(input_size()));
    if (tape) {
      tape->activations.resize(layers() + 1);
      tape->activations[0] = x;
    }
    Matrix h = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix z = weights(l) * h;
      z.colwise() += bias(l);
      apply(acts_[l], z);
      h.swap(z);
      if (tape) tape->activations[l + 1] = h;
    }
    return h;
  }

  Vector eval(const Vector& x) const { return forward(Matrix(x)).col(0); }

  /// Reverse pass over a recorded tape. `upstream` is dLoss/dOutput per
  /// column. Parameter gradients are summed over the batch and written into
  /// `grad_params` (resized); `grad_input` receives dLoss/dInput per column.
  /// Either output may be null.
  void backward(const Tape<Scalar>& tape, const Matrix& upstream, Vector* grad_params,
                Matrix* grad_input) const {
    if (upstream.rows() != output_size() || tape.activations.size() != sizes_.size())
      throw ConfigError("DenseNet backward shape mismatch");
    if (grad_params) grad_params->setZero(params_.size());
    Matrix delta = upstream;
    for (int l = layers() - 1; l >= 0; --l) {
      scale_by_derivative(acts_[l], tape.activations[l + 1], delta);
      if (grad_params) {
        Weights gw(grad_params->data() + offsets_[l], sizes_[l + 1], sizes_[l]);
        gw.noalias() = delta * tape.activations[l].transpose();
        grad_params->segment(offsets_[l] + sizes_[l] * sizes_[l + 1], sizes_[l + 1]) = delta.rowwise().sum();
      }
      if (l > 0 || grad_input) {
        Matrix prev = weights(l).transpose() * delta;
        delta.swap(prev);
      }
    }
    if (grad_input) *grad_input = std::move(delta);
  }

 private:
  static void apply(Activation a, Matrix& z) {
    switch (a) {
      case Activation::relu: z = z.cwiseMax(Scalar(0)); break;
      case Activation::tanh: z = z.array().tanh().matrix(); break;
      case Activation::identity: break;
    }
  }

  // Multiplies delta by the activation derivative expressed through the
  // layer output y: relu -> [y > 0], tanh -> 1 - y^2.
  static void scale_by_derivative(Activation a, const Matrix& y, Matrix& delta) {
    switch (a) {
      case Activation::relu:
        delta = (y.array() > Scalar(0)).select(delta, Scalar(0));
        break;
      case Activation::tanh:
        delta.array() *= (Scalar(1) - y.array().square());
        break;
      case Activation::identity: break;
    }
  }

  std::vector<int> sizes_;
  std::vector<Activation> acts_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

template <typename Scalar>
struct NetGradient {
  Vec<Scalar> params;
  Vec<Scalar> input;
};

template <typename Scalar>
Vec<Scalar> net_forward(const DenseNet<Scalar>& net, const Vec<Scalar>& x) {
  return net.eval(x);
}

/// Reverse-mode gradient of upstream . net(x) with respect to params and x.
template <typename Scalar>
NetGradient<Scalar> net_backward(const DenseNet<Scalar>& net, const Vec<Scalar>& x,
                                 const Vec<Scalar>& upstream) {
  Tape<Scalar> tape;
  net.forward(Mat<Scalar>(x), &tape);
  NetGradient<Scalar> g;
  Mat<Scalar> gin;
  net.backward(tape, Mat<Scalar>(upstream), &g.params, &gin);
  g.input = gin.col(0);
  return g;
}

template <typename To, typename From>
DenseNet<To> cast_net(const DenseNet<From>& net) {
  DenseNet<To> out(net.layer_sizes(), net.activations());
  out.set_params(net.params().template cast<To>());
  return out;
}

}  // namespace rlar::approx
