#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aigx/rng.hpp"

namespace aigx::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, silu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected feed-forward network. Batches are column-major: one
/// sample per column. Hidden layers apply `hidden_activation`, the output
/// layer is affine.
struct DenseNet {
  std::vector<int> layer_dims;
  std::vector<Matrix> weights;  // weights[l] is dims[l+1] x dims[l]
  std::vector<Vector> biases;
  Activation hidden_activation = Activation::silu;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t num_parameters() const;

  /// Throws std::invalid_argument if shapes do not chain or a parameter is
  /// not finite.
  void validate() const;
};

/// Glorot-uniform weights, zero biases.
DenseNet make_dense_net(const std::vector<int>& layer_dims, Activation hidden, Rng& rng);

/// Per-layer activations retained for the backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to layer l
  std::vector<Matrix> preactivations;
};

Matrix forward(const DenseNet& net, const Matrix& input, ForwardCache* cache = nullptr);
Vector forward(const DenseNet& net, const Vector& input);

/// Parameter-shaped gradient container.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const DenseNet& net);
  double squared_norm() const;
};

struct BackwardResult {
  Gradients params;
  Matrix input;  // dL/d input, same shape as the forward input
};

/// Reverse-mode gradients given dL/d output (output_dim x batch). Either
/// pass the cache from the forward call or let it recompute.
BackwardResult backward(const DenseNet& net, const ForwardCache& cache, const Matrix& upstream);
BackwardResult backward(const DenseNet& net, const Matrix& input, const Matrix& upstream);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_net(const DenseNet& net, double learning_rate);
};

/// Bias-corrected Adam update applied in place.
void adam_step(AdamState& state, DenseNet& net, const Gradients& grads);

/// Scalar loss of a network output batch, plus dL/d output.
struct LossValue {
  double loss = 0.0;
  Matrix d_output;
};
using LossFn = std::function<LossValue(const Matrix& output)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Compares `analytic` (parameters then input) against central differences
/// of loss(forward(net, input)). `max_coords` limits how many coordinates
/// are probed; 0 means all. Relative error is |a - n| / max(|a|, |n|, 1e-7).
GradCheckReport compare_gradients(const DenseNet& net, const LossFn& loss, const Matrix& input,
                                  const BackwardResult& analytic, double tolerance,
                                  double step = 1e-3, std::size_t max_coords = 0,
                                  std::uint64_t probe_seed = 0);

GradCheckReport grad_check(const DenseNet& net, const LossFn& loss, const Matrix& input,
                           double tolerance, double step = 1e-3, std::size_t max_coords = 0);

inline bool grad_check_passes(const DenseNet& net, const LossFn& loss, const Matrix& input,
                              double tolerance) {
  return grad_check(net, loss, input, tolerance).passed;
}

/// Mean over all entries of (output - target)^2.
LossValue mse_loss(const Matrix& output, const Matrix& target);

}  // namespace aigx::nn
