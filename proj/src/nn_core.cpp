#include "aigx/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aigx::nn {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::silu:
      return z.unaryExpr([](double x) { return x * sigmoid(x); });
  }
  throw std::logic_error("unknown activation");
}

Matrix activation_derivative(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::identity:
      return Matrix::Ones(z.rows(), z.cols());
    case Activation::silu:
      return z.unaryExpr([](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
  }
  throw std::logic_error("unknown activation");
}

void require_input(const DenseNet& net, const Matrix& input) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(input.rows()) +
                                " rows, network expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::silu:
      return "silu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "silu") return Activation::silu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::size_t DenseNet::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

void DenseNet::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("network needs at least two layer dims");
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw std::invalid_argument("network layer count does not match layer_dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (layer_dims[l] < 1 || layer_dims[l + 1] < 1) {
      throw std::invalid_argument("layer dims must be positive");
    }
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw std::invalid_argument("parameter shapes do not chain at layer " + std::to_string(l));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw std::invalid_argument("non-finite parameter at layer " + std::to_string(l));
    }
  }
}

DenseNet make_dense_net(const std::vector<int>& layer_dims, Activation hidden, Rng& rng) {
  DenseNet net;
  net.layer_dims = layer_dims;
  net.hidden_activation = hidden;
  if (layer_dims.size() < 2) throw std::invalid_argument("network needs at least two layer dims");
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("layer dims must be positive");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(fan_out, fan_in);
    // Fill in a fixed row-major order so the draw sequence is layout-independent.
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = u(rng);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

Matrix forward(const DenseNet& net, const Matrix& input, ForwardCache* cache) {
  require_input(net, input);
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Matrix h = input;
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Matrix z = net.weights[l] * h;
    z.colwise() += net.biases[l];
    if (cache) {
      cache->inputs.push_back(h);
      cache->preactivations.push_back(z);
    }
    h = (l == last) ? std::move(z) : activate(net.hidden_activation, z);
  }
  return h;
}

Vector forward(const DenseNet& net, const Vector& input) {
  Matrix in = input;
  return forward(net, in, nullptr).col(0);
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Vector::Zero(net.biases[l].size()));
  }
  return g;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache, const Matrix& upstream) {
  if (cache.inputs.size() != net.num_layers()) {
    throw std::invalid_argument("backward: cache does not match network depth");
  }
  if (upstream.rows() != net.output_dim() || upstream.cols() != cache.inputs.front().cols()) {
    throw std::invalid_argument("backward: upstream gradient has wrong shape");
  }
  BackwardResult out;
  out.params.weights.resize(net.num_layers());
  out.params.biases.resize(net.num_layers());

  Matrix delta = upstream;  // dL/dz for the current layer
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    if (l != last) {
      delta = delta.cwiseProduct(activation_derivative(net.hidden_activation, cache.preactivations[l]));
    }
    out.params.weights[l] = delta * cache.inputs[l].transpose();
    out.params.biases[l] = delta.rowwise().sum();
    delta = net.weights[l].transpose() * delta;
  }
  out.input = std::move(delta);
  return out;
}

BackwardResult backward(const DenseNet& net, const Matrix& input, const Matrix& upstream) {
  ForwardCache cache;
  forward(net, input, &cache);
  return backward(net, cache, upstream);
}

AdamState AdamState::for_net(const DenseNet& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = Gradients::zeros_like(net);
  s.second_moment = Gradients::zeros_like(net);
  return s;
}

void adam_step(AdamState& state, DenseNet& net, const Gradients& grads) {
  if (grads.weights.size() != net.num_layers() || state.first_moment.weights.size() != net.num_layers()) {
    throw std::invalid_argument("adam_step: gradient/state shape does not match network");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.weights[l], state.first_moment.weights[l], state.second_moment.weights[l],
           grads.weights[l]);
    update(net.biases[l], state.first_moment.biases[l], state.second_moment.biases[l],
           grads.biases[l]);
  }
}

GradCheckReport compare_gradients(const DenseNet& net, const LossFn& loss, const Matrix& input,
                                  const BackwardResult& analytic, double tolerance, double step,
                                  std::size_t max_coords, std::uint64_t probe_seed) {
  DenseNet probe = net;
  Matrix x = input;

  // Coordinates: (kind, layer, flat index). kind 0 = weight, 1 = bias, 2 = input.
  struct Coord {
    int kind;
    std::size_t layer;
    Eigen::Index index;
  };
  std::vector<Coord> coords;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) coords.push_back({0, l, i});
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) coords.push_back({1, l, i});
  }
  for (Eigen::Index i = 0; i < input.size(); ++i) coords.push_back({2, 0, i});
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng rng{probe_seed};
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }

  auto slot = [&](const Coord& c) -> double& {
    switch (c.kind) {
      case 0:
        return probe.weights[c.layer].data()[c.index];
      case 1:
        return probe.biases[c.layer].data()[c.index];
      default:
        return x.data()[c.index];
    }
  };
  auto analytic_value = [&](const Coord& c) {
    switch (c.kind) {
      case 0:
        return analytic.params.weights[c.layer].data()[c.index];
      case 1:
        return analytic.params.biases[c.layer].data()[c.index];
      default:
        return analytic.input.data()[c.index];
    }
  };

  GradCheckReport report;
  for (const auto& c : coords) {
    double& v = slot(c);
    const double saved = v;
    auto at = [&](double offset) {
      v = saved + offset;
      return loss(forward(probe, x)).loss;
    };
    // Fourth-order central stencil: truncation O(h^4) lets h stay large
    // enough that rounding in the loss difference does not dominate.
    const double numeric =
        (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
    v = saved;
    const double a = analytic_value(c);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(const DenseNet& net, const LossFn& loss, const Matrix& input,
                           double tolerance, double step, std::size_t max_coords) {
  ForwardCache cache;
  const Matrix out = forward(net, input, &cache);
  const auto analytic = backward(net, cache, loss(out).d_output);
  return compare_gradients(net, loss, input, analytic, tolerance, step, max_coords);
}

LossValue mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  const double n = static_cast<double>(output.size());
  const Matrix diff = output - target;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

}  // namespace aigx::nn
