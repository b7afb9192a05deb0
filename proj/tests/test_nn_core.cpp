#include <doctest.h>

#include <cmath>

#include "aigx/nn_core.hpp"

using namespace aigx;
using namespace aigx::nn;

namespace {

DenseNet single_layer(Matrix w, Vector b) {
  DenseNet net;
  net.layer_dims = {static_cast<int>(w.cols()), static_cast<int>(w.rows())};
  net.weights = {std::move(w)};
  net.biases = {std::move(b)};
  net.hidden_activation = Activation::identity;
  return net;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n01(rng);
  return m;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("forward: identity and constant maps") {
  const auto id = single_layer(Matrix::Identity(3, 3), Vector::Zero(3));
  const Vector x = (Vector(3) << 1.5, -2.0, 0.25).finished();
  CHECK(forward(id, x) == x);

  const Vector b = (Vector(2) << 0.3, -0.7).finished();
  const auto constant = single_layer(Matrix::Zero(2, 3), b);
  CHECK(forward(constant, x) == b);
  CHECK(forward(constant, Vector(Vector::Constant(3, 9.0))) == b);
}

TEST_CASE("forward: two-layer hand computation") {
  DenseNet net;
  net.layer_dims = {2, 2, 1};
  net.hidden_activation = Activation::silu;
  net.weights = {(Matrix(2, 2) << 0.5, -0.25, 0.1, 0.2).finished(), (Matrix(1, 2) << 0.3, -0.6).finished()};
  net.biases = {(Vector(2) << 0.05, -0.1).finished(), (Vector(1) << 0.2).finished()};
  const Vector x = (Vector(2) << 1.0, 2.0).finished();
  // Hidden pre-activations: [0.5 - 0.5 + 0.05, 0.1 + 0.4 - 0.1] = [0.05, 0.4]
  const double expected = 0.3 * silu(0.05) - 0.6 * silu(0.4) + 0.2;
  CHECK(std::abs(forward(net, x)(0) - expected) < 1e-12);
}

TEST_CASE("forward rejects wrong input size") {
  Rng rng{1};
  const auto net = make_dense_net({3, 4, 2}, Activation::silu, rng);
  CHECK_THROWS_AS(forward(net, Vector(Vector::Zero(2))), std::invalid_argument);
}

TEST_CASE("make_dense_net shapes and init range") {
  Rng rng{2};
  const auto net = make_dense_net({56, 128, 128, 128, 20}, Activation::silu, rng);
  CHECK_NOTHROW(net.validate());
  CHECK(net.num_parameters() == 56 * 128 + 128 + 2 * (128 * 128 + 128) + 128 * 20 + 20);
  const double limit = std::sqrt(6.0 / (56 + 128));
  CHECK(net.weights[0].cwiseAbs().maxCoeff() <= limit);
  CHECK(net.biases[0].isZero());
}

TEST_CASE("forward is deterministic") {
  Rng rng{3};
  const auto net = make_dense_net({10, 32, 32, 4}, Activation::silu, rng);
  const Matrix x = random_matrix(10, 17, rng);
  const Matrix a = forward(net, x);
  const Matrix b = forward(net, x);
  CHECK(a == b);
}

TEST_CASE("backward: linear net input gradient is W^T g") {
  Rng rng{4};
  const auto net = single_layer(random_matrix(3, 5, rng), random_matrix(3, 1, rng).col(0));
  const Matrix x = random_matrix(5, 2, rng);
  const Matrix up = random_matrix(3, 2, rng);
  const auto r = backward(net, x, up);
  CHECK((r.input - net.weights[0].transpose() * up).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.params.weights[0] - up * x.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng{5};
  const auto net = make_dense_net({6, 8, 8, 3}, Activation::silu, rng);
  const auto r = backward(net, random_matrix(6, 4, rng), Matrix::Zero(3, 4));
  CHECK(r.params.squared_norm() == 0.0);
  CHECK(r.input.isZero());
}

TEST_CASE("backward rejects a mismatched upstream gradient") {
  Rng rng{5};
  const auto net = make_dense_net({6, 8, 3}, Activation::silu, rng);
  CHECK_THROWS_AS(backward(net, random_matrix(6, 4, rng), Matrix::Zero(2, 4)), std::invalid_argument);
}

TEST_CASE("grad_check: random 3-layer nets against central differences") {
  Rng rng{6};
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = make_dense_net({5, 7, 6, 3}, Activation::silu, rng);
    const Matrix x = random_matrix(5, 3, rng);
    const Matrix target = random_matrix(3, 3, rng);
    const LossFn loss = [&](const Matrix& out) { return mse_loss(out, target); };
    const auto report = grad_check(net, loss, x, 1e-4);
    CHECK(report.passed);
    CHECK(report.checked == net.num_parameters() + 15);
  }
}

TEST_CASE("grad_check: linear net with quadratic loss is exact") {
  Rng rng{7};
  const auto net = single_layer(random_matrix(2, 3, rng), random_matrix(2, 1, rng).col(0));
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix target = random_matrix(2, 4, rng);
  const LossFn loss = [&](const Matrix& out) { return mse_loss(out, target); };
  CHECK(grad_check_passes(net, loss, x, 1e-8));
}

TEST_CASE("grad_check: corrupted gradient is caught") {
  Rng rng{8};
  const auto net = make_dense_net({4, 6, 2}, Activation::silu, rng);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix target = random_matrix(2, 3, rng);
  const LossFn loss = [&](const Matrix& out) { return mse_loss(out, target); };
  ForwardCache cache;
  const Matrix out = forward(net, x, &cache);
  auto analytic = backward(net, cache, loss(out).d_output);
  CHECK(compare_gradients(net, loss, x, analytic, 1e-4).passed);
  analytic.params.weights[0](1, 2) *= 2.0;
  CHECK_FALSE(compare_gradients(net, loss, x, analytic, 1e-4).passed);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Rng rng{9};
  auto net = make_dense_net({3, 4, 2}, Activation::silu, rng);
  const auto before = net;
  auto state = AdamState::for_net(net, 1e-3);
  adam_step(state, net, Gradients::zeros_like(net));
  CHECK(state.step_count == 1);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(net.weights[l] == before.weights[l]);
    CHECK(net.biases[l] == before.biases[l]);
  }
}

TEST_CASE("adam: first step and steady state move by learning_rate * sign(g)") {
  const auto net0 = single_layer((Matrix(1, 2) << 0.0, 0.0).finished(), Vector::Zero(1));
  auto net = net0;
  Gradients g = Gradients::zeros_like(net);
  g.weights[0] << 0.37, -2.5;
  g.biases[0] << 1e-3;
  const double lr = 0.01;
  auto state = AdamState::for_net(net, lr);
  adam_step(state, net, g);
  // m_hat = g, v_hat = g^2 at t = 1, so the step is lr * g / (|g| + eps).
  CHECK(net.weights[0](0, 0) == doctest::Approx(-lr * 0.37 / (0.37 + 1e-8)).epsilon(1e-12));
  CHECK(net.weights[0](0, 1) == doctest::Approx(lr * 2.5 / (2.5 + 1e-8)).epsilon(1e-12));
  CHECK(net.biases[0](0) == doctest::Approx(-lr * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));

  for (int t = 0; t < 500; ++t) {
    const double before = net.weights[0](0, 1);
    adam_step(state, net, g);
    CHECK(net.weights[0](0, 1) - before == doctest::Approx(lr).epsilon(1e-6));
  }
}

TEST_CASE("mse_loss value and gradient") {
  const Matrix out = (Matrix(2, 1) << 1.0, 3.0).finished();
  const Matrix target = (Matrix(2, 1) << 0.0, 1.0).finished();
  const auto l = mse_loss(out, target);
  CHECK(l.loss == doctest::Approx(2.5));
  CHECK(l.d_output(0, 0) == doctest::Approx(1.0));
  CHECK(l.d_output(1, 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mse_loss(out, Matrix::Zero(3, 1)), std::invalid_argument);
}

TEST_CASE("validate catches broken shapes and non-finite values") {
  Rng rng{10};
  auto net = make_dense_net({3, 4, 2}, Activation::silu, rng);
  auto bad = net;
  bad.weights[1] = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = net;
  bad.biases[0](0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(activation_from_string(to_string(Activation::silu)) == Activation::silu);
  CHECK_THROWS_AS(activation_from_string("relu6"), std::invalid_argument);
}
