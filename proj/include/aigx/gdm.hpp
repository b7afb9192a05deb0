#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aigx/channel_env.hpp"
#include "aigx/nn_core.hpp"
#include "aigx/rng.hpp"

namespace aigx::gdm {

using nn::Matrix;
using nn::Vector;

/// Linear beta schedule. Steps are 1-based: beta(1) .. beta(T).
struct DiffusionSchedule {
  int num_steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
  double alpha(int t) const { return alphas.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar(int t) const { return alpha_bars.at(static_cast<std::size_t>(t - 1)); }
};

/// Throws std::invalid_argument unless T >= 1 and 0 < beta_lo <= beta_hi < 1.
DiffusionSchedule make_schedule(int num_steps, double beta_lo, double beta_hi);

/// Sinusoidal features of t/T; `dim` must be even.
Vector time_embedding(int t, int num_steps, int dim);

struct DenoiserConfig {
  int hidden_layers = 3;
  int hidden_units = 128;
  int time_embedding_dim = 16;
  double gain_center = 4.5;
  double gain_scale = 2.0;
};

/// Conditional noise predictor eps(x_t, gains, t). Network input is
/// [x_t; (gains - center) / scale; embed(t/T)].
struct Denoiser {
  nn::DenseNet net;
  int action_dim = 0;
  int condition_dim = 0;
  int time_embedding_dim = 0;
  double gain_center = 4.5;
  double gain_scale = 2.0;

  /// Assembles network inputs; `gains` is condition_dim x batch and `steps`
  /// holds one step index per column.
  Matrix build_input(const Matrix& x_t, const Matrix& gains, std::span<const int> steps,
                     int num_steps) const;
  void validate() const;
};

Denoiser make_denoiser(int num_channels, const DenoiserConfig& cfg, Rng& rng);

/// Noise prediction for a batch at a single step t.
using NoisePredictor = std::function<Matrix(const Matrix& x_t, const Matrix& gains, int t)>;

NoisePredictor as_predictor(const Denoiser& denoiser, const DiffusionSchedule& sched);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Vector forward_noise(const Vector& x0, int t, const Vector& eps, const DiffusionSchedule& sched);

/// Expert pair in model space: target = 2 p / P - 1.
struct TrainSample {
  std::vector<double> condition;
  std::vector<double> target;
};

TrainSample make_train_sample(const ChannelState& state, const PowerAllocation& expert,
                              const ChannelConfig& cfg);

/// A minibatch after forward noising, one column per sample.
struct NoisedBatch {
  Matrix x_t;
  Matrix gains;
  Matrix eps;
  std::vector<int> steps;
};

/// Draws t ~ U{1..T} and eps ~ N(0, I) for each selected sample.
NoisedBatch noise_batch(std::span<const TrainSample> samples, std::span<const std::size_t> indices,
                        const DiffusionSchedule& sched, Rng& rng);

struct LossAndGrad {
  double loss = 0.0;
  nn::Gradients grads;
};

/// Mean squared error between predicted and true noise, with parameter
/// gradients.
LossAndGrad training_loss(const Denoiser& denoiser, const NoisedBatch& batch,
                          const DiffusionSchedule& sched);
LossAndGrad training_loss(const Denoiser& denoiser, std::span<const TrainSample> batch,
                          const DiffusionSchedule& sched, Rng& rng);

/// Loss value only, for an arbitrary predictor evaluated per column step.
double noise_prediction_loss(const std::function<Matrix(const NoisedBatch&)>& predict,
                             const NoisedBatch& batch);

struct SamplerOptions {
  bool deterministic_last_step = true;  // z = 0 at t = 1
};

/// Ancestral reverse iteration from a given x_T (action_dim x batch).
Matrix reverse_from(const NoisePredictor& predictor, Matrix x, const Matrix& gains,
                    const DiffusionSchedule& sched, Rng& rng, SamplerOptions opts = {});

/// Draws x_T ~ N(0, I) from `rng` and runs the reverse chain.
Matrix sample(const NoisePredictor& predictor, const Matrix& gains, const DiffusionSchedule& sched,
              Rng& rng, SamplerOptions opts = {});
std::vector<double> sample(const Denoiser& denoiser, const ChannelState& condition,
                           const DiffusionSchedule& sched, Rng& rng, SamplerOptions opts = {});

/// Denormalize (raw + 1) / 2 * P, clip at zero, rescale to the budget.
/// All-nonpositive input falls back to uniform allocation. Throws on
/// non-finite input.
PowerAllocation project_feasible(std::span<const double> raw, const ChannelConfig& cfg);

/// Samples and projects one allocation per state. Work is split into fixed
/// chunks, each with its own stream derived from `seed`, so the result does
/// not depend on thread count.
std::vector<PowerAllocation> generate_allocations(const Denoiser& denoiser,
                                                  const DiffusionSchedule& sched,
                                                  std::span<const ChannelState> states,
                                                  const ChannelConfig& cfg, std::uint64_t seed,
                                                  SamplerOptions opts = {});

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 3e-4;
  double validation_fraction = 0.2;
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch, fixed validation noise
  double initial_val_loss = 0.0;   // before the first update
  int best_epoch = -1;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Shuffled-minibatch Adam. The dataset is split (after a seeded shuffle)
/// into train and validation parts; the parameters with the lowest
/// validation loss are kept. Throws std::invalid_argument on an empty
/// dataset.
TrainResult train(Denoiser& denoiser, std::span<const TrainSample> dataset,
                  const TrainConfig& config, const DiffusionSchedule& sched, Rng& rng);

}  // namespace aigx::gdm
