#include "aigx/gdm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "aigx/parallel.hpp"

namespace aigx::gdm {
namespace {

constexpr std::size_t kSampleChunk = 250;

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix z(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) z(r, c) = n01(rng);
  }
  return z;
}

Matrix gains_matrix(std::span<const ChannelState> states) {
  const auto m = static_cast<Eigen::Index>(states.front().gains.size());
  Matrix g(m, static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (static_cast<Eigen::Index>(states[j].gains.size()) != m) {
      throw std::invalid_argument("gains_matrix: ragged channel states");
    }
    for (Eigen::Index i = 0; i < m; ++i) g(i, static_cast<Eigen::Index>(j)) = states[j].gains[i];
  }
  return g;
}

}  // namespace

DiffusionSchedule make_schedule(int num_steps, double beta_lo, double beta_hi) {
  if (num_steps < 1) throw std::invalid_argument("schedule needs at least one step");
  if (!(beta_lo > 0.0) || !(beta_lo <= beta_hi) || !(beta_hi < 1.0)) {
    throw std::invalid_argument("schedule needs 0 < beta_lo <= beta_hi < 1");
  }
  DiffusionSchedule s;
  s.num_steps = num_steps;
  s.beta_start = beta_lo;
  s.beta_end = beta_hi;
  double running = 1.0;
  for (int i = 0; i < num_steps; ++i) {
    const double frac = num_steps == 1 ? 0.0 : static_cast<double>(i) / (num_steps - 1);
    const double beta = beta_lo + frac * (beta_hi - beta_lo);
    s.betas.push_back(beta);
    s.alphas.push_back(1.0 - beta);
    running *= 1.0 - beta;
    s.alpha_bars.push_back(running);
  }
  return s;
}

Vector time_embedding(int t, int num_steps, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time embedding dim must be even");
  const int half = dim / 2;
  const double s = static_cast<double>(t) / num_steps;
  Vector e(dim);
  for (int k = 0; k < half; ++k) {
    // Frequencies spread geometrically over [1, 1000] radians per unit of t/T.
    const double freq = half == 1 ? 1.0 : std::pow(1000.0, static_cast<double>(k) / (half - 1));
    e(2 * k) = std::sin(s * freq);
    e(2 * k + 1) = std::cos(s * freq);
  }
  return e;
}

Matrix Denoiser::build_input(const Matrix& x_t, const Matrix& gains, std::span<const int> steps,
                             int num_steps) const {
  const auto batch = x_t.cols();
  if (x_t.rows() != action_dim || gains.rows() != condition_dim || gains.cols() != batch ||
      static_cast<Eigen::Index>(steps.size()) != batch) {
    throw std::invalid_argument("denoiser input: inconsistent batch shapes");
  }
  Matrix in(action_dim + condition_dim + time_embedding_dim, batch);
  in.topRows(action_dim) = x_t;
  in.middleRows(action_dim, condition_dim) = (gains.array() - gain_center) / gain_scale;
  for (Eigen::Index j = 0; j < batch; ++j) {
    in.col(j).tail(time_embedding_dim) =
        time_embedding(steps[static_cast<std::size_t>(j)], num_steps, time_embedding_dim);
  }
  return in;
}

void Denoiser::validate() const {
  net.validate();
  if (net.input_dim() != action_dim + condition_dim + time_embedding_dim ||
      net.output_dim() != action_dim) {
    throw std::invalid_argument("denoiser network dims do not match action/condition/embedding");
  }
  if (!(gain_scale > 0.0)) throw std::invalid_argument("denoiser gain_scale must be > 0");
}

Denoiser make_denoiser(int num_channels, const DenoiserConfig& cfg, Rng& rng) {
  if (num_channels < 1 || cfg.hidden_layers < 0 || cfg.hidden_units < 1) {
    throw std::invalid_argument("invalid denoiser configuration");
  }
  Denoiser d;
  d.action_dim = num_channels;
  d.condition_dim = num_channels;
  d.time_embedding_dim = cfg.time_embedding_dim;
  d.gain_center = cfg.gain_center;
  d.gain_scale = cfg.gain_scale;
  std::vector<int> dims{2 * num_channels + cfg.time_embedding_dim};
  for (int l = 0; l < cfg.hidden_layers; ++l) dims.push_back(cfg.hidden_units);
  dims.push_back(num_channels);
  d.net = nn::make_dense_net(dims, nn::Activation::silu, rng);
  d.validate();
  return d;
}

NoisePredictor as_predictor(const Denoiser& denoiser, const DiffusionSchedule& sched) {
  return [&denoiser, &sched](const Matrix& x_t, const Matrix& gains, int t) {
    const std::vector<int> steps(static_cast<std::size_t>(x_t.cols()), t);
    return nn::forward(denoiser.net, denoiser.build_input(x_t, gains, steps, sched.num_steps));
  };
}

Vector forward_noise(const Vector& x0, int t, const Vector& eps, const DiffusionSchedule& sched) {
  if (t < 1 || t > sched.num_steps) {
    throw std::out_of_range("forward_noise: step " + std::to_string(t) + " outside [1, " +
                            std::to_string(sched.num_steps) + "]");
  }
  if (x0.size() != eps.size()) throw std::invalid_argument("forward_noise: dimension mismatch");
  const double ab = sched.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

TrainSample make_train_sample(const ChannelState& state, const PowerAllocation& expert,
                              const ChannelConfig& cfg) {
  TrainSample s;
  s.condition = state.gains;
  s.target.reserve(expert.powers.size());
  for (double p : expert.powers) {
    s.target.push_back(std::clamp(2.0 * p / cfg.power_budget - 1.0, -1.0, 1.0));
  }
  return s;
}

NoisedBatch noise_batch(std::span<const TrainSample> samples, std::span<const std::size_t> indices,
                        const DiffusionSchedule& sched, Rng& rng) {
  if (indices.empty()) throw std::invalid_argument("noise_batch: empty batch");
  const auto m = static_cast<Eigen::Index>(samples[indices.front()].target.size());
  const auto n = static_cast<Eigen::Index>(indices.size());
  std::uniform_int_distribution<int> step(1, sched.num_steps);
  std::normal_distribution<double> n01(0.0, 1.0);

  NoisedBatch b;
  b.x_t.resize(m, n);
  b.gains.resize(m, n);
  b.eps.resize(m, n);
  b.steps.resize(indices.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = samples[indices[static_cast<std::size_t>(j)]];
    const int t = step(rng);
    b.steps[static_cast<std::size_t>(j)] = t;
    const double a = std::sqrt(sched.alpha_bar(t));
    const double sig = std::sqrt(1.0 - sched.alpha_bar(t));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = n01(rng);
      b.eps(i, j) = e;
      b.gains(i, j) = s.condition[static_cast<std::size_t>(i)];
      b.x_t(i, j) = a * s.target[static_cast<std::size_t>(i)] + sig * e;
    }
  }
  return b;
}

LossAndGrad training_loss(const Denoiser& denoiser, const NoisedBatch& batch,
                          const DiffusionSchedule& sched) {
  nn::ForwardCache cache;
  const Matrix input = denoiser.build_input(batch.x_t, batch.gains, batch.steps, sched.num_steps);
  const Matrix predicted = nn::forward(denoiser.net, input, &cache);
  const auto mse = nn::mse_loss(predicted, batch.eps);
  return {mse.loss, nn::backward(denoiser.net, cache, mse.d_output).params};
}

LossAndGrad training_loss(const Denoiser& denoiser, std::span<const TrainSample> batch,
                          const DiffusionSchedule& sched, Rng& rng) {
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return training_loss(denoiser, noise_batch(batch, idx, sched, rng), sched);
}

double noise_prediction_loss(const std::function<Matrix(const NoisedBatch&)>& predict,
                             const NoisedBatch& batch) {
  return nn::mse_loss(predict(batch), batch.eps).loss;
}

Matrix reverse_from(const NoisePredictor& predictor, Matrix x, const Matrix& gains,
                    const DiffusionSchedule& sched, Rng& rng, SamplerOptions opts) {
  for (int t = sched.num_steps; t >= 1; --t) {
    const Matrix eps_hat = predictor(x, gains, t);
    const double coef = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
    x = (x - coef * eps_hat) / std::sqrt(sched.alpha(t));
    if (t > 1 || !opts.deterministic_last_step) {
      x += std::sqrt(sched.beta(t)) * standard_normal(x.rows(), x.cols(), rng);
    }
  }
  return x;
}

Matrix sample(const NoisePredictor& predictor, const Matrix& gains, const DiffusionSchedule& sched,
              Rng& rng, SamplerOptions opts) {
  Matrix x = standard_normal(gains.rows(), gains.cols(), rng);
  return reverse_from(predictor, std::move(x), gains, sched, rng, opts);
}

std::vector<double> sample(const Denoiser& denoiser, const ChannelState& condition,
                           const DiffusionSchedule& sched, Rng& rng, SamplerOptions opts) {
  const Matrix gains = gains_matrix(std::span<const ChannelState>(&condition, 1));
  const Matrix x = sample(as_predictor(denoiser, sched), gains, sched, rng, opts);
  return {x.data(), x.data() + x.size()};
}

PowerAllocation project_feasible(std::span<const double> raw, const ChannelConfig& cfg) {
  if (raw.size() != static_cast<std::size_t>(cfg.num_channels)) {
    throw std::invalid_argument("project_feasible: raw vector does not match num_channels");
  }
  PowerAllocation out;
  out.powers.reserve(raw.size());
  double total = 0.0;
  for (double r : raw) {
    if (!std::isfinite(r)) throw std::invalid_argument("project_feasible: non-finite raw action");
    const double p = std::max(0.0, 0.5 * (r + 1.0) * cfg.power_budget);
    out.powers.push_back(p);
    total += p;
  }
  if (!(total > 0.0)) return uniform_allocation(cfg);
  const double scale = cfg.power_budget / total;
  for (double& p : out.powers) p *= scale;
  return out;
}

std::vector<PowerAllocation> generate_allocations(const Denoiser& denoiser,
                                                  const DiffusionSchedule& sched,
                                                  std::span<const ChannelState> states,
                                                  const ChannelConfig& cfg, std::uint64_t seed,
                                                  SamplerOptions opts) {
  std::vector<PowerAllocation> out(states.size());
  const std::size_t chunks = (states.size() + kSampleChunk - 1) / kSampleChunk;
  const auto predictor = as_predictor(denoiser, sched);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kSampleChunk;
    const std::size_t end = std::min(states.size(), begin + kSampleChunk);
    Rng rng{derive_seed(seed, "gdm_sample", c)};
    const Matrix raw = sample(predictor, gains_matrix(states.subspan(begin, end - begin)), sched,
                              rng, opts);
    for (std::size_t j = begin; j < end; ++j) {
      const auto col = raw.col(static_cast<Eigen::Index>(j - begin));
      out[j] = project_feasible(std::span<const double>(col.data(), col.size()), cfg);
    }
  });
  return out;
}

TrainResult train(Denoiser& denoiser, std::span<const TrainSample> dataset,
                  const TrainConfig& config, const DiffusionSchedule& sched, Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw std::invalid_argument("train: epochs and batch_size must be >= 1");
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t val_size = 0;
  if (dataset.size() >= 2) {
    val_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(config.validation_fraction * dataset.size())));
    val_size = std::min(val_size, dataset.size() - 1);
  }
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_size));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_size), order.end());
  if (val_idx.empty()) val_idx = train_idx;

  // Validation noise is drawn once so epochs are compared on equal footing.
  Rng val_rng{rng()};
  const NoisedBatch val_batch = noise_batch(dataset, val_idx, sched, val_rng);
  auto val_loss = [&] {
    const Matrix in = denoiser.build_input(val_batch.x_t, val_batch.gains, val_batch.steps,
                                           sched.num_steps);
    return nn::mse_loss(nn::forward(denoiser.net, in), val_batch.eps).loss;
  };

  TrainResult result;
  result.train_size = train_idx.size();
  result.val_size = val_size;
  result.initial_val_loss = val_loss();
  double best = result.initial_val_loss;
  nn::DenseNet best_net = denoiser.net;

  auto adam = nn::AdamState::for_net(denoiser.net, config.learning_rate);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += batch) {
      const std::size_t end = std::min(train_idx.size(), begin + batch);
      const auto noised = noise_batch(
          dataset, std::span<const std::size_t>(train_idx).subspan(begin, end - begin), sched, rng);
      const auto lg = training_loss(denoiser, noised, sched);
      nn::adam_step(adam, denoiser.net, lg.grads);
      loss_sum += lg.loss;
      ++batches;
    }
    result.train_loss.push_back(loss_sum / static_cast<double>(batches));
    const double v = val_loss();
    if (!std::isfinite(v)) throw std::runtime_error("train: validation loss diverged at epoch " +
                                                    std::to_string(epoch));
    result.val_loss.push_back(v);
    if (v < best) {
      best = v;
      best_net = denoiser.net;
      result.best_epoch = epoch;
    }
  }
  denoiser.net = std::move(best_net);
  return result;
}

}  // namespace aigx::gdm
