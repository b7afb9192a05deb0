#include "aigx/drl_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "aigx/gdm.hpp"

namespace aigx::drl {
namespace {

Matrix gains_matrix(std::span<const ChannelState> states, int m) {
  Matrix g(m, static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (states[j].gains.size() != static_cast<std::size_t>(m)) {
      throw std::invalid_argument("policy: channel state does not match action_dim");
    }
    for (int i = 0; i < m; ++i) g(i, static_cast<Eigen::Index>(j)) = states[j].gains[static_cast<std::size_t>(i)];
  }
  return g;
}

PowerAllocation squash_and_project(const Eigen::Ref<const Eigen::VectorXd>& u, const ChannelConfig& cfg) {
  const Eigen::VectorXd a = u.array().tanh();
  return gdm::project_feasible(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())), cfg);
}

}  // namespace

Matrix PolicyModel::network_input(const Matrix& gains) const {
  return (gains.array() - gain_center) / gain_scale;
}

void PolicyModel::validate() const {
  net.validate();
  if (net.input_dim() != action_dim || net.output_dim() != 2 * action_dim) {
    throw std::invalid_argument("policy network must map M gains to 2M outputs");
  }
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("policy log_std bounds inverted");
}

PolicyModel make_policy(int num_channels, const PolicyConfig& cfg, Rng& rng) {
  PolicyModel p;
  p.action_dim = num_channels;
  p.log_std_min = cfg.log_std_min;
  p.log_std_max = cfg.log_std_max;
  p.gain_center = cfg.gain_center;
  p.gain_scale = cfg.gain_scale;
  std::vector<int> dims{num_channels};
  for (int l = 0; l < cfg.hidden_layers; ++l) dims.push_back(cfg.hidden_units);
  dims.push_back(2 * num_channels);
  p.net = nn::make_dense_net(dims, nn::Activation::silu, rng);
  p.validate();
  return p;
}

PolicyHead policy_head(const PolicyModel& policy, const Matrix& gains, nn::ForwardCache* cache) {
  const Matrix out = nn::forward(policy.net, policy.network_input(gains), cache);
  const auto m = policy.action_dim;
  PolicyHead h;
  h.mean = out.topRows(m);
  const Matrix raw = out.bottomRows(m);
  h.log_std = raw.cwiseMax(policy.log_std_min).cwiseMin(policy.log_std_max);
  h.clamped = ((raw.array() < policy.log_std_min) || (raw.array() > policy.log_std_max)).cast<double>();
  return h;
}

PowerAllocation policy_act(const PolicyModel& policy, const ChannelState& state, Rng& rng,
                           bool deterministic, const ChannelConfig& cfg) {
  const auto head = policy_head(policy, gains_matrix(std::span<const ChannelState>(&state, 1), policy.action_dim));
  Eigen::VectorXd u = head.mean.col(0);
  if (!deterministic) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += std::exp(head.log_std(i, 0)) * n01(rng);
  }
  return squash_and_project(u, cfg);
}

std::vector<PowerAllocation> act_deterministic(const PolicyModel& policy,
                                               std::span<const ChannelState> states,
                                               const ChannelConfig& cfg) {
  std::vector<PowerAllocation> out;
  if (states.empty()) return out;
  const auto head = policy_head(policy, gains_matrix(states, policy.action_dim));
  out.reserve(states.size());
  for (Eigen::Index j = 0; j < head.mean.cols(); ++j) out.push_back(squash_and_project(head.mean.col(j), cfg));
  return out;
}

std::vector<double> log_prob(const Matrix& actions, const PolicyHead& head) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Matrix z = (actions - head.mean).cwiseQuotient(head.log_std.array().exp().matrix());
  std::vector<double> lp(static_cast<std::size_t>(actions.cols()));
  for (Eigen::Index j = 0; j < actions.cols(); ++j) {
    lp[static_cast<std::size_t>(j)] =
        -0.5 * z.col(j).squaredNorm() - head.log_std.col(j).sum() - half_log_2pi * actions.rows();
  }
  return lp;
}

RolloutBatch rollout(const PolicyModel& policy, const GainDistribution& dist,
                     const ChannelConfig& cfg, int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("rollout: batch_size must be >= 1");
  RolloutBatch b;
  b.conditions.reserve(static_cast<std::size_t>(batch_size));
  for (int j = 0; j < batch_size; ++j) b.conditions.push_back(sample_gains(dist, rng));
  b.gains = gains_matrix(b.conditions, policy.action_dim);
  const auto head = policy_head(policy, b.gains);

  std::normal_distribution<double> n01(0.0, 1.0);
  b.raw_actions.resize(head.mean.rows(), head.mean.cols());
  for (Eigen::Index j = 0; j < b.raw_actions.cols(); ++j) {
    for (Eigen::Index i = 0; i < b.raw_actions.rows(); ++i) {
      b.raw_actions(i, j) = head.mean(i, j) + std::exp(head.log_std(i, j)) * n01(rng);
    }
  }
  b.log_probs = log_prob(b.raw_actions, head);
  b.rewards.reserve(b.conditions.size());
  for (std::size_t j = 0; j < b.conditions.size(); ++j) {
    const auto alloc = squash_and_project(b.raw_actions.col(static_cast<Eigen::Index>(j)), cfg);
    b.rewards.push_back(sum_rate(b.conditions[j], alloc, cfg));
  }
  return b;
}

Matrix surrogate_output_gradient(const PolicyHead& head, const RolloutBatch& batch,
                                 const GradientOptions& opts) {
  const auto m = head.mean.rows();
  const auto n = head.mean.cols();
  if (batch.raw_actions.rows() != m || batch.raw_actions.cols() != n ||
      batch.rewards.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("surrogate_output_gradient: batch does not match policy head");
  }
  const double baseline =
      opts.subtract_baseline
          ? std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / static_cast<double>(n)
          : 0.0;
  const Matrix inv_var = (-2.0 * head.log_std).array().exp();
  const Matrix diff = batch.raw_actions - head.mean;

  Matrix grad(2 * m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double adv = batch.rewards[static_cast<std::size_t>(j)] - baseline;
    for (Eigen::Index i = 0; i < m; ++i) {
      // d logp / d mean = (u - mu) / sigma^2 ; d logp / d log_std = (u - mu)^2 / sigma^2 - 1
      const double d_mean = diff(i, j) * inv_var(i, j);
      const double d_log_std = diff(i, j) * diff(i, j) * inv_var(i, j) - 1.0;
      grad(i, j) = -adv * d_mean / static_cast<double>(n);
      // Entropy of a Gaussian grows by exactly 1 per unit of log_std.
      double g_ls = (-adv * d_log_std - opts.entropy_weight) / static_cast<double>(n);
      if (head.clamped(i, j) != 0.0) g_ls = 0.0;
      grad(m + i, j) = g_ls;
    }
  }
  return grad;
}

nn::Gradients policy_gradient(const PolicyModel& policy, const RolloutBatch& batch,
                              const GradientOptions& opts) {
  nn::ForwardCache cache;
  const auto head = policy_head(policy, batch.gains, &cache);
  return nn::backward(policy.net, cache, surrogate_output_gradient(head, batch, opts)).params;
}

DrlResult drl_train(PolicyModel& policy, const GainDistribution& dist, const ChannelConfig& cfg,
                    const DrlHyperparams& hp, Rng& rng) {
  if (dist.size() != static_cast<std::size_t>(policy.action_dim)) {
    throw std::invalid_argument("drl_train: distribution does not match policy dimension");
  }
  auto adam = nn::AdamState::for_net(policy.net, hp.learning_rate);
  const GradientOptions opts{hp.entropy_weight, true};
  DrlResult result;
  result.mean_reward.reserve(static_cast<std::size_t>(hp.iterations));
  for (int it = 0; it < hp.iterations; ++it) {
    const auto batch = rollout(policy, dist, cfg, hp.batch_size, rng);
    result.mean_reward.push_back(std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) /
                                 static_cast<double>(batch.rewards.size()));
    nn::adam_step(adam, policy.net, policy_gradient(policy, batch, opts));
  }
  return result;
}

}  // namespace aigx::drl
