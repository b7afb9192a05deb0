#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aigx/channel_env.hpp"
#include "aigx/nn_core.hpp"
#include "aigx/rng.hpp"

namespace aigx::drl {

using nn::Matrix;

struct PolicyConfig {
  int hidden_layers = 2;
  int hidden_units = 128;
  double log_std_min = -5.0;
  double log_std_max = 1.0;
  double gain_center = 4.5;
  double gain_scale = 2.0;
};

/// Diagonal Gaussian policy over pre-squash actions. The network maps
/// standardized gains to [mean; log_std], 2M outputs.
struct PolicyModel {
  nn::DenseNet net;
  int action_dim = 0;
  double log_std_min = -5.0;
  double log_std_max = 1.0;
  double gain_center = 4.5;
  double gain_scale = 2.0;

  Matrix network_input(const Matrix& gains) const;
  void validate() const;
};

PolicyModel make_policy(int num_channels, const PolicyConfig& cfg, Rng& rng);

struct PolicyHead {
  Matrix mean;     // M x batch
  Matrix log_std;  // clamped, M x batch
  Matrix clamped;  // 1 where the raw log_std hit a bound
};

PolicyHead policy_head(const PolicyModel& policy, const Matrix& gains,
                       nn::ForwardCache* cache = nullptr);

/// Gaussian draw (or the mean), tanh squash into [-1, 1], then the same
/// feasibility projection the diffusion model uses.
PowerAllocation policy_act(const PolicyModel& policy, const ChannelState& state, Rng& rng,
                           bool deterministic, const ChannelConfig& cfg);

/// Deterministic (mean) allocations for a batch of states.
std::vector<PowerAllocation> act_deterministic(const PolicyModel& policy,
                                               std::span<const ChannelState> states,
                                               const ChannelConfig& cfg);

struct RolloutBatch {
  std::vector<ChannelState> conditions;
  Matrix gains;        // M x batch
  Matrix raw_actions;  // pre-squash Gaussian draws
  std::vector<double> rewards;
  std::vector<double> log_probs;
};

/// One-step episodes: state, sampled action, sum-rate reward.
RolloutBatch rollout(const PolicyModel& policy, const GainDistribution& dist,
                     const ChannelConfig& cfg, int batch_size, Rng& rng);

/// Sum log N(u | mean, exp(log_std)) per column.
std::vector<double> log_prob(const Matrix& actions, const PolicyHead& head);

struct GradientOptions {
  double entropy_weight = 1e-3;
  bool subtract_baseline = true;  // batch-mean reward baseline
};

/// Gradient of the surrogate loss
///   -mean_j[(r_j - b) log pi(u_j | s_j)] - w * mean_j[entropy_j]
/// with respect to the network outputs [mean; log_std].
Matrix surrogate_output_gradient(const PolicyHead& head, const RolloutBatch& batch,
                                 const GradientOptions& opts);

nn::Gradients policy_gradient(const PolicyModel& policy, const RolloutBatch& batch,
                              const GradientOptions& opts);

struct DrlHyperparams {
  int iterations = 2000;
  int batch_size = 256;
  double learning_rate = 1e-4;
  double entropy_weight = 1e-3;
};

struct DrlResult {
  std::vector<double> mean_reward;  // per iteration
};

/// Contextual-bandit policy gradient with a batch-mean baseline and an
/// entropy bonus. Continues from the policy's current parameters.
DrlResult drl_train(PolicyModel& policy, const GainDistribution& dist, const ChannelConfig& cfg,
                    const DrlHyperparams& hp, Rng& rng);

}  // namespace aigx::drl
