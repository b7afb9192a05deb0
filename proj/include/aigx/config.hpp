#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aigx/channel_env.hpp"
#include "aigx/drl_baseline.hpp"
#include "aigx/gdm.hpp"

namespace aigx {

enum class RetrainMode { fine_tune, from_scratch };

std::string to_string(RetrainMode mode);
RetrainMode retrain_mode_from_string(const std::string& name);

struct ScheduleConfig {
  int num_steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool deterministic_last_step = true;
};

struct LifecycleConfig {
  int t1_dataset_size = 10000;
  int t2_dataset_size = 10000;
  int eval_size = 2000;
  RetrainMode retrain_mode = RetrainMode::fine_tune;
  int retrain_epochs = 200;
};

struct DrlConfig {
  drl::PolicyConfig policy;
  drl::DrlHyperparams train;
};

/// Everything a run needs; defaults are the calibrated values.
struct RunConfig {
  std::uint64_t seed = 2024;
  ChannelConfig channel;
  double waterfill_tolerance = 1e-10;
  std::vector<GainDistribution::Block> t1_blocks{{10, 5.0, 8.0}, {10, 3.0, 6.0}};
  std::vector<GainDistribution::Block> t2_blocks{{20, 1.0, 7.0}};
  ScheduleConfig schedule;
  gdm::DenoiserConfig denoiser;
  gdm::TrainConfig training;
  LifecycleConfig lifecycle;
  DrlConfig drl;

  GainDistribution t1_distribution() const { return GainDistribution::from_blocks(t1_blocks); }
  GainDistribution t2_distribution() const { return GainDistribution::from_blocks(t2_blocks); }

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

/// Default configuration as commented YAML text.
const std::string& default_config_text();

/// Parses YAML text; missing keys keep their defaults, unknown keys are
/// rejected. Throws std::invalid_argument with the offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace aigx
